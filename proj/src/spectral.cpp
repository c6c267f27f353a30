#include "qgraph/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "qgraph/error.hpp"

namespace qgraph {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const double kGolden = 0.5 * (std::sqrt(5.0) - 1.0);

struct Refined {
  double lambda = 0.0;
  double value = 0.0;
  double width = 0.0;
};

Refined golden_minimize(const std::function<double(double)>& f, double a, double b,
                        double rel_width) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int iter = 0; iter < 200; ++iter) {
    if (b - a <= rel_width * (1.0 + std::abs(0.5 * (a + b)))) break;
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? Refined{x1, f1, b - a} : Refined{x2, f2, b - a};
}

struct NullSpace {
  Eigen::VectorXd singular;  // ascending, relative to the largest
  MatrixXcd vectors;         // matching right singular vectors
};

NullSpace right_singular(const MatrixXcd& m) {
  NullSpace out;
  Eigen::VectorXd s;
  MatrixXcd v;
  if (m.rows() <= 32) {
    Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeFullV);
    s = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<MatrixXcd> svd(m, Eigen::ComputeFullV);
    s = svd.singularValues();
    v = svd.matrixV();
  }
  const double top = s.size() ? std::max(s(0), 1e-300) : 1.0;
  out.singular = (s / top).reverse();
  out.vectors = v.rowwise().reverse();
  return out;
}

void check_dtn_window(const MetricGraph& graph, double lo, double hi) {
  for (const auto& e : graph.edges())
    for (const auto& level : dirichlet_indices(e, hi))
      if (level.value >= lo)
        throw precondition_error("window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                                 "] meets the Dirichlet spectrum of edge '" + e.id + "' at " +
                                 std::to_string(level.value) +
                                 "; use the dotted or intersection backend");
}

bool conditions_self_adjoint(const ConditionsAB& c) { return is_self_adjoint(c).self_adjoint; }

std::vector<EdgeCoefficients> certified_basis(const SecularOperator& op, double lambda,
                                              const NullSpace& ns, int multiplicity,
                                              double* worst) {
  std::vector<EdgeCoefficients> out;
  double max_res = 0.0;
  for (int j = 0; j < multiplicity; ++j) {
    EdgeCoefficients f = op.coefficients(ns.vectors.col(j), lambda);
    max_res = std::max(max_res, residual(op.graph(), op.conditions(), lambda, f));
    out.push_back(std::move(f));
  }
  if (worst) *worst = max_res;
  return out;
}

}  // namespace

void parallel_for(std::size_t n, std::size_t threads,
                  const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr failure;
  std::mutex guard;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += threads) {
        {
          std::lock_guard lock(guard);
          if (failure) return;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(guard);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<double> search_grid(double lo, double hi, double total_length,
                                const SearchOptions& opts) {
  if (!(lo < hi)) throw input_error("window must satisfy lo < hi");
  if (opts.kgrid == 0) throw input_error("kgrid must be positive");
  const double dk = M_PI / total_length / static_cast<double>(opts.kgrid);
  std::vector<double> grid{lo};
  double x = lo;
  while (x < hi) {
    const double k = std::sqrt(std::abs(x));
    double h = std::min(opts.max_step, (k + dk) * (k + dk) - k * k);
    x = std::min(hi, x + h);
    grid.push_back(x);
  }
  return grid;
}

std::vector<SecularSample> scan(const SecularOperator& op, const std::vector<double>& grid,
                                std::size_t threads) {
  std::vector<SecularSample> out(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t i) { out[i] = op.sample(grid[i]); });
  return out;
}

std::vector<Eigenvalue> eigenvalues_in(const SecularOperator& op, double lo, double hi,
                                       const SearchOptions& opts) {
  if (!(lo < hi)) throw input_error("window must satisfy lo < hi");
  if (op.backend() == Backend::Dtn) check_dtn_window(op.graph(), lo, hi);
  const bool best_effort = !conditions_self_adjoint(op.conditions());

  const std::vector<double> grid = search_grid(lo, hi, op.graph().total_length(), opts);
  const std::size_t n = grid.size();
  std::vector<double> r(n);
  parallel_for(n, opts.threads,
               [&](std::size_t i) { r[i] = op.sample(grid[i]).relative_smallest(); });

  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < n; ++i) {
    const bool left = i == 0 || r[i] <= r[i - 1];
    const bool right = i + 1 == n || r[i] <= r[i + 1];
    if (left && right) minima.push_back(i);
  }

  std::vector<Eigenvalue> found(minima.size());
  std::vector<char> accepted(minima.size(), 0);
  parallel_for(minima.size(), opts.threads, [&](std::size_t m) {
    const std::size_t i = minima[m];
    const double a = grid[i == 0 ? 0 : i - 1];
    const double b = grid[std::min(i + 1, n - 1)];
    const SecularOperator local = op.frozen_for(a, b);
    auto f = [&](double x) { return local.sample(x).relative_smallest(); };
    Refined best = golden_minimize(f, a, b, opts.refine_width);
    for (double edge : {lo, hi}) {
      if (edge != a && edge != b) continue;
      const double fe = f(edge);
      if (fe < best.value) best = {edge, fe, best.width};
    }
    if (!(best.value < opts.accept_tolerance)) return;
    const NullSpace ns = right_singular(local.matrix(best.lambda));
    int mult = 1;
    while (mult < static_cast<int>(ns.singular.size()) &&
           ns.singular(mult) < opts.multiplicity_tolerance)
      ++mult;
    double worst = 0.0;
    certified_basis(local, best.lambda, ns, mult, &worst);
    if (!(worst < opts.residual_tolerance) && !best_effort)
      throw numerical_error("eigenvalue near " + std::to_string(best.lambda) +
                            " failed certification (residual " + std::to_string(worst) + ")");
    found[m] = {best.lambda, mult, op.backend(), worst, best.width, best_effort};
    accepted[m] = 1;
  });

  std::vector<Eigenvalue> roots;
  for (std::size_t m = 0; m < minima.size(); ++m)
    if (accepted[m]) roots.push_back(found[m]);
  std::sort(roots.begin(), roots.end(),
            [](const Eigenvalue& x, const Eigenvalue& y) { return x.lambda < y.lambda; });
  std::vector<Eigenvalue> out;
  for (const auto& root : roots) {
    if (!out.empty() && std::abs(root.lambda - out.back().lambda) <
                            std::max(opts.dedupe_tolerance, 10.0 * root.width)) {
      if (root.residual < out.back().residual) out.back() = root;
      continue;
    }
    out.push_back(root);
  }
  return out;
}

std::vector<Eigenvalue> eigenvalues_in(const MetricGraph& graph, const ConditionsAB& c, double lo,
                                       double hi, const SearchOptions& opts) {
  return eigenvalues_in(SecularOperator(graph, c, opts.backend, opts.basis), lo, hi, opts);
}

std::vector<Eigenvalue> eigenvalues_in(const MetricGraph& graph, const ConditionSubspace& p,
                                       double lo, double hi, const SearchOptions& opts) {
  return eigenvalues_in(SecularOperator(graph, p, opts.basis), lo, hi, opts);
}

std::vector<EdgeCoefficients> eigenfunction_basis(const SecularOperator& op, double lambda,
                                                  const SearchOptions& opts) {
  const SecularOperator local = op.frozen_at(lambda);
  const NullSpace ns = right_singular(local.matrix(lambda));
  int mult = 0;
  while (mult < static_cast<int>(ns.singular.size()) &&
         ns.singular(mult) < opts.multiplicity_tolerance)
    ++mult;
  if (mult == 0)
    throw precondition_error("not an eigenvalue: " + std::to_string(lambda) +
                             " (relative smallest singular value " +
                             std::to_string(ns.singular(0)) + ")");
  double worst = 0.0;
  auto basis = certified_basis(local, lambda, ns, mult, &worst);
  if (!(worst < opts.residual_tolerance) && conditions_self_adjoint(op.conditions()))
    throw numerical_error("eigenfunction residual " + std::to_string(worst) +
                          " exceeds tolerance");
  return basis;
}

std::vector<EdgeCoefficients> eigenfunction_basis(const MetricGraph& graph, const ConditionsAB& c,
                                                  double lambda, const SearchOptions& opts) {
  return eigenfunction_basis(SecularOperator(graph, c, opts.backend, opts.basis), lambda, opts);
}

double residual(const MetricGraph& graph, const ConditionsAB& c, double lambda,
                const EdgeCoefficients& f) {
  validate(c, graph.edge_count());
  const VectorXcd trace = trace_vector(graph, f);
  const double norm = trace.norm();
  if (norm == 0.0) return std::numeric_limits<double>::infinity();
  // f is built from exact solutions at f.lambda, so the equation defect at
  // lambda is (f.lambda - lambda) f pointwise.
  const double equation = std::abs(f.lambda - cplx(lambda, 0.0));
  const auto half = static_cast<Eigen::Index>(2 * graph.edge_count());
  MatrixXcd ab(c.a.rows(), 2 * half);
  ab << c.a, c.b;
  const double scale = singular_values_ascending(ab).maxCoeff();
  const double conditions =
      (c.a * trace.head(half) + c.b * trace.tail(half)).norm() / (scale * norm);
  return std::max(equation, conditions);
}

ConditionFamily boundary_angle_family(const MetricGraph& graph, std::string vertex,
                                      VertexConditionMap others) {
  if (!graph.has_vertex(vertex)) throw input_error("unknown vertex '" + vertex + "'");
  if (graph.degree(vertex) != 1)
    throw input_error("boundary-angle needs a degree-1 vertex, '" + vertex + "' has degree " +
                      std::to_string(graph.degree(vertex)));
  return [graph, vertex, others](double t) {
    VertexConditionMap map = others;
    map[vertex] = LocalPreset{PresetKind::BoundaryAngle, t};
    return assemble_local(graph, map);
  };
}

ConditionFamily geodesic_family(const ConditionSubspace& start, const ConditionSubspace& end) {
  return [start, end](double t) { return to_ab(grassmann_path(start, end, t)); };
}

std::vector<double> chebyshev_nodes(double a, double b, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double x = -std::cos((2.0 * k + 1.0) * M_PI / (2.0 * n));
    out[k] = 0.5 * (a + b) + 0.5 * (b - a) * x;
  }
  return out;
}

double chebyshev_interpolate(double a, double b, const std::vector<double>& values, double t) {
  const std::size_t n = values.size();
  const std::vector<double> nodes = chebyshev_nodes(a, b, n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = ((k % 2) ? -1.0 : 1.0) * std::sin((2.0 * k + 1.0) * M_PI / (2.0 * n));
    const double d = t - nodes[k];
    if (d == 0.0) return values[k];
    num += w / d * values[k];
    den += w / d;
  }
  return num / den;
}

double TrackReport::max_fit_error() const {
  double m = 0.0;
  for (const auto& b : branches)
    if (b.complete) m = std::max(m, b.fit_error);
  return m;
}

double TrackReport::max_discontinuity() const {
  double m = 0.0;
  for (const auto& b : branches)
    if (b.complete) m = std::max(m, b.discontinuity);
  return m;
}

TrackReport track_along_path(const MetricGraph& graph, const ConditionFamily& family,
                             const std::vector<double>& t_grid, double lo, double hi,
                             const TrackOptions& opts) {
  if (t_grid.size() < 2) throw input_error("path grid needs at least two points");
  const auto [tmin_it, tmax_it] = std::minmax_element(t_grid.begin(), t_grid.end());
  const double t0 = *tmin_it;
  const double t1 = *tmax_it;
  if (!(t0 < t1)) throw input_error("path grid must span an interval");

  struct Point {
    double t;
    bool node;
    bool held;
  };
  std::vector<Point> points;
  for (double t : t_grid) points.push_back({t, false, false});
  for (double t : chebyshev_nodes(t0, t1, opts.chebyshev_nodes)) points.push_back({t, true, false});
  for (std::size_t j = 0; j < opts.holdout; ++j) {
    const double s = (static_cast<double>(j) + 0.5 + 0.0137) / static_cast<double>(opts.holdout);
    points.push_back({t0 + (t1 - t0) * s, false, true});
  }
  std::sort(points.begin(), points.end(), [](const Point& x, const Point& y) { return x.t < y.t; });
  std::vector<Point> merged;
  for (const auto& p : points) {
    if (!merged.empty() && std::abs(p.t - merged.back().t) < 1e-14 * (1.0 + std::abs(p.t))) {
      merged.back().node = merged.back().node || p.node;
      merged.back().held = merged.back().held || p.held;
      continue;
    }
    merged.push_back(p);
  }

  TrackReport report;
  report.samples.resize(merged.size());
  SearchOptions inner = opts.search;
  inner.threads = 1;
  parallel_for(merged.size(), opts.search.threads, [&](std::size_t i) {
    const double t = merged[i].t;
    const ConditionsAB c = family(t);
    validate(c, graph.edge_count());
    MatrixXcd ab(c.a.rows(), c.a.cols() + c.b.cols());
    ab << c.a, c.b;
    const double scale = singular_values_ascending(ab).maxCoeff();
    const double b_min = singular_values_ascending(c.b)(0) / scale;
    EigencurveSample s;
    s.t = t;
    s.node = merged[i].node;
    s.held_out = merged[i].held;
    s.b_singularity = b_min;
    s.chart_boundary = b_min < opts.chart_tolerance;
    for (const auto& ev : eigenvalues_in(graph, c, lo, hi, inner))
      for (int k = 0; k < ev.multiplicity; ++k) s.eigenvalues.push_back(ev.lambda);
    report.samples[i] = std::move(s);
  });

  const std::size_t ns = report.samples.size();
  for (const auto& s : report.samples) {
    if (s.chart_boundary) report.chart_boundaries.push_back(s.t);
    for (std::size_t k = 1; k < s.eigenvalues.size(); ++k) {
      const double gap = s.eigenvalues[k] - s.eigenvalues[k - 1];
      if (gap < opts.ambiguity) report.ambiguities.push_back({s.t, s.eigenvalues[k], gap});
    }
  }

  // Nearest-neighbour continuation with linear extrapolation.
  std::vector<std::vector<double>> branches;
  std::vector<bool> active;
  for (std::size_t i = 0; i < ns; ++i) {
    const auto& current = report.samples[i].eigenvalues;
    std::vector<double> predicted(branches.size(), kNaN);
    for (std::size_t b = 0; b < branches.size(); ++b) {
      if (!active[b]) continue;
      const double last = branches[b][i - 1];
      double guess = last;
      if (i >= 2 && !std::isnan(branches[b][i - 2])) {
        const double dt = report.samples[i - 1].t - report.samples[i - 2].t;
        const double slope = (last - branches[b][i - 2]) / dt;
        guess = last + slope * (report.samples[i].t - report.samples[i - 1].t);
      }
      predicted[b] = guess;
    }
    struct Pair {
      double distance;
      std::size_t branch;
      std::size_t value;
    };
    std::vector<Pair> pairs;
    for (std::size_t b = 0; b < branches.size(); ++b)
      if (active[b])
        for (std::size_t v = 0; v < current.size(); ++v)
          pairs.push_back({std::abs(predicted[b] - current[v]), b, v});
    std::sort(pairs.begin(), pairs.end(),
              [](const Pair& x, const Pair& y) { return x.distance < y.distance; });
    std::vector<bool> branch_used(branches.size(), false);
    std::vector<bool> value_used(current.size(), false);
    for (auto& br : branches) br.push_back(kNaN);
    for (const auto& p : pairs) {
      if (branch_used[p.branch] || value_used[p.value]) continue;
      branch_used[p.branch] = value_used[p.value] = true;
      branches[p.branch][i] = current[p.value];
    }
    for (std::size_t b = 0; b < branches.size(); ++b)
      if (active[b] && !branch_used[b]) active[b] = false;
    for (std::size_t v = 0; v < current.size(); ++v) {
      if (value_used[v]) continue;
      std::vector<double> fresh(i + 1, kNaN);
      fresh[i] = current[v];
      branches.push_back(std::move(fresh));
      active.push_back(true);
    }
  }

  std::vector<std::size_t> node_index;
  for (std::size_t i = 0; i < ns; ++i)
    if (report.samples[i].node) node_index.push_back(i);

  for (auto& values : branches) {
    BranchReport br;
    br.values = values;
    br.complete = std::none_of(values.begin(), values.end(), [](double v) { return std::isnan(v); });
    for (std::size_t i = 0; i < ns; ++i)
      if (report.samples[i].chart_boundary) br.at_chart_boundary.push_back(values[i]);
    if (br.complete && node_index.size() == opts.chebyshev_nodes) {
      std::vector<double> at_nodes;
      for (std::size_t i : node_index) at_nodes.push_back(values[i]);
      std::vector<double> fitted(ns);
      for (std::size_t i = 0; i < ns; ++i)
        fitted[i] = chebyshev_interpolate(t0, t1, at_nodes, report.samples[i].t);
      for (std::size_t i = 0; i < ns; ++i)
        if (report.samples[i].held_out)
          br.fit_error = std::max(br.fit_error, std::abs(fitted[i] - values[i]) /
                                                    std::max(1.0, std::abs(values[i])));
      for (std::size_t i = 1; i < ns; ++i)
        br.discontinuity = std::max(
            br.discontinuity,
            std::abs((values[i] - values[i - 1]) - (fitted[i] - fitted[i - 1])));
    }
    report.branches.push_back(std::move(br));
  }
  return report;
}

}  // namespace qgraph
