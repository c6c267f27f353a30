#include "qgraph/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include "qgraph/error.hpp"

namespace qgraph {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Shift add(const Shift& a, const Shift& b, int sign = 1) {
  Shift out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + sign * b[i];
  return out;
}

int norm_inf(const Shift& m) {
  int out = 0;
  for (int v : m) out = std::max(out, std::abs(v));
  return out;
}

std::vector<Shift> cells_within(int dim, int radius) {
  std::vector<Shift> out;
  if (dim == 1) {
    for (int i = -radius; i <= radius; ++i) out.push_back({i});
  } else {
    for (int i = -radius; i <= radius; ++i)
      for (int j = -radius; j <= radius; ++j) out.push_back({i, j});
  }
  return out;
}

// Rows of [A B] grouped by the single vertex they act on.
std::map<std::string, std::vector<Eigen::Index>, std::less<>> local_rows(const MetricGraph& g,
                                                                         const ConditionsAB& c) {
  std::map<std::string, std::vector<Eigen::Index>, std::less<>> out;
  const auto half = static_cast<Eigen::Index>(2 * g.edge_count());
  for (Eigen::Index r = 0; r < c.a.rows(); ++r) {
    const double scale = std::max(c.a.row(r).norm(), c.b.row(r).norm());
    if (scale == 0.0) continue;
    std::set<std::string> touched;
    for (Eigen::Index p = 0; p < half; ++p)
      if (std::abs(c.a(r, p)) > 1e-14 * scale || std::abs(c.b(r, p)) > 1e-14 * scale)
        touched.insert(g.vertex_of(static_cast<std::size_t>(p)));
    if (touched.size() != 1)
      throw precondition_error("periodic problems need local vertex conditions");
    out[*touched.begin()].push_back(r);
  }
  return out;
}

// Trace of one edge copy: (value@0, inward@0, value@l, inward@l) as a
// linear map of its (C, S) coefficients.
Matrix42cd instance_traces(const Edge& e, double lambda) {
  return edge_trace_subspace(lambda, e.length, e.potential);
}

struct InstanceKey {
  std::size_t edge;
  Shift cell;
  friend bool operator<(const InstanceKey& x, const InstanceKey& y) {
    return std::tie(x.edge, x.cell) < std::tie(y.edge, y.cell);
  }
};

double ab_scale(const ConditionsAB& c) {
  MatrixXcd ab(c.a.rows(), c.a.cols() + c.b.cols());
  ab << c.a, c.b;
  return singular_values_ascending(ab).maxCoeff();
}

Eigen::MatrixXcd null_basis(const MatrixXcd& m, double rel_tol, double abs_floor = 0.0) {
  Eigen::VectorXd s;
  MatrixXcd v;
  if (m.cols() <= 32) {
    Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeFullV);
    s = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<MatrixXcd> svd(m, Eigen::ComputeFullV);
    s = svd.singularValues();
    v = svd.matrixV();
  }
  const double top = s.size() ? s(0) : 0.0;
  const double cut = std::max(rel_tol * top, abs_floor);
  Eigen::Index rank = 0;
  while (rank < s.size() && s(rank) > cut) ++rank;
  return v.rightCols(m.cols() - rank);
}

}  // namespace

Shift PeriodicGraph::shift_of(std::string_view edge) const {
  auto it = shifts.find(edge);
  if (it == shifts.end()) return Shift(static_cast<std::size_t>(dim), 0);
  return it->second;
}

std::pair<PeriodicGraph, ConditionsAB> normalize_periodic(PeriodicGraph pg,
                                                          const ConditionsAB& c) {
  if (pg.dim != 1 && pg.dim != 2) throw input_error("periodic dimension must be 1 or 2");
  for (const auto& [id, n] : pg.shifts) {
    if (!pg.cell.has_edge(id)) throw input_error("shift for unknown edge '" + id + "'");
    if (n.size() != static_cast<std::size_t>(pg.dim))
      throw input_error("shift of edge '" + id + "' has the wrong dimension");
  }
  validate(c, pg.cell.edge_count());
  const MetricGraph original = pg.cell;
  MetricGraph g = pg.cell;
  std::map<std::string, Shift, std::less<>> shifts;
  for (const auto& [id, n] : pg.shifts) {
    const int steps = norm_inf(n);
    if (steps <= 1) {
      shifts[id] = n;
      continue;
    }
    const double piece = g.edge(id).length / steps;
    std::string tail = id;
    for (int j = 0; j < steps; ++j) {
      Shift step(n.size());
      for (std::size_t i = 0; i < n.size(); ++i)
        step[i] = j < std::abs(n[i]) ? (n[i] > 0 ? 1 : -1) : 0;
      if (j + 1 < steps) {
        g = insert_dot(g, tail, piece);
        shifts[g.dots().back().left_edge] = step;
        tail = g.dots().back().right_edge;
      } else {
        shifts[tail] = step;
      }
    }
  }
  ConditionsAB extended = extend_for_dots(original, g, c);
  pg.cell = std::move(g);
  pg.shifts = std::move(shifts);
  return {std::move(pg), std::move(extended)};
}

namespace {

Eigen::VectorXcd end_phases(const PeriodicGraph& pg, const std::vector<double>& theta) {
  if (theta.size() != static_cast<std::size_t>(pg.dim))
    throw input_error("quasimomentum has the wrong dimension");
  const MetricGraph& g = pg.cell;
  Eigen::VectorXcd phi = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(2 * g.edge_count()));
  for (std::size_t i = 0; i < g.edge_count(); ++i) {
    const Shift n = pg.shift_of(g.edges()[i].id);
    double dot = 0.0;
    for (std::size_t k = 0; k < n.size(); ++k) dot += theta[k] * n[k];
    phi(static_cast<Eigen::Index>(2 * i + 1)) = std::polar(1.0, -dot);
  }
  return phi;
}

}  // namespace

ConditionsAB bloch_conditions(const PeriodicGraph& pg, const ConditionsAB& c,
                              const std::vector<double>& theta) {
  const Eigen::VectorXcd phi = end_phases(pg, theta);
  return {c.a * phi.asDiagonal(), c.b * phi.asDiagonal()};
}

ConditionSubspace bloch_subspace(const PeriodicGraph& pg, const ConditionsAB& c,
                                 const std::vector<double>& theta) {
  const Eigen::VectorXcd phi = end_phases(pg, theta);
  ConditionSubspace p = from_ab(c);
  const Eigen::Index half = phi.size();
  for (Eigen::Index k = 0; k < half; ++k) {
    p.basis.row(k) *= std::conj(phi(k));
    p.basis.row(half + k) *= std::conj(phi(k));
  }
  return p;
}

MatrixXcd bloch_reduce(const PeriodicGraph& pg, const ConditionsAB& c,
                       const std::vector<double>& theta, double lambda) {
  return assemble_intersection(pg.cell, bloch_subspace(pg, c, theta), lambda);
}

std::vector<Eigenvalue> bloch_eigenvalues(const PeriodicGraph& pg, const ConditionsAB& c,
                                          const std::vector<double>& theta, double lo, double hi,
                                          const SearchOptions& opts) {
  if (opts.backend == Backend::Intersection)
    return eigenvalues_in(SecularOperator(pg.cell, bloch_subspace(pg, c, theta), opts.basis), lo,
                          hi, opts);
  return eigenvalues_in(pg.cell, bloch_conditions(pg, c, theta), lo, hi, opts);
}

bool BandSheet::complete(std::size_t band) const {
  return std::none_of(bands[band].begin(), bands[band].end(),
                      [](double v) { return std::isnan(v); });
}

BandSheet band_structure(const PeriodicGraph& pg, const ConditionsAB& c, std::size_t grid,
                         double lo, double hi, const SearchOptions& opts) {
  if (grid < 8) throw input_error("band grids need at least 8 points per dimension");
  if (lo > hi) throw input_error("window must satisfy lo <= hi");
  BandSheet sheet;
  sheet.grid = grid;
  const double step = 2.0 * M_PI / static_cast<double>(grid);
  if (pg.dim == 1) {
    for (std::size_t i = 0; i < grid; ++i) sheet.theta.push_back({step * i});
  } else {
    for (std::size_t i = 0; i < grid; ++i)
      for (std::size_t j = 0; j < grid; ++j) sheet.theta.push_back({step * i, step * j});
  }
  sheet.levels.resize(sheet.theta.size());
  if (lo == hi) return sheet;
  SearchOptions inner = opts;
  inner.threads = 1;
  parallel_for(sheet.theta.size(), opts.threads, [&](std::size_t j) {
    for (const auto& ev : bloch_eigenvalues(pg, c, sheet.theta[j], lo, hi, inner))
      for (int k = 0; k < ev.multiplicity; ++k) sheet.levels[j].push_back(ev.lambda);
  });
  std::size_t count = 0;
  for (const auto& l : sheet.levels) count = std::max(count, l.size());
  sheet.bands.assign(count, std::vector<double>(sheet.theta.size(), kNaN));
  for (std::size_t j = 0; j < sheet.levels.size(); ++j)
    for (std::size_t b = 0; b < sheet.levels[j].size(); ++b) sheet.bands[b][j] = sheet.levels[j][b];
  return sheet;
}

std::vector<FlatBand> detect_flat_bands(const BandSheet& sheet, double tol) {
  std::vector<FlatBand> out;
  for (std::size_t b = 0; b < sheet.bands.size(); ++b) {
    if (!sheet.complete(b) || sheet.bands[b].empty()) continue;
    std::vector<double> v = sheet.bands[b];
    std::sort(v.begin(), v.end());
    const double spread = v.back() - v.front();
    const std::size_t mid = v.size() / 2;
    const double median = v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
    if (spread < tol * (1.0 + std::abs(median))) out.push_back({b, median, spread});
  }
  return out;
}

std::string instance_name(std::string_view edge, const Shift& cell) {
  std::string out(edge);
  out += '@';
  for (std::size_t i = 0; i < cell.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(cell[i]);
  }
  return out;
}

CompactSearch compact_state(const PeriodicGraph& pg, const ConditionsAB& c, double lambda,
                            int radius, const CompactOptions& opts) {
  if (radius < 0) throw input_error("patch radius must be non-negative");
  if (radius > opts.max_radius)
    return {std::nullopt, "none found up to r_max = " + std::to_string(opts.max_radius)};
  const MetricGraph& g = pg.cell;
  validate(c, g.edge_count());

  const std::vector<std::vector<double>> probes =
      pg.dim == 1 ? std::vector<std::vector<double>>{{0.7}, {2.1}, {4.4}}
                  : std::vector<std::vector<double>>{{0.7, 1.9}, {2.3, 0.4}, {4.1, 5.3}};
  for (const auto& theta : probes) {
    const double rel = describe(bloch_reduce(pg, c, theta, lambda), lambda, Backend::Intersection)
                           .relative_smallest();
    if (!(rel < opts.flat_tolerance))
      return {std::nullopt, "lambda = " + std::to_string(lambda) +
                                " is not a flat band (Bloch defect " + std::to_string(rel) + ")"};
  }

  const auto rows_at = local_rows(g, c);
  const std::vector<Shift> patch = cells_within(pg.dim, radius);
  auto in_patch = [&](const Shift& m) { return norm_inf(m) <= radius; };

  std::map<InstanceKey, Eigen::Index> column;
  std::vector<InstanceKey> instances;
  for (const auto& m : patch)
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
      const Shift n = pg.shift_of(g.edges()[i].id);
      for (const Shift& cell : {m, add(m, n, -1)}) {
        InstanceKey key{i, cell};
        if (column.count(key)) continue;
        column[key] = static_cast<Eigen::Index>(2 * instances.size());
        instances.push_back(key);
      }
    }
  std::vector<Matrix42cd> traces;
  for (const auto& e : g.edges()) traces.push_back(instance_traces(e, lambda));

  const auto cols = static_cast<Eigen::Index>(2 * instances.size());
  std::vector<Eigen::RowVectorXcd> eqs;
  // Vertex conditions at every vertex of the patch cells.
  for (const auto& m : patch)
    for (const auto& [vertex, rows] : rows_at)
      for (Eigen::Index r : rows) {
        Eigen::RowVectorXcd eq = Eigen::RowVectorXcd::Zero(cols);
        for (std::size_t p : g.endpoints_at(vertex)) {
          const auto [edge, end] = g.trace_index().endpoint_of(p);
          const Shift cell =
              end == End::Start ? m : add(m, pg.shift_of(g.edges()[edge].id), -1);
          const Eigen::Index at = column.at({edge, cell});
          const int k = end == End::Start ? 0 : 2;
          const auto pp = static_cast<Eigen::Index>(p);
          for (int j = 0; j < 2; ++j)
            eq(at + j) += c.a(r, pp) * traces[edge](k, j) +
                          c.b(r, pp) * traces[edge](k + 1, j);
        }
        eqs.push_back(std::move(eq));
      }
  // All traces vanish at vertices outside the patch.
  for (const auto& key : instances) {
    const Shift n = pg.shift_of(g.edges()[key.edge].id);
    const Eigen::Index at = column.at(key);
    for (int end = 0; end < 2; ++end) {
      const Shift vertex_cell = end == 0 ? key.cell : add(key.cell, n);
      if (in_patch(vertex_cell)) continue;
      for (int q = 0; q < 2; ++q) {
        Eigen::RowVectorXcd eq = Eigen::RowVectorXcd::Zero(cols);
        for (int j = 0; j < 2; ++j) eq(at + j) = traces[key.edge](2 * end + q, j);
        eqs.push_back(std::move(eq));
      }
    }
  }
  MatrixXcd system(static_cast<Eigen::Index>(eqs.size()), cols);
  for (std::size_t r = 0; r < eqs.size(); ++r) system.row(static_cast<Eigen::Index>(r)) = eqs[r];

  MatrixXcd null = null_basis(system, opts.null_tolerance);
  if (null.cols() == 0)
    return {std::nullopt, "no compactly supported state on radius " + std::to_string(radius)};

  // Greedy support reduction: silence edge copies far from the centre
  // first while a nonzero solution survives.
  std::vector<std::size_t> order(instances.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto reach = [&](const InstanceKey& k) {
    const Shift n = pg.shift_of(g.edges()[k.edge].id);
    return std::max(norm_inf(k.cell), norm_inf(add(k.cell, n)));
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return reach(instances[x]) > reach(instances[y]);
  });
  for (std::size_t idx : order) {
    const Eigen::Index at = column.at(instances[idx]);
    const MatrixXcd block = null.middleRows(at, 2);
    if (block.norm() < opts.support_tolerance) continue;
    const MatrixXcd z = null_basis(block, 0.0, 1e-8);
    if (z.cols() == 0) continue;
    null = null * z;
  }

  VectorXcd v = null.col(0);
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  v /= v(big);

  CompactState state;
  state.lambda = lambda;
  state.radius = radius;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Eigen::Index at = column.at(instances[i]);
    const Eigen::Vector2cd coeffs = v.segment<2>(at);
    if (coeffs.norm() <= opts.support_tolerance) continue;
    state.support.push_back({g.edges()[instances[i].edge].id, instances[i].cell, coeffs});
  }
  state.residual = verify_compact_state(pg, c, state, 2);
  return {state, ""};
}

CompactSearch find_compact_state(const PeriodicGraph& pg, const ConditionsAB& c, double lambda,
                                 const CompactOptions& opts) {
  CompactSearch last;
  for (int r = 0; r <= opts.max_radius; ++r) {
    last = compact_state(pg, c, lambda, r, opts);
    if (last.state) return last;
    if (last.reason.find("not a flat band") != std::string::npos) return last;
  }
  last.reason = "none found up to r_max = " + std::to_string(opts.max_radius);
  return last;
}

double verify_compact_state(const PeriodicGraph& pg, const ConditionsAB& c,
                            const CompactState& state, int shells) {
  const MetricGraph& g = pg.cell;
  const auto rows_at = local_rows(g, c);
  std::map<InstanceKey, Eigen::Vector4cd> trace_of;
  double norm2 = 0.0;
  for (const auto& inst : state.support) {
    const std::size_t i = g.edge_index(inst.edge);
    const Eigen::Vector4cd t = instance_traces(g.edges()[i], state.lambda) * inst.coeffs;
    trace_of[{i, inst.cell}] += t;
  }
  for (const auto& [key, t] : trace_of) norm2 += t.squaredNorm();
  if (norm2 == 0.0) return std::numeric_limits<double>::infinity();

  int reach = 0;
  for (const auto& inst : state.support) reach = std::max(reach, norm_inf(inst.cell) + 1);
  reach = std::max(reach, state.radius) + shells;

  double defect2 = 0.0;
  for (const auto& m : cells_within(pg.dim, reach))
    for (const auto& [vertex, rows] : rows_at)
      for (Eigen::Index r : rows) {
        cplx sum = 0.0;
        for (std::size_t p : g.endpoints_at(vertex)) {
          const auto [edge, end] = g.trace_index().endpoint_of(p);
          const Shift cell =
              end == End::Start ? m : add(m, pg.shift_of(g.edges()[edge].id), -1);
          auto it = trace_of.find({edge, cell});
          if (it == trace_of.end()) continue;
          const int k = end == End::Start ? 0 : 2;
          const auto pp = static_cast<Eigen::Index>(p);
          sum += c.a(r, pp) * it->second(k) + c.b(r, pp) * it->second(k + 1);
        }
        defect2 += std::norm(sum);
      }
  return std::sqrt(defect2) / (ab_scale(c) * std::sqrt(norm2));
}

CompactState translate(const CompactState& state, const Shift& by) {
  CompactState out = state;
  for (auto& inst : out.support) inst.cell = add(inst.cell, by);
  return out;
}

Torus torus_closure(const PeriodicGraph& pg, const ConditionsAB& c, const std::vector<int>& n) {
  if (n.size() != static_cast<std::size_t>(pg.dim))
    throw input_error("torus size has the wrong dimension");
  for (int v : n)
    if (v < 1) throw input_error("torus size must be positive");
  const MetricGraph& g = pg.cell;
  validate(c, g.edge_count());
  const auto rows_at = local_rows(g, c);

  auto wrap = [&](Shift m) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = ((m[i] % n[i]) + n[i]) % n[i];
    return m;
  };
  std::vector<Shift> cells;
  if (pg.dim == 1) {
    for (int i = 0; i < n[0]; ++i) cells.push_back({i});
  } else {
    for (int i = 0; i < n[0]; ++i)
      for (int j = 0; j < n[1]; ++j) cells.push_back({i, j});
  }

  std::vector<std::string> vertices;
  std::vector<Edge> edges;
  for (const auto& m : cells) {
    for (const auto& v : g.vertices()) vertices.push_back(instance_name(v, m));
    for (const auto& e : g.edges()) {
      const Shift to = wrap(add(m, pg.shift_of(e.id)));
      edges.push_back({instance_name(e.id, m), instance_name(e.from, m),
                       instance_name(e.to, to), e.length, e.potential});
    }
  }
  Torus torus{MetricGraph(vertices, edges), {}, n};
  const MetricGraph& t = torus.graph;
  const auto half = static_cast<Eigen::Index>(2 * t.edge_count());
  torus.conditions.a = MatrixXcd::Zero(half, half);
  torus.conditions.b = MatrixXcd::Zero(half, half);
  Eigen::Index row = 0;
  for (const auto& m : cells)
    for (const auto& [vertex, rows] : rows_at)
      for (Eigen::Index r : rows) {
        for (std::size_t p : g.endpoints_at(vertex)) {
          const auto [edge, end] = g.trace_index().endpoint_of(p);
          const Edge& e = g.edges()[edge];
          const Shift cell = end == End::Start ? m : wrap(add(m, pg.shift_of(e.id), -1));
          const std::size_t target = t.trace_index().endpoint(t.edge_index(instance_name(e.id, cell)), end);
          const auto pp = static_cast<Eigen::Index>(p);
          torus.conditions.a(row, static_cast<Eigen::Index>(target)) += c.a(r, pp);
          torus.conditions.b(row, static_cast<Eigen::Index>(target)) += c.b(r, pp);
        }
        ++row;
      }
  return torus;
}

EdgeCoefficients torus_function(const Torus& torus, const CompactState& state) {
  EdgeCoefficients f;
  f.lambda = state.lambda;
  for (const auto& e : torus.graph.edges()) f.coeffs[e.id] = Eigen::Vector2cd::Zero();
  for (const auto& inst : state.support) {
    Shift m = inst.cell;
    for (std::size_t i = 0; i < m.size(); ++i)
      m[i] = ((m[i] % torus.size[i]) + torus.size[i]) % torus.size[i];
    f.coeffs.at(instance_name(inst.edge, m)) += inst.coeffs;
  }
  return f;
}

}  // namespace qgraph
