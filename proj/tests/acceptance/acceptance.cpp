// Acceptance suite: one PASS/FAIL line per criterion.
#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "qgraph/error.hpp"
#include "qgraph/periodic.hpp"
#include "qgraph/spectral.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok) {
      out_.pass = false;
      if (failures_++ < 4) note("failed: " + what);
    }
  }
  void note(const std::string& s) {
    if (!out_.detail.empty()) out_.detail += "; ";
    out_.detail += s;
  }
  Outcome result() const { return out_; }

 private:
  Outcome out_;
  int failures_ = 0;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::vector<double> expand(const std::vector<Eigenvalue>& evs) {
  std::vector<double> out;
  for (const auto& ev : evs) out.insert(out.end(), static_cast<std::size_t>(ev.multiplicity), ev.lambda);
  return out;
}

SearchOptions with(Backend b) {
  SearchOptions o;
  o.backend = b;
  return o;
}

MetricGraph star(const std::vector<double>& lengths) {
  std::vector<std::string> vertices{"c"};
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string k = std::to_string(i + 1);
    vertices.push_back("l" + k);
    edges.push_back({"e" + k, "c", "l" + k, lengths[i], {}});
  }
  return MetricGraph(vertices, edges);
}

ConditionsAB star_conditions(const MetricGraph& g) {
  VertexConditionMap m;
  for (const auto& v : g.vertices())
    if (v != "c") m[v] = LocalPreset{PresetKind::Dirichlet, 0.0};
  return assemble_local(g, m);
}

MetricGraph interval(double l) { return MetricGraph({"a", "b"}, {{"e", "a", "b", l, {}}}); }

PeriodicGraph graphene(double l) {
  MetricGraph cell({"a", "b"},
                   {{"e1", "a", "b", l, {}}, {"e2", "a", "b", l, {}}, {"e3", "a", "b", l, {}}});
  return {cell, 2, {{"e2", {1, 0}}, {"e3", {0, 1}}}};
}

// Max deviation between two lists; infinity when the lengths differ.
double list_delta(const std::vector<double>& a, const std::vector<double>& b, bool relative = false) {
  if (a.size() != b.size()) return INFINITY;
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    d = std::max(d, relative ? diff / std::max(1.0, std::abs(b[i])) : diff);
  }
  return d;
}

bool same_multiplicities(const std::vector<Eigenvalue>& a, const std::vector<Eigenvalue>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].multiplicity != b[i].multiplicity) return false;
  return true;
}

// ---- criteria ----

Outcome closed_forms(double& slowest) {
  Checker c;
  auto timed = [&](const std::function<void()>& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    slowest = std::max(slowest, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  };
  timed([&] {
    const MetricGraph g = interval(pi);
    const ConditionsAB ab = assemble_local(g, {{"a", LocalPreset{PresetKind::Dirichlet, 0}},
                                               {"b", LocalPreset{PresetKind::Dirichlet, 0}}});
    const double d = list_delta(expand(eigenvalues_in(g, ab, 0.5, 26.0)), {1, 4, 9, 16, 25});
    c.require(d < 1e-8, "Dirichlet interval");
    c.note("Dirichlet max error " + fmt(d));
  });
  timed([&] {
    const MetricGraph g = interval(1.0);
    const ConditionsAB ab = assemble_local(g, {{"a", LocalPreset{PresetKind::Neumann, 0}},
                                               {"b", LocalPreset{PresetKind::Neumann, 0}}});
    const double d = list_delta(expand(eigenvalues_in(g, ab, -1.0, 90.0)),
                                {0.0, pi * pi, 4 * pi * pi, 9 * pi * pi});
    c.require(d < 1e-7, "Neumann interval");
    c.note("Neumann max error " + fmt(d));
  });
  c.require(slowest < 1.0, "runtime per case < 1 s");
  return c.result();
}

Outcome dirichlet_stress() {
  Checker c;
  const MetricGraph g({"v"}, {{"e", "v", "v", 1.0, {}}});
  const ConditionsAB ab = preset(PresetKind::Kirchhoff, g);
  const double hi = std::pow(6 * pi, 2) + 1.0;
  const auto dotted = eigenvalues_in(g, ab, -1.0, hi, with(Backend::DottedDtn));
  const auto inter = eigenvalues_in(g, ab, -1.0, hi, with(Backend::Intersection));
  for (const auto* list : {&dotted, &inter}) {
    c.require(list->size() == 4, "four distinct levels");
    if (list->size() != 4) continue;
    c.require(std::abs((*list)[0].lambda) < 1e-7 && (*list)[0].multiplicity == 1, "zero level");
    for (int n = 1; n <= 3; ++n) {
      c.require(std::abs((*list)[n].lambda - std::pow(2 * pi * n, 2)) < 1e-7, "(2 pi n)^2");
      c.require((*list)[n].multiplicity == 2, "double multiplicity");
    }
  }
  const double d = list_delta(expand(dotted), expand(inter));
  c.require(d < 1e-7, "dotted vs intersection");
  c.note("dotted/intersection max delta " + fmt(d));
  bool refused = false;
  try {
    eigenvalues_in(g, ab, -1.0, hi, with(Backend::Dtn));
  } catch (const Error& e) {
    refused = e.kind() == ErrorKind::Precondition;
  }
  c.require(refused, "dtn refuses");
  c.note(refused ? "dtn refused" : "dtn did not refuse");
  return c.result();
}

// Windows between the Dirichlet levels of all edges, shrunk by a margin.
std::vector<std::pair<double, double>> dirichlet_free_windows(const MetricGraph& g, double lo,
                                                              double hi) {
  std::vector<double> cuts;
  for (const auto& e : g.edges())
    for (double v : dirichlet_eigenvalues(e.length, e.potential, hi + 1.0)) cuts.push_back(v);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double v) { return v <= lo || v >= hi; }),
             cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double x, double y) { return y - x < 1e-9 * (1.0 + std::abs(x)); }),
             cuts.end());
  // Each cut is excluded with a margin of min(0.2, 5% of the distance to its
  // nearest neighbour), the window ends counting as neighbours.
  std::vector<double> margin(cuts.size());
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double left = cuts[i] - (i == 0 ? lo : cuts[i - 1]);
    const double right = (i + 1 == cuts.size() ? hi : cuts[i + 1]) - cuts[i];
    margin[i] = std::min(0.2, 0.05 * std::min(left, right));
  }
  std::vector<std::pair<double, double>> out;
  double a = lo;
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double b = cuts[i] - margin[i];
    if (b > a) out.push_back({a, b});
    a = cuts[i] + margin[i];
  }
  if (a < hi) out.push_back({a, hi});
  return out;
}

Outcome backend_equivalence() {
  Checker c;
  struct Case {
    MetricGraph g;
    ConditionsAB ab;
    std::string name;
  };
  std::vector<Case> cases;
  {
    const MetricGraph g = star({1.0, 1.0, 1.0});
    cases.push_back({g, star_conditions(g), "3-star"});
  }
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> len(0.6, 1.4);
  const std::vector<std::vector<std::string>> shapes{
      {"a", "b", "a", "b", "a", "b"}, {"a", "b", "b", "c", "c", "a"}, {"a", "a", "a", "b", "b", "c"},
      {"a", "b", "a", "c", "a", "d"}, {"a", "b", "b", "c", "c", "d"}};
  for (std::size_t k = 0; k < 5; ++k) {
    const auto& s = shapes[k];
    std::vector<std::string> vertices;
    for (const auto& v : s)
      if (std::find(vertices.begin(), vertices.end(), v) == vertices.end()) vertices.push_back(v);
    std::vector<Edge> edges;
    for (int i = 0; i < 3; ++i)
      edges.push_back({"e" + std::to_string(i + 1), s[2 * i], s[2 * i + 1], len(rng), {}});
    MetricGraph g(vertices, edges);
    cases.push_back({g, unitary_conditions(random_unitary(6, rng)), "random " + std::to_string(k + 1)});
  }

  std::size_t compared = 0;
  for (const auto& cs : cases) {
    if (!is_self_adjoint(cs.ab).self_adjoint) c.require(false, cs.name + " not self-adjoint");
    for (const auto& [lo, hi] : dirichlet_free_windows(cs.g, -20.0, 90.0)) {
      std::vector<std::vector<Eigenvalue>> lists;
      try {
        for (Backend b : {Backend::Dtn, Backend::DottedDtn, Backend::Intersection})
          lists.push_back(eigenvalues_in(cs.g, cs.ab, lo, hi, with(b)));
      } catch (const Error& e) {
        c.require(false, cs.name + " [" + fmt(lo) + ", " + fmt(hi) + "]: " + e.what());
        continue;
      }
      for (std::size_t k = 1; k < lists.size(); ++k) {
        c.require(list_delta(expand(lists[k]), expand(lists[0])) < 1e-7,
                  cs.name + " values in [" + fmt(lo) + ", " + fmt(hi) + "]");
        c.require(same_multiplicities(lists[k], lists[0]), cs.name + " multiplicities");
      }
      compared += expand(lists[0]).size();
    }
  }
  c.note(std::to_string(cases.size()) + " graphs, " + std::to_string(compared) +
         " eigenvalues compared across dtn/dotted/intersection");
  return c.result();
}

Outcome oracle_agreement() {
  Checker c;
  const MetricGraph g = star({1.0, 1.0, 1.0});
  const ConditionsAB ab = star_conditions(g);
  const std::vector<double> fd = oracle::fd_richardson(g, ab, 10, 1000, 2000);
  const std::vector<double> first(fd.begin(), fd.begin() + 8);
  const auto engine = expand(eigenvalues_in(g, ab, 0.0, first.back() + 1e-3));
  const double d = list_delta(std::vector<double>(engine.begin(), engine.begin() + std::min<std::size_t>(8, engine.size())), first);
  c.require(engine.size() >= 8 && d < 1e-4, "first 8 eigenvalues");
  // Count completeness on [0, cut] with the cut between two oracle levels.
  const double cut = 0.5 * (fd[8] + fd[9]);
  const std::size_t engine_count = expand(eigenvalues_in(g, ab, 0.0, cut)).size();
  c.require(engine_count == 9, "count below " + fmt(cut));
  c.note("max |engine - oracle| " + fmt(d) + ", count in [0, " + fmt(cut) + "] engine " +
         std::to_string(engine_count) + " oracle 9");
  return c.result();
}

Outcome analyticity() {
  Checker c;
  const MetricGraph g = interval(2.0);
  const ConditionFamily family = boundary_angle_family(g, "a");
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back((i - 30) / 100.0);
  const TrackReport r = track_along_path(g, family, grid, 0.0, 10.0);
  std::size_t complete = 0;
  for (const auto& b : r.branches) complete += b.complete;
  c.require(complete >= 1, "complete branches");
  c.require(r.max_fit_error() < 1e-8, "held-out Chebyshev error");
  c.require(r.max_discontinuity() < 1e-9, "adjacent-sample discontinuity");
  const bool crosses = std::any_of(r.chart_boundaries.begin(), r.chart_boundaries.end(),
                                   [](double t) { return std::abs(t) < 1e-12; });
  c.require(crosses, "chart boundary t = 0 flagged");
  c.note(std::to_string(complete) + " branches, " + std::to_string(r.samples.size()) +
         " samples, max held-out error " + fmt(r.max_fit_error()) + ", max discontinuity " +
         fmt(r.max_discontinuity()) + ", chart boundaries " + std::to_string(r.chart_boundaries.size()));
  return c.result();
}

Outcome classifier() {
  Checker c;
  std::mt19937_64 rng(42);
  std::normal_distribution<double> normal;
  int accepted = 0, rejected = 0, agree = 0;
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<std::size_t>(2 + i % 7);
    const ConditionsAB ab = unitary_conditions(random_unitary(n, rng));
    const bool x = is_self_adjoint(ab).self_adjoint;
    const bool y = is_lagrangian(from_ab(ab)).self_adjoint;
    accepted += x;
    agree += x == y;
  }
  for (int i = 0; i < 100; ++i) {
    const auto n = static_cast<Eigen::Index>(2 + i % 7);
    ConditionsAB ab = unitary_conditions(random_unitary(static_cast<std::size_t>(n), rng));
    Eigen::MatrixXcd k(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index s = 0; s < n; ++s) k(r, s) = cplx(normal(rng), normal(rng));
    k = 0.5 * (k - k.adjoint());
    k *= 1e-3 / k.norm();
    // A B* gains exactly the anti-Hermitian defect k.
    ab.a += k * ab.b.adjoint().inverse();
    const bool x = is_self_adjoint(ab).self_adjoint;
    const bool y = is_lagrangian(from_ab(ab)).self_adjoint;
    rejected += !x;
    agree += x == y;
  }
  c.require(accepted == 100, "unitary draws accepted");
  c.require(rejected == 100, "perturbed draws rejected");
  c.require(agree == 200, "AB and Omega tests agree");
  c.note("accepted " + std::to_string(accepted) + "/100, rejected " + std::to_string(rejected) +
         "/100, agreement " + std::to_string(agree) + "/200");
  return c.result();
}

Outcome flat_band() {
  Checker c;
  const PeriodicGraph pg = graphene(1.0);
  const ConditionsAB ab = preset(PresetKind::Kirchhoff, pg.cell);
  const BandSheet sheet = band_structure(pg, ab, 16, 0.0, 10.37);
  const auto flat = detect_flat_bands(sheet, 1e-8);
  bool at_pi2 = false;
  for (const auto& f : flat) at_pi2 = at_pi2 || std::abs(f.lambda - pi * pi) < 1e-8;
  c.require(at_pi2, "flat band at pi^2");
  const CompactSearch r = compact_state(pg, ab, pi * pi, 1);
  c.require(r.state.has_value(), "hexagon state at radius 1");
  if (r.state) {
    const double v = verify_compact_state(pg, ab, *r.state, 2);
    c.require(r.state->residual < 1e-8 && v < 1e-8, "compact state residual");
    c.note("flat bands " + std::to_string(flat.size()) + ", hexagon support " +
           std::to_string(r.state->support.size()) + " edges, residual " + fmt(std::max(v, r.state->residual)));
  }
  const PeriodicGraph pg2 = graphene(2.0);
  const CompactSearch r2 = find_compact_state(pg2, ab, pi * pi / 4);
  c.require(r2.state && r2.state->residual < 1e-8, "l = 2 state at pi^2/4");
  double worst = 0.0;
  for (const std::vector<double>& theta : {std::vector<double>{0.3, 1.1}, {2.0, 4.5}, {5.9, 0.2}}) {
    const auto evs = bloch_eigenvalues(pg2, ab, theta, pi * pi / 4 - 0.1, pi * pi / 4 + 0.1);
    double best = INFINITY;
    for (const auto& ev : evs) best = std::min(best, std::abs(ev.lambda - pi * pi / 4));
    worst = std::max(worst, best);
  }
  c.require(worst < 1e-8, "l = 2 flat level");
  c.note("l = 2 flat level deviation " + fmt(worst));
  return c.result();
}

Outcome torus_evidence() {
  Checker c;
  const PeriodicGraph pg = graphene(1.0);
  const ConditionsAB ab = preset(PresetKind::Kirchhoff, pg.cell);
  std::vector<int> mult;
  for (int n : {2, 3, 4}) {
    const Torus t = torus_closure(pg, ab, {n, n});
    int m = 0;
    for (const auto& ev : eigenvalues_in(t.graph, t.conditions, pi * pi - 0.05, pi * pi + 0.05))
      if (std::abs(ev.lambda - pi * pi) < 1e-7) m += ev.multiplicity;
    mult.push_back(m);
  }
  c.require(mult[0] <= mult[1] && mult[1] <= mult[2], "monotone multiplicity");
  c.require(mult[0] > 0, "pi^2 on the torus");

  const CompactSearch hex = compact_state(pg, ab, pi * pi, 1);
  c.require(hex.state.has_value(), "hexagon state");
  std::size_t span = 0;
  double worst = 0.0;
  if (hex.state) {
    const Torus t = torus_closure(pg, ab, {4, 4});
    std::vector<Eigen::VectorXcd> traces;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const EdgeCoefficients f = torus_function(t, translate(*hex.state, {i, j}));
        worst = std::max(worst, residual(t.graph, t.conditions, pi * pi, f));
        traces.push_back(trace_vector(t.graph, f));
      }
    Eigen::MatrixXcd m(traces[0].size(), static_cast<Eigen::Index>(traces.size()));
    for (std::size_t k = 0; k < traces.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = traces[k];
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXcd>(m).singularValues();
    for (Eigen::Index k = 0; k < s.size(); ++k) span += s(k) > 1e-8 * s(0);
    c.require(worst < 1e-8, "translated states are eigenfunctions");
  }
  c.note("multiplicity of pi^2 for N = 2, 3, 4: " + std::to_string(mult[0]) + ", " +
         std::to_string(mult[1]) + ", " + std::to_string(mult[2]) + "; 16 translates on N = 4 span " +
         std::to_string(span) + " dimensions, max residual " + fmt(worst));
  return c.result();
}

Outcome scaling() {
  Checker c;
  const MetricGraph g = star({1.0, 1.0, 1.0});
  const MetricGraph g2 = star({2.0, 2.0, 2.0});
  const ConditionsAB ab = star_conditions(g);
  auto first6 = [](std::vector<double> v) {
    v.resize(std::min<std::size_t>(6, v.size()));
    return v;
  };
  const auto base = first6(expand(eigenvalues_in(g, ab, 0.0, 65.0)));
  auto quarter = first6(expand(eigenvalues_in(g2, star_conditions(g2), 0.0, 65.0 / 4)));
  for (double& v : quarter) v *= 4.0;
  const double d = list_delta(quarter, base, true);
  c.require(base.size() == 6 && d < 1e-8, "lambda -> lambda / 4");
  c.note("max relative deviation " + fmt(d));
  return c.result();
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds
    std::function<Outcome()> run;
  };
  double slowest_closed_form = 0.0;
  const std::vector<Criterion> criteria{
      {1, "closed-form spectra", 2.0, [&] { return closed_forms(slowest_closed_form); }},
      {2, "Dirichlet-spectrum stress on the loop", 5.0, dirichlet_stress},
      {3, "three-way backend equivalence", 30.0, backend_equivalence},
      {4, "finite-difference oracle agreement", 60.0, oracle_agreement},
      {5, "analytic continuation across the chart boundary", 30.0, analyticity},
      {6, "self-adjointness classifier", 5.0, classifier},
      {7, "flat band and compact state", 120.0, flat_band},
      {8, "torus evidence", 120.0, torus_evidence},
      {9, "scaling covariance", 5.0, scaling},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.limit) {
      o.pass = false;
      o.detail += "; runtime above " + fmt(cr.limit) + " s";
    }
    failed += !o.pass;
    std::printf("criterion %d %s: %s (%.2f s) %s\n", cr.id, cr.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
