#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "helpers.hpp"
#include "qgraph/error.hpp"
#include "qgraph/periodic.hpp"

using namespace qgraph;
using std::numbers::pi;

namespace {

PeriodicGraph graphene(double length = 1.0) {
  MetricGraph cell({"a", "b"}, {{"e1", "a", "b", length, {}},
                                {"e2", "a", "b", length, {}},
                                {"e3", "a", "b", length, {}}});
  return {cell, 2, {{"e2", {1, 0}}, {"e3", {0, 1}}}};
}

PeriodicGraph free_chain() {
  return {test::loop(1.0), 1, {{"e", {1}}}};
}

std::vector<double> bloch_levels(const PeriodicGraph& pg, const ConditionsAB& c,
                                 const std::vector<double>& theta, double lo, double hi) {
  return test::expand(bloch_eigenvalues(pg, c, theta, lo, hi));
}

void check_same(std::vector<double> a, std::vector<double> b, double tol) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < tol * (1.0 + std::abs(b[i])));
}

}  // namespace

TEST_CASE("graphene at zero quasimomentum") {
  const PeriodicGraph pg = graphene();
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  check_same(bloch_levels(pg, c, {0.0, 0.0}, -1.0, 12.0), {0.0, pi * pi, pi * pi, pi * pi}, 1e-9);
  // Zero phase leaves the conditions unchanged.
  const ConditionsAB b0 = bloch_conditions(pg, c, {0.0, 0.0});
  CHECK(subspace_distance(from_ab(b0).basis, from_ab(c).basis) < 1e-14);
  CHECK_THROWS_AS(bloch_conditions(pg, c, {0.1}), Error);
}

TEST_CASE("Bloch conditions are self-adjoint and conjugation symmetric") {
  const PeriodicGraph pg = graphene();
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  for (const std::vector<double>& theta : {std::vector<double>{0.4, 1.3}, {2.9, -0.8}, {5.0, 3.1}}) {
    CHECK(is_self_adjoint(bloch_conditions(pg, c, theta)).self_adjoint);
    CHECK(is_lagrangian(bloch_subspace(pg, c, theta)).self_adjoint);
    const std::vector<double> minus{-theta[0], -theta[1]};
    check_same(bloch_levels(pg, c, theta, -1.0, 40.0), bloch_levels(pg, c, minus, -1.0, 40.0), 1e-9);
  }
}

TEST_CASE("free chain bands") {
  const PeriodicGraph pg = free_chain();
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  for (double theta : {0.3, 1.7, 3.0}) {
    std::vector<double> want;
    for (int m = -3; m <= 3; ++m) {
      const double v = std::pow(theta + 2 * pi * m, 2);
      if (v < 100.0) want.push_back(v);
    }
    check_same(bloch_levels(pg, c, {theta}, -1.0, 100.0), want, 1e-9);
  }
  const BandSheet sheet = band_structure(pg, c, 8, 0.0, 30.0);
  CHECK(sheet.theta.size() == 8);
  CHECK(detect_flat_bands(sheet).empty());
  const CompactSearch r = find_compact_state(pg, c, pi * pi);
  CHECK_FALSE(r.state);
  CHECK(r.reason.find("not a flat band") != std::string::npos);
}

TEST_CASE("long shifts are split") {
  const PeriodicGraph pg{test::loop(2.0), 1, {{"e", {2}}}};
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  const auto [norm, nc] = normalize_periodic(pg, c);
  CHECK(norm.cell.edge_count() == 2);
  for (const auto& [id, n] : norm.shifts) CHECK(std::abs(n[0]) <= 1);
  // k = theta + pi m on the folded line.
  const double theta = 0.9;
  std::vector<double> want;
  for (int m = -4; m <= 4; ++m) {
    const double v = std::pow(theta + pi * m, 2);
    if (v < 60.0) want.push_back(v);
  }
  check_same(bloch_levels(norm, nc, {theta}, -1.0, 60.0), want, 1e-9);
  CHECK_THROWS_AS(normalize_periodic(PeriodicGraph{test::loop(1.0), 3, {}}, c), Error);
}

TEST_CASE("flat band detection on a synthetic sheet") {
  BandSheet s;
  s.grid = 3;
  s.theta = {{0.0}, {2.0}, {4.0}};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.bands = {{1.0, 2.0, 3.0}, {5.0, 5.0, 5.0 + 1e-10}, {7.0, nan, 7.0}};
  CHECK(s.complete(0));
  CHECK_FALSE(s.complete(2));
  const auto flat = detect_flat_bands(s, 1e-8);
  REQUIRE(flat.size() == 1);
  CHECK(flat[0].band == 1);
  CHECK(flat[0].lambda == doctest::Approx(5.0));
}

TEST_CASE("graphene flat band and hexagon state") {
  const PeriodicGraph pg = graphene();
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  const CompactSearch none = compact_state(pg, c, pi * pi, 0);
  CHECK_FALSE(none.state);

  const CompactSearch found = find_compact_state(pg, c, pi * pi);
  REQUIRE(found.state);
  const CompactState& s = *found.state;
  CHECK(s.radius == 1);
  CHECK(s.support.size() == 6);
  CHECK(s.residual < 1e-10);
  CHECK(verify_compact_state(pg, c, s) < 1e-10);
  // On the free line each piece is +-sin(pi x) / pi.
  for (const auto& inst : s.support) {
    CHECK(std::abs(inst.coeffs(0)) < 1e-10);
    CHECK(std::abs(std::abs(inst.coeffs(1)) - 1.0) < 1e-10);
  }

  SUBCASE("translation covariance") {
    for (const Shift& by : {Shift{1, 0}, Shift{-2, 3}}) {
      const CompactState t = translate(s, by);
      CHECK(verify_compact_state(pg, c, t) < 1e-10);
      CHECK(t.support[0].cell[0] == s.support[0].cell[0] + by[0]);
    }
  }
  SUBCASE("wrapped onto a torus") {
    const Torus torus = torus_closure(pg, c, {3, 3});
    CHECK(torus.graph.edge_count() == 27);
    CHECK(torus.graph.has_edge(instance_name("e1", {2, 1})));
    const EdgeCoefficients f = torus_function(torus, s);
    CHECK(residual(torus.graph, torus.conditions, pi * pi, f) < 1e-10);
  }
  SUBCASE("not at a generic energy") {
    const CompactSearch r = compact_state(pg, c, 7.0, 1);
    CHECK_FALSE(r.state);
  }
}

TEST_CASE("scaled graphene has its flat band at pi^2 / l^2") {
  const PeriodicGraph pg = graphene(2.0);
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  const CompactSearch found = find_compact_state(pg, c, pi * pi / 4);
  REQUIRE(found.state);
  CHECK(found.state->support.size() == 6);
  CHECK(found.state->residual < 1e-10);
}

TEST_CASE("chain of loops has a single-cell state") {
  MetricGraph cell({"a", "b"}, {{"p1", "a", "b", 1.0, {}}, {"p2", "a", "b", 1.0, {}},
                                {"c", "b", "a", 1.0, {}}});
  const PeriodicGraph pg{cell, 1, {{"c", {1}}}};
  const ConditionsAB c = preset(PresetKind::Kirchhoff, cell);
  const CompactSearch r = find_compact_state(pg, c, pi * pi);
  REQUIRE(r.state);
  CHECK(r.state->radius == 0);
  CHECK(r.state->support.size() == 2);
}

TEST_CASE("torus spectrum is the union of Bloch spectra at rational quasimomenta") {
  const PeriodicGraph pg = graphene();
  const ConditionsAB c = preset(PresetKind::Kirchhoff, pg.cell);
  const int n = 2;
  const Torus torus = torus_closure(pg, c, {n, n});
  CHECK(is_self_adjoint(torus.conditions).self_adjoint);
  std::vector<double> union_levels;
  for (int j1 = 0; j1 < n; ++j1)
    for (int j2 = 0; j2 < n; ++j2) {
      const auto v = bloch_levels(pg, c, {2 * pi * j1 / n, 2 * pi * j2 / n}, -1.0, 12.0);
      union_levels.insert(union_levels.end(), v.begin(), v.end());
    }
  check_same(test::expand(eigenvalues_in(torus.graph, torus.conditions, -1.0, 12.0)), union_levels,
             1e-8);
}

TEST_CASE("compact states need local conditions") {
  const PeriodicGraph pg = graphene();
  std::mt19937_64 rng(1);
  const ConditionsAB c = unitary_conditions(random_unitary(6, rng));
  CHECK_THROWS_AS(torus_closure(pg, c, {2, 2}), Error);
}
