#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "qgraph/conditions.hpp"
#include "qgraph/error.hpp"

using namespace qgraph;
using Eigen::MatrixXcd;

namespace {

MatrixXcd random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  MatrixXcd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = cplx(n(rng), n(rng));
  return m;
}

}  // namespace

TEST_CASE("AB and subspace forms round-trip") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 * (1 + trial % 3);
    ConditionsAB c{random_matrix(n, n, rng), random_matrix(n, n, rng)};
    const ConditionSubspace p = from_ab(c);
    CHECK(p.basis.rows() == 2 * n);
    CHECK(p.basis.cols() == n);
    // [A B] annihilates P.
    MatrixXcd ab(n, 2 * n);
    ab << c.a, c.b;
    CHECK((ab * p.basis).norm() < 1e-12 * ab.norm());
    const ConditionsAB back = to_ab(p);
    CHECK(subspace_distance(from_ab(back).basis, p.basis) < 1e-12);

    const ConditionSubspace q{random_matrix(2 * n, n, rng)};
    CHECK(subspace_distance(from_ab(to_ab(q)).basis, q.basis) < 1e-12);
  }
}

TEST_CASE("left multiplication does not change the conditions") {
  std::mt19937_64 rng(3);
  MatrixXcd u = random_unitary(4, rng);
  ConditionsAB c = unitary_conditions(u);
  MatrixXcd g = random_matrix(4, 4, rng);
  ConditionsAB gc{g * c.a, g * c.b};
  CHECK(subspace_distance(from_ab(c).basis, from_ab(gc).basis) < 1e-12);
}

TEST_CASE("degenerate conditions are input errors") {
  ConditionsAB c{MatrixXcd::Zero(2, 2), MatrixXcd::Zero(2, 2)};
  c.a(0, 0) = 1.0;
  CHECK_THROWS_AS(validate(c, 1), Error);
  ConditionsAB wrong{MatrixXcd::Identity(3, 3), MatrixXcd::Zero(3, 3)};
  CHECK_THROWS_AS(validate(wrong, 1), Error);
  CHECK_THROWS_AS(orthonormal_basis(MatrixXcd::Zero(4, 2)), Error);
}

TEST_CASE("principal angles") {
  MatrixXcd p = MatrixXcd::Zero(4, 2), q = MatrixXcd::Zero(4, 2);
  p(0, 0) = p(1, 1) = 1.0;
  const double theta = 0.3;
  q(0, 0) = 1.0;
  q(1, 1) = std::cos(theta);
  q(2, 1) = std::sin(theta);
  const auto angles = principal_angles(p, q);
  REQUIRE(angles.size() == 2);
  CHECK(angles[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(angles[1] == doctest::Approx(theta).epsilon(1e-14));
  // Tiny angles are resolved.
  q(1, 1) = std::cos(1e-9);
  q(2, 1) = std::sin(1e-9);
  CHECK(principal_angles(p, q)[1] == doctest::Approx(1e-9).epsilon(1e-6));
}

TEST_CASE("unitary generator yields self-adjoint conditions") {
  std::mt19937_64 rng(2024);
  for (int draw = 0; draw < 100; ++draw) {
    const auto n = static_cast<std::size_t>(2 + draw % 5);
    const MatrixXcd u = random_unitary(n, rng);
    CHECK((u.adjoint() * u - MatrixXcd::Identity(n, n)).norm() < 1e-12);
    const ConditionsAB c = unitary_conditions(u);
    const auto ab = is_self_adjoint(c);
    const auto omega = is_lagrangian(from_ab(c));
    CHECK(ab.self_adjoint);
    CHECK(omega.self_adjoint);
    CHECK(ab.witness < 1e-12);
  }
}

TEST_CASE("anti-Hermitian defects are detected by both tests") {
  std::mt19937_64 rng(99);
  for (int draw = 0; draw < 100; ++draw) {
    const auto n = static_cast<Eigen::Index>(2 + draw % 5);
    ConditionsAB c = unitary_conditions(random_unitary(static_cast<std::size_t>(n), rng));
    MatrixXcd k = random_matrix(n, n, rng);
    k = (k - k.adjoint()) / 2.0;
    k *= 1e-3 / k.norm();
    // A B* picks up the anti-Hermitian part k when A -> A + k (B*)^{-1}.
    c.a += k * c.b.adjoint().inverse();
    CHECK_FALSE(is_self_adjoint(c).self_adjoint);
    CHECK_FALSE(is_lagrangian(from_ab(c)).self_adjoint);
  }
}

TEST_CASE("symplectic form is skew-Hermitian") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXcd x = random_matrix(8, 1, rng), y = random_matrix(8, 1, rng);
  CHECK(std::abs(symplectic_form(x, y) + std::conj(symplectic_form(y, x))) < 1e-12);
  CHECK(std::abs(symplectic_form(x, x).real()) < 1e-12);
}

TEST_CASE("presets") {
  const MetricGraph g = test::star({1.0, 2.0, 3.0});
  SUBCASE("delta with zero strength is Kirchhoff") {
    PresetParams zero;
    zero.value = 0.0;
    const ConditionsAB d = preset(PresetKind::Delta, g, zero);
    const ConditionsAB k = preset(PresetKind::Kirchhoff, g);
    CHECK(subspace_distance(from_ab(d).basis, from_ab(k).basis) < 1e-14);
  }
  SUBCASE("all presets are self-adjoint") {
    for (auto kind : {PresetKind::Dirichlet, PresetKind::Neumann, PresetKind::Kirchhoff}) {
      const ConditionsAB c = preset(kind, g);
      CHECK(is_self_adjoint(c).self_adjoint);
      CHECK(is_lagrangian(from_ab(c)).self_adjoint);
    }
    PresetParams alpha;
    alpha.value = 1.7;
    CHECK(is_self_adjoint(preset(PresetKind::Delta, g, alpha)).self_adjoint);
  }
  SUBCASE("Kirchhoff star: continuity and zero flux") {
    const ConditionsAB c = preset("kirchhoff", g);
    Eigen::VectorXcd trace = Eigen::VectorXcd::Zero(12);
    // Value 2 at the centre (start endpoints 0, 2, 4), fluxes 1, 1, -2.
    trace(0) = trace(2) = trace(4) = 2.0;
    trace(6) = 1.0;
    trace(8) = 1.0;
    trace(10) = -2.0;
    MatrixXcd ab(6, 12);
    ab << c.a, c.b;
    CHECK((ab * trace).norm() < 1e-14);
    trace(10) = -1.0;
    CHECK((ab * trace).norm() > 0.5);
  }
  SUBCASE("boundary angle interpolates Dirichlet and Neumann") {
    const MetricGraph i = test::interval(1.0);
    auto at = [&](double t) {
      return assemble_local(i, {{"a", LocalPreset{PresetKind::BoundaryAngle, t}}},
                            LocalPreset{PresetKind::Dirichlet, 0.0});
    };
    const auto d = test::local(i, PresetKind::Dirichlet, PresetKind::Dirichlet);
    const auto n = test::local(i, PresetKind::Neumann, PresetKind::Dirichlet);
    CHECK(subspace_distance(from_ab(at(0.0)).basis, from_ab(d).basis) < 1e-14);
    CHECK(subspace_distance(from_ab(at(std::numbers::pi / 2)).basis, from_ab(n).basis) < 1e-14);
    CHECK_THROWS_AS(assemble_local(g, {{"c", LocalPreset{PresetKind::BoundaryAngle, 0.1}}}),
                    Error);
  }
  SUBCASE("per-vertex overrides") {
    PresetParams p;
    p.value = 0.0;
    p.per_vertex["c"] = 2.0;
    const ConditionsAB c = preset(PresetKind::Delta, g, p);
    const ConditionsAB ref =
        assemble_local(g, {{"c", LocalPreset{PresetKind::Delta, 2.0}}},
                       LocalPreset{PresetKind::Delta, 0.0});
    CHECK(subspace_distance(from_ab(c).basis, from_ab(ref).basis) < 1e-14);
    CHECK_THROWS_AS(preset("bogus", g), Error);
  }
}

TEST_CASE("chart coordinates and projector") {
  std::mt19937_64 rng(17);
  const ConditionsAB c0 = unitary_conditions(random_unitary(4, rng));
  const ConditionSubspace p0 = from_ab(c0);
  const ChartFrame frame = ChartFrame::orthogonal(p0);
  CHECK(frame.condition_number() == doctest::Approx(1.0));

  const MatrixXcd zero = chart_coords(frame, p0);
  CHECK(zero.norm() < 1e-12);

  const MatrixXcd coords = 0.1 * random_matrix(4, 4, rng);
  const ConditionSubspace p = frame.subspace(coords);
  CHECK((chart_coords(frame, p) - coords).norm() < 1e-12);

  const MatrixXcd pr = chart_projector(frame, coords);
  CHECK((pr * pr - pr).norm() < 1e-12);
  // Range is P, kernel is the complement R.
  CHECK((pr * p.basis - p.basis).norm() < 1e-12);
  CHECK((pr * frame.complement()).norm() < 1e-12);
  CHECK(subspace_distance(pr * random_matrix(8, 4, rng), p.basis) < 1e-10);

  // A subspace meeting R lies outside the chart.
  MatrixXcd bad = frame.base();
  bad.col(0) = frame.complement().col(0);
  CHECK_THROWS_AS(chart_coords(frame, ConditionSubspace{bad}), Error);
}

TEST_CASE("Grassmann geodesic") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const ConditionSubspace p0 = from_ab(unitary_conditions(random_unitary(4, rng)));
    const ConditionSubspace p1 = from_ab(unitary_conditions(random_unitary(4, rng)));
    CHECK(subspace_distance(grassmann_path(p0, p1, 0.0).basis, p0.basis) < 1e-12);
    CHECK(subspace_distance(grassmann_path(p0, p1, 1.0).basis, p1.basis) < 1e-12);
    const ConditionSubspace mid = grassmann_path(p0, p1, 0.5);
    const auto full = principal_angles(p0.basis, p1.basis);
    const auto half = principal_angles(p0.basis, mid.basis);
    const auto rest = principal_angles(mid.basis, p1.basis);
    for (std::size_t i = 0; i < full.size(); ++i) {
      CHECK(half[i] == doctest::Approx(full[i] / 2).epsilon(1e-9));
      CHECK(rest[i] == doctest::Approx(full[i] / 2).epsilon(1e-9));
    }
    // Lagrangian planes form a totally geodesic submanifold.
    for (double t : {0.25, 0.5, 0.75}) CHECK(is_lagrangian(grassmann_path(p0, p1, t)).self_adjoint);
  }
}

TEST_CASE("Dirichlet to Neumann geodesic stays Lagrangian") {
  const MetricGraph i = test::interval(1.0);
  const auto d = from_ab(test::local(i, PresetKind::Dirichlet, PresetKind::Dirichlet));
  const auto n = from_ab(test::local(i, PresetKind::Neumann, PresetKind::Neumann));
  for (double t = 0.1; t < 1.0; t += 0.2) CHECK(is_lagrangian(grassmann_path(d, n, t)).self_adjoint);
}

TEST_CASE("transport and dot extension") {
  const MetricGraph g = test::star({1.0, 2.0});
  const ConditionsAB c = test::star_conditions(g);
  const RoseFolding r = fold_to_rose(g);
  const ConditionsAB moved = transport(c, r.permutation);
  CHECK(is_self_adjoint(moved).self_adjoint);

  const MetricGraph dotted = insert_dot(g, "e2", 0.5);
  const ConditionsAB ext = extend_for_dots(g, dotted, c);
  CHECK(ext.a.rows() == 6);
  CHECK(is_self_adjoint(ext).self_adjoint);
  const std::size_t end = resolve_endpoint(dotted, "e2", End::Finish);
  CHECK(dotted.vertex_of(end) == "l2");
}
