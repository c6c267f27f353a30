#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qgraph/graph.hpp"

namespace qgraph {

using cplx = std::complex<double>;

// Numerical rank cut-off relative to the largest singular value.
inline constexpr double kRankTolerance = 1e-10;

// Vertex conditions A U + B U' = 0. Columns follow the TraceIndex
// endpoint order; the pair is only meaningful up to left multiplication.
struct ConditionsAB {
  Eigen::MatrixXcd a;
  Eigen::MatrixXcd b;
};

// The same conditions as a point of the Grassmannian G(2|E|, 4|E|).
struct ConditionSubspace {
  Eigen::MatrixXcd basis;  // 4|E| x 2|E|
};

// Shape and rank check of [A B] for a graph with edge_count edges.
void validate(const ConditionsAB& c, std::size_t edge_count);

ConditionSubspace from_ab(const ConditionsAB& c);
ConditionsAB to_ab(const ConditionSubspace& p);

// Orthonormal basis of the column space; throws on rank deficiency.
Eigen::MatrixXcd orthonormal_basis(const Eigen::MatrixXcd& m);
// Orthonormal basis of the orthogonal complement of the column space.
Eigen::MatrixXcd orthogonal_complement(const Eigen::MatrixXcd& m);

// Principal angles between two column spaces, ascending. Small angles are
// resolved through sines, so subspace equality can be tested to ~1e-15.
std::vector<double> principal_angles(const Eigen::MatrixXcd& p, const Eigen::MatrixXcd& q);
double subspace_distance(const Eigen::MatrixXcd& p, const Eigen::MatrixXcd& q);

struct SelfAdjointness {
  bool self_adjoint = false;
  double witness = 0.0;  // relative size of the defect
};

// A B* Hermitian; witness = |anti-Hermitian part| / |[A B]|^2.
SelfAdjointness is_self_adjoint(const ConditionsAB& c, double tol = 1e-8);
// Omega vanishing on an orthonormal basis of P; witness = |Y* J Y|.
SelfAdjointness is_lagrangian(const ConditionSubspace& p, double tol = 1e-8);

// Omega(xi, eta) = <U'_xi, U_eta> - <U_xi, U'_eta>, conjugate-linear in eta.
cplx symplectic_form(const Eigen::VectorXcd& xi, const Eigen::VectorXcd& eta);

// Local chart of the Grassmannian around a base point P0: subspaces near
// P0 are graphs {x + R A x : x in P0} of operators A: P0 -> R.
class ChartFrame {
 public:
  ChartFrame(Eigen::MatrixXcd base, Eigen::MatrixXcd complement);
  static ChartFrame orthogonal(const ConditionSubspace& base);

  const Eigen::MatrixXcd& base() const noexcept { return base_; }
  const Eigen::MatrixXcd& complement() const noexcept { return complement_; }
  double condition_number() const noexcept { return condition_; }

  // Throws a precondition error when P meets R nontrivially.
  Eigen::MatrixXcd coordinates(const ConditionSubspace& p) const;
  ConditionSubspace subspace(const Eigen::MatrixXcd& coords) const;
  // Projector onto the chart point along R; affine in the coordinates.
  Eigen::MatrixXcd projector(const Eigen::MatrixXcd& coords) const;

 private:
  Eigen::MatrixXcd base_;
  Eigen::MatrixXcd complement_;
  Eigen::MatrixXcd stacked_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu_;
  double condition_ = 0.0;
};

inline Eigen::MatrixXcd chart_coords(const ChartFrame& frame, const ConditionSubspace& p) {
  return frame.coordinates(p);
}
inline Eigen::MatrixXcd chart_projector(const ChartFrame& frame, const Eigen::MatrixXcd& coords) {
  return frame.projector(coords);
}

enum class PresetKind { Dirichlet, Neumann, Kirchhoff, Delta, BoundaryAngle };

PresetKind parse_preset(std::string_view name);
std::string_view preset_name(PresetKind kind);

// A local condition at one vertex: a preset, or a deg x deg block acting on
// the vertex endpoints in ascending trace order.
struct LocalPreset {
  PresetKind kind = PresetKind::Kirchhoff;
  double parameter = 0.0;  // alpha for delta, t for boundary-angle
};
struct LocalAB {
  Eigen::MatrixXcd a;
  Eigen::MatrixXcd b;
};
using VertexCondition = std::variant<LocalPreset, LocalAB>;
using VertexConditionMap = std::map<std::string, VertexCondition, std::less<>>;

// Block assembly of local conditions; vertices missing from the map get
// the fallback condition.
ConditionsAB assemble_local(const MetricGraph& graph, const VertexConditionMap& conditions,
                            const VertexCondition& fallback = LocalPreset{});

struct PresetParams {
  std::optional<double> value;                         // applies to every vertex
  std::map<std::string, double, std::less<>> per_vertex;  // overrides
};

ConditionsAB preset(PresetKind kind, const MetricGraph& graph, const PresetParams& params = {});
ConditionsAB preset(std::string_view name, const MetricGraph& graph,
                    const PresetParams& params = {});

// Principal-angle geodesic from start (t = 0) to end (t = 1). Directions
// orthogonal to the start are paired through the symplectic rotation.
ConditionSubspace grassmann_path(const ConditionSubspace& start, const ConditionSubspace& end,
                                 double t);

// Relabels trace slots: column permutation[i] of the result is column i of c.
ConditionsAB transport(const ConditionsAB& c, const std::vector<std::size_t>& permutation);

// Conditions on a dotted graph: the original rows on the resolved endpoints,
// plus Kirchhoff rows at every dot that is new relative to the original.
ConditionsAB extend_for_dots(const MetricGraph& original, const MetricGraph& dotted,
                             const ConditionsAB& c);

// Endpoint of the dotted graph carrying the given endpoint of an edge that
// may have been split.
std::size_t resolve_endpoint(const MetricGraph& dotted, std::string_view edge_id, End end);

// A = U - I, B = i(U + I): self-adjoint for every unitary U.
ConditionsAB unitary_conditions(const Eigen::MatrixXcd& u);
// Haar-distributed unitary matrix.
Eigen::MatrixXcd random_unitary(std::size_t n, std::mt19937_64& rng);

}  // namespace qgraph
