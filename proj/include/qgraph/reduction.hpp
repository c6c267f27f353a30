#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "qgraph/conditions.hpp"
#include "qgraph/edge_solutions.hpp"
#include "qgraph/graph.hpp"

namespace qgraph {

enum class Backend { Dtn, DottedDtn, Intersection };

Backend parse_backend(std::string_view name);
std::string_view backend_name(Backend backend);

// f restricted to each edge equals a1 * C + a2 * S at the stored lambda.
struct EdgeCoefficients {
  cplx lambda{0.0, 0.0};
  std::map<std::string, Eigen::Vector2cd, std::less<>> coeffs;
};

// Trace vector (U, U') of a function given by edge coefficients.
Eigen::VectorXcd trace_vector(const MetricGraph& graph, const EdgeCoefficients& f);

// Endpoint-indexed assembly of per-edge DtN blocks (U' = D U).
Eigen::MatrixXcd dtn_matrix(const MetricGraph& graph, cplx lambda);

// M(lambda) = A + B D(lambda), acting on U.
Eigen::MatrixXcd assemble_dtn(const MetricGraph& graph, const ConditionsAB& c, cplx lambda);

struct DottedSystem {
  MetricGraph graph;
  ConditionsAB conditions;
  DotMap dots;
  Eigen::MatrixXcd matrix;
};

// DtN on the graph dotted at the edges where lambda is a Dirichlet
// eigenvalue, with Kirchhoff rows at the dots.
DottedSystem assemble_modified_dtn(const MetricGraph& graph, const ConditionsAB& c,
                                   double lambda);
DottedSystem assemble_modified_dtn(const MetricGraph& graph, const ConditionsAB& c,
                                   double lambda, const DotMap& dots);

// Columns spanning Q(lambda): per-edge trace subspaces embedded in the
// global trace space, each column divided by max(1, its norm).
struct TraceSolutionSpace {
  Eigen::MatrixXcd columns;  // 4|E| x 2|E|
  Eigen::VectorXd scale;     // applied column factors
};
TraceSolutionSpace solution_trace_space(const MetricGraph& graph, cplx lambda,
                                        SolutionBasis basis = SolutionBasis::CosineSine);

// N(lambda) = [basis(P) | Q(lambda)]; rank deficiency marks eigenvalues.
Eigen::MatrixXcd assemble_intersection(const MetricGraph& graph, const ConditionSubspace& p,
                                       cplx lambda,
                                       SolutionBasis basis = SolutionBasis::CosineSine);

struct SecularSample {
  cplx lambda{0.0, 0.0};
  Backend backend = Backend::Intersection;
  std::size_t dimension = 0;
  Eigen::VectorXd singular_values;  // ascending
  double log_abs_det = 0.0;          // -inf for an exactly singular matrix
  double det_phase = 0.0;
  double condition = 0.0;            // largest / smallest singular value

  double smallest() const { return singular_values(0); }
  double relative_smallest() const {
    const double top = singular_values(singular_values.size() - 1);
    return top > 0.0 ? singular_values(0) / top : 0.0;
  }
  cplx determinant() const { return std::polar(std::exp(log_abs_det), det_phase); }
};

SecularSample describe(const Eigen::MatrixXcd& m, cplx lambda, Backend backend);

SecularSample secular(Backend backend, const MetricGraph& graph, const ConditionsAB& c,
                      cplx lambda);

// Ascending singular values; values only.
Eigen::VectorXd singular_values_ascending(const Eigen::MatrixXcd& m);

// Backend matrix as a function of lambda. The dotted backend re-dots per
// lambda unless frozen, in which case the dot layout of the freezing point
// is kept so that the matrix is continuous around it. DtN-type matrices are
// column-scaled per edge by min(1, |S_e| max(1, |k|)): the null space is
// unchanged off the Dirichlet spectrum, and the relative smallest singular
// value no longer collapses next to it.
class SecularOperator {
 public:
  // Dots are placed once lambda is within this fraction of the local
  // Dirichlet level spacing.
  static constexpr double kDotProximity = 1.0 / 6.0;

  SecularOperator(MetricGraph graph, ConditionsAB conditions, Backend backend,
                  SolutionBasis basis = SolutionBasis::CosineSine);
  // Intersection backend on conditions given as a subspace.
  SecularOperator(MetricGraph graph, ConditionSubspace subspace,
                  SolutionBasis basis = SolutionBasis::CosineSine);

  Backend backend() const noexcept { return backend_; }
  const MetricGraph& graph() const noexcept { return graph_; }
  const ConditionsAB& conditions() const noexcept { return conditions_; }
  const ConditionSubspace& subspace() const noexcept { return subspace_; }

  Eigen::MatrixXcd matrix(cplx lambda) const;
  SecularSample sample(cplx lambda) const;
  SecularOperator frozen_at(double lambda) const;
  SecularOperator frozen_with(DotMap dots) const;
  // Dot layout valid on all of [a, b]: proximity dots at the midpoint plus
  // every edge whose Dirichlet spectrum meets the interval.
  SecularOperator frozen_for(double a, double b) const;

  // Edge coefficients on the original graph for a null vector of matrix(lambda).
  EdgeCoefficients coefficients(const Eigen::VectorXcd& null_vector, cplx lambda) const;

 private:
  DotMap dots_for(double lambda) const;

  MetricGraph graph_;
  ConditionsAB conditions_;
  ConditionSubspace subspace_;
  Backend backend_;
  SolutionBasis basis_;
  std::optional<DotMap> frozen_;
};

// Maps a null vector of the backend matrix back to a function on the graph.
EdgeCoefficients solution_from_nullvector(Backend backend, const MetricGraph& graph,
                                          const ConditionsAB& c, double lambda,
                                          const Eigen::VectorXcd& null_vector);

}  // namespace qgraph
