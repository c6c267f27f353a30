#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "qgraph/conditions.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/reduction.hpp"

namespace qgraph {

struct SearchOptions {
  Backend backend = Backend::Intersection;
  SolutionBasis basis = SolutionBasis::CosineSine;
  std::size_t kgrid = 16;               // grid points per mean level spacing in k
  double max_step = 0.25;               // cap on the lambda grid step
  double refine_width = 1e-11;          // golden-section stop, relative to 1 + |lambda|
  double accept_tolerance = 1e-7;       // relative smallest singular value at a root
  double multiplicity_tolerance = 1e-6; // relative nullity cut-off
  double dedupe_tolerance = 1e-8;
  double residual_tolerance = 1e-7;
  std::size_t threads = 1;
};

struct Eigenvalue {
  double lambda = 0.0;
  int multiplicity = 0;
  Backend backend = Backend::Intersection;
  double residual = 0.0;
  double width = 0.0;
  bool best_effort = false;  // non-self-adjoint conditions: real search only
};

// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
// exception thrown by a worker is rethrown.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// Lambda grid used by the scans: uniform in k = sqrt|lambda| with the
// given number of points per mean level spacing pi / L_total.
std::vector<double> search_grid(double lo, double hi, double total_length,
                                const SearchOptions& opts = {});

std::vector<SecularSample> scan(const SecularOperator& op, const std::vector<double>& grid,
                                std::size_t threads = 1);

// Real eigenvalues in [lo, hi], sorted, with multiplicities.
std::vector<Eigenvalue> eigenvalues_in(const SecularOperator& op, double lo, double hi,
                                       const SearchOptions& opts = {});
std::vector<Eigenvalue> eigenvalues_in(const MetricGraph& graph, const ConditionsAB& c, double lo,
                                       double hi, const SearchOptions& opts = {});
// Intersection backend for conditions given as a subspace.
std::vector<Eigenvalue> eigenvalues_in(const MetricGraph& graph, const ConditionSubspace& p,
                                       double lo, double hi, const SearchOptions& opts = {});

// Basis of the eigenspace at an eigenvalue; each element is certified.
std::vector<EdgeCoefficients> eigenfunction_basis(const SecularOperator& op, double lambda,
                                                  const SearchOptions& opts = {});
std::vector<EdgeCoefficients> eigenfunction_basis(const MetricGraph& graph, const ConditionsAB& c,
                                                  double lambda, const SearchOptions& opts = {});

// Max of the equation residual and the relative vertex-condition defect.
double residual(const MetricGraph& graph, const ConditionsAB& c, double lambda,
                const EdgeCoefficients& f);

// ---- Tracking along a one-parameter family of conditions ----

using ConditionFamily = std::function<ConditionsAB(double)>;

// Boundary-angle(t) at one degree-1 vertex, fixed local conditions elsewhere.
ConditionFamily boundary_angle_family(const MetricGraph& graph, std::string vertex,
                                      VertexConditionMap others = {});
// Principal-angle geodesic between two condition subspaces, t in [0, 1].
ConditionFamily geodesic_family(const ConditionSubspace& start, const ConditionSubspace& end);

struct TrackOptions {
  SearchOptions search;
  std::size_t chebyshev_nodes = 24;
  std::size_t holdout = 10;
  double ambiguity = 1e-6;
  double chart_tolerance = 1e-8;  // sigma_min(B) / |[A B]| flagging a chart boundary
};

struct EigencurveSample {
  double t = 0.0;
  std::vector<double> eigenvalues;  // sorted, multiplicity-expanded
  bool chart_boundary = false;
  double b_singularity = 0.0;  // sigma_min(B) / |[A B]|
  bool held_out = false;
  bool node = false;  // Chebyshev node
};

struct BranchReport {
  std::vector<double> values;  // per sample; NaN where the branch is absent
  bool complete = false;
  double fit_error = 0.0;      // max relative held-out error of the Chebyshev fit
  double discontinuity = 0.0;  // max |step - fitted step| over adjacent samples
  std::vector<double> at_chart_boundary;
};

struct Ambiguity {
  double t = 0.0;
  double lambda = 0.0;
  double gap = 0.0;
};

struct TrackReport {
  std::vector<EigencurveSample> samples;  // sorted by t
  std::vector<BranchReport> branches;
  std::vector<Ambiguity> ambiguities;
  std::vector<double> chart_boundaries;

  double max_fit_error() const;
  double max_discontinuity() const;
};

TrackReport track_along_path(const MetricGraph& graph, const ConditionFamily& family,
                             const std::vector<double>& t_grid, double lo, double hi,
                             const TrackOptions& opts = {});

// Chebyshev points of the first kind mapped to [a, b], ascending.
std::vector<double> chebyshev_nodes(double a, double b, std::size_t n);
// Barycentric interpolant through values at chebyshev_nodes(a, b, n).
double chebyshev_interpolate(double a, double b, const std::vector<double>& values, double t);

}  // namespace qgraph
