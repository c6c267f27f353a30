#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qgraph/conditions.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/reduction.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph {

using Shift = std::vector<int>;

// Z^d-periodic graph given by a fundamental domain. An edge with shift n
// runs from its start vertex in cell m to its end vertex in cell m + n.
struct PeriodicGraph {
  MetricGraph cell;
  int dim = 1;
  std::map<std::string, Shift, std::less<>> shifts;  // missing entries are zero

  Shift shift_of(std::string_view edge) const;
};

// Validates dimension and shifts. Shifts with a component beyond +-1 are
// split by pass-through Kirchhoff vertices; conditions are extended to match.
std::pair<PeriodicGraph, ConditionsAB> normalize_periodic(PeriodicGraph pg,
                                                          const ConditionsAB& c);

// Quasimomentum phases: (A Phi, B Phi), Phi = e^{-i theta.n} on the end
// endpoints of crossing edges.
ConditionsAB bloch_conditions(const PeriodicGraph& pg, const ConditionsAB& c,
                              const std::vector<double>& theta);
ConditionSubspace bloch_subspace(const PeriodicGraph& pg, const ConditionsAB& c,
                                 const std::vector<double>& theta);
// Intersection matrix of the Bloch problem at (theta, lambda).
Eigen::MatrixXcd bloch_reduce(const PeriodicGraph& pg, const ConditionsAB& c,
                              const std::vector<double>& theta, double lambda);

std::vector<Eigenvalue> bloch_eigenvalues(const PeriodicGraph& pg, const ConditionsAB& c,
                                          const std::vector<double>& theta, double lo, double hi,
                                          const SearchOptions& opts = {});

struct BandSheet {
  std::size_t grid = 0;                    // points per dimension
  std::vector<std::vector<double>> theta;  // grid points, row-major
  std::vector<std::vector<double>> levels; // per theta, sorted, multiplicity-expanded
  // bands[b][j]: b-th level at theta j, NaN where fewer levels were found.
  std::vector<std::vector<double>> bands;
  bool complete(std::size_t band) const;
};

// Uniform grid theta_j = 2 pi j / n in each dimension.
BandSheet band_structure(const PeriodicGraph& pg, const ConditionsAB& c, std::size_t grid,
                         double lo, double hi, const SearchOptions& opts = {});

struct FlatBand {
  std::size_t band = 0;
  double lambda = 0.0;  // median over the grid
  double spread = 0.0;  // max - min
};

std::vector<FlatBand> detect_flat_bands(const BandSheet& sheet, double tol = 1e-8);

struct InstanceCoefficients {
  std::string edge;
  Shift cell;
  Eigen::Vector2cd coeffs;  // f = a1 C + a2 S on this edge copy
};

struct CompactState {
  double lambda = 0.0;
  int radius = 0;
  std::vector<InstanceCoefficients> support;  // nonzero edge copies only
  double residual = 0.0;                      // conditions on radius + 2 shells
};

struct CompactSearch {
  std::optional<CompactState> state;
  std::string reason;  // set when no state is returned
};

struct CompactOptions {
  double flat_tolerance = 1e-6;   // Bloch relative sigma_min at lambda*
  double null_tolerance = 1e-8;   // relative nullity cut-off of the patch system
  double support_tolerance = 1e-9;
  int max_radius = 4;
};

// Compactly supported eigenfunction on the cells |m|_inf <= radius: every
// trace vanishes at vertices outside those cells.
CompactSearch compact_state(const PeriodicGraph& pg, const ConditionsAB& c, double lambda,
                            int radius, const CompactOptions& opts = {});
// Tries radius 0, 1, ... up to opts.max_radius.
CompactSearch find_compact_state(const PeriodicGraph& pg, const ConditionsAB& c, double lambda,
                                 const CompactOptions& opts = {});

// Vertex-condition defect of the zero extension, over all vertices in cells
// |m|_inf <= radius + shells, relative to the trace norm.
double verify_compact_state(const PeriodicGraph& pg, const ConditionsAB& c,
                            const CompactState& state, int shells = 2);

CompactState translate(const CompactState& state, const Shift& by);

struct Torus {
  MetricGraph graph;
  ConditionsAB conditions;
  std::vector<int> size;
};

// Finite quotient by N Z^d; edge copies are named "<id>@m1,m2".
Torus torus_closure(const PeriodicGraph& pg, const ConditionsAB& c, const std::vector<int>& n);

// A compact state wrapped onto the torus modulo N.
EdgeCoefficients torus_function(const Torus& torus, const CompactState& state);

std::string instance_name(std::string_view edge, const Shift& cell);

}  // namespace qgraph
