#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string_view>
#include <vector>

#include "qgraph/potential.hpp"

namespace qgraph {

using cplx = std::complex<double>;
using Matrix42cd = Eigen::Matrix<cplx, 4, 2>;

// Endpoint data of the fundamental solutions C, S of -y'' + V y = lambda y
// with C(0) = 1, C'(0) = 0, S(0) = 0, S'(0) = 1, evaluated at one point x.
struct EdgeBasis {
  cplx c{1.0, 0.0};
  cplx s{0.0, 0.0};
  cplx cp{0.0, 0.0};
  cplx sp{1.0, 0.0};

  cplx wronskian() const { return c * sp - cp * s; }
};

// Relative tolerance of the adaptive integrator used for sampled potentials.
inline constexpr double kIntegrationTolerance = 1e-10;

// C, S and their derivatives at x = length. Entire in lambda: no branch of
// sqrt(lambda) leaks into the result.
EdgeBasis cs_values(cplx lambda, double length, const Potential& potential = {});

// Transfer matrix [[C, S], [C', S']] over [0, length].
Eigen::Matrix2cd transfer_matrix(cplx lambda, double length, const Potential& potential = {});

// C, S and derivatives at every point of a sorted grid in [0, length].
std::vector<EdgeBasis> cs_profile(cplx lambda, double length, const Potential& potential,
                                  std::span<const double> xs);

// |S| below this scale means lambda sits on the Dirichlet spectrum of the edge.
bool near_dirichlet(const EdgeBasis& basis, cplx lambda, double length);

// Dirichlet-to-Neumann block mapping (u(0), u(l)) to the inward derivatives
// (u'(0), -u'(l)). Throws DirichletSingularity at the poles.
Eigen::Matrix2cd dtn_block(cplx lambda, double length, const Potential& potential = {},
                           std::string_view edge_id = "");

enum class SolutionBasis {
  CosineSine,   // C, S: entire in lambda, valid everywhere
  Exponential,  // exp(ikx), exp(ik(l - x)): V = 0, lambda != 0 only
};

// Trace vectors (value@0, inward@0, value@l, inward@l) of the two
// fundamental solutions. Rank 2 for every lambda.
Matrix42cd edge_trace_subspace(cplx lambda, double length, const Potential& potential = {},
                               SolutionBasis basis = SolutionBasis::CosineSine);

// Conversion of exponential-basis coefficients to (C, S) coefficients.
Eigen::Vector2cd exponential_to_cs(cplx lambda, double length, const Eigen::Vector2cd& coeffs);

// Sorted Dirichlet eigenvalues of the edge not exceeding lambda_max.
std::vector<double> dirichlet_eigenvalues(double length, const Potential& potential,
                                          double lambda_max);

// Nearest Dirichlet eigenvalue to lambda (1-based index, value).
std::pair<int, double> nearest_dirichlet(double length, const Potential& potential, double lambda);

}  // namespace qgraph
