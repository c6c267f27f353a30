#include "qgraph/reduction.hpp"

#include <cmath>
#include <limits>

#include "qgraph/error.hpp"

namespace qgraph {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

Backend parse_backend(std::string_view name) {
  if (name == "dtn") return Backend::Dtn;
  if (name == "dotted" || name == "dotted-dtn") return Backend::DottedDtn;
  if (name == "intersection") return Backend::Intersection;
  throw input_error("unknown backend '" + std::string(name) +
                    "' (expected dtn, dotted, intersection)");
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::Dtn: return "dtn";
    case Backend::DottedDtn: return "dotted";
    case Backend::Intersection: return "intersection";
  }
  return "";
}

VectorXcd trace_vector(const MetricGraph& graph, const EdgeCoefficients& f) {
  const TraceIndex index = graph.trace_index();
  VectorXcd trace = VectorXcd::Zero(static_cast<Eigen::Index>(index.dimension()));
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    const Edge& e = graph.edges()[i];
    auto it = f.coeffs.find(e.id);
    if (it == f.coeffs.end()) continue;
    const Eigen::Vector4cd local = edge_trace_subspace(f.lambda, e.length, e.potential) * it->second;
    const std::size_t start = index.endpoint(i, End::Start);
    const std::size_t finish = index.endpoint(i, End::Finish);
    trace(index.value_slot(start)) = local(0);
    trace(index.derivative_slot(start)) = local(1);
    trace(index.value_slot(finish)) = local(2);
    trace(index.derivative_slot(finish)) = local(3);
  }
  return trace;
}

MatrixXcd dtn_matrix(const MetricGraph& graph, cplx lambda) {
  const auto n = static_cast<Eigen::Index>(2 * graph.edge_count());
  MatrixXcd d = MatrixXcd::Zero(n, n);
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    const Edge& e = graph.edges()[i];
    const auto at = static_cast<Eigen::Index>(2 * i);
    d.block<2, 2>(at, at) = dtn_block(lambda, e.length, e.potential, e.id);
  }
  return d;
}

MatrixXcd assemble_dtn(const MetricGraph& graph, const ConditionsAB& c, cplx lambda) {
  return c.a + c.b * dtn_matrix(graph, lambda);
}

DottedSystem assemble_modified_dtn(const MetricGraph& graph, const ConditionsAB& c,
                                   double lambda, const DotMap& dots) {
  MetricGraph dotted = insert_dots(graph, dots);
  ConditionsAB extended = extend_for_dots(graph, dotted, c);
  MatrixXcd m;
  try {
    m = assemble_dtn(dotted, extended, lambda);
  } catch (const DirichletSingularity& e) {
    throw numerical_error(std::string("dot placement failed to clear the Dirichlet spectrum: ") +
                          e.what());
  }
  return {std::move(dotted), std::move(extended), dots, std::move(m)};
}

DottedSystem assemble_modified_dtn(const MetricGraph& graph, const ConditionsAB& c,
                                   double lambda) {
  return assemble_modified_dtn(graph, c, lambda, dot_positions(graph, lambda));
}

TraceSolutionSpace solution_trace_space(const MetricGraph& graph, cplx lambda,
                                        SolutionBasis basis) {
  const TraceIndex index = graph.trace_index();
  const auto dim = static_cast<Eigen::Index>(index.dimension());
  TraceSolutionSpace out{MatrixXcd::Zero(dim, dim / 2), Eigen::VectorXd(dim / 2)};
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    const Edge& e = graph.edges()[i];
    const Matrix42cd local = edge_trace_subspace(lambda, e.length, e.potential, basis);
    const std::size_t start = index.endpoint(i, End::Start);
    const std::size_t finish = index.endpoint(i, End::Finish);
    const Eigen::Index rows[4] = {
        static_cast<Eigen::Index>(index.value_slot(start)),
        static_cast<Eigen::Index>(index.derivative_slot(start)),
        static_cast<Eigen::Index>(index.value_slot(finish)),
        static_cast<Eigen::Index>(index.derivative_slot(finish))};
    for (int k = 0; k < 2; ++k) {
      const auto col = static_cast<Eigen::Index>(2 * i + k);
      const double factor = 1.0 / std::max(1.0, local.col(k).norm());
      out.scale(col) = factor;
      for (int r = 0; r < 4; ++r) out.columns(rows[r], col) = local(r, k) * factor;
    }
  }
  return out;
}

MatrixXcd assemble_intersection(const MetricGraph& graph, const ConditionSubspace& p,
                                cplx lambda, SolutionBasis basis) {
  const auto dim = static_cast<Eigen::Index>(graph.trace_dimension());
  if (p.basis.rows() != dim || p.basis.cols() != dim / 2)
    throw input_error("condition subspace does not fit the graph");
  MatrixXcd n(dim, dim);
  n << p.basis, solution_trace_space(graph, lambda, basis).columns;
  return n;
}

Eigen::VectorXd singular_values_ascending(const MatrixXcd& m) {
  Eigen::VectorXd s;
  if (m.rows() <= 32 && m.cols() <= 32)
    s = Eigen::JacobiSVD<MatrixXcd>(m).singularValues();
  else
    s = Eigen::BDCSVD<MatrixXcd>(m).singularValues();
  return s.reverse();
}

SecularSample describe(const MatrixXcd& m, cplx lambda, Backend backend) {
  SecularSample out;
  out.lambda = lambda;
  out.backend = backend;
  out.dimension = static_cast<std::size_t>(m.rows());
  out.singular_values = singular_values_ascending(m);
  const double lo = out.singular_values(0);
  const double hi = out.singular_values(out.singular_values.size() - 1);
  out.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (m.rows() == m.cols()) {
    const Eigen::PartialPivLU<MatrixXcd> lu(m);
    const MatrixXcd& packed = lu.matrixLU();
    double log_abs = 0.0;
    double phase = 0.0;
    for (Eigen::Index i = 0; i < packed.rows(); ++i) {
      const cplx d = packed(i, i);
      if (d == cplx(0.0, 0.0)) {
        log_abs = -std::numeric_limits<double>::infinity();
        break;
      }
      log_abs += std::log(std::abs(d));
      phase += std::arg(d);
    }
    if (lu.permutationP().determinant() < 0) phase += M_PI;
    out.log_abs_det = log_abs;
    out.det_phase = std::remainder(phase, 2.0 * M_PI);
  }
  return out;
}

SecularSample secular(Backend backend, const MetricGraph& graph, const ConditionsAB& c,
                      cplx lambda) {
  validate(c, graph.edge_count());
  switch (backend) {
    case Backend::Dtn:
      return describe(assemble_dtn(graph, c, lambda), lambda, backend);
    case Backend::DottedDtn:
      if (lambda.imag() != 0.0)
        throw precondition_error("dotted backend is defined for real lambda only");
      return describe(assemble_modified_dtn(graph, c, lambda.real()).matrix, lambda, backend);
    case Backend::Intersection:
      return describe(assemble_intersection(graph, from_ab(c), lambda), lambda, backend);
  }
  throw input_error("unknown backend");
}

SecularOperator::SecularOperator(MetricGraph graph, ConditionsAB conditions, Backend backend,
                                 SolutionBasis basis)
    : graph_(std::move(graph)),
      conditions_(std::move(conditions)),
      backend_(backend),
      basis_(basis) {
  validate(conditions_, graph_.edge_count());
  subspace_ = from_ab(conditions_);
}

SecularOperator::SecularOperator(MetricGraph graph, ConditionSubspace subspace,
                                 SolutionBasis basis)
    : graph_(std::move(graph)),
      subspace_(std::move(subspace)),
      backend_(Backend::Intersection),
      basis_(basis) {
  subspace_.basis = orthonormal_basis(subspace_.basis);
  if (subspace_.basis.rows() != static_cast<Eigen::Index>(graph_.trace_dimension()) ||
      subspace_.basis.cols() != static_cast<Eigen::Index>(2 * graph_.edge_count()))
    throw input_error("condition subspace does not fit the graph");
  conditions_ = to_ab(subspace_);
}

DotMap SecularOperator::dots_for(double lambda) const {
  if (frozen_) return *frozen_;
  return dot_positions(graph_, lambda, kDotProximity);
}

namespace {

// Per-endpoint column weights min(1, |S_e| max(1, |k|)); they cancel the
// 1 / S_e growth of the DtN blocks next to the Dirichlet spectrum.
VectorXcd pole_weights(const MetricGraph& graph, cplx lambda) {
  const double k = std::max(1.0, std::sqrt(std::abs(lambda)));
  VectorXcd w(static_cast<Eigen::Index>(2 * graph.edge_count()));
  for (std::size_t i = 0; i < graph.edge_count(); ++i) {
    const Edge& e = graph.edges()[i];
    const double s = std::abs(cs_values(lambda, e.length, e.potential).s);
    const auto at = static_cast<Eigen::Index>(2 * i);
    w(at) = w(at + 1) = std::min(1.0, s * k);
  }
  return w;
}

}  // namespace

MatrixXcd SecularOperator::matrix(cplx lambda) const {
  switch (backend_) {
    case Backend::Dtn:
      return assemble_dtn(graph_, conditions_, lambda) * pole_weights(graph_, lambda).asDiagonal();
    case Backend::DottedDtn: {
      const DottedSystem sys =
          assemble_modified_dtn(graph_, conditions_, lambda.real(), dots_for(lambda.real()));
      return sys.matrix * pole_weights(sys.graph, lambda).asDiagonal();
    }
    case Backend::Intersection:
      return assemble_intersection(graph_, subspace_, lambda, basis_);
  }
  throw input_error("unknown backend");
}

SecularSample SecularOperator::sample(cplx lambda) const {
  return describe(matrix(lambda), lambda, backend_);
}

SecularOperator SecularOperator::frozen_at(double lambda) const {
  if (backend_ != Backend::DottedDtn) return *this;
  return frozen_with(dots_for(lambda));
}

SecularOperator SecularOperator::frozen_for(double a, double b) const {
  if (backend_ != Backend::DottedDtn) return *this;
  DotMap dots = dot_positions(graph_, 0.5 * (a + b), kDotProximity);
  for (const auto& e : graph_.edges()) {
    if (dots.count(e.id)) continue;
    for (const auto& level : dirichlet_indices(e, b)) {
      if (level.value < a) continue;
      dots[e.id] = dot_position(e, level.index, level.value);
      break;
    }
  }
  return frozen_with(std::move(dots));
}

SecularOperator SecularOperator::frozen_with(DotMap dots) const {
  SecularOperator out = *this;
  out.frozen_ = std::move(dots);
  return out;
}

EdgeCoefficients SecularOperator::coefficients(const VectorXcd& v, cplx lambda) const {
  EdgeCoefficients f;
  f.lambda = lambda;
  switch (backend_) {
    case Backend::Dtn: {
      if (v.size() != static_cast<Eigen::Index>(2 * graph_.edge_count()))
        throw input_error("null vector has the wrong dimension");
      const VectorXcd u = pole_weights(graph_, lambda).asDiagonal() * v;
      for (std::size_t i = 0; i < graph_.edge_count(); ++i) {
        const Edge& e = graph_.edges()[i];
        const auto at = static_cast<Eigen::Index>(2 * i);
        const Eigen::Vector2cd values = u.segment<2>(at);
        const Eigen::Vector2cd inward = dtn_block(lambda, e.length, e.potential, e.id) * values;
        f.coeffs[e.id] = Eigen::Vector2cd(values(0), inward(0));
      }
      return f;
    }
    case Backend::DottedDtn: {
      const DotMap dots = dots_for(lambda.real());
      const MetricGraph dotted = insert_dots(graph_, dots);
      if (v.size() != static_cast<Eigen::Index>(2 * dotted.edge_count()))
        throw input_error("null vector has the wrong dimension for the dotted graph");
      const VectorXcd u = pole_weights(dotted, lambda).asDiagonal() * v;
      // The solution on an original edge is fixed by its Cauchy data at the
      // start, which the first dotted piece carries.
      for (const auto& e : graph_.edges()) {
        const std::size_t start = resolve_endpoint(dotted, e.id, End::Start);
        const std::size_t piece = start / 2;
        const Edge& first = dotted.edges()[piece];
        const auto at = static_cast<Eigen::Index>(2 * piece);
        const Eigen::Vector2cd values = u.segment<2>(at);
        const Eigen::Vector2cd inward =
            dtn_block(lambda, first.length, first.potential, first.id) * values;
        f.coeffs[e.id] = Eigen::Vector2cd(values(0), inward(0));
      }
      return f;
    }
    case Backend::Intersection: {
      const auto dim = static_cast<Eigen::Index>(graph_.trace_dimension());
      if (v.size() != dim) throw input_error("null vector has the wrong dimension");
      const TraceSolutionSpace q = solution_trace_space(graph_, lambda, basis_);
      for (std::size_t i = 0; i < graph_.edge_count(); ++i) {
        const Edge& e = graph_.edges()[i];
        const auto col = static_cast<Eigen::Index>(2 * i);
        Eigen::Vector2cd c(-q.scale(col) * v(dim / 2 + col),
                           -q.scale(col + 1) * v(dim / 2 + col + 1));
        if (basis_ == SolutionBasis::Exponential) c = exponential_to_cs(lambda, e.length, c);
        f.coeffs[e.id] = c;
      }
      return f;
    }
  }
  throw input_error("unknown backend");
}

EdgeCoefficients solution_from_nullvector(Backend backend, const MetricGraph& graph,
                                          const ConditionsAB& c, double lambda,
                                          const VectorXcd& null_vector) {
  SecularOperator op(graph, c, backend);
  if (backend == Backend::DottedDtn) op = op.frozen_with(dot_positions(graph, lambda));
  const MatrixXcd m = op.matrix(lambda);
  if (m.cols() != null_vector.size()) throw input_error("null vector has the wrong dimension");
  const double top = singular_values_ascending(m).maxCoeff();
  const double res = (m * null_vector).norm() / (null_vector.norm() * std::max(top, 1e-300));
  if (!(res < 1e-6))
    throw numerical_error("vector is not in the numerical null space (relative residual " +
                          std::to_string(res) + ")");
  return op.coefficients(null_vector, lambda);
}

}  // namespace qgraph
