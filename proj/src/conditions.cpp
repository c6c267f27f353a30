#include "qgraph/conditions.hpp"

#include <algorithm>
#include <cmath>

#include "qgraph/error.hpp"

namespace qgraph {
namespace {

using Eigen::MatrixXcd;

std::size_t numerical_rank(const Eigen::VectorXd& singular_values) {
  if (singular_values.size() == 0 || singular_values(0) == 0.0) return 0;
  const double cut = kRankTolerance * singular_values(0);
  std::size_t r = 0;
  for (Eigen::Index i = 0; i < singular_values.size(); ++i)
    if (singular_values(i) > cut) ++r;
  return r;
}

double spectral_norm(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

// Omega(xi, eta) = eta^H J xi with J = [[0, I], [-I, 0]].
MatrixXcd symplectic_matrix(std::size_t endpoints) {
  const auto n = static_cast<Eigen::Index>(endpoints);
  MatrixXcd j = MatrixXcd::Zero(2 * n, 2 * n);
  j.topRightCorner(n, n).setIdentity();
  j.bottomLeftCorner(n, n) = -MatrixXcd::Identity(n, n);
  return j;
}

}  // namespace

void validate(const ConditionsAB& c, std::size_t edge_count) {
  const auto n = static_cast<Eigen::Index>(2 * edge_count);
  if (c.a.rows() != n || c.a.cols() != n || c.b.rows() != n || c.b.cols() != n)
    throw input_error("conditions must be " + std::to_string(n) + "x" + std::to_string(n) +
                      " matrices A, B");
  from_ab(c);
}

ConditionSubspace from_ab(const ConditionsAB& c) {
  if (c.a.rows() != c.b.rows() || c.a.cols() != c.b.cols() || c.a.rows() != c.a.cols())
    throw input_error("A and B must be square matrices of equal size");
  const Eigen::Index n = c.a.rows();
  MatrixXcd ab(n, 2 * n);
  ab << c.a, c.b;
  Eigen::JacobiSVD<MatrixXcd> svd(ab, Eigen::ComputeFullV);
  const std::size_t rank = numerical_rank(svd.singularValues());
  if (rank != static_cast<std::size_t>(n))
    throw input_error("degenerate conditions: rank [A B] = " + std::to_string(rank) +
                      ", expected " + std::to_string(n));
  return {svd.matrixV().rightCols(n)};
}

MatrixXcd orthonormal_basis(const MatrixXcd& m) {
  Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeThinU);
  const std::size_t rank = numerical_rank(svd.singularValues());
  if (rank != static_cast<std::size_t>(m.cols()))
    throw input_error("rank-deficient subspace basis: rank " + std::to_string(rank) + " < " +
                      std::to_string(m.cols()));
  return svd.matrixU().leftCols(m.cols());
}

MatrixXcd orthogonal_complement(const MatrixXcd& m) {
  Eigen::JacobiSVD<MatrixXcd> svd(m, Eigen::ComputeFullU);
  const auto rank = static_cast<Eigen::Index>(numerical_rank(svd.singularValues()));
  return svd.matrixU().rightCols(m.rows() - rank);
}

ConditionsAB to_ab(const ConditionSubspace& p) {
  const MatrixXcd& basis = p.basis;
  if (basis.rows() != 2 * basis.cols())
    throw input_error("subspace basis must have shape 4|E| x 2|E|");
  orthonormal_basis(basis);  // rank check
  const MatrixXcd w = orthogonal_complement(basis);
  const MatrixXcd rows = w.adjoint();
  const Eigen::Index n = basis.cols();
  return {rows.leftCols(n), rows.rightCols(n)};
}

std::vector<double> principal_angles(const MatrixXcd& p, const MatrixXcd& q) {
  const MatrixXcd y0 = orthonormal_basis(p);
  const MatrixXcd y1 = orthonormal_basis(q);
  if (y0.rows() != y1.rows()) throw input_error("subspaces live in different ambient spaces");
  // Cosines resolve large angles, sines of the residual resolve small ones.
  const Eigen::VectorXd cosines = Eigen::JacobiSVD<MatrixXcd>(y0.adjoint() * y1).singularValues();
  const MatrixXcd residual = y1 - y0 * (y0.adjoint() * y1);
  const Eigen::VectorXd sines = Eigen::JacobiSVD<MatrixXcd>(residual).singularValues();
  const Eigen::Index k = std::min(y0.cols(), y1.cols());
  std::vector<double> angles(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    // cosines descending <-> angles ascending; sines descending <-> angles descending
    const double from_cos = std::acos(std::clamp(cosines(i), 0.0, 1.0));
    const double s = i < sines.size() ? sines(sines.size() - 1 - i) : 0.0;
    const double from_sin = std::asin(std::clamp(s, 0.0, 1.0));
    angles[i] = from_cos < 0.5 ? from_sin : from_cos;
  }
  std::sort(angles.begin(), angles.end());
  return angles;
}

double subspace_distance(const MatrixXcd& p, const MatrixXcd& q) {
  const auto angles = principal_angles(p, q);
  return angles.empty() ? 0.0 : angles.back();
}

SelfAdjointness is_self_adjoint(const ConditionsAB& c, double tol) {
  const MatrixXcd x = c.a * c.b.adjoint();
  const MatrixXcd anti = 0.5 * (x - x.adjoint());
  MatrixXcd ab(c.a.rows(), c.a.cols() + c.b.cols());
  ab << c.a, c.b;
  const double scale = std::pow(spectral_norm(ab), 2);
  const double witness = scale > 0.0 ? spectral_norm(anti) / scale : 0.0;
  return {witness <= tol, witness};
}

SelfAdjointness is_lagrangian(const ConditionSubspace& p, double tol) {
  const MatrixXcd y = orthonormal_basis(p.basis);
  if (y.rows() % 2 != 0) throw input_error("trace space must have even dimension");
  const MatrixXcd gram = y.adjoint() * symplectic_matrix(y.rows() / 2) * y;
  const double witness = spectral_norm(gram);
  return {witness <= tol, witness};
}

cplx symplectic_form(const Eigen::VectorXcd& xi, const Eigen::VectorXcd& eta) {
  if (xi.size() != eta.size() || xi.size() % 2 != 0)
    throw input_error("symplectic_form: trace vectors must share an even dimension");
  const Eigen::Index n = xi.size() / 2;
  // dot() conjugates its first argument: a.dot(b) = sum conj(a_i) b_i.
  return eta.head(n).dot(xi.tail(n)) - eta.tail(n).dot(xi.head(n));
}

ChartFrame::ChartFrame(MatrixXcd base, MatrixXcd complement)
    : base_(std::move(base)), complement_(std::move(complement)) {
  if (base_.rows() != complement_.rows() || base_.cols() + complement_.cols() != base_.rows())
    throw input_error("chart frame: base and complement must split the ambient space");
  stacked_.resize(base_.rows(), base_.rows());
  stacked_ << base_, complement_;
  const Eigen::VectorXd s = Eigen::JacobiSVD<MatrixXcd>(stacked_).singularValues();
  if (s(s.size() - 1) <= kRankTolerance * s(0))
    throw input_error("chart frame: complement is not transversal to the base point");
  condition_ = s(0) / s(s.size() - 1);
  lu_.compute(stacked_);
}

ChartFrame ChartFrame::orthogonal(const ConditionSubspace& base) {
  const MatrixXcd y = orthonormal_basis(base.basis);
  return ChartFrame(y, orthogonal_complement(y));
}

MatrixXcd ChartFrame::coordinates(const ConditionSubspace& p) const {
  if (p.basis.rows() != base_.rows() || p.basis.cols() != base_.cols())
    throw input_error("chart: subspace dimension mismatch");
  const MatrixXcd xz = lu_.solve(p.basis);
  const Eigen::Index k = base_.cols();
  const MatrixXcd x = xz.topRows(k);
  const MatrixXcd z = xz.bottomRows(base_.rows() - k);
  const Eigen::VectorXd s = Eigen::JacobiSVD<MatrixXcd>(x).singularValues();
  if (s(0) == 0.0 || s(s.size() - 1) <= kRankTolerance * s(0))
    throw precondition_error("subspace outside chart: it meets the complement R");
  return z * x.inverse();
}

ConditionSubspace ChartFrame::subspace(const MatrixXcd& coords) const {
  return {base_ + complement_ * coords};
}

MatrixXcd ChartFrame::projector(const MatrixXcd& coords) const {
  const Eigen::Index n = base_.rows();
  const Eigen::Index k = base_.cols();
  MatrixXcd graph_map = MatrixXcd::Zero(n, n);
  graph_map.topLeftCorner(k, k).setIdentity();
  graph_map.bottomLeftCorner(n - k, k) = coords;
  return stacked_ * graph_map * lu_.inverse();
}

PresetKind parse_preset(std::string_view name) {
  if (name == "dirichlet") return PresetKind::Dirichlet;
  if (name == "neumann") return PresetKind::Neumann;
  if (name == "kirchhoff") return PresetKind::Kirchhoff;
  if (name == "delta") return PresetKind::Delta;
  if (name == "boundary-angle") return PresetKind::BoundaryAngle;
  throw input_error("unknown preset '" + std::string(name) + "'");
}

std::string_view preset_name(PresetKind kind) {
  switch (kind) {
    case PresetKind::Dirichlet: return "dirichlet";
    case PresetKind::Neumann: return "neumann";
    case PresetKind::Kirchhoff: return "kirchhoff";
    case PresetKind::Delta: return "delta";
    case PresetKind::BoundaryAngle: return "boundary-angle";
  }
  return "";
}

namespace {

// Rows of one local condition, written into (a, b) starting at row `row`.
void write_local(const std::string& vertex, const std::vector<std::size_t>& ends,
                 const VertexCondition& condition, MatrixXcd& a, MatrixXcd& b,
                 Eigen::Index& row) {
  const auto d = static_cast<Eigen::Index>(ends.size());
  if (const auto* block = std::get_if<LocalAB>(&condition)) {
    if (block->a.rows() != d || block->a.cols() != d || block->b.rows() != d ||
        block->b.cols() != d)
      throw input_error("local conditions at '" + vertex + "' must be " + std::to_string(d) +
                        "x" + std::to_string(d));
    for (Eigen::Index r = 0; r < d; ++r, ++row)
      for (Eigen::Index j = 0; j < d; ++j) {
        a(row, static_cast<Eigen::Index>(ends[j])) = block->a(r, j);
        b(row, static_cast<Eigen::Index>(ends[j])) = block->b(r, j);
      }
    return;
  }
  const auto& p = std::get<LocalPreset>(condition);
  auto col = [&](Eigen::Index j) { return static_cast<Eigen::Index>(ends[j]); };
  switch (p.kind) {
    case PresetKind::Dirichlet:
      for (Eigen::Index j = 0; j < d; ++j, ++row) a(row, col(j)) = 1.0;
      return;
    case PresetKind::Neumann:
      for (Eigen::Index j = 0; j < d; ++j, ++row) b(row, col(j)) = 1.0;
      return;
    case PresetKind::Kirchhoff:
    case PresetKind::Delta: {
      if (d == 0) {
        if (p.kind == PresetKind::Delta)
          throw input_error("delta condition on isolated vertex '" + vertex + "'");
        return;
      }
      for (Eigen::Index j = 0; j + 1 < d; ++j, ++row) {
        a(row, col(j)) = 1.0;
        a(row, col(j + 1)) = -1.0;
      }
      for (Eigen::Index j = 0; j < d; ++j) b(row, col(j)) = 1.0;
      if (p.kind == PresetKind::Delta) a(row, col(0)) = -p.parameter;
      ++row;
      return;
    }
    case PresetKind::BoundaryAngle:
      if (d != 1)
        throw input_error("boundary-angle requires a degree-1 vertex; '" + vertex +
                          "' has degree " + std::to_string(d));
      a(row, col(0)) = std::cos(p.parameter);
      b(row, col(0)) = std::sin(p.parameter);
      ++row;
      return;
  }
}

}  // namespace

ConditionsAB assemble_local(const MetricGraph& graph, const VertexConditionMap& conditions,
                            const VertexCondition& fallback) {
  for (const auto& [v, c] : conditions)
    if (!graph.has_vertex(v)) throw input_error("conditions reference unknown vertex '" + v + "'");
  const auto n = static_cast<Eigen::Index>(2 * graph.edge_count());
  MatrixXcd a = MatrixXcd::Zero(n, n);
  MatrixXcd b = MatrixXcd::Zero(n, n);
  Eigen::Index row = 0;
  for (const auto& v : graph.vertices()) {
    auto it = conditions.find(v);
    write_local(v, graph.endpoints_at(v), it != conditions.end() ? it->second : fallback, a, b,
                row);
  }
  return {std::move(a), std::move(b)};
}

ConditionsAB preset(PresetKind kind, const MetricGraph& graph, const PresetParams& params) {
  VertexConditionMap map;
  for (const auto& v : graph.vertices()) {
    double value = params.value.value_or(0.0);
    if (auto it = params.per_vertex.find(v); it != params.per_vertex.end()) value = it->second;
    map.emplace(v, LocalPreset{kind, value});
  }
  for (const auto& [v, value] : params.per_vertex)
    if (!graph.has_vertex(v)) throw input_error("preset parameter for unknown vertex '" + v + "'");
  return assemble_local(graph, map);
}

ConditionsAB preset(std::string_view name, const MetricGraph& graph, const PresetParams& params) {
  return preset(parse_preset(name), graph, params);
}

ConditionSubspace grassmann_path(const ConditionSubspace& start, const ConditionSubspace& end,
                                 double t) {
  if (start.basis.rows() != end.basis.rows() || start.basis.cols() != end.basis.cols())
    throw input_error("grassmann_path: subspaces of different dimension");
  if (t == 0.0) return start;
  if (t == 1.0) return end;
  const MatrixXcd y0 = orthonormal_basis(start.basis);
  const MatrixXcd y1 = orthonormal_basis(end.basis);
  Eigen::JacobiSVD<MatrixXcd> svd(y0.adjoint() * y1, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd sigma = svd.singularValues();
  const MatrixXcd u = svd.matrixU();
  MatrixXcd v = svd.matrixV();
  const Eigen::Index k = y0.cols();

  // Directions of the end point orthogonal to the whole start point have no
  // canonical partner; align them with the symplectic rotation (u, u') ->
  // (-u', u) of the paired start directions.
  std::vector<Eigen::Index> orthogonal;
  for (Eigen::Index i = 0; i < k; ++i)
    if (sigma(i) < 1e-12) orthogonal.push_back(i);
  if (!orthogonal.empty()) {
    const auto m = static_cast<Eigen::Index>(orthogonal.size());
    const Eigen::Index half = y0.rows() / 2;
    MatrixXcd start_dirs(y0.rows(), m), end_dirs(y0.rows(), m), vd(k, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      start_dirs.col(j) = y0 * u.col(orthogonal[j]);
      vd.col(j) = v.col(orthogonal[j]);
    }
    end_dirs = y1 * vd;
    MatrixXcd rotated(y0.rows(), m);
    rotated.topRows(half) = -start_dirs.bottomRows(half);
    rotated.bottomRows(half) = start_dirs.topRows(half);
    Eigen::JacobiSVD<MatrixXcd> polar(end_dirs.adjoint() * rotated,
                                      Eigen::ComputeFullU | Eigen::ComputeFullV);
    const MatrixXcd w = polar.matrixU() * polar.matrixV().adjoint();
    const MatrixXcd aligned = vd * w;
    for (Eigen::Index j = 0; j < m; ++j) v.col(orthogonal[j]) = aligned.col(j);
  }

  const MatrixXcd y0u = y0 * u;
  const MatrixXcd y1v = y1 * v;
  MatrixXcd out(y0.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const double c = std::clamp(sigma(i), 0.0, 1.0);
    const Eigen::VectorXcd residual = y1v.col(i) - y0u.col(i) * c;
    const double s = residual.norm();
    const double theta = std::atan2(s, c);
    if (s < 1e-15) {
      out.col(i) = y0u.col(i);
      continue;
    }
    out.col(i) = y0u.col(i) * std::cos(theta * t) + (residual / s) * std::sin(theta * t);
  }
  return {out};
}

ConditionsAB transport(const ConditionsAB& c, const std::vector<std::size_t>& permutation) {
  const Eigen::Index n = c.a.cols();
  if (permutation.size() != static_cast<std::size_t>(2 * n))
    throw input_error("transport: permutation must cover the trace space");
  ConditionsAB out{MatrixXcd::Zero(c.a.rows(), n), MatrixXcd::Zero(c.b.rows(), n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto value_to = static_cast<Eigen::Index>(permutation[j]);
    const auto deriv_to = static_cast<Eigen::Index>(permutation[n + j]) - n;
    if (value_to >= n || deriv_to < 0 || value_to != deriv_to)
      throw input_error("transport: permutation must map endpoints to endpoints");
    out.a.col(value_to) = c.a.col(j);
    out.b.col(deriv_to) = c.b.col(j);
  }
  return out;
}

std::size_t resolve_endpoint(const MetricGraph& dotted, std::string_view edge_id, End end) {
  if (dotted.has_edge(edge_id))
    return dotted.trace_index().endpoint(dotted.edge_index(edge_id), end);
  for (const auto& dot : dotted.dots())
    if (dot.original_edge == edge_id)
      return resolve_endpoint(dotted, end == End::Start ? dot.left_edge : dot.right_edge, end);
  throw input_error("edge '" + std::string(edge_id) + "' not present in dotted graph");
}

ConditionsAB extend_for_dots(const MetricGraph& original, const MetricGraph& dotted,
                             const ConditionsAB& c) {
  const auto n_old = static_cast<Eigen::Index>(2 * original.edge_count());
  const auto n_new = static_cast<Eigen::Index>(2 * dotted.edge_count());
  if (c.a.cols() != n_old) throw input_error("extend_for_dots: conditions do not fit the graph");
  ConditionsAB out{MatrixXcd::Zero(n_new, n_new), MatrixXcd::Zero(n_new, n_new)};
  const TraceIndex index = original.trace_index();
  for (Eigen::Index j = 0; j < n_old; ++j) {
    const auto [edge, end] = index.endpoint_of(static_cast<std::size_t>(j));
    const auto to =
        static_cast<Eigen::Index>(resolve_endpoint(dotted, original.edges()[edge].id, end));
    out.a.block(0, to, n_old, 1) = c.a.col(j);
    out.b.block(0, to, n_old, 1) = c.b.col(j);
  }
  Eigen::Index row = n_old;
  for (std::size_t d = original.dots().size(); d < dotted.dots().size(); ++d) {
    const auto& ends = dotted.endpoints_at(dotted.dots()[d].vertex);
    write_local(dotted.dots()[d].vertex, ends, LocalPreset{PresetKind::Kirchhoff, 0.0}, out.a,
                out.b, row);
  }
  if (row != n_new) throw numerical_error("extend_for_dots: condition count mismatch");
  return out;
}

ConditionsAB unitary_conditions(const MatrixXcd& u) {
  const MatrixXcd id = MatrixXcd::Identity(u.rows(), u.cols());
  return {u - id, cplx(0.0, 1.0) * (u + id)};
}

MatrixXcd random_unitary(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  const auto m = static_cast<Eigen::Index>(n);
  MatrixXcd z(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) z(i, j) = cplx(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<MatrixXcd> qr(z);
  MatrixXcd q = qr.householderQ();
  const MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < m; ++j) {
    const cplx d = r(j, j);
    if (std::abs(d) > 0.0) q.col(j) *= d / std::abs(d);
  }
  return q;
}

}  // namespace qgraph
