#include "qgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "qgraph/edge_solutions.hpp"
#include "qgraph/error.hpp"

namespace qgraph {

MetricGraph::MetricGraph(std::vector<std::string> vertices, std::vector<Edge> edges,
                         std::vector<DotRecord> dots)
    : vertices_(std::move(vertices)), edges_(std::move(edges)), dots_(std::move(dots)) {
  if (edges_.empty()) throw input_error("graph must have at least one edge");
  std::set<std::string, std::less<>> seen;
  for (const auto& v : vertices_) {
    if (v.empty()) throw input_error("empty vertex id");
    if (!seen.insert(v).second) throw input_error("duplicate vertex id '" + v + "'");
    incidence_[v];
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    const Edge& e = edges_[i];
    if (e.id.empty()) throw input_error("empty edge id");
    if (!edge_lookup_.emplace(e.id, i).second)
      throw input_error("duplicate edge id '" + e.id + "'");
    if (!seen.contains(e.from))
      throw input_error("edge '" + e.id + "' references unknown vertex '" + e.from + "'");
    if (!seen.contains(e.to))
      throw input_error("edge '" + e.id + "' references unknown vertex '" + e.to + "'");
    if (!(e.length > 0.0) || !std::isfinite(e.length))
      throw input_error("edge '" + e.id + "' has non-positive length");
    e.potential.validate(e.length);
    incidence_[e.from].push_back(2 * i);
    incidence_[e.to].push_back(2 * i + 1);
  }
  for (auto& [v, ends] : incidence_) std::sort(ends.begin(), ends.end());
}

std::size_t MetricGraph::edge_index(std::string_view id) const {
  auto it = edge_lookup_.find(std::string(id));
  if (it == edge_lookup_.end()) throw input_error("unknown edge '" + std::string(id) + "'");
  return it->second;
}

bool MetricGraph::has_vertex(std::string_view id) const { return incidence_.contains(id); }

bool MetricGraph::has_edge(std::string_view id) const {
  return edge_lookup_.contains(std::string(id));
}

double MetricGraph::total_length() const noexcept {
  double sum = 0.0;
  for (const auto& e : edges_) sum += e.length;
  return sum;
}

const std::vector<std::size_t>& MetricGraph::endpoints_at(std::string_view vertex) const {
  auto it = incidence_.find(vertex);
  if (it == incidence_.end()) throw input_error("unknown vertex '" + std::string(vertex) + "'");
  return it->second;
}

const std::string& MetricGraph::vertex_of(std::size_t endpoint) const {
  const Edge& e = edges_.at(endpoint / 2);
  return endpoint % 2 == 0 ? e.from : e.to;
}

std::vector<DirichletLevel> dirichlet_indices(const Edge& edge, double lambda_max) {
  std::vector<DirichletLevel> out;
  const auto values = dirichlet_eigenvalues(edge.length, edge.potential, lambda_max);
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({static_cast<int>(i) + 1, values[i]});
  return out;
}

namespace {

std::string fresh_name(const std::set<std::string, std::less<>>& taken, std::string base) {
  while (taken.contains(base)) base += "'";
  return base;
}

}  // namespace

MetricGraph insert_dot(const MetricGraph& graph, std::string_view edge_id, double position) {
  const Edge& target = graph.edge(edge_id);
  if (!(position > 0.0 && position < target.length))
    throw input_error("dot position " + std::to_string(position) + " outside (0, " +
                      std::to_string(target.length) + ") on edge '" + std::string(edge_id) + "'");
  std::set<std::string, std::less<>> taken(graph.vertices().begin(), graph.vertices().end());
  for (const auto& e : graph.edges()) taken.insert(e.id);

  const std::string id(edge_id);
  const std::string dot = fresh_name(taken, id + "#dot");
  taken.insert(dot);
  const std::string left = fresh_name(taken, id + "#0");
  taken.insert(left);
  const std::string right = fresh_name(taken, id + "#1");

  std::vector<std::string> vertices = graph.vertices();
  vertices.push_back(dot);
  std::vector<Edge> edges;
  for (const auto& e : graph.edges()) {
    if (e.id != id) {
      edges.push_back(e);
      continue;
    }
    edges.push_back({left, e.from, dot, position, e.potential.restrict(0.0, position)});
    edges.push_back(
        {right, dot, e.to, e.length - position, e.potential.restrict(position, e.length)});
  }
  std::vector<DotRecord> dots = graph.dots();
  dots.push_back({dot, id, left, right, position});
  return MetricGraph(std::move(vertices), std::move(edges), std::move(dots));
}

double dot_position(const Edge& edge, int index, double dirichlet_value) {
  if (edge.potential.is_zero() || edge.potential.kind() == Potential::Kind::Constant)
    return edge.length / (2.0 * index);
  // Maximizer of |S(lambda_n, x)| over a uniform interior grid.
  const int samples = 64 * (index + 1);
  std::vector<double> xs;
  xs.reserve(samples - 1);
  for (int j = 1; j < samples; ++j) xs.push_back(edge.length * j / samples);
  const auto profile = cs_profile(dirichlet_value, edge.length, edge.potential, xs);
  std::size_t best = 0;
  for (std::size_t j = 1; j < profile.size(); ++j)
    if (std::abs(profile[j].s) > std::abs(profile[best].s)) best = j;
  return xs[best];
}

DotMap dot_positions(const MetricGraph& graph, double lambda, double proximity) {
  DotMap out;
  for (const auto& e : graph.edges()) {
    const auto [n, level] = nearest_dirichlet(e.length, e.potential, lambda);
    bool hit = near_dirichlet(cs_values(lambda, e.length, e.potential), lambda, e.length);
    if (!hit && proximity > 0.0) {
      // Local level spacing from the neighbouring Dirichlet levels.
      double spacing;
      if (e.potential.is_zero() || e.potential.kind() == Potential::Kind::Constant) {
        const double base = std::numbers::pi / e.length;
        spacing = (2.0 * n - 1.0) * base * base;
      } else {
        const auto levels = dirichlet_eigenvalues(e.length, e.potential,
                                                  level + std::abs(level) + 4.0 * e.length);
        spacing = std::numeric_limits<double>::infinity();
        const auto at = static_cast<std::size_t>(n - 1);
        if (at > 0) spacing = std::min(spacing, levels[at] - levels[at - 1]);
        if (at + 1 < levels.size()) spacing = std::min(spacing, levels[at + 1] - levels[at]);
        if (!std::isfinite(spacing)) spacing = std::abs(level) + 1.0;
      }
      hit = std::abs(lambda - level) < proximity * spacing;
    }
    if (hit) out.emplace(e.id, dot_position(e, n, level));
  }
  return out;
}

MetricGraph insert_dots(const MetricGraph& graph, const DotMap& dots) {
  MetricGraph out = graph;
  for (const auto& [edge, position] : dots) out = insert_dot(out, edge, position);
  return out;
}

RoseFolding fold_to_rose(const MetricGraph& graph) {
  const std::string center = graph.vertices().size() == 1 ? graph.vertices().front() : "rose";
  std::vector<Edge> loops = graph.edges();
  for (auto& e : loops) e.from = e.to = center;
  MetricGraph rose({center}, std::move(loops));
  // Edge ids are preserved, so the canonical layouts coincide slot by slot.
  std::vector<std::size_t> permutation(graph.trace_dimension());
  const TraceIndex in = graph.trace_index();
  for (std::size_t endpoint = 0; endpoint < in.endpoint_count(); ++endpoint) {
    const auto [edge, end] = in.endpoint_of(endpoint);
    const std::size_t target = rose.trace_index().endpoint(rose.edge_index(graph.edges()[edge].id), end);
    permutation[in.value_slot(endpoint)] = rose.trace_index().value_slot(target);
    permutation[in.derivative_slot(endpoint)] = rose.trace_index().derivative_slot(target);
  }
  return {std::move(rose), std::move(permutation)};
}

}  // namespace qgraph
