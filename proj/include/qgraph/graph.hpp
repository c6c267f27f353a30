#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qgraph/potential.hpp"

namespace qgraph {

enum class End : int { Start = 0, Finish = 1 };

struct Edge {
  std::string id;
  std::string from;
  std::string to;
  double length = 1.0;
  Potential potential;
};

// A degree-2 vertex inserted into an edge. Kirchhoff conditions must hold
// there, so that the dot is invisible to the quantum graph.
struct DotRecord {
  std::string vertex;
  std::string original_edge;
  std::string left_edge;
  std::string right_edge;
  double position = 0.0;
};

// Endpoint layout of the trace space. Edges are taken in canonical
// (lexicographic id) order; endpoint 2i is the start of edge i and 2i+1
// its end. The trace vector is (U, U') with U' holding inward derivatives.
class TraceIndex {
 public:
  explicit TraceIndex(std::size_t edge_count) : edges_(edge_count) {}

  std::size_t edge_count() const noexcept { return edges_; }
  std::size_t endpoint_count() const noexcept { return 2 * edges_; }
  std::size_t dimension() const noexcept { return 4 * edges_; }

  std::size_t endpoint(std::size_t edge, End end) const noexcept {
    return 2 * edge + static_cast<std::size_t>(end);
  }
  std::pair<std::size_t, End> endpoint_of(std::size_t position) const noexcept {
    return {position / 2, static_cast<End>(position % 2)};
  }
  std::size_t value_slot(std::size_t endpoint) const noexcept { return endpoint; }
  std::size_t derivative_slot(std::size_t endpoint) const noexcept { return 2 * edges_ + endpoint; }

 private:
  std::size_t edges_;
};

// Immutable metric graph. Self-loops and multi-edges are allowed.
class MetricGraph {
 public:
  MetricGraph(std::vector<std::string> vertices, std::vector<Edge> edges,
              std::vector<DotRecord> dots = {});

  const std::vector<std::string>& vertices() const noexcept { return vertices_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<DotRecord>& dots() const noexcept { return dots_; }

  std::size_t edge_count() const noexcept { return edges_.size(); }
  std::size_t edge_index(std::string_view id) const;
  const Edge& edge(std::string_view id) const { return edges_[edge_index(id)]; }
  bool has_vertex(std::string_view id) const;
  bool has_edge(std::string_view id) const;

  TraceIndex trace_index() const noexcept { return TraceIndex(edges_.size()); }
  std::size_t trace_dimension() const noexcept { return 4 * edges_.size(); }
  double total_length() const noexcept;

  // Endpoint positions incident to a vertex, ascending.
  const std::vector<std::size_t>& endpoints_at(std::string_view vertex) const;
  std::size_t degree(std::string_view vertex) const { return endpoints_at(vertex).size(); }
  // Vertex incident to an endpoint position.
  const std::string& vertex_of(std::size_t endpoint) const;

 private:
  std::vector<std::string> vertices_;
  std::vector<Edge> edges_;
  std::vector<DotRecord> dots_;
  std::unordered_map<std::string, std::size_t> edge_lookup_;
  std::map<std::string, std::vector<std::size_t>, std::less<>> incidence_;
};

struct DirichletLevel {
  int index = 0;  // n >= 1
  double value = 0.0;
  friend bool operator==(const DirichletLevel&, const DirichletLevel&) = default;
};

// Dirichlet spectrum of one edge up to lambda_max.
std::vector<DirichletLevel> dirichlet_indices(const Edge& edge, double lambda_max);

// Splits an edge at 0 < position < l with a fresh Kirchhoff dot vertex.
MetricGraph insert_dot(const MetricGraph& graph, std::string_view edge_id, double position);

// Dot positions keyed by edge id.
using DotMap = std::map<std::string, double, std::less<>>;

// Position inside an edge that keeps lambda off the Dirichlet spectrum of
// both halves, given the index n of the Dirichlet level being avoided.
double dot_position(const Edge& edge, int index, double dirichlet_value);

// Edges where lambda lies on sigma_D(e), with their dot positions. With
// proximity > 0, edges whose nearest Dirichlet level is within that
// fraction of the local level spacing are dotted as well.
DotMap dot_positions(const MetricGraph& graph, double lambda, double proximity = 0.0);

// Applies every entry of a dot map.
MetricGraph insert_dots(const MetricGraph& graph, const DotMap& dots);

struct RoseFolding {
  MetricGraph rose;
  // permutation[i] = trace slot in the rose of trace slot i in the input.
  std::vector<std::size_t> permutation;
};

RoseFolding fold_to_rose(const MetricGraph& graph);

}  // namespace qgraph
