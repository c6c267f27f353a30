#pragma once

#include <string>
#include <vector>

#include "qgraph/conditions.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph::test {

inline MetricGraph interval(double length, Potential v = {}) {
  return MetricGraph({"a", "b"}, {{"e", "a", "b", length, std::move(v)}});
}

inline MetricGraph loop(double length) {
  return MetricGraph({"v"}, {{"e", "v", "v", length, {}}});
}

// Star with centre "c" and leaves l1, l2, ...
inline MetricGraph star(const std::vector<double>& lengths) {
  std::vector<std::string> vertices{"c"};
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const std::string k = std::to_string(i + 1);
    vertices.push_back("l" + k);
    edges.push_back({"e" + k, "c", "l" + k, lengths[i], {}});
  }
  return MetricGraph(vertices, edges);
}

// Kirchhoff at the centre, Dirichlet at the leaves.
inline ConditionsAB star_conditions(const MetricGraph& g) {
  VertexConditionMap m;
  for (const auto& v : g.vertices())
    if (v != "c") m[v] = LocalPreset{PresetKind::Dirichlet, 0.0};
  return assemble_local(g, m);
}

inline ConditionsAB local(const MetricGraph& g, PresetKind a, PresetKind b) {
  return assemble_local(g, {{"a", LocalPreset{a, 0.0}}, {"b", LocalPreset{b, 0.0}}});
}

// Eigenvalues repeated according to multiplicity.
inline std::vector<double> expand(const std::vector<Eigenvalue>& evs) {
  std::vector<double> out;
  for (const auto& ev : evs) out.insert(out.end(), static_cast<std::size_t>(ev.multiplicity), ev.lambda);
  return out;
}

}  // namespace qgraph::test
