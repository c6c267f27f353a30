#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "qgraph/conditions.hpp"
#include "qgraph/graph.hpp"
#include "qgraph/periodic.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct Problem {
  MetricGraph graph;
  ConditionsAB conditions;
  std::optional<PeriodicGraph> periodic;  // graph/conditions above are the normalized cell
};

Potential parse_potential(const json& j);
MetricGraph parse_graph(const json& j);
// Absent conditions mean Kirchhoff at every vertex.
ConditionsAB parse_conditions(const json& j, const MetricGraph& graph);
Problem parse_problem(const json& j);
Problem parse_problem_text(const std::string& text);
Problem load_problem(const std::string& path);

json to_json(const Potential& v);
json to_json(const MetricGraph& graph);
json to_json(const ConditionsAB& c);
json to_json(const Problem& p);

// Complex matrices as row-major lists of [re, im] pairs; plain numbers are
// accepted as real entries.
json matrix_to_json(const Eigen::MatrixXcd& m);
Eigen::MatrixXcd matrix_from_json(const json& j);
json complex_to_json(cplx z);
cplx complex_from_json(const json& j);

json to_json(const Eigenvalue& ev);
json to_json(const CompactState& s);
json to_json(const TrackReport& r);

// Fixed-format number for CSV output.
std::string number(double v);

void write_eigenvalues_csv(std::ostream& os, const std::vector<Eigenvalue>& evs);
void write_secular_csv(std::ostream& os, const std::vector<SecularSample>& samples);
void write_bands_csv(std::ostream& os, const BandSheet& sheet);
void write_eigencurves_csv(std::ostream& os, const TrackReport& r);

}  // namespace qgraph::io
