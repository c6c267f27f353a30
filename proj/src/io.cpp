#include "qgraph/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "qgraph/error.hpp"

namespace qgraph::io {

namespace {

const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw input_error(std::string(where) + ": missing key '" + key + "'");
  return j.at(key);
}

double as_number(const json& j, const char* what) {
  if (!j.is_number()) throw input_error(std::string(what) + " must be a number");
  return j.get<double>();
}

std::string as_string(const json& j, const char* what) {
  if (!j.is_string()) throw input_error(std::string(what) + " must be a string");
  return j.get<std::string>();
}

PresetParams parse_params(const json& j) {
  PresetParams p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw input_error("preset params must be an object");
  for (const char* key : {"value", "alpha", "t"})
    if (j.contains(key)) p.value = as_number(j.at(key), key);
  if (j.contains("vertices")) {
    for (const auto& [v, val] : j.at("vertices").items()) p.per_vertex[v] = as_number(val, "vertex parameter");
  }
  return p;
}

VertexCondition parse_local(const json& j) {
  const std::string type = as_string(require(j, "type", "vertex condition"), "type");
  if (type == "preset") {
    LocalPreset p;
    p.kind = parse_preset(as_string(require(j, "name", "preset"), "name"));
    const PresetParams params = parse_params(j.value("params", json()));
    p.parameter = params.value.value_or(0.0);
    return p;
  }
  if (type == "AB")
    return LocalAB{matrix_from_json(require(j, "A", "AB block")),
                   matrix_from_json(require(j, "B", "AB block"))};
  throw input_error("unknown vertex condition type '" + type + "'");
}

}  // namespace

cplx complex_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw input_error("complex numbers are [re, im] pairs");
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

Eigen::MatrixXcd matrix_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw input_error("matrix must be a non-empty list of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw input_error("matrix rows must be non-empty lists");
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw input_error("ragged matrix");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = complex_from_json(j[r][c]);
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXcd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(complex_to_json(m(r, c)));
    rows.push_back(std::move(row));
  }
  return rows;
}

Potential parse_potential(const json& j) {
  if (j.is_null()) return {};
  const std::string type = as_string(require(j, "type", "potential"), "potential type");
  if (type == "zero") return Potential::zero();
  if (type == "constant") return Potential::constant(as_number(require(j, "value", "potential"), "value"));
  if (type == "piecewise") {
    std::vector<PotentialPiece> pieces;
    for (const auto& p : require(j, "pieces", "potential"))
      pieces.push_back({as_number(require(p, "from", "piece"), "from"),
                        as_number(require(p, "to", "piece"), "to"),
                        as_number(require(p, "value", "piece"), "value")});
    return Potential::piecewise(std::move(pieces));
  }
  if (type == "sampled") {
    std::vector<PotentialSample> samples;
    for (const auto& s : require(j, "samples", "potential")) {
      if (!s.is_array() || s.size() != 2) throw input_error("samples are [x, value] pairs");
      samples.push_back({as_number(s[0], "x"), as_number(s[1], "value")});
    }
    return Potential::sampled(std::move(samples));
  }
  throw input_error("malformed potential: unknown type '" + type + "'");
}

json to_json(const Potential& v) {
  switch (v.kind()) {
    case Potential::Kind::Zero: return {{"type", "zero"}};
    case Potential::Kind::Constant: return {{"type", "constant"}, {"value", v.constant_value()}};
    case Potential::Kind::Piecewise: {
      json pieces = json::array();
      for (const auto& p : v.pieces())
        pieces.push_back({{"from", p.from}, {"to", p.to}, {"value", p.value}});
      return {{"type", "piecewise"}, {"pieces", pieces}};
    }
    case Potential::Kind::Sampled: {
      json samples = json::array();
      for (const auto& s : v.samples()) samples.push_back(json::array({s.x, s.value}));
      return {{"type", "sampled"}, {"samples", samples}};
    }
  }
  return {};
}

MetricGraph parse_graph(const json& j) {
  std::vector<std::string> vertices;
  for (const auto& v : require(j, "vertices", "graph")) vertices.push_back(as_string(v, "vertex id"));
  std::vector<Edge> edges;
  for (const auto& e : require(j, "edges", "graph")) {
    Edge edge;
    edge.id = as_string(require(e, "id", "edge"), "edge id");
    edge.from = as_string(require(e, "from", "edge"), "from");
    edge.to = as_string(require(e, "to", "edge"), "to");
    edge.length = as_number(require(e, "length", "edge"), "length");
    edge.potential = parse_potential(e.value("potential", json()));
    edges.push_back(std::move(edge));
  }
  return MetricGraph(std::move(vertices), std::move(edges));
}

json to_json(const MetricGraph& graph) {
  json edges = json::array();
  for (const auto& e : graph.edges()) {
    json je = {{"id", e.id}, {"from", e.from}, {"to", e.to}, {"length", e.length}};
    if (!e.potential.is_zero()) je["potential"] = to_json(e.potential);
    edges.push_back(std::move(je));
  }
  return {{"vertices", graph.vertices()}, {"edges", edges}};
}

ConditionsAB parse_conditions(const json& j, const MetricGraph& graph) {
  if (j.is_null()) return preset(PresetKind::Kirchhoff, graph);
  const std::string type = as_string(require(j, "type", "conditions"), "conditions type");
  ConditionsAB c;
  if (type == "preset") {
    c = preset(as_string(require(j, "name", "preset"), "name"), graph,
               parse_params(j.value("params", json())));
  } else if (type == "AB") {
    c = {matrix_from_json(require(j, "A", "conditions")), matrix_from_json(require(j, "B", "conditions"))};
  } else if (type == "subspace") {
    ConditionSubspace p{matrix_from_json(require(j, "basis", "conditions"))};
    const auto dim = static_cast<Eigen::Index>(graph.trace_dimension());
    if (p.basis.rows() != dim || p.basis.cols() != dim / 2)
      throw input_error("subspace basis must be " + std::to_string(dim) + "x" +
                        std::to_string(dim / 2));
    c = to_ab(p);
  } else if (type == "per-vertex") {
    VertexConditionMap map;
    for (const auto& [v, local] : require(j, "vertices", "per-vertex conditions").items())
      map[v] = parse_local(local);
    const VertexCondition fallback =
        j.contains("default") ? parse_local(j.at("default")) : VertexCondition{LocalPreset{}};
    c = assemble_local(graph, map, fallback);
  } else {
    throw input_error("unknown conditions type '" + type + "'");
  }
  validate(c, graph.edge_count());
  return c;
}

json to_json(const ConditionsAB& c) {
  return {{"type", "AB"}, {"A", matrix_to_json(c.a)}, {"B", matrix_to_json(c.b)}};
}

Problem parse_problem(const json& j) {
  try {
    if (!j.is_object()) throw input_error("graph file must hold a JSON object");
    MetricGraph graph = parse_graph(j);
    ConditionsAB c = parse_conditions(j.value("conditions", json()), graph);
    if (!j.contains("periodic")) return {std::move(graph), std::move(c), std::nullopt};
    const json& jp = j.at("periodic");
    PeriodicGraph pg{graph, static_cast<int>(as_number(require(jp, "dim", "periodic"), "dim")), {}};
    if (jp.contains("shifts"))
      for (const auto& [id, n] : jp.at("shifts").items()) {
        Shift s;
        for (const auto& x : n) {
          if (!x.is_number_integer()) throw input_error("shift components must be integers");
          s.push_back(x.get<int>());
        }
        pg.shifts[id] = s;
      }
    auto [normal, cn] = normalize_periodic(std::move(pg), c);
    MetricGraph cell = normal.cell;
    return {std::move(cell), std::move(cn), std::move(normal)};
  } catch (const json::exception& e) {
    throw input_error(std::string("malformed graph file: ") + e.what());
  }
}

Problem parse_problem_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw input_error(std::string("malformed JSON: ") + e.what());
  }
  return parse_problem(j);
}

Problem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open graph file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem_text(ss.str());
}

json to_json(const Problem& p) {
  json j = to_json(p.graph);
  j["conditions"] = to_json(p.conditions);
  if (p.periodic) {
    json shifts = json::object();
    for (const auto& [id, n] : p.periodic->shifts) shifts[id] = n;
    j["periodic"] = {{"dim", p.periodic->dim}, {"shifts", shifts}};
  }
  return j;
}

json to_json(const Eigenvalue& ev) {
  return {{"lambda", ev.lambda},           {"multiplicity", ev.multiplicity},
          {"backend", backend_name(ev.backend)}, {"residual", ev.residual},
          {"width", ev.width},             {"best_effort", ev.best_effort}};
}

json to_json(const CompactState& s) {
  json support = json::array();
  for (const auto& inst : s.support)
    support.push_back({{"edge", inst.edge},
                       {"cell", inst.cell},
                       {"a1", complex_to_json(inst.coeffs(0))},
                       {"a2", complex_to_json(inst.coeffs(1))}});
  return {{"lambda", s.lambda}, {"radius", s.radius}, {"residual", s.residual}, {"support", support}};
}

namespace {

json nullable(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

}  // namespace

json to_json(const TrackReport& r) {
  json branches = json::array();
  for (std::size_t b = 0; b < r.branches.size(); ++b) {
    const auto& br = r.branches[b];
    json at = json::array();
    for (double v : br.at_chart_boundary) at.push_back(nullable(v));
    branches.push_back({{"index", b},
                        {"complete", br.complete},
                        {"fit_error", br.fit_error},
                        {"discontinuity", br.discontinuity},
                        {"at_chart_boundary", at}});
  }
  json amb = json::array();
  for (const auto& a : r.ambiguities) amb.push_back({{"t", a.t}, {"lambda", a.lambda}, {"gap", a.gap}});
  return {{"samples", r.samples.size()},
          {"chart_boundaries", r.chart_boundaries},
          {"branches", branches},
          {"ambiguities", amb},
          {"max_fit_error", r.max_fit_error()},
          {"max_discontinuity", r.max_discontinuity()}};
}

std::string number(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

void write_eigenvalues_csv(std::ostream& os, const std::vector<Eigenvalue>& evs) {
  os << "lambda,multiplicity,residual\n";
  for (const auto& ev : evs)
    os << number(ev.lambda) << ',' << ev.multiplicity << ',' << number(ev.residual) << '\n';
}

void write_secular_csv(std::ostream& os, const std::vector<SecularSample>& samples) {
  os << "lambda,sigma1,sigma2,sigma3,sigma4,log_abs_det,backend\n";
  for (const auto& s : samples) {
    os << number(s.lambda.real());
    for (Eigen::Index k = 0; k < 4; ++k)
      os << ',' << (k < s.singular_values.size() ? number(s.singular_values(k)) : "");
    os << ',' << number(s.log_abs_det) << ',' << backend_name(s.backend) << '\n';
  }
}

void write_bands_csv(std::ostream& os, const BandSheet& sheet) {
  const std::size_t dim = sheet.theta.empty() ? 1 : sheet.theta.front().size();
  for (std::size_t k = 0; k < dim; ++k) os << (k ? "," : "") << "theta" << k + 1;
  for (std::size_t b = 0; b < sheet.bands.size(); ++b) os << ",lambda_" << b + 1;
  os << '\n';
  for (std::size_t j = 0; j < sheet.theta.size(); ++j) {
    for (std::size_t k = 0; k < dim; ++k) os << (k ? "," : "") << number(sheet.theta[j][k]);
    for (const auto& band : sheet.bands) os << ',' << number(band[j]);
    os << '\n';
  }
}

void write_eigencurves_csv(std::ostream& os, const TrackReport& r) {
  std::size_t m = 0;
  for (const auto& s : r.samples) m = std::max(m, s.eigenvalues.size());
  os << 't';
  for (std::size_t k = 0; k < m; ++k) os << ",lambda_" << k + 1;
  os << '\n';
  for (const auto& s : r.samples) {
    os << number(s.t);
    for (std::size_t k = 0; k < m; ++k)
      os << ',' << (k < s.eigenvalues.size() ? number(s.eigenvalues[k]) : "");
    os << '\n';
  }
}

}  // namespace qgraph::io
