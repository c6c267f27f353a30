#include "qgraph/cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "qgraph/error.hpp"
#include "qgraph/io.hpp"
#include "qgraph/periodic.hpp"
#include "qgraph/spectral.hpp"

namespace qgraph::cli {

namespace {

using io::json;

// Defaults shared by all commands.
struct Defaults {
  static constexpr std::size_t kgrid = 16;
  static constexpr std::size_t threads = 1;
  static constexpr std::size_t band_grid = 16;
  static constexpr double flat_tol = 1e-8;
  static constexpr double compare_tol = 1e-7;
  static constexpr double sa_tol = 1e-8;
  static constexpr std::size_t track_samples = 61;
  static constexpr std::uint64_t seed = 1;
};

struct Config {
  std::string graph;
  std::vector<double> range;
  std::string backend = "intersection";
  std::vector<std::string> backends;
  std::size_t kgrid = Defaults::kgrid;
  std::size_t threads = Defaults::threads;
  std::string out;
  bool json = false;
  std::uint64_t seed = Defaults::seed;
  std::optional<int> radius;
  std::size_t grid = Defaults::band_grid;
  double tol = Defaults::flat_tol;
  std::optional<double> lambda;
  std::string vertex;
  std::string to;
  std::vector<double> t_range;
  std::size_t samples = Defaults::track_samples;
  std::string report;
};

SearchOptions search_options(const Config& cfg, Backend backend) {
  SearchOptions o;
  o.backend = backend;
  o.kgrid = cfg.kgrid;
  o.threads = cfg.threads;
  return o;
}

std::pair<double, double> window(const Config& cfg) {
  if (cfg.range.size() != 2) throw input_error("--range LO HI is required");
  if (!(cfg.range[0] < cfg.range[1])) throw input_error("--range needs LO < HI");
  return {cfg.range[0], cfg.range[1]};
}

// Writes the main artifact to --out, or to the console when no file is set.
void emit(const Config& cfg, std::ostream& out, const std::function<void(std::ostream&)>& body) {
  if (cfg.out.empty()) {
    if (!cfg.json) body(out);
    return;
  }
  std::ofstream file(cfg.out);
  if (!file) throw input_error("cannot write '" + cfg.out + "'");
  body(file);
}

void summary(const Config& cfg, std::ostream& out, const std::string& command, json body) {
  if (!cfg.json) return;
  body["schema_version"] = io::kSchemaVersion;
  body["command"] = command;
  out << body.dump(2) << '\n';
}

io::Problem load(const Config& cfg) {
  if (cfg.graph.empty()) throw input_error("--graph PATH is required");
  return io::load_problem(cfg.graph);
}

const PeriodicGraph& periodic_of(const io::Problem& p) {
  if (!p.periodic) throw input_error("graph file has no 'periodic' block");
  return *p.periodic;
}

int cmd_spectrum(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  const Backend backend = parse_backend(cfg.backend);
  const auto evs = eigenvalues_in(p.graph, p.conditions, lo, hi, search_options(cfg, backend));
  emit(cfg, out, [&](std::ostream& os) { io::write_eigenvalues_csv(os, evs); });
  json list = json::array();
  for (const auto& ev : evs) list.push_back(io::to_json(ev));
  summary(cfg, out, "spectrum",
          {{"backend", backend_name(backend)}, {"window", {lo, hi}}, {"eigenvalues", list}});
  return kSuccess;
}

int cmd_scan(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  const Backend backend = parse_backend(cfg.backend);
  const SearchOptions o = search_options(cfg, backend);
  const SecularOperator op(p.graph, p.conditions, backend);
  const auto samples = scan(op, search_grid(lo, hi, p.graph.total_length(), o), cfg.threads);
  emit(cfg, out, [&](std::ostream& os) { io::write_secular_csv(os, samples); });
  summary(cfg, out, "scan", {{"backend", backend_name(backend)}, {"samples", samples.size()}});
  return kSuccess;
}

int cmd_compare(const Config& cfg, std::ostream& out) {
  std::vector<std::string> names = cfg.backends;
  if (names.empty()) names = {"dotted", "intersection"};
  if (names.size() < 2) throw input_error("compare needs at least two backends");
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  std::vector<std::vector<Eigenvalue>> lists;
  for (const auto& name : names)
    lists.push_back(eigenvalues_in(p.graph, p.conditions, lo, hi,
                                   search_options(cfg, parse_backend(name))));
  bool pass = true;
  double max_delta = 0.0;
  json rows = json::array();
  std::ostringstream text;
  for (std::size_t k = 1; k < lists.size(); ++k)
    if (lists[k].size() != lists[0].size()) pass = false;
  const std::size_t count = lists[0].size();
  for (std::size_t i = 0; i < count; ++i) {
    json row = {{"lambda", lists[0][i].lambda}, {"multiplicity", lists[0][i].multiplicity}};
    json deltas = json::object();
    text << io::number(lists[0][i].lambda) << " (mult " << lists[0][i].multiplicity << ")";
    for (std::size_t k = 1; k < lists.size(); ++k) {
      if (i >= lists[k].size()) continue;
      const double d = std::abs(lists[k][i].lambda - lists[0][i].lambda);
      max_delta = std::max(max_delta, d);
      if (d > Defaults::compare_tol) pass = false;
      if (lists[k][i].multiplicity != lists[0][i].multiplicity) pass = false;
      deltas[names[k]] = d;
      text << "  " << names[k] << " delta " << io::number(d) << " mult "
           << lists[k][i].multiplicity;
    }
    text << '\n';
    row["deltas"] = deltas;
    rows.push_back(std::move(row));
  }
  emit(cfg, out, [&](std::ostream& os) {
    os << text.str();
    for (std::size_t k = 0; k < lists.size(); ++k)
      os << names[k] << ": " << lists[k].size() << " eigenvalues\n";
    os << (pass ? "PASS" : "FAIL") << " max delta " << io::number(max_delta) << '\n';
  });
  summary(cfg, out, "compare",
          {{"backends", names}, {"pass", pass}, {"max_delta", max_delta}, {"eigenvalues", rows}});
  return pass ? kSuccess : kNumericalError;
}

int cmd_bands(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  const BandSheet sheet = band_structure(periodic_of(p), p.conditions, cfg.grid, lo, hi,
                                         search_options(cfg, parse_backend(cfg.backend)));
  emit(cfg, out, [&](std::ostream& os) { io::write_bands_csv(os, sheet); });
  std::size_t complete = 0;
  for (std::size_t b = 0; b < sheet.bands.size(); ++b) complete += sheet.complete(b);
  summary(cfg, out, "bands",
          {{"grid", sheet.grid}, {"points", sheet.theta.size()}, {"bands", sheet.bands.size()},
           {"complete_bands", complete}});
  return kSuccess;
}

int cmd_flatbands(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  const BandSheet sheet = band_structure(periodic_of(p), p.conditions, cfg.grid, lo, hi,
                                         search_options(cfg, parse_backend(cfg.backend)));
  const auto flat = detect_flat_bands(sheet, cfg.tol);
  emit(cfg, out, [&](std::ostream& os) {
    os << "band,lambda,spread\n";
    for (const auto& f : flat)
      os << f.band + 1 << ',' << io::number(f.lambda) << ',' << io::number(f.spread) << '\n';
  });
  json list = json::array();
  for (const auto& f : flat)
    list.push_back({{"band", f.band + 1}, {"lambda", f.lambda}, {"spread", f.spread}});
  summary(cfg, out, "flatbands", {{"grid", cfg.grid}, {"tol", cfg.tol}, {"flat_bands", list}});
  return kSuccess;
}

int cmd_compactstate(const Config& cfg, std::ostream& out, std::ostream& err) {
  const io::Problem p = load(cfg);
  if (!cfg.lambda) throw input_error("--lambda is required");
  const PeriodicGraph& pg = periodic_of(p);
  const CompactSearch found = cfg.radius ? compact_state(pg, p.conditions, *cfg.lambda, *cfg.radius)
                                         : find_compact_state(pg, p.conditions, *cfg.lambda);
  if (!found.state) {
    err << "none found: " << found.reason << '\n';
    summary(cfg, out, "compactstate", {{"found", false}, {"reason", found.reason}});
    return kPreconditionError;
  }
  const json state = io::to_json(*found.state);
  emit(cfg, out, [&](std::ostream& os) { os << state.dump(2) << '\n'; });
  summary(cfg, out, "compactstate", {{"found", true}, {"state", state}});
  return kSuccess;
}

// Replaces the rows acting on one degree-1 vertex by boundary-angle(t).
ConditionFamily vertex_angle_family(const io::Problem& p, const std::string& vertex) {
  const MetricGraph& g = p.graph;
  if (!g.has_vertex(vertex)) throw input_error("unknown vertex '" + vertex + "'");
  if (g.degree(vertex) != 1) throw input_error("--vertex must name a degree-1 vertex");
  const auto end = static_cast<Eigen::Index>(g.endpoints_at(vertex).front());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index r = 0; r < p.conditions.a.rows(); ++r) {
    Eigen::RowVectorXcd other_a = p.conditions.a.row(r);
    Eigen::RowVectorXcd other_b = p.conditions.b.row(r);
    other_a(end) = 0.0;
    other_b(end) = 0.0;
    const bool only_here = other_a.norm() == 0.0 && other_b.norm() == 0.0;
    if (!only_here) keep.push_back(r);
  }
  if (keep.size() + 1 != static_cast<std::size_t>(p.conditions.a.rows()))
    throw input_error("conditions at '" + vertex + "' are not a single local row");
  const ConditionsAB base = p.conditions;
  return [base, keep, end](double t) {
    ConditionsAB c{Eigen::MatrixXcd::Zero(base.a.rows(), base.a.cols()),
                   Eigen::MatrixXcd::Zero(base.b.rows(), base.b.cols())};
    Eigen::Index row = 0;
    for (Eigen::Index r : keep) {
      c.a.row(row) = base.a.row(r);
      c.b.row(row) = base.b.row(r);
      ++row;
    }
    c.a(row, end) = std::cos(t);
    c.b(row, end) = std::sin(t);
    return c;
  };
}

int cmd_track(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const auto [lo, hi] = window(cfg);
  ConditionFamily family;
  std::vector<double> t = cfg.t_range;
  if (!cfg.to.empty()) {
    const io::Problem target = io::load_problem(cfg.to);
    if (target.graph.edge_count() != p.graph.edge_count())
      throw input_error("--to graph must have the same edges");
    family = geodesic_family(from_ab(p.conditions), from_ab(target.conditions));
    if (t.empty()) t = {0.0, 1.0};
  } else if (!cfg.vertex.empty()) {
    family = vertex_angle_family(p, cfg.vertex);
    if (t.empty()) t = {-0.3, 0.3};
  } else {
    throw input_error("track needs --vertex V (boundary-angle path) or --to PATH (geodesic)");
  }
  if (t.size() != 2 || !(t[0] < t[1])) throw input_error("--t-range needs A < B");
  if (cfg.samples < 2) throw input_error("--samples must be at least 2");
  std::vector<double> grid;
  for (std::size_t i = 0; i < cfg.samples; ++i)
    grid.push_back(t[0] + (t[1] - t[0]) * static_cast<double>(i) /
                              static_cast<double>(cfg.samples - 1));
  TrackOptions o;
  o.search = search_options(cfg, parse_backend(cfg.backend));
  const TrackReport report = track_along_path(p.graph, family, grid, lo, hi, o);
  emit(cfg, out, [&](std::ostream& os) { io::write_eigencurves_csv(os, report); });
  const json analysis = io::to_json(report);
  if (!cfg.report.empty()) {
    std::ofstream file(cfg.report);
    if (!file) throw input_error("cannot write '" + cfg.report + "'");
    file << analysis.dump(2) << '\n';
  }
  summary(cfg, out, "track", {{"analyticity", analysis}});
  return kSuccess;
}

int cmd_check_sa(const Config& cfg, std::ostream& out) {
  const io::Problem p = load(cfg);
  const SelfAdjointness ab = is_self_adjoint(p.conditions, cfg.tol);
  const SelfAdjointness omega = is_lagrangian(from_ab(p.conditions), cfg.tol);
  emit(cfg, out, [&](std::ostream& os) {
    os << "self-adjoint: " << (ab.self_adjoint ? "true" : "false") << '\n';
    os << "witness: " << io::number(ab.witness) << '\n';
    os << "lagrangian cross-check: " << (omega.self_adjoint ? "true" : "false")
       << " (witness " << io::number(omega.witness) << ")\n";
  });
  summary(cfg, out, "check-sa",
          {{"self_adjoint", ab.self_adjoint}, {"witness", ab.witness},
           {"lagrangian", omega.self_adjoint}, {"lagrangian_witness", omega.witness}});
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectra of quantum graphs"};
  app.require_subcommand(1);
  Config cfg;
  cfg.tol = Defaults::flat_tol;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--graph", cfg.graph, "graph file (JSON)")->required();
    sub->add_option("--out", cfg.out, "write the main artifact to this file");
    sub->add_flag("--json", cfg.json, "print a machine-readable summary");
    sub->add_option("--threads", cfg.threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", cfg.seed, "seed for randomized parts");
  };
  auto search = [&](CLI::App* sub) {
    sub->add_option("--range", cfg.range, "lambda window LO HI")->expected(2);
    sub->add_option("--backend", cfg.backend, "dtn, dotted or intersection");
    sub->add_option("--kgrid", cfg.kgrid, "grid points per mean level spacing")
        ->check(CLI::PositiveNumber);
  };

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues in a window");
  common(spectrum);
  search(spectrum);
  auto* scan_cmd = app.add_subcommand("scan", "secular scan (singular values, log|det|)");
  common(scan_cmd);
  search(scan_cmd);
  auto* compare = app.add_subcommand("compare", "cross-backend eigenvalue comparison");
  common(compare);
  search(compare);
  compare->add_option("--backends", cfg.backends, "backends to compare")->delimiter(',');
  auto* bands = app.add_subcommand("bands", "Floquet-Bloch band structure");
  common(bands);
  search(bands);
  bands->add_option("--grid", cfg.grid, "quasimomentum points per dimension");
  auto* flat = app.add_subcommand("flatbands", "flat bands of a periodic graph");
  common(flat);
  search(flat);
  flat->add_option("--grid", cfg.grid, "quasimomentum points per dimension");
  flat->add_option("--tol", cfg.tol, "relative flatness tolerance");
  auto* compact = app.add_subcommand("compactstate", "compactly supported eigenfunction");
  common(compact);
  compact->add_option("--lambda", cfg.lambda, "flat-band energy")->required();
  compact->add_option("--radius", cfg.radius, "patch radius (default: search 0..4)");
  auto* track = app.add_subcommand("track", "eigenvalue branches along a path of conditions");
  common(track);
  search(track);
  track->add_option("--vertex", cfg.vertex, "boundary-angle path at this degree-1 vertex");
  track->add_option("--to", cfg.to, "geodesic path to the conditions of this graph file");
  track->add_option("--t-range", cfg.t_range, "path parameter range A B")->expected(2);
  track->add_option("--samples", cfg.samples, "uniform path samples");
  track->add_option("--report", cfg.report, "analyticity report (JSON) file");
  auto* check = app.add_subcommand("check-sa", "self-adjointness of the vertex conditions");
  common(check);
  check->add_option("--tol", cfg.tol, "tolerance")->default_val(Defaults::sa_tol);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }

  try {
    if (*spectrum) return cmd_spectrum(cfg, out);
    if (*scan_cmd) return cmd_scan(cfg, out);
    if (*compare) return cmd_compare(cfg, out);
    if (*bands) return cmd_bands(cfg, out);
    if (*flat) return cmd_flatbands(cfg, out);
    if (*compact) return cmd_compactstate(cfg, out, err);
    if (*track) return cmd_track(cfg, out);
    if (*check) return cmd_check_sa(cfg, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Input: return kInputError;
      case ErrorKind::Precondition: return kPreconditionError;
      case ErrorKind::Numerical: return kNumericalError;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalError;
  }
  return kInputError;
}

}  // namespace qgraph::cli
