#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qgraph/error.hpp"
#include "qgraph/io.hpp"
#include "qgraph/periodic.hpp"
#include "qgraph/spectral.hpp"

namespace py = pybind11;
using namespace qgraph;

namespace {

SearchOptions options(const std::string& backend, std::size_t kgrid, std::size_t threads) {
  SearchOptions o;
  o.backend = parse_backend(backend);
  o.kgrid = kgrid;
  o.threads = threads;
  return o;
}

const PeriodicGraph& periodic_of(const io::Problem& p) {
  if (!p.periodic) throw input_error("problem is not periodic");
  return *p.periodic;
}

py::dict eigenvalue_dict(const Eigenvalue& ev) {
  py::dict d;
  d["lambda"] = ev.lambda;
  d["multiplicity"] = ev.multiplicity;
  d["backend"] = std::string(backend_name(ev.backend));
  d["residual"] = ev.residual;
  d["best_effort"] = ev.best_effort;
  return d;
}

}  // namespace

PYBIND11_MODULE(_qgraph, m) {
  m.doc() = "Quantum graph spectra";

  static py::exception<Error> base(m, "QGraphError");
  static py::exception<Error> input(m, "InputError", base.ptr());
  static py::exception<Error> precondition(m, "PreconditionError", base.ptr());
  static py::exception<Error> numerical(m, "NumericalError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      switch (e.kind()) {
        case ErrorKind::Input: py::set_error(input, e.what()); return;
        case ErrorKind::Precondition: py::set_error(precondition, e.what()); return;
        case ErrorKind::Numerical: py::set_error(numerical, e.what()); return;
      }
    }
  });

  py::class_<io::Problem>(m, "Problem")
      .def_property_readonly("edge_count", [](const io::Problem& p) { return p.graph.edge_count(); })
      .def_property_readonly("vertices", [](const io::Problem& p) { return p.graph.vertices(); })
      .def_property_readonly("edge_ids",
                             [](const io::Problem& p) {
                               std::vector<std::string> ids;
                               for (const auto& e : p.graph.edges()) ids.push_back(e.id);
                               return ids;
                             })
      .def_property_readonly("total_length", [](const io::Problem& p) { return p.graph.total_length(); })
      .def_property_readonly("periodic", [](const io::Problem& p) { return p.periodic.has_value(); })
      .def_property_readonly("A", [](const io::Problem& p) { return p.conditions.a; })
      .def_property_readonly("B", [](const io::Problem& p) { return p.conditions.b; })
      .def("to_json", [](const io::Problem& p) { return io::to_json(p).dump(); });

  m.def("load", &io::load_problem, py::arg("path"), "Read a graph file.");
  m.def("loads", &io::parse_problem_text, py::arg("text"), "Parse a graph description.");

  m.def(
      "eigenvalues",
      [](const io::Problem& p, double lo, double hi, const std::string& backend,
         std::size_t kgrid, std::size_t threads) {
        py::list out;
        std::vector<Eigenvalue> evs;
        {
          py::gil_scoped_release release;
          evs = eigenvalues_in(p.graph, p.conditions, lo, hi, options(backend, kgrid, threads));
        }
        for (const auto& ev : evs) out.append(eigenvalue_dict(ev));
        return out;
      },
      py::arg("problem"), py::arg("lo"), py::arg("hi"), py::arg("backend") = "intersection",
      py::arg("kgrid") = 16, py::arg("threads") = 1);

  m.def(
      "secular",
      [](const io::Problem& p, double lambda, const std::string& backend) {
        const SecularSample s = secular(parse_backend(backend), p.graph, p.conditions, lambda);
        py::dict d;
        d["singular_values"] = s.singular_values;
        d["log_abs_det"] = s.log_abs_det;
        d["det_phase"] = s.det_phase;
        d["dimension"] = s.dimension;
        return d;
      },
      py::arg("problem"), py::arg("lam"), py::arg("backend") = "intersection");

  m.def(
      "is_self_adjoint",
      [](const io::Problem& p, double tol) {
        const auto r = is_self_adjoint(p.conditions, tol);
        return py::make_tuple(r.self_adjoint, r.witness);
      },
      py::arg("problem"), py::arg("tol") = 1e-8);

  m.def(
      "band_structure",
      [](const io::Problem& p, std::size_t grid, double lo, double hi, std::size_t threads) {
        BandSheet sheet;
        {
          py::gil_scoped_release release;
          sheet = band_structure(periodic_of(p), p.conditions, grid, lo, hi,
                                 options("intersection", 16, threads));
        }
        Eigen::MatrixXd theta(static_cast<Eigen::Index>(sheet.theta.size()),
                              sheet.theta.empty() ? 1 : static_cast<Eigen::Index>(sheet.theta[0].size()));
        for (std::size_t j = 0; j < sheet.theta.size(); ++j)
          for (std::size_t k = 0; k < sheet.theta[j].size(); ++k)
            theta(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = sheet.theta[j][k];
        Eigen::MatrixXd bands(static_cast<Eigen::Index>(sheet.theta.size()),
                              static_cast<Eigen::Index>(sheet.bands.size()));
        for (std::size_t b = 0; b < sheet.bands.size(); ++b)
          for (std::size_t j = 0; j < sheet.theta.size(); ++j)
            bands(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = sheet.bands[b][j];
        return py::make_tuple(theta, bands);
      },
      py::arg("problem"), py::arg("grid"), py::arg("lo"), py::arg("hi"), py::arg("threads") = 1);

  m.def(
      "flat_bands",
      [](const io::Problem& p, double lo, double hi, std::size_t grid, double tol) {
        BandSheet sheet;
        {
          py::gil_scoped_release release;
          sheet = band_structure(periodic_of(p), p.conditions, grid, lo, hi);
        }
        std::vector<double> out;
        for (const auto& f : detect_flat_bands(sheet, tol)) out.push_back(f.lambda);
        return out;
      },
      py::arg("problem"), py::arg("lo"), py::arg("hi"), py::arg("grid") = 16,
      py::arg("tol") = 1e-8);

  m.def(
      "compact_state",
      [](const io::Problem& p, double lambda, std::optional<int> radius) -> py::object {
        const PeriodicGraph& pg = periodic_of(p);
        const CompactSearch r = radius ? compact_state(pg, p.conditions, lambda, *radius)
                                       : find_compact_state(pg, p.conditions, lambda);
        if (!r.state) return py::none();
        return py::module_::import("json").attr("loads")(io::to_json(*r.state).dump());
      },
      py::arg("problem"), py::arg("lam"), py::arg("radius") = py::none());
}
