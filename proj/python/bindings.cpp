// Python bindings for the problem setup, exact spectrum, CQE runs and the
// validation battery.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "escqe/error.hpp"
#include "escqe/harness.hpp"

namespace py = pybind11;
using namespace escqe;

namespace {

py::dict record_dict(const solver::RunRecord& r) {
  py::dict d;
  d["start"] = r.start;
  d["energy"] = r.energy;
  d["variance"] = r.variance;
  d["residual_norm"] = r.residual_norm;
  d["iterations"] = r.n_iterations;
  d["converged"] = r.converged;
  d["status"] = r.status;
  d["s2"] = r.s2;
  d["label"] = r.label;
  return d;
}

py::dict summary_dict(const harness::SpectrumSummary& s) {
  py::dict d;
  d["states"] = s.states;
  d["converged"] = s.converged;
  d["variance_ok"] = s.variance_ok;
  d["mean_log10_variance"] = s.mean_log10_variance;
  d["std_log10_variance"] = s.std_log10_variance;
  d["mean_iterations"] = s.mean_iterations;
  d["std_iterations"] = s.std_iterations;
  d["k_matched_mh"] = s.k_matched_mh;
  d["nearest_unique_mh"] = s.nearest_unique_mh;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Excited-state contracted quantum eigensolver core";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<SymmetryError>(m, "SymmetryError", base.ptr());
  py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());

  py::class_<molint::Geometry>(m, "Geometry")
      .def_static("rectangle", &molint::Geometry::rectangle, py::arg("side_x"), py::arg("side_y"))
      .def_static("diatomic", &molint::Geometry::diatomic, py::arg("bond"))
      .def_static("from_xyz", &molint::Geometry::from_xyz, py::arg("text"))
      .def("to_xyz", &molint::Geometry::to_xyz)
      .def_property_readonly("n_atoms", [](const molint::Geometry& g) { return g.atoms.size(); });

  py::class_<harness::RunConfig>(m, "RunConfig")
      .def(py::init<>())
      .def_static("parse", [](const std::string& text) { return harness::RunConfig::parse(text); })
      .def_static("load", &harness::RunConfig::load)
      .def_readwrite("name", &harness::RunConfig::name)
      .def_readwrite("geometry", &harness::RunConfig::geometry)
      .def_readwrite("k", &harness::RunConfig::k)
      .def_readwrite("seed", &harness::RunConfig::seed)
      .def_property(
          "strategy", [](const harness::RunConfig& c) { return c.strategy.str(); },
          [](harness::RunConfig& c, const std::string& s) { c.strategy = solver::ConstraintStrategy::parse(s); });

  py::class_<harness::MolecularProblem>(m, "Problem")
      .def(py::init([](const molint::Geometry& g, int electrons) { return harness::build_problem(g, electrons); }),
           py::arg("geometry"), py::arg("electrons") = -1)
      .def_property_readonly("n_qubits", &harness::MolecularProblem::n_qubits)
      .def_property_readonly("n_electrons", [](const harness::MolecularProblem& p) { return p.n_electrons; })
      .def_property_readonly("sector_dim", [](const harness::MolecularProblem& p) { return p.sector.dim(); })
      .def_property_readonly("rhf_energy", [](const harness::MolecularProblem& p) { return p.scf.energy; })
      .def_property_readonly("nuclear_repulsion", [](const harness::MolecularProblem& p) { return p.hamiltonian.enuc; })
      .def("pauli_l1", [](const harness::MolecularProblem& p, bool identity) { return p.pauli.coefficient_norm(identity); },
           py::arg("include_identity") = false)
      .def("pauli_terms", [](const harness::MolecularProblem& p) { return p.pauli.terms().size(); })
      .def("sector_hamiltonian",
           [](const harness::MolecularProblem& p) { return Eigen::MatrixXd(fci::sector_hamiltonian(p.hamiltonian, p.sector)); })
      .def("fci", [](const harness::MolecularProblem& p) {
        const auto s = fci::classify_spectrum(p.hamiltonian, p.sector, p.mo_irreps);
        std::vector<std::string> labels;
        for (const auto& l : s.labels) labels.push_back(l.str());
        return py::make_tuple(Eigen::VectorXd(s.energies), labels);
      });

  m.def(
      "run_spectrum",
      [](const harness::MolecularProblem& p, const harness::RunConfig& c) {
        harness::SpectrumOutcome out;
        {
          py::gil_scoped_release release;
          out = harness::run_spectrum_experiment(p, c);
        }
        py::list states;
        for (const auto& r : out.results) states.append(record_dict(r.record));
        return py::make_tuple(states, summary_dict(out.summary));
      },
      py::arg("problem"), py::arg("config"), "Sequential k-state run; returns (states, summary).");

  m.def(
      "dissociation_point",
      [](const harness::RunConfig& c, double d) {
        harness::DissociationPoint pt;
        {
          py::gil_scoped_release release;
          pt = harness::run_dissociation_point(c, d);
        }
        py::dict r;
        r["d"] = pt.d;
        r["fci"] = pt.fci;
        r["plain"] = pt.plain;
        r["plus"] = pt.plus;
        r["plain_k_mh"] = pt.plain_k_mh;
        r["plain_nearest_mh"] = pt.plain_nearest_mh;
        r["plus_k_mh"] = pt.plus_k_mh;
        r["plus_nearest_mh"] = pt.plus_nearest_mh;
        return r;
      },
      py::arg("config"), py::arg("d"));

  m.def(
      "validate",
      [](const harness::RunConfig& c) {
        py::list out;
        for (const auto& ch : harness::validation_checks(c)) {
          py::dict d;
          d["module"] = ch.module;
          d["name"] = ch.name;
          d["passed"] = ch.passed;
          d["detail"] = ch.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("config") = harness::RunConfig{});

  m.def("write_fcidump", [](const harness::RunConfig& c, const std::string& path) {
    return harness::cmd_integrals(c, path);
  });
  m.def("k_matched_error_mh", &harness::k_matched_error_mh);
  m.def("nearest_unique_error_mh", &harness::nearest_unique_error_mh);
}
