#pragma once

// Experiment drivers behind the command-line tool: run configuration, problem
// setup, the spectrum / dissociation / validate / integrals commands, and the
// error metrics they report.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escqe/fci.hpp"
#include "escqe/molint.hpp"
#include "escqe/refstates.hpp"
#include "escqe/secondq.hpp"
#include "escqe/solver.hpp"
#include "escqe/statevector.hpp"

namespace escqe::harness {

/// Everything derived from one geometry: integrals, SCF, spin-orbital and
/// qubit Hamiltonians, the fixed-Sz sector and MO irreps when available.
struct MolecularProblem {
  molint::Geometry geometry;
  molint::RhfResult scf;
  molint::SpinOrbitalHamiltonian hamiltonian;
  secondq::PauliSum pauli;
  sim::QubitOperator op;
  std::vector<d2h::Irrep> mo_irreps;  // empty without D2h symmetry
  int n_electrons = 0;
  fci::SectorBasis sector;

  int n_qubits() const { return hamiltonian.n_spin_orbitals; }
  int n_spatial() const { return hamiltonian.n_spatial(); }
};

/// n_electrons < 0 means neutral.
MolecularProblem build_problem(const molint::Geometry& geometry, int n_electrons = -1,
                               std::string_view basis = "sto-3g");
/// Problem from MO-basis integrals; no point-group labels.
MolecularProblem problem_from_fcidump(const molint::FcidumpData& data);

/// Key-value run configuration; see docs/config.md for the schema.
struct RunConfig {
  std::string name = "run";
  std::string geometry = "rectangle 1.5 1.0";  // rectangle X Y | diatomic R | xyz PATH
  std::string fcidump;                         // overrides geometry when set
  std::string basis = "sto-3g";
  int electrons = -1;
  int k = 36;
  refstates::PoolKind guess = refstates::PoolKind::CSF;
  solver::ConstraintStrategy strategy;
  solver::OptimizerConfig optimizer;
  std::uint64_t seed = 7;
  std::vector<double> scan;
  double fixed_side = 1.0;
  solver::PrescanConfig prescan;
  bool run_plain = true;     // dissociation: plain CQE alongside CQE+
  double variance_threshold = 1e-5;

  static RunConfig parse(std::string_view text);
  static RunConfig load(const std::string& path);
  /// Geometry described by `geometry`; relative xyz paths resolve against `base_dir`.
  molint::Geometry make_geometry(const std::string& base_dir = ".") const;
};

// --- metrics ------------------------------------------------------------------

inline constexpr double kMilliHartree = 1000.0;

/// Mean |E_M[i] - E_ref[i]| over the sorted method energies, in mH.
double k_matched_error_mh(std::vector<double> method, std::vector<double> reference);
/// Method energies in ascending order each claim their nearest unclaimed
/// reference energy; mean absolute distance in mH.
double nearest_unique_error_mh(std::vector<double> method, std::vector<double> reference);

struct SpectrumSummary {
  int states = 0;
  int converged = 0;
  int variance_ok = 0;
  double mean_log10_variance = 0.0;
  double std_log10_variance = 0.0;
  double mean_iterations = 0.0;
  double std_iterations = 0.0;
  double k_matched_mh = 0.0;
  double nearest_unique_mh = 0.0;
};

SpectrumSummary summarize(const std::vector<solver::StateResult>& results,
                          const Eigen::VectorXd& fci_energies, double variance_threshold);

/// Symmetry label of an arbitrary statevector of the problem's sector.
fci::SymmetryLabel label_state(const MolecularProblem& problem, const sim::StateVector& state);

// --- commands -------------------------------------------------------------------

struct SpectrumOutcome {
  std::vector<solver::StateResult> results;
  fci::ClassifiedSpectrum fci;
  SpectrumSummary summary;
};

/// Full k-state run from the configured guess pool.
SpectrumOutcome run_spectrum_experiment(const MolecularProblem& problem, const RunConfig& config);

int cmd_spectrum(const RunConfig& config, const std::string& out_dir, bool fci_only,
                 const std::string& base_dir = ".");
int cmd_dissociation(const RunConfig& config, const std::string& out_dir,
                     const std::string& base_dir = ".");
int cmd_validate(const RunConfig& config, const std::string& out_dir,
                 const std::string& base_dir = ".");
int cmd_integrals(const RunConfig& config, const std::string& out_path,
                  const std::string& base_dir = ".");

struct DissociationPoint {
  double d = 0.0;
  std::vector<double> fci;
  std::vector<double> plain;
  std::vector<double> plus;
  double plain_k_mh = 0.0, plain_nearest_mh = 0.0;
  double plus_k_mh = 0.0, plus_nearest_mh = 0.0;
};

DissociationPoint run_dissociation_point(const RunConfig& config, double d);

struct Check {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Headless property battery used by `validate`.
std::vector<Check> validation_checks(const RunConfig& config, const std::string& base_dir = ".");

/// Worker count from ESCQE_WORKERS (default 1).
int worker_count();

}  // namespace escqe::harness
