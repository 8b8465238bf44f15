#pragma once

// Initial states: Slater determinants, spin-adapted configuration state
// functions built by sequential spin-1/2 coupling, and energy-sorted pools.

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "escqe/statevector.hpp"

namespace escqe::refstates {

using sim::QubitOperator;
using sim::StateVector;

struct DeterminantSpec {
  std::vector<int> occupied;  // spin orbitals, sorted

  /// "det:0,1,4,5"
  std::string str() const;
  std::uint64_t bits() const;
};

struct CsfSpec {
  std::vector<int> occupation;  // per spatial orbital: 0, 1 or 2
  std::string path;             // one '+'/'-' per singly occupied orbital
  double m = 0.0;               // target Sz

  /// Total spin implied by the path.
  double spin() const;
  int open_shells() const;
  void validate() const;
  /// "csf:2110:+-" (with ":m=<M>" when M is not zero)
  std::string str() const;
};

using GuessSpec = std::variant<DeterminantSpec, CsfSpec>;

std::string spec_string(const GuessSpec& spec);
/// Parses "det:..." or "csf:OCC:PATH[:m=M]"; ParseError on bad syntax.
GuessSpec parse_spec(std::string_view text);

StateVector prepare_determinant(const DeterminantSpec& spec, int n_qubits);

/// Closed-form Clebsch-Gordan weight for coupling an extra spin-1/2 with
/// projection `sigma` onto a running (S, M) that becomes (S_new, M_new);
/// `step` is +1/2 or -1/2.
double coupling_coefficient(double step, double sigma, double s_new, double m_new);

/// Throws DomainError for an invalid branching path.
StateVector prepare_csf(const CsfSpec& spec, int n_qubits);

StateVector prepare(const GuessSpec& spec, int n_qubits);

enum class PoolKind { SD, CSF, Mixed };
PoolKind parse_pool_kind(std::string_view text);
std::string_view pool_kind_name(PoolKind k);

struct Guess {
  GuessSpec spec;
  double energy = 0.0;
  std::string label;  // spec_string(spec)
};

/// Every determinant or CSF with the given electron count and Sz, sorted by
/// <H> with ties broken by the spec string. The CSF pool uses M = Sz.
std::vector<Guess> guess_pool(const QubitOperator& h, int n_spatial, int n_electrons, double sz,
                              PoolKind kind);

/// All valid coupling paths over `open` singly occupied orbitals with final
/// spin >= |m|.
std::vector<std::string> coupling_paths(int open, double m);

}  // namespace escqe::refstates
