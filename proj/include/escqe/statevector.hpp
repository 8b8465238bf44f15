#pragma once

// Exact statevector engine: Pauli gadgets, trotterized two-body exponentials,
// expectation values, transition density matrices and the ancilla-controlled
// overlap construction.

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "escqe/secondq.hpp"

namespace escqe::sim {

using cplx = std::complex<double>;
using secondq::PauliSum;
using secondq::PauliWord;
using secondq::TwoBodyCoefficients;

class StateVector {
 public:
  StateVector() = default;
  /// Computational basis state |index>.
  static StateVector basis(int n_qubits, std::uint64_t index);
  /// Takes ownership of amplitudes; they must already be normalized.
  static StateVector from_amplitudes(int n_qubits, Eigen::VectorXcd amplitudes,
                                     double tol = 1e-10);

  int n_qubits() const { return n_; }
  std::uint64_t dim() const { return std::uint64_t{1} << n_; }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  cplx operator[](std::uint64_t i) const { return amp_(static_cast<Eigen::Index>(i)); }
  double norm() const { return amp_.norm(); }

  /// Rescales to unit norm and logs the correction; returns the old norm.
  double renormalize();

  /// In-place access for the engine; callers keep the norm invariant.
  Eigen::VectorXcd& mutable_amplitudes() { return amp_; }

 private:
  StateVector(int n, Eigen::VectorXcd amp) : n_(n), amp_(std::move(amp)) {}
  int n_ = 0;
  Eigen::VectorXcd amp_;
};

struct Gadget {
  PauliWord word;
  double angle = 0.0;  // exp(i * angle * word)
};

struct GadgetSequence {
  int n_qubits = 0;
  std::vector<Gadget> gadgets;

  size_t size() const { return gadgets.size(); }
  bool empty() const { return gadgets.empty(); }
  void append(const GadgetSequence& other);
};

/// state <- exp(i * angle * word) state.
void apply_gadget(StateVector& state, const PauliWord& word, double angle);
void apply_gadget(Eigen::VectorXcd& amplitudes, const PauliWord& word, double angle);
void apply_sequence(StateVector& state, const GadgetSequence& seq);

/// Gadgets of the first-order product formula for exp(epsilon * op), where op
/// is anti-Hermitian; one gadget per Pauli word in canonical order.
GadgetSequence trotter_sequence(const PauliSum& anti_hermitian, double epsilon);

/// Applies the first-order trotterization of exp(epsilon * Σ A Γ): real and
/// imaginary excitation terms in pair order, each exponentiated exactly by its
/// commuting gadgets.
GadgetSequence apply_two_body_step(StateVector& state, const TwoBodyCoefficients& a,
                                   double epsilon);

/// Dense exp(i angle P) = cos(angle) I + i sin(angle) P action on a vector.
Eigen::VectorXcd pauli_action(const Eigen::VectorXcd& v, const PauliWord& word);

/// Pauli sum compiled to a sparse matrix for repeated application.
class QubitOperator {
 public:
  QubitOperator() = default;
  explicit QubitOperator(const PauliSum& op);

  int n_qubits() const { return n_; }
  const PauliSum& pauli() const { return pauli_; }
  Eigen::VectorXcd apply(const Eigen::VectorXcd& v) const { return m_ * v; }
  const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& matrix() const { return m_; }

 private:
  int n_ = 0;
  PauliSum pauli_;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> m_;
};

cplx expectation(const StateVector& state, const PauliSum& op);
cplx expectation(const StateVector& state, const QubitOperator& op);
cplx inner_product(const StateVector& a, const StateVector& b);

/// Columns a_k a_i |v> for every canonical pair (i<k); the building block of
/// all two-body transition quantities.
Eigen::MatrixXcd pair_annihilate(const Eigen::VectorXcd& v, int n_qubits);

/// D[P,Q] = <a|Γ(i,k,l,j)|b> with P=(i<k), Q=(j<l).
TwoBodyCoefficients transition_2rdm(const StateVector& a, const StateVector& b);
TwoBodyCoefficients transition_2rdm(const Eigen::MatrixXcd& pairs_a,
                                    const Eigen::MatrixXcd& pairs_b, int n_qubits);

// --- ancilla-controlled pair circuits -----------------------------------------

/// (n+1)-qubit state (|0>|psi_k> + |1>|psi_j>)/sqrt(2), ancilla on qubit n,
/// built by per-gadget controlled exponentials
///   exp(iθ|0><0|⊗O) = exp(iθ/2 I⊗O) exp(iθ/2 Z⊗O)
/// (and the mirrored |1>-controlled pair for the j branch).
StateVector controlled_pair_circuit(const GadgetSequence& seq_k, const StateVector& init_k,
                                    const GadgetSequence& seq_j, const StateVector& init_j);

/// <X> - i<Y> on the ancilla, which equals <psi_j|psi_k>.
cplx ancilla_overlap(const StateVector& pair_state);

/// <X⊗Γ> - i<Y⊗Γ>, which equals <psi_j|Γ(i,k,l,j)|psi_k>.
cplx controlled_pair_tdm(const StateVector& pair_state, int i, int k, int l, int j);

// --- snapshots ------------------------------------------------------------------

/// Binary layout: 8-byte magic "ESCQESV1", uint32 n_qubits, then 2^n pairs of
/// little-endian f64 (re, im).
void write_snapshot(const std::string& path, const StateVector& state);
StateVector read_snapshot(const std::string& path);

// --- finite-shot estimation -------------------------------------------------------

/// Binomial shot model for Pauli expectations; exact evaluation is the default
/// everywhere else.
class ShotSampler {
 public:
  ShotSampler(std::uint64_t shots, std::uint64_t seed) : shots_(shots), rng_(seed) {}
  double estimate(const StateVector& state, const PauliWord& word);
  cplx estimate(const StateVector& state, const PauliSum& op);

 private:
  std::uint64_t shots_;
  std::mt19937_64 rng_;
};

}  // namespace escqe::sim
