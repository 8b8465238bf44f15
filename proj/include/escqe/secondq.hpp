#pragma once

// Pauli-string algebra and the Jordan-Wigner image of fermionic operators.
//
// Conventions: qubit p carries spin orbital p (occupied = |1>), and
//   a†_p = (X_p - iY_p)/2 ⊗ Z_{p-1} ... Z_0.
// Pauli words print with qubit 0 rightmost.

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "escqe/molint.hpp"

namespace escqe::secondq {

using cplx = std::complex<double>;

inline constexpr double kPruneThreshold = 1e-14;

/// Pauli string packed as X and Z bit masks; Y sits where both are set.
struct PauliWord {
  std::uint64_t x = 0;
  std::uint64_t z = 0;

  static PauliWord single(int qubit, char letter);
  static PauliWord parse(std::string_view text);  // qubit 0 rightmost
  std::string str(int n_qubits) const;
  char letter(int qubit) const;
  bool is_identity() const { return x == 0 && z == 0; }
  int y_count() const { return __builtin_popcountll(x & z); }
  int weight() const { return __builtin_popcountll(x | z); }

  friend bool operator==(const PauliWord&, const PauliWord&) = default;
};

/// Lexicographic order of the printed word (highest qubit first, I<X<Y<Z).
struct PauliWordLess {
  bool operator()(const PauliWord& a, const PauliWord& b) const;
};

/// Phase and word of the product a*b.
std::pair<cplx, PauliWord> multiply(const PauliWord& a, const PauliWord& b);

/// Sum of Pauli words with complex coefficients, kept in canonical order.
class PauliSum {
 public:
  using Map = std::map<PauliWord, cplx, PauliWordLess>;

  PauliSum() = default;
  explicit PauliSum(int n_qubits) : n_(n_qubits) {}
  static PauliSum identity(int n_qubits, cplx c = 1.0);
  static PauliSum term(int n_qubits, PauliWord w, cplx c);

  int n_qubits() const { return n_; }
  const Map& terms() const { return terms_; }
  size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }
  cplx coefficient(const PauliWord& w) const;

  void add(const PauliWord& w, cplx c);
  PauliSum& simplify(double threshold = kPruneThreshold);

  PauliSum& operator+=(const PauliSum& o);
  PauliSum& operator-=(const PauliSum& o);
  PauliSum& operator*=(cplx s);
  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator-(PauliSum a, const PauliSum& b) { return a -= b; }
  friend PauliSum operator*(PauliSum a, cplx s) { return a *= s; }
  friend PauliSum operator*(cplx s, PauliSum a) { return a *= s; }
  friend PauliSum operator*(const PauliSum& a, const PauliSum& b);

  PauliSum adjoint() const;
  bool is_hermitian(double tol = 1e-12) const;
  bool is_anti_hermitian(double tol = 1e-12) const;
  /// Sum of |c| over terms, optionally skipping the identity word.
  double coefficient_norm(bool include_identity = false) const;

  /// Dense 2^n matrix; meant for tests and small n.
  Eigen::MatrixXcd to_dense() const;

  /// One term per line: `±c.ccccccccce±dd WORD` for Hermitian sums (real part),
  /// `(±re,±im) WORD` otherwise.
  std::string dump() const;
  static PauliSum parse_dump(std::string_view text);

 private:
  int n_ = 0;
  Map terms_;
};

enum class Ladder { Create, Annihilate };

PauliSum jw_fermion_op(Ladder kind, int p, int n);
/// Γ(i,k,l,j) = a†_i a†_k a_l a_j.
PauliSum gamma_op(int i, int k, int l, int j, int n);
PauliSum number_operator(int n);
PauliSum sz_operator(int n);
PauliSum s2_operator(int n);

// ---------------------------------------------------------------------------

/// Ordered pairs (i<k) of spin orbitals and their compact index.
class PairIndex {
 public:
  explicit PairIndex(int n_spin_orbitals);
  int n() const { return n_; }
  int size() const { return static_cast<int>(pairs_.size()); }
  int operator()(int i, int k) const { return index_[i * n_ + k]; }  // requires i<k
  std::pair<int, int> operator[](int p) const { return pairs_[p]; }
  /// Net alpha-count of a pair under the interleaved ordering: 2, 1 or 0.
  int alpha_count(int p) const;

 private:
  int n_;
  std::vector<std::pair<int, int>> pairs_;
  std::vector<int> index_;
};

enum class Hermiticity { General, AntiHermitian };

/// Antisymmetric two-body tensor J[i,k,j,l] stored over canonical pairs:
/// matrix(P, Q) with P=(i<k) and Q=(j<l). The operator it represents is
///   Ĵ = Σ_{P,Q} J[P,Q] Γ(i,k,l,j),
/// i.e. a sum over canonical index tuples only.
class TwoBodyCoefficients {
 public:
  TwoBodyCoefficients() = default;
  TwoBodyCoefficients(int n_spin_orbitals, Hermiticity h = Hermiticity::General);
  TwoBodyCoefficients(int n_spin_orbitals, Eigen::MatrixXcd pair_matrix,
                      Hermiticity h = Hermiticity::General);

  /// Builds from a full n^4 array indexed [i][k][j][l] (row-major). Throws
  /// SymmetryError if the array is not antisymmetric in (i,k) and (j,l).
  static TwoBodyCoefficients from_full(int n, const std::vector<cplx>& full,
                                       Hermiticity h = Hermiticity::General,
                                       double tol = 1e-12);

  int n() const { return n_; }
  Hermiticity hermiticity() const { return herm_; }
  const Eigen::MatrixXcd& matrix() const { return m_; }
  Eigen::MatrixXcd& matrix() { return m_; }

  /// Element with antisymmetry signs; zero when i==k or j==l.
  cplx operator()(int i, int k, int j, int l) const;
  void set(int i, int k, int j, int l, cplx v);  // writes the canonical entry

  /// Throws SymmetryError when the declared anti-Hermiticity does not hold.
  void validate(double tol = 1e-12) const;
  double norm() const { return m_.norm(); }

  TwoBodyCoefficients& operator+=(const TwoBodyCoefficients& o);
  TwoBodyCoefficients& operator*=(cplx s);

 private:
  int n_ = 0;
  Hermiticity herm_ = Hermiticity::General;
  Eigen::MatrixXcd m_;
};

/// (J - J‡)/2 with ‡ the two-body adjoint (i,k,j,l)->(j,l,i,k), conjugated.
TwoBodyCoefficients anti_hermitize(const TwoBodyCoefficients& j);

/// Jordan-Wigner images of every canonical Γ, built once per orbital count.
class GammaTable {
 public:
  explicit GammaTable(int n_spin_orbitals);
  const PairIndex& pairs() const { return pairs_; }
  /// Pauli expansion of Γ(i,k,l,j) for P=(i,k), Q=(j,l).
  const PauliSum& gamma(int p, int q) const { return table_[p * pairs_.size() + q]; }

 private:
  PairIndex pairs_;
  std::vector<PauliSum> table_;
};

const GammaTable& gamma_table(int n_spin_orbitals);

PauliSum two_body_to_pauli(const TwoBodyCoefficients& a);
/// Pauli expansions of M_PQ Γ_PQ + M_QP Γ_QP for each pair P<=Q, in (P,Q)
/// order, split into the real and imaginary parts of the coefficients. Each
/// group conserves particle number and Sz; for anti-Hermitian input its words
/// commute.
std::vector<PauliSum> two_body_terms_to_pauli(const TwoBodyCoefficients& a);

/// Σ K a†a + Σ_{p<r, q<s} ⟨pr||qs⟩ a†_p a†_r a_s a_q + enuc.
PauliSum assemble_hamiltonian(const molint::SpinOrbitalHamiltonian& h);

}  // namespace escqe::secondq
