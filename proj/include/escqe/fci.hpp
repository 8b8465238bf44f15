#pragma once

// Exact diagonalization in a fixed (N_alpha, N_beta) determinant sector, with
// total-spin and D2h classification of the eigenstates.

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "escqe/d2h.hpp"
#include "escqe/molint.hpp"

namespace escqe::fci {

using cplx = std::complex<double>;

/// Determinants as spin-orbital bitstrings (bit 2p = alpha, bit 2p+1 = beta).
class SectorBasis {
 public:
  SectorBasis() = default;
  SectorBasis(int n_spatial, int n_alpha, int n_beta, std::vector<std::uint64_t> dets);

  int n_spatial() const { return r_; }
  int n_spin_orbitals() const { return 2 * r_; }
  int n_alpha() const { return na_; }
  int n_beta() const { return nb_; }
  int dim() const { return static_cast<int>(dets_.size()); }
  std::uint64_t operator[](int i) const { return dets_[i]; }
  const std::vector<std::uint64_t>& determinants() const { return dets_; }
  /// Position of a determinant, or -1.
  int index_of(std::uint64_t det) const;

  /// Scatters sector coefficients into a full 2^n amplitude vector.
  Eigen::VectorXcd embed(const Eigen::VectorXcd& coeffs) const;
  Eigen::VectorXcd embed(const Eigen::VectorXd& coeffs) const;
  /// Gathers the sector part of a full amplitude vector.
  Eigen::VectorXcd restrict(const Eigen::VectorXcd& amplitudes) const;

 private:
  int r_ = 0, na_ = 0, nb_ = 0;
  std::vector<std::uint64_t> dets_;
  std::unordered_map<std::uint64_t, int> index_;
};

/// Alpha strings outer, beta strings inner, each in ascending lexicographic
/// order of the occupied orbital list.
SectorBasis enumerate_sector(int n_spatial, int n_alpha, int n_beta);

/// Sector matrix of Σ K a†a + Σ_{p<r,q<s} ⟨pr||qs⟩ a†p a†r a_s a_q + enuc.
Eigen::MatrixXd sector_hamiltonian(const molint::SpinOrbitalHamiltonian& h,
                                   const SectorBasis& basis);
/// Sector matrix of S^2.
Eigen::MatrixXd sector_s2(const SectorBasis& basis);

struct Eigensystem {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

Eigensystem fci_solve(const Eigen::MatrixXd& matrix);

// --- symmetry ------------------------------------------------------------------

struct SymmetryLabel {
  double s2 = 0.0;
  std::optional<double> spin;        // empty when <S^2> is not S(S+1)
  std::optional<d2h::Irrep> irrep;   // empty when mixed or unavailable
  double sz = 0.0;

  /// "S=1 A1g", "S=mixed B2u", ...
  std::string str() const;
  int multiplicity() const { return spin ? static_cast<int>(std::lround(2 * *spin)) + 1 : 0; }
};

/// Irrep of a determinant: product of the irreps of its occupied spin orbitals.
d2h::Irrep determinant_irrep(std::uint64_t det, const std::vector<d2h::Irrep>& mo_irreps);

/// Diagonal representation of one D2h generator on the sector (entries ±1).
Eigen::VectorXd generator_diagonal(const SectorBasis& basis,
                                   const std::vector<d2h::Irrep>& mo_irreps, int generator);

/// Labels a state given by sector coefficients. Throws UnsupportedError when
/// `mo_irreps` is empty (no symmetry information for this geometry) and the
/// irrep is requested.
SymmetryLabel classify(const SectorBasis& basis, const Eigen::VectorXcd& coeffs,
                       const std::vector<d2h::Irrep>& mo_irreps, bool require_irrep = true);

struct ClassifiedSpectrum {
  Eigen::VectorXd energies;
  Eigen::MatrixXd vectors;  // sector coefficients, columns
  std::vector<SymmetryLabel> labels;
};

/// Diagonalizes per irrep block (when symmetry is available), then resolves
/// S^2 within every group of eigenvalues closer than `degeneracy_tol`.
ClassifiedSpectrum classify_spectrum(const molint::SpinOrbitalHamiltonian& h,
                                     const SectorBasis& basis,
                                     const std::vector<d2h::Irrep>& mo_irreps,
                                     double degeneracy_tol = 1e-9);

/// Counts eigenstates per (irrep, 2S+1) cell; each sector eigenstate once.
std::map<std::pair<d2h::Irrep, int>, int> dimension_table(const ClassifiedSpectrum& spectrum);

/// `index,energy,S,irrep` rows with a header line.
std::string spectrum_csv(const ClassifiedSpectrum& spectrum);

}  // namespace escqe::fci
