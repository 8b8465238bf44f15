#pragma once

// Minimal-basis molecular integrals for hydrogen clusters, closed-shell SCF,
// spin-orbital Hamiltonian construction and FCIDUMP interchange.

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace escqe::molint {

inline constexpr double kBohrPerAngstrom = 1.8897261246;

struct Atom {
  std::string symbol;
  Eigen::Vector3d position;  // Angstrom
};

struct Geometry {
  std::vector<Atom> atoms;
  int charge = 0;
  int multiplicity = 1;
  std::string comment;

  /// Parses XYZ text: atom count, comment line, then `El x y z` in Angstrom.
  static Geometry from_xyz(std::string_view text);
  std::string to_xyz() const;

  /// Rectangle in the xy-plane centred at the origin, `side_x` along x.
  static Geometry rectangle(double side_x, double side_y);
  /// Diatomic along z centred at the origin.
  static Geometry diatomic(double bond_angstrom);

  Geometry translated(const Eigen::Vector3d& shift) const;
  Geometry rotated(const Eigen::Matrix3d& rotation) const;
  int nuclear_charge() const;
  void validate() const;
};

struct Primitive {
  double exponent;     // 1/Bohr^2
  double coefficient;  // multiplies a normalized primitive
};

/// Contracted s-type Gaussian. Coefficients are rescaled at construction so
/// the contracted function has unit self-overlap.
class ContractedGaussian {
 public:
  ContractedGaussian(Eigen::Vector3d center_bohr,
                     std::vector<Primitive> primitives);

  const Eigen::Vector3d& center() const { return center_; }
  const std::vector<Primitive>& primitives() const { return primitives_; }
  /// Value at a point given in Bohr.
  double operator()(const Eigen::Vector3d& r) const;

 private:
  Eigen::Vector3d center_;
  std::vector<Primitive> primitives_;
};

/// Shell data for one element of a basis set (s shells only).
struct ElementBasis {
  int atomic_number = 0;
  std::vector<std::vector<Primitive>> s_shells;  // unnormalized-primitive coeffs
};

/// Loads the bundled basis-set data. Only "sto-3g" ships with the library.
ElementBasis element_basis(std::string_view basis, std::string_view symbol);
std::string basis_data_version(std::string_view basis);

/// 4-index tensor with dense storage; real chemists' notation for IntegralSet.
class Eri {
 public:
  Eri() = default;
  explicit Eri(int n) : n_(n), data_(static_cast<size_t>(n) * n * n * n, 0.0) {}
  int dim() const { return n_; }
  double& operator()(int p, int q, int r, int s) { return data_[index(p, q, r, s)]; }
  double operator()(int p, int q, int r, int s) const { return data_[index(p, q, r, s)]; }
  /// Sets all eight permutation-equivalent entries of (pq|rs).
  void set_symmetric(int p, int q, int r, int s, double v);
  const std::vector<double>& data() const { return data_; }

 private:
  size_t index(int p, int q, int r, int s) const {
    return ((static_cast<size_t>(p) * n_ + q) * n_ + r) * n_ + s;
  }
  int n_ = 0;
  std::vector<double> data_;
};

struct IntegralSet {
  Eigen::MatrixXd overlap;
  Eigen::MatrixXd hcore;
  Eri eri;  // (pq|rs)
  double enuc = 0.0;

  int nbasis() const { return static_cast<int>(hcore.rows()); }
  /// Transforms to the orbital basis spanned by the columns of `coeffs`.
  IntegralSet transformed(const Eigen::MatrixXd& coeffs) const;
};

/// F0(x) = int_0^1 exp(-x t^2) dt.
double boys_f0(double x);

std::vector<ContractedGaussian> basis_functions(const Geometry& geometry,
                                                std::string_view basis = "sto-3g");
IntegralSet build_integrals(const Geometry& geometry,
                            std::string_view basis = "sto-3g");

/// Representation of the D2h generators (C2z, C2y, inversion) on the AO
/// space as signed permutations. Empty when the geometry lacks the symmetry.
struct AoSymmetry {
  std::array<Eigen::MatrixXd, 3> generators;
};
std::optional<AoSymmetry> ao_symmetry(const Geometry& geometry,
                                      double tolerance_angstrom = 1e-6);

struct ScfOptions {
  int max_cycles = 200;
  double convergence = 1e-9;  // max-norm of FDS - SDF
  int diis_history = 8;
  double damping = 0.3;       // applied to the density before DIIS starts
  int diis_start = 2;
  std::optional<AoSymmetry> symmetry;
};

struct RhfResult {
  Eigen::MatrixXd coefficients;  // columns are MOs
  Eigen::VectorXd orbital_energies;
  double energy = 0.0;
  int iterations = 0;
  double commutator_norm = 0.0;
  /// Irrep index per MO (see fci.hpp for labels), when symmetry was supplied.
  std::vector<int> irreps;
};

RhfResult rhf(const IntegralSet& integrals, int n_electrons,
              const ScfOptions& options = {});
/// Starts from `guess` orbitals instead of the core Hamiltonian.
RhfResult rhf(const IntegralSet& integrals, int n_electrons,
              const Eigen::MatrixXd& guess, const ScfOptions& options = {});

/// Dense real 4-index tensor over spin orbitals.
using Tensor4 = Eri;

struct SpinOrbitalHamiltonian {
  int n_spin_orbitals = 0;
  Eigen::MatrixXd k1;  // one-body
  Tensor4 v2;          // <pr||qs>, indexed v2(p, r, q, s)
  double enuc = 0.0;

  int n_spatial() const { return n_spin_orbitals / 2; }
};

/// Interleaved ordering: spatial orbital p maps to 2p (alpha) and 2p+1 (beta).
inline constexpr int spin_orbital(int spatial, int spin) { return 2 * spatial + spin; }

SpinOrbitalHamiltonian to_spin_orbitals(const IntegralSet& integrals,
                                        const Eigen::MatrixXd& mo_coeffs);
/// Integrals already expressed in an orthonormal orbital basis.
SpinOrbitalHamiltonian to_spin_orbitals(const IntegralSet& mo_integrals);

/// Energy of a determinant given its occupied spin orbitals.
double determinant_energy(const SpinOrbitalHamiltonian& h,
                          const std::vector<int>& occupied);

struct FcidumpData {
  IntegralSet integrals;  // orbital basis; overlap is the identity
  int norb = 0;
  int nelec = 0;
  int ms2 = 0;
  int isym = 1;
  std::vector<int> orbsym;
};

FcidumpData read_fcidump(const std::string& path);
FcidumpData parse_fcidump(std::string_view text);
std::string format_fcidump(const FcidumpData& data, double threshold = 1e-14);
void write_fcidump(const std::string& path, const FcidumpData& data);

}  // namespace escqe::molint
