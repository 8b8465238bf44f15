#pragma once

// Projected energies, overlap constraints and contracted residuals for a
// trial state against a set of previously found states.
//
// All two-body tensors use the canonical pair-matrix layout of
// TwoBodyCoefficients: entry (P, Q) multiplies Γ(i,k,l,j), P=(i<k), Q=(j<l).
// A directional derivative along an anti-Hermitian direction M is
// Σ_PQ M_PQ G_PQ for a residual G.

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "escqe/error.hpp"
#include "escqe/secondq.hpp"
#include "escqe/statevector.hpp"

namespace escqe::residuals {

using cplx = std::complex<double>;
using secondq::TwoBodyCoefficients;
using sim::QubitOperator;
using sim::StateVector;

inline constexpr double kDefaultNormThreshold = 1e-6;

/// Raised when 1 - Σ|<ψ|α>|² drops below the threshold, i.e. the trial state
/// lies (almost) entirely inside the span of the projection set.
class ProjectionCollapse : public Error {
 public:
  ProjectionCollapse(double norm)
      : Error("projected norm below threshold"), norm_(norm) {}
  double norm() const noexcept { return norm_; }

 private:
  double norm_;
};

struct ProjectedEntry {
  StateVector state;
  double energy = 0.0;
  Eigen::MatrixXcd pairs;  // pair_annihilate(state), cached
};

class ProjectionSet {
 public:
  ProjectionSet() = default;
  explicit ProjectionSet(double overlap_tolerance) : tol_(overlap_tolerance) {}

  /// Appends a state; overlaps with existing entries above the tolerance are
  /// logged, not rejected.
  void add(const StateVector& state, double energy);
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const ProjectedEntry& operator[](size_t i) const { return entries_[i]; }
  const std::vector<ProjectedEntry>& entries() const { return entries_; }
  double overlap_tolerance() const { return tol_; }
  /// Largest |<α|β>| over distinct entries.
  double max_pair_overlap() const;

 private:
  double tol_ = 1e-4;
  std::vector<ProjectedEntry> entries_;
};

/// Everything the residual formulas need, computed in one pass.
struct Terms {
  int n = 0;
  double energy = 0.0;        // <ψ|H|ψ>
  double h2 = 0.0;            // <ψ|H²|ψ>
  std::vector<cplx> overlaps;  // o_α = <α|ψ>
  double norm = 1.0;           // 1 - Σ|o_α|²
  Eigen::MatrixXcd d_hpsi;     // D(Hψ, ψ)
  Eigen::MatrixXcd d_psi;      // D(ψ, ψ), the 2-RDM
  Eigen::MatrixXcd commutator; // <ψ|[H,Γ]|ψ>
  std::vector<Eigen::MatrixXcd> tdm;  // D(α, ψ) = <α|Γ|ψ>

  double overlap_sq(size_t a) const { return std::norm(overlaps[a]); }
  /// Y_α = <ψ|α><α|Γ|ψ>.
  Eigen::MatrixXcd y(size_t a) const { return std::conj(overlaps[a]) * tdm[a]; }
  /// d|<α|ψ>|² = Σ M Ω_α, Ω_α = Y_α - Y_α†.
  Eigen::MatrixXcd omega(size_t a) const;
};

Terms evaluate_terms(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p);

double norm_N(const StateVector& psi, const ProjectionSet& p,
              double threshold = kDefaultNormThreshold);
/// (<H> - Σ E_α |<ψ|α>|²) / N.
double projected_energy(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                        double threshold = kDefaultNormThreshold);
double projected_energy(const Terms& t, const ProjectionSet& p,
                        double threshold = kDefaultNormThreshold);
/// c_α = 1 - |<ψ|α>|².
std::vector<double> overlap_constraints(const StateVector& psi, const ProjectionSet& p);

enum class Flavor { CPSE, ACPSE, Deflated };

struct ResidualTensor {
  Flavor flavor = Flavor::ACPSE;
  TwoBodyCoefficients values;
  double norm_n = 1.0;  // the projected norm the values were divided by

  double norm() const { return values.norm(); }
};

/// [comm + Σ (E - E_α) Ω_α] / N.
ResidualTensor acpse_residual(const Terms& t, const ProjectionSet& p, double energy);
ResidualTensor acpse_residual(const StateVector& psi, const QubitOperator& h,
                              const ProjectionSet& p, double energy);
/// [D(Hψ,ψ) - E D(ψ,ψ) + Σ (E - E_α) Y_α] / N; its anti-Hermitian part,
/// scaled by two, is the ACPSE residual.
ResidualTensor cpse_residual(const Terms& t, const ProjectionSet& p, double energy);
ResidualTensor cpse_residual(const StateVector& psi, const QubitOperator& h,
                             const ProjectionSet& p, double energy);
/// comm - Σ c_α Ω_α with shifted energies c_α = E_α + shift: the derivative of
/// <H> - Σ c_α |<ψ|α>|².
ResidualTensor deflated_residual(const Terms& t, const ProjectionSet& p, double shift = 0.0);
ResidualTensor deflated_residual(const StateVector& psi, const QubitOperator& h,
                                 const ProjectionSet& p, double shift = 0.0);

double variance(const StateVector& psi, const QubitOperator& h);

/// Σ_PQ M_PQ G_PQ, real for anti-Hermitian M and G.
double directional_derivative(const TwoBodyCoefficients& direction, const Eigen::MatrixXcd& gradient);

}  // namespace escqe::residuals
