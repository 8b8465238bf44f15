#include "escqe/residuals.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>

namespace escqe::residuals {

using secondq::Hermiticity;

void ProjectionSet::add(const StateVector& state, double energy) {
  if (!entries_.empty() && entries_.front().state.n_qubits() != state.n_qubits()) {
    throw DomainError("projection set qubit count mismatch");
  }
  for (size_t a = 0; a < entries_.size(); ++a) {
    double ov = std::abs(sim::inner_product(entries_[a].state, state));
    if (ov > tol_) spdlog::warn("projection entry {} overlaps entry {} by {:.3e}", entries_.size(), a, ov);
  }
  entries_.push_back({state, energy, sim::pair_annihilate(state.amplitudes(), state.n_qubits())});
}

double ProjectionSet::max_pair_overlap() const {
  double m = 0.0;
  for (size_t a = 0; a < entries_.size(); ++a)
    for (size_t b = a + 1; b < entries_.size(); ++b)
      m = std::max(m, std::abs(sim::inner_product(entries_[a].state, entries_[b].state)));
  return m;
}

Eigen::MatrixXcd Terms::omega(size_t a) const {
  Eigen::MatrixXcd y_a = y(a);
  return y_a - y_a.adjoint();
}

Terms evaluate_terms(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p) {
  const int n = psi.n_qubits();
  if (h.n_qubits() != n) throw DomainError("operator size does not match the state");
  Terms t;
  t.n = n;
  const Eigen::VectorXcd& v = psi.amplitudes();
  const Eigen::VectorXcd hv = h.apply(v);
  t.energy = v.dot(hv).real();
  t.h2 = hv.squaredNorm();
  const Eigen::MatrixXcd w = sim::pair_annihilate(v, n);
  const Eigen::MatrixXcd wh = sim::pair_annihilate(hv, n);
  t.d_psi = w.adjoint() * w;
  t.d_hpsi = wh.adjoint() * w;
  t.commutator = t.d_hpsi - t.d_hpsi.adjoint();  // D(ψ,Hψ) = D(Hψ,ψ)†
  t.norm = 1.0;
  for (const auto& e : p.entries()) {
    if (e.state.n_qubits() != n) throw DomainError("projection set qubit count mismatch");
    cplx o = e.state.amplitudes().dot(v);
    t.overlaps.push_back(o);
    t.norm -= std::norm(o);
    t.tdm.push_back(e.pairs.adjoint() * w);
  }
  return t;
}

double norm_N(const StateVector& psi, const ProjectionSet& p, double threshold) {
  double n = 1.0;
  for (const auto& e : p.entries()) n -= std::norm(sim::inner_product(e.state, psi));
  if (n < threshold) throw ProjectionCollapse(n);
  return n;
}

double projected_energy(const Terms& t, const ProjectionSet& p, double threshold) {
  if (t.norm < threshold) throw ProjectionCollapse(t.norm);
  double e = t.energy;
  for (size_t a = 0; a < p.size(); ++a) e -= p[a].energy * t.overlap_sq(a);
  return e / t.norm;
}

double projected_energy(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                        double threshold) {
  const double n = norm_N(psi, p, threshold);
  double e = sim::expectation(psi, h).real();
  for (const auto& entry : p.entries()) e -= entry.energy * std::norm(sim::inner_product(entry.state, psi));
  return e / n;
}

std::vector<double> overlap_constraints(const StateVector& psi, const ProjectionSet& p) {
  std::vector<double> c;
  for (const auto& e : p.entries()) c.push_back(1.0 - std::norm(sim::inner_product(e.state, psi)));
  return c;
}

ResidualTensor acpse_residual(const Terms& t, const ProjectionSet& p, double energy) {
  if (t.norm < kDefaultNormThreshold) throw ProjectionCollapse(t.norm);
  Eigen::MatrixXcd g = t.commutator;
  for (size_t a = 0; a < p.size(); ++a) g += (energy - p[a].energy) * t.omega(a);
  g /= t.norm;
  return {Flavor::ACPSE, TwoBodyCoefficients(t.n, std::move(g), Hermiticity::AntiHermitian), t.norm};
}

ResidualTensor cpse_residual(const Terms& t, const ProjectionSet& p, double energy) {
  if (t.norm < kDefaultNormThreshold) throw ProjectionCollapse(t.norm);
  Eigen::MatrixXcd g = t.d_hpsi - energy * t.d_psi;
  for (size_t a = 0; a < p.size(); ++a) g += (energy - p[a].energy) * t.y(a);
  g /= t.norm;
  return {Flavor::CPSE, TwoBodyCoefficients(t.n, std::move(g)), t.norm};
}

ResidualTensor deflated_residual(const Terms& t, const ProjectionSet& p, double shift) {
  Eigen::MatrixXcd g = t.commutator;
  for (size_t a = 0; a < p.size(); ++a) g -= (p[a].energy + shift) * t.omega(a);
  return {Flavor::Deflated, TwoBodyCoefficients(t.n, std::move(g), Hermiticity::AntiHermitian), t.norm};
}

ResidualTensor acpse_residual(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                              double energy) {
  return acpse_residual(evaluate_terms(psi, h, p), p, energy);
}

ResidualTensor cpse_residual(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                             double energy) {
  return cpse_residual(evaluate_terms(psi, h, p), p, energy);
}

ResidualTensor deflated_residual(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                                 double shift) {
  return deflated_residual(evaluate_terms(psi, h, p), p, shift);
}

double variance(const StateVector& psi, const QubitOperator& h) {
  const Eigen::VectorXcd hv = h.apply(psi.amplitudes());
  const double e = psi.amplitudes().dot(hv).real();
  return hv.squaredNorm() - e * e;
}

double directional_derivative(const TwoBodyCoefficients& m, const Eigen::MatrixXcd& g) {
  return (m.matrix().array() * g.array()).sum().real();
}

}  // namespace escqe::residuals
