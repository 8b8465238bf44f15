#include <doctest.h>

#include <random>

#include "escqe/fci.hpp"
#include "escqe/harness.hpp"
#include "escqe/residuals.hpp"
#include "oracles.hpp"

using namespace escqe;
using namespace escqe::residuals;
using secondq::Hermiticity;
using secondq::PairIndex;

namespace {

struct Fixture {
  harness::MolecularProblem problem = harness::build_problem(molint::Geometry::rectangle(1.5, 1.0));
  fci::ClassifiedSpectrum spectrum =
      fci::classify_spectrum(problem.hamiltonian, problem.sector, problem.mo_irreps);
  Eigen::MatrixXcd dense = problem.pauli.to_dense();

  StateVector eigenstate(int k) const {
    return StateVector::from_amplitudes(8, problem.sector.embed(Eigen::VectorXd(spectrum.vectors.col(k))));
  }
  ProjectionSet lowest(int k) const {
    ProjectionSet p;
    for (int a = 0; a < k; ++a) p.add(eigenstate(a), spectrum.energies(a));
    return p;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

StateVector random_sector(std::mt19937_64& rng) {
  return StateVector::from_amplitudes(8, oracle::random_sector_state(8, 2, 2, rng));
}

TwoBodyCoefficients random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  PairIndex pairs(8);
  Eigen::MatrixXcd m(pairs.size(), pairs.size());
  for (int p = 0; p < pairs.size(); ++p)
    for (int q = 0; q < pairs.size(); ++q) m(p, q) = cplx(g(rng), g(rng));
  return TwoBodyCoefficients(8, 0.5 * (m - m.adjoint()), Hermiticity::AntiHermitian);
}

// Dense projected energy of a raw vector.
double dense_projected(const Eigen::VectorXcd& v, const Eigen::MatrixXcd& h, const ProjectionSet& p) {
  double e = v.dot(h * v).real();
  double n = 1.0;
  for (const auto& a : p.entries()) {
    const double o = std::norm(a.state.amplitudes().dot(v));
    e -= a.energy * o;
    n -= o;
  }
  return e / n;
}

}  // namespace

TEST_CASE("projected norm") {
  const auto& f = fixture();
  std::mt19937_64 rng(71);
  const auto psi = random_sector(rng);
  CHECK(norm_N(psi, ProjectionSet{}) == 1.0);
  CHECK_THROWS_AS(norm_N(f.eigenstate(0), f.lowest(2)), ProjectionCollapse);
  CHECK(std::abs(norm_N(f.eigenstate(5), f.lowest(3)) - 1.0) < 1e-12);
  const auto c = overlap_constraints(f.eigenstate(1), f.lowest(2));
  CHECK(std::abs(c[0] - 1.0) < 1e-12);
  CHECK(std::abs(c[1]) < 1e-12);
}

TEST_CASE("projected energy") {
  const auto& f = fixture();
  std::mt19937_64 rng(73);
  const auto psi = random_sector(rng);
  const ProjectionSet empty;
  CHECK(std::abs(projected_energy(psi, f.problem.op, empty) - sim::expectation(psi, f.problem.op).real()) < 1e-12);
  for (int k : {1, 4, 9}) {
    const auto p = f.lowest(k);
    CHECK(std::abs(projected_energy(f.eigenstate(k), f.problem.op, p) - f.spectrum.energies(k)) < 1e-10);
    CHECK(std::abs(projected_energy(psi, f.problem.op, p) - dense_projected(psi.amplitudes(), f.dense, p)) < 1e-10);
    const auto t = evaluate_terms(psi, f.problem.op, p);
    CHECK(std::abs(projected_energy(t, p) - projected_energy(psi, f.problem.op, p)) < 1e-12);
  }
}

TEST_CASE("ACPSE residual without constraints is the energy commutator") {
  const auto& f = fixture();
  std::mt19937_64 rng(79);
  const auto psi = random_sector(rng);
  const ProjectionSet empty;
  const double e = sim::expectation(psi, f.problem.op).real();
  const auto r = acpse_residual(psi, f.problem.op, empty, e);
  PairIndex pairs(8);
  double worst = 0.0;
  for (int p = 0; p < pairs.size(); p += 3)
    for (int q = 0; q < pairs.size(); q += 2) {
      auto [i, k] = pairs[p];
      auto [j, l] = pairs[q];
      const Eigen::MatrixXcd g = oracle::gamma(i, k, l, j, 8);
      const cplx ref = psi.amplitudes().dot((f.dense * g - g * f.dense) * psi.amplitudes());
      worst = std::max(worst, std::abs(r.values.matrix()(p, q) - ref));
    }
  CHECK(worst < 1e-10);
}

TEST_CASE("ACPSE residual is the gradient of the projected energy") {
  const auto& f = fixture();
  std::mt19937_64 rng(83);
  for (int k : {0, 2, 5}) {
    const auto p = f.lowest(k);
    const auto psi = random_sector(rng);
    const auto t = evaluate_terms(psi, f.problem.op, p);
    const double e = projected_energy(t, p);
    const auto g = acpse_residual(t, p, e);
    double worst = 0.0;
    for (int d = 0; d < 7; ++d) {
      const auto m = random_direction(rng);
      const Eigen::MatrixXcd gen = secondq::two_body_to_pauli(m).to_dense();
      const double h = 1e-5;
      const Eigen::VectorXcd up = oracle::expm(h * gen) * psi.amplitudes();
      const Eigen::VectorXcd dn = oracle::expm(-h * gen) * psi.amplitudes();
      const double fd = (dense_projected(up, f.dense, p) - dense_projected(dn, f.dense, p)) / (2 * h);
      const double an = directional_derivative(m, g.values.matrix());
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
    CHECK(worst < 1e-5);
  }
}

TEST_CASE("CPSE and deflated residuals") {
  const auto& f = fixture();
  std::mt19937_64 rng(89);
  const auto p = f.lowest(3);
  const auto psi = random_sector(rng);
  const auto t = evaluate_terms(psi, f.problem.op, p);
  const double e = projected_energy(t, p);
  const auto a = acpse_residual(t, p, e);
  const auto c = cpse_residual(t, p, e);
  const auto ah = secondq::anti_hermitize(c.values);
  CHECK((2.0 * ah.matrix() - a.values.matrix()).cwiseAbs().maxCoeff() < 1e-12);

  // deflated residual differentiates <H> - Σ (E_α + shift)|<α|ψ>|²
  const double shift = 0.7;
  const auto dres = deflated_residual(t, p, shift);
  const auto m = random_direction(rng);
  const Eigen::MatrixXcd gen = secondq::two_body_to_pauli(m).to_dense();
  auto value = [&](const Eigen::VectorXcd& v) {
    double x = v.dot(f.dense * v).real();
    for (const auto& en : p.entries()) x -= (en.energy + shift) * std::norm(en.state.amplitudes().dot(v));
    return x;
  };
  const double h = 1e-5;
  const double fd = (value(oracle::expm(h * gen) * psi.amplitudes()) - value(oracle::expm(-h * gen) * psi.amplitudes())) / (2 * h);
  const double an = directional_derivative(m, dres.values.matrix());
  CHECK(std::abs(fd - an) / std::abs(an) < 1e-6);
}

TEST_CASE("stationarity of eigenstates") {
  const auto& f = fixture();
  for (int k : {0, 3, 7}) {
    const auto p = f.lowest(k);
    const auto r = acpse_residual(f.eigenstate(k), f.problem.op, p, f.spectrum.energies(k));
    CHECK(r.norm() < 1e-8);
  }
  // the quintet is the only state of its spin in this sector: stationary with empty P
  int quintet = -1;
  for (int k = 0; k < 36; ++k)
    if (f.spectrum.labels[k].spin && *f.spectrum.labels[k].spin == 2.0) quintet = k;
  REQUIRE(quintet >= 0);
  const auto q = f.eigenstate(quintet);
  CHECK(acpse_residual(q, f.problem.op, ProjectionSet{}, f.spectrum.energies(quintet)).norm() < 1e-10);
  CHECK(variance(q, f.problem.op) < 1e-10);
}

TEST_CASE("projection set bookkeeping") {
  const auto& f = fixture();
  auto p = f.lowest(3);
  CHECK(p.size() == 3);
  CHECK(p.max_pair_overlap() < 1e-12);
  p.add(f.eigenstate(0), f.spectrum.energies(0));  // logged, still appended
  CHECK(p.size() == 4);
  CHECK(std::abs(p.max_pair_overlap() - 1.0) < 1e-12);
}
