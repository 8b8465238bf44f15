#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>

#include "escqe/error.hpp"
#include "escqe/statevector.hpp"
#include "oracles.hpp"

using namespace escqe;
using namespace escqe::sim;
using secondq::Hermiticity;
using secondq::PairIndex;

namespace {

PauliWord random_word(int n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, 3);
  std::string s;
  for (int q = 0; q < n; ++q) s += "IXYZ"[pick(rng)];
  return PauliWord::parse(s);
}

StateVector random_sv(int n, std::mt19937_64& rng) {
  return StateVector::from_amplitudes(n, oracle::random_state(std::uint64_t{1} << n, rng));
}

StateVector random_sector_sv(int n, int na, int nb, std::mt19937_64& rng) {
  return StateVector::from_amplitudes(n, oracle::random_sector_state(n, na, nb, rng));
}

TwoBodyCoefficients random_anti(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g;
  PairIndex pairs(n);
  Eigen::MatrixXcd m(pairs.size(), pairs.size());
  for (int p = 0; p < pairs.size(); ++p)
    for (int q = 0; q < pairs.size(); ++q)
      m(p, q) = pairs.alpha_count(p) == pairs.alpha_count(q) ? scale * cplx(g(rng), g(rng)) : cplx{};
  return TwoBodyCoefficients(n, 0.5 * (m - m.adjoint()), Hermiticity::AntiHermitian);
}

GadgetSequence random_sequence(int n, int len, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-1.0, 1.0);
  GadgetSequence s;
  s.n_qubits = n;
  for (int i = 0; i < len; ++i) s.gadgets.push_back({random_word(n, rng), a(rng)});
  return s;
}

}  // namespace

TEST_CASE("gadgets match the dense exponential") {
  std::mt19937_64 rng(29);
  auto psi = StateVector::basis(1, 0);
  apply_gadget(psi, PauliWord::parse("Z"), 0.4);
  CHECK(std::abs(psi[0] - std::exp(cplx(0, 0.4))) < 1e-15);

  auto same = random_sv(4, rng);
  auto copy = same;
  apply_gadget(copy, random_word(4, rng), 0.0);
  CHECK((copy.amplitudes() - same.amplitudes()).norm() < 1e-15);

  for (int t = 0; t < 20; ++t) {
    const auto w = random_word(5, rng);
    const double th = std::uniform_real_distribution<double>(-3, 3)(rng);
    auto s = random_sv(5, rng);
    const Eigen::MatrixXcd p = secondq::PauliSum::term(5, w, 1.0).to_dense();
    const Eigen::MatrixXcd u = std::cos(th) * Eigen::MatrixXcd::Identity(32, 32) + cplx(0, std::sin(th)) * p;
    Eigen::VectorXcd expect = u * s.amplitudes();
    apply_gadget(s, w, th);
    CHECK((s.amplitudes() - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((pauli_action(expect, w) - p * expect).norm() < 1e-12);
  }
}

TEST_CASE("long gadget sequences stay unitary") {
  std::mt19937_64 rng(31);
  auto s = random_sv(6, rng);
  apply_sequence(s, random_sequence(6, 10000, rng));
  CHECK(std::abs(s.norm() - 1.0) < 1e-10);
}

TEST_CASE("two-body steps") {
  std::mt19937_64 rng(37);
  auto s = random_sector_sv(6, 2, 1, rng);
  TwoBodyCoefficients zero(6, Hermiticity::AntiHermitian);
  auto copy = s;
  CHECK(apply_two_body_step(copy, zero, 0.3).empty());
  CHECK((copy.amplitudes() - s.amplitudes()).norm() < 1e-15);

  // a real or imaginary excitation term is exponentiated exactly
  PairIndex pairs(6);
  const int p = pairs(0, 2), q = pairs(1, 3);
  for (cplx c : {cplx(0.4, 0.0), cplx(0.0, 0.2)}) {
    TwoBodyCoefficients one(6, Hermiticity::AntiHermitian);
    one.matrix()(p, q) = c;
    one.matrix()(q, p) = -std::conj(c);
    CHECK(secondq::two_body_terms_to_pauli(one).size() == 1);
    for (double eps : {1e-3, 0.7}) {
      auto t = s;
      apply_two_body_step(t, one, eps);
      const Eigen::MatrixXcd m = secondq::two_body_to_pauli(one).to_dense();
      Eigen::VectorXcd expect = oracle::expm(eps * m) * s.amplitudes();
      CHECK((t.amplitudes() - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
  }

  // random Sz-conserving generator: unitary, and particle number and Sz are conserved
  auto u = s;
  apply_two_body_step(u, random_anti(6, rng), 0.1);
  CHECK(std::abs(u.norm() - 1.0) < 1e-12);
  const auto n_op = secondq::number_operator(6);
  const auto sz_op = secondq::sz_operator(6);
  CHECK(std::abs(expectation(u, n_op) - 3.0) < 1e-12);
  CHECK(std::abs(expectation(u, sz_op) - 0.5) < 1e-12);
  double leak = 0.0;
  const Eigen::VectorXcd nu = QubitOperator(n_op).apply(u.amplitudes()) - 3.0 * u.amplitudes();
  leak = nu.norm();
  CHECK(leak < 1e-12);
}

TEST_CASE("Trotter defect is second order") {
  std::mt19937_64 rng(41);
  const auto a = random_anti(6, rng, 0.5);
  const auto s = random_sector_sv(6, 2, 2, rng);
  const Eigen::MatrixXcd m = oracle::traceless(secondq::two_body_to_pauli(a).to_dense());
  std::vector<double> ratio;
  for (double eps : {1e-1, 5e-2, 2.5e-2}) {
    auto t = s;
    apply_two_body_step(t, a, eps);
    const Eigen::VectorXcd exact = oracle::expm(eps * m) * s.amplitudes();
    ratio.push_back((t.amplitudes() - exact).norm() / (eps * eps));
  }
  CHECK(ratio[0] > 1e-6);
  CHECK(std::abs(ratio[1] / ratio[0] - 1.0) < 0.2);
  CHECK(std::abs(ratio[2] / ratio[0] - 1.0) < 0.2);
}

TEST_CASE("trotter_sequence rejects Hermitian parts") {
  secondq::PauliSum h = secondq::PauliSum::term(2, PauliWord::parse("XY"), 1.0);
  CHECK_THROWS_AS(trotter_sequence(h, 0.1), SymmetryError);
  TwoBodyCoefficients general(4, Hermiticity::General);
  auto s = StateVector::basis(4, 3);
  CHECK_THROWS_AS(apply_two_body_step(s, general, 0.1), SymmetryError);
}

TEST_CASE("expectations and inner products") {
  std::mt19937_64 rng(43);
  CHECK(std::abs(expectation(StateVector::basis(3, 5), secondq::PauliSum::identity(3)) - 1.0) < 1e-15);
  CHECK(std::abs(expectation(StateVector::basis(1, 1), secondq::PauliSum::term(1, PauliWord::parse("Z"), 1.0)) + 1.0) < 1e-15);
  std::normal_distribution<double> g;
  secondq::PauliSum op(4);
  for (int t = 0; t < 10; ++t) op.add(random_word(4, rng), cplx(g(rng), g(rng)));
  const auto s = random_sv(4, rng);
  const cplx ref = s.amplitudes().dot(op.to_dense() * s.amplitudes());
  CHECK(std::abs(expectation(s, op) - ref) < 1e-12);
  CHECK(std::abs(expectation(s, QubitOperator(op)) - ref) < 1e-12);
  const auto b = random_sv(4, rng);
  CHECK(std::abs(inner_product(s, s) - 1.0) < 1e-14);
  CHECK(std::abs(inner_product(StateVector::basis(4, 1), StateVector::basis(4, 2))) == 0.0);
  CHECK(std::abs(inner_product(s, b) - std::conj(inner_product(b, s))) < 1e-15);
  CHECK_THROWS_AS(StateVector::from_amplitudes(2, Eigen::VectorXcd::Ones(4)), DomainError);
}

TEST_CASE("transition 2-RDMs") {
  std::mt19937_64 rng(47);
  const int n = 6;
  const auto a = random_sector_sv(n, 2, 1, rng);
  const auto b = random_sector_sv(n, 2, 1, rng);
  const auto d = transition_2rdm(a, b);
  PairIndex pairs(n);
  double worst = 0.0;
  for (int p = 0; p < pairs.size(); ++p)
    for (int q = 0; q < pairs.size(); ++q) {
      auto [i, k] = pairs[p];
      auto [j, l] = pairs[q];
      cplx ref = a.amplitudes().dot(oracle::gamma(i, k, l, j, n) * b.amplitudes());
      worst = std::max(worst, std::abs(d.matrix()(p, q) - ref));
    }
  CHECK(worst < 1e-10);
  // trace of the 2-RDM is N(N-1)/2 over canonical pairs
  CHECK(std::abs(transition_2rdm(a, a).matrix().trace() - 3.0) < 1e-12);
  // different particle numbers give zero
  const auto c = random_sector_sv(n, 1, 1, rng);
  CHECK(transition_2rdm(a, c).norm() < 1e-15);
}

TEST_CASE("ancilla overlap and TDM circuits") {
  std::mt19937_64 rng(53);
  const int n = 6;
  const auto init = random_sector_sv(n, 2, 1, rng);
  const auto seq = random_sequence(n, 40, rng);
  auto pair = controlled_pair_circuit(seq, init, seq, init);
  CHECK(std::abs(ancilla_overlap(pair) - 1.0) < 1e-12);

  GadgetSequence empty;
  empty.n_qubits = n;
  auto orth = controlled_pair_circuit(empty, StateVector::basis(n, 3), empty, StateVector::basis(n, 5));
  CHECK(std::abs(ancilla_overlap(orth)) < 1e-14);

  for (int t = 0; t < 5; ++t) {
    const auto ik = random_sector_sv(n, 2, 1, rng), ij = random_sector_sv(n, 2, 1, rng);
    const auto sk = random_sequence(n, 25, rng), sj = random_sequence(n, 17, rng);
    auto psi_k = ik, psi_j = ij;
    apply_sequence(psi_k, sk);
    apply_sequence(psi_j, sj);
    const auto circ = controlled_pair_circuit(sk, ik, sj, ij);
    CHECK(circ.n_qubits() == n + 1);
    CHECK(std::abs(ancilla_overlap(circ) - inner_product(psi_j, psi_k)) < 1e-12);
    const auto d = transition_2rdm(psi_j, psi_k);
    CHECK(std::abs(controlled_pair_tdm(circ, 0, 3, 2, 1) - d(0, 3, 1, 2)) < 1e-12);
    CHECK(std::abs(controlled_pair_tdm(circ, 2, 4, 4, 2) - d(2, 4, 2, 4)) < 1e-12);
    CHECK(std::abs(controlled_pair_tdm(circ, 1, 5, 3, 0) - d(1, 5, 0, 3)) < 1e-12);
  }
  // identical branches reproduce the 2-RDM
  auto psi = init;
  apply_sequence(psi, seq);
  CHECK(std::abs(controlled_pair_tdm(pair, 0, 2, 2, 0) - transition_2rdm(psi, psi)(0, 2, 0, 2)) < 1e-12);
}

TEST_CASE("snapshots round trip") {
  std::mt19937_64 rng(59);
  const auto s = random_sv(5, rng);
  const auto path = (std::filesystem::temp_directory_path() / "escqe_snapshot.bin").string();
  write_snapshot(path, s);
  const auto back = read_snapshot(path);
  CHECK(back.n_qubits() == 5);
  CHECK((back.amplitudes() - s.amplitudes()).norm() == 0.0);
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "NOTASNAPSHOT";
  }
  CHECK_THROWS_AS(read_snapshot(path), ParseError);
  std::filesystem::remove(path);
}

TEST_CASE("shot sampling converges to the exact value") {
  std::mt19937_64 rng(61);
  const auto s = random_sv(3, rng);
  const auto w = PauliWord::parse("XZY");
  const double exact = expectation(s, secondq::PauliSum::term(3, w, 1.0)).real();
  ShotSampler few(100, 1), many(1000000, 1);
  CHECK(std::abs(many.estimate(s, w) - exact) < 5e-3);
  ShotSampler again(100, 1);
  CHECK(few.estimate(s, w) == again.estimate(s, w));
}
