#include <doctest.h>

#include <random>

#include "escqe/error.hpp"
#include "escqe/molint.hpp"
#include "escqe/secondq.hpp"
#include "oracles.hpp"

using namespace escqe;
using namespace escqe::secondq;

namespace {

double max_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) { return (a - b).cwiseAbs().maxCoeff(); }

TwoBodyCoefficients random_two_body(int n, std::mt19937_64& rng, Hermiticity h) {
  std::normal_distribution<double> g;
  PairIndex pairs(n);
  Eigen::MatrixXcd m(pairs.size(), pairs.size());
  for (int p = 0; p < pairs.size(); ++p)
    for (int q = 0; q < pairs.size(); ++q) m(p, q) = cplx(g(rng), g(rng));
  if (h == Hermiticity::AntiHermitian) m = 0.5 * (m - m.adjoint()).eval();
  return TwoBodyCoefficients(n, m, h);
}

}  // namespace

TEST_CASE("Pauli words") {
  const auto w = PauliWord::parse("XIYZ");
  CHECK(w.str(4) == "XIYZ");
  CHECK(w.letter(0) == 'Z');
  CHECK(w.letter(1) == 'Y');
  CHECK(w.letter(3) == 'X');
  CHECK(w.weight() == 3);
  auto [ph, prod] = multiply(PauliWord::parse("X"), PauliWord::parse("Y"));
  CHECK(prod.str(1) == "Z");
  CHECK(std::abs(ph - cplx(0, 1)) < 1e-15);
  PauliWordLess less;
  CHECK(less(PauliWord::parse("IX"), PauliWord::parse("XI")));
  CHECK(less(PauliWord::parse("XZ"), PauliWord::parse("YI")));
}

TEST_CASE("PauliSum products match dense matrices") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  const char letters[] = "IXYZ";
  std::uniform_int_distribution<int> pick(0, 3);
  auto random_sum = [&] {
    PauliSum s(3);
    for (int t = 0; t < 6; ++t) {
      std::string txt;
      for (int q = 0; q < 3; ++q) txt += letters[pick(rng)];
      s.add(PauliWord::parse(txt), cplx(g(rng), g(rng)));
    }
    return s;
  };
  auto a = random_sum(), b = random_sum();
  CHECK(max_diff((a * b).to_dense(), a.to_dense() * b.to_dense()) < 1e-12);
  CHECK(max_diff(a.adjoint().to_dense(), a.to_dense().adjoint()) < 1e-12);
  CHECK(PauliSum::parse_dump((a + a.adjoint()).dump()).to_dense().isApprox((a + a.adjoint()).to_dense(), 1e-9));
}

TEST_CASE("Jordan-Wigner ladder operators") {
  const auto c = jw_fermion_op(Ladder::Create, 0, 1);
  CHECK(c.size() == 2);
  CHECK(std::abs(c.coefficient(PauliWord::parse("X")) - cplx(0.5, 0)) < 1e-15);
  CHECK(std::abs(c.coefficient(PauliWord::parse("Y")) - cplx(0, -0.5)) < 1e-15);

  const auto a0 = jw_fermion_op(Ladder::Annihilate, 0, 1);
  auto anti = c * a0 + a0 * c;
  anti.simplify();
  CHECK(anti.size() == 1);
  CHECK(std::abs(anti.coefficient(PauliWord{}) - 1.0) < 1e-15);

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> pick(0, 7);
  for (int t = 0; t < 5; ++t) {
    int p = pick(rng);
    auto sq = jw_fermion_op(Ladder::Create, p, 8) * jw_fermion_op(Ladder::Create, p, 8);
    CHECK(sq.simplify().empty());
  }
  for (int p = 0; p < 4; ++p) {
    CHECK(max_diff(jw_fermion_op(Ladder::Annihilate, p, 4).to_dense(), oracle::annihilator(p, 4)) < 1e-14);
    for (int q = 0; q < 4; ++q) {
      auto ac = jw_fermion_op(Ladder::Annihilate, p, 4) * jw_fermion_op(Ladder::Create, q, 4) +
                jw_fermion_op(Ladder::Create, q, 4) * jw_fermion_op(Ladder::Annihilate, p, 4);
      ac.simplify();
      if (p == q) CHECK(std::abs(ac.coefficient(PauliWord{}) - 1.0) < 1e-15);
      else CHECK(ac.empty());
    }
  }
}

TEST_CASE("two-body excitation operators against the Fock oracle") {
  CHECK(gamma_op(1, 1, 2, 3, 4).empty());
  // ⟨1100|Γ(0,1,1,0)|1100⟩ = 1 with orbitals 0 and 1 occupied
  const auto n01 = gamma_op(0, 1, 1, 0, 4).to_dense();
  CHECK(std::abs(n01(0b0011, 0b0011) - 1.0) < 1e-15);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> pick(0, 7);
  double worst = 0.0;
  for (int t = 0; t < 12; ++t) {
    int i = pick(rng), k = pick(rng), l = pick(rng), j = pick(rng);
    worst = std::max(worst, max_diff(gamma_op(i, k, l, j, 8).to_dense(), oracle::gamma(i, k, l, j, 8)));
  }
  CHECK(worst < 1e-12);
  const auto& table = gamma_table(6);
  const auto& pairs = table.pairs();
  for (int p = 0; p < pairs.size(); p += 5)
    for (int q = 0; q < pairs.size(); q += 4) {
      auto [i, k] = pairs[p];
      auto [j, l] = pairs[q];
      CHECK(max_diff(table.gamma(p, q).to_dense(), oracle::gamma(i, k, l, j, 6)) < 1e-12);
    }
}

TEST_CASE("pair index and alpha counts") {
  PairIndex pairs(8);
  CHECK(pairs.size() == 28);
  CHECK(pairs(0, 1) == 0);
  auto [i, k] = pairs[pairs(2, 5)];
  CHECK(i == 2);
  CHECK(k == 5);
  CHECK(pairs.alpha_count(pairs(0, 2)) == 2);
  CHECK(pairs.alpha_count(pairs(0, 1)) == 1);
  CHECK(pairs.alpha_count(pairs(1, 3)) == 0);
}

TEST_CASE("two-body coefficients") {
  std::mt19937_64 rng(13);
  TwoBodyCoefficients zero(4, Hermiticity::AntiHermitian);
  CHECK(two_body_to_pauli(zero).empty());

  TwoBodyCoefficients single(4, Hermiticity::General);
  single.set(0, 1, 2, 3, cplx(0.3, 0.1));
  CHECK(single(1, 0, 2, 3) == -cplx(0.3, 0.1));
  CHECK(single(1, 0, 3, 2) == cplx(0.3, 0.1));
  CHECK(single(2, 2, 0, 1) == cplx{});
  CHECK(max_diff(two_body_to_pauli(single).to_dense(), cplx(0.3, 0.1) * oracle::gamma(0, 1, 3, 2, 4)) < 1e-14);

  const auto a = random_two_body(6, rng, Hermiticity::AntiHermitian);
  const auto dense = two_body_to_pauli(a).to_dense();
  CHECK(max_diff(dense.adjoint(), -dense) < 1e-12);

  Eigen::MatrixXcd bad = Eigen::MatrixXcd::Ones(6, 6);
  CHECK_THROWS_AS(TwoBodyCoefficients(4, bad, Hermiticity::AntiHermitian).validate(), SymmetryError);

  std::vector<cplx> full(4 * 4 * 4 * 4, cplx{});
  full[((0 * 4 + 1) * 4 + 2) * 4 + 3] = 1.0;  // not antisymmetric
  CHECK_THROWS_AS(TwoBodyCoefficients::from_full(4, full), SymmetryError);
}

TEST_CASE("excitation groups reproduce the full expansion") {
  std::mt19937_64 rng(17);
  const auto a = random_two_body(6, rng, Hermiticity::AntiHermitian);
  PauliSum sum(6);
  for (const auto& t : two_body_terms_to_pauli(a)) {
    sum += t;
    // words inside a group commute
    for (const auto& [w1, c1] : t.terms())
      for (const auto& [w2, c2] : t.terms()) {
        auto [p12, x] = multiply(w1, w2);
        auto [p21, y] = multiply(w2, w1);
        CHECK(std::abs(p12 - p21) < 1e-15);
      }
  }
  CHECK(max_diff(sum.to_dense(), two_body_to_pauli(a).to_dense()) < 1e-12);
}

TEST_CASE("anti-Hermitian projection") {
  std::mt19937_64 rng(19);
  const auto j = random_two_body(6, rng, Hermiticity::General);
  const auto once = anti_hermitize(j);
  const auto twice = anti_hermitize(once);
  CHECK((once.matrix() - twice.matrix()).cwiseAbs().maxCoeff() < 1e-14);
  TwoBodyCoefficients herm(6, 0.5 * (j.matrix() + j.matrix().adjoint()));
  CHECK(anti_hermitize(herm).norm() < 1e-14);
  const auto ah = random_two_body(6, rng, Hermiticity::AntiHermitian);
  CHECK((anti_hermitize(ah).matrix() - ah.matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("qubit Hamiltonian against the Fock oracle") {
  std::mt19937_64 rng(23);
  const auto h = oracle::random_hamiltonian(4, rng);
  const auto ps = assemble_hamiltonian(h);
  CHECK(ps.is_hermitian());
  CHECK(max_diff(ps.to_dense(), oracle::hamiltonian(h)) < 1e-10);

  // one spatial orbital, V2 = 0: ε (n0 + n1)
  molint::SpinOrbitalHamiltonian one;
  one.n_spin_orbitals = 2;
  one.k1 = Eigen::MatrixXd::Identity(2, 2) * -0.4;
  one.v2 = molint::Tensor4(2);
  const auto p1 = assemble_hamiltonian(one);
  CHECK(p1.size() == 3);
  CHECK(std::abs(p1.coefficient(PauliWord{}) - cplx(-0.4)) < 1e-15);
  CHECK(std::abs(p1.coefficient(PauliWord::parse("IZ")) - cplx(0.2)) < 1e-15);
  CHECK(std::abs(p1.coefficient(PauliWord::parse("ZI")) - cplx(0.2)) < 1e-15);
}

TEST_CASE("spin and number operators") {
  const auto n = number_operator(4).to_dense();
  const auto sz = sz_operator(4).to_dense();
  const auto s2 = s2_operator(4).to_dense();
  CHECK(std::abs(n(0b1011, 0b1011) - 3.0) < 1e-14);
  CHECK(std::abs(sz(0b0101, 0b0101) - 1.0) < 1e-14);   // two alpha electrons
  CHECK(std::abs(s2(0b0101, 0b0101) - 2.0) < 1e-14);   // triplet M=1
  CHECK(max_diff(s2 * sz, sz * s2) < 1e-12);
}
