#include <doctest.h>

#include <set>

#include "escqe/error.hpp"
#include "escqe/harness.hpp"
#include "escqe/refstates.hpp"

using namespace escqe;
using namespace escqe::refstates;

namespace {

const sim::QubitOperator& s2_op(int n) {
  static std::map<int, sim::QubitOperator> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, sim::QubitOperator(secondq::s2_operator(n))).first;
  return it->second;
}

double s2_of(const sim::StateVector& v) { return sim::expectation(v, s2_op(v.n_qubits())).real(); }
double sz_of(const sim::StateVector& v) {
  return sim::expectation(v, secondq::sz_operator(v.n_qubits())).real();
}

}  // namespace

TEST_CASE("spec strings round trip") {
  for (std::string s : {"det:0,1,4,5", "csf:2110:+-", "csf:1111:++--", "csf:2200:", "csf:1111:++++:m=1"}) {
    CHECK(spec_string(parse_spec(s)) == s);
  }
  CHECK_THROWS_AS(parse_spec("foo:1"), ParseError);
  CHECK_THROWS_AS(parse_spec("det:a,b"), ParseError);
  CHECK_THROWS_AS(parse_spec("csf:2110"), ParseError);
  CsfSpec bad{{1, 1, 0, 0}, "-+", 0.0};
  CHECK_THROWS_AS(bad.validate(), DomainError);
  CsfSpec wrong_len{{1, 1, 0, 0}, "+", 0.0};
  CHECK_THROWS_AS(wrong_len.validate(), DomainError);
  CHECK(CsfSpec{{1, 1, 1, 1}, "++-+", 0.0}.spin() == 1.0);
  CHECK(CsfSpec{{1, 1, 1, 1}, "++-+", 0.0}.open_shells() == 4);
}

TEST_CASE("determinants") {
  const auto d = std::get<DeterminantSpec>(parse_spec("det:0,1,4,5"));
  CHECK(d.bits() == 0b110011);
  const auto v = prepare_determinant(d, 8);
  CHECK(v[0b110011] == sim::cplx(1.0));
  CHECK_THROWS_AS(prepare_determinant(DeterminantSpec{{9}}, 8), DomainError);
}

TEST_CASE("coupling coefficients") {
  // two spin-1/2 into a triplet or singlet with M = 0
  CHECK(coupling_coefficient(0.5, -0.5, 1.0, 0.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(coupling_coefficient(0.5, 0.5, 1.0, 1.0) == doctest::Approx(1.0));
  CHECK(coupling_coefficient(-0.5, -0.5, 0.0, 0.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(coupling_coefficient(-0.5, 0.5, 0.0, 0.0) == doctest::Approx(-std::sqrt(0.5)));
  // columns are normalized: Σ_σ C(σ)² = 1 for every reachable (S, M)
  for (double s = 0.5; s <= 3.0; s += 0.5)
    for (double m = -s; m <= s + 1e-9; m += 1.0) {
      if (s >= 1.0) {
        const double up = coupling_coefficient(0.5, 0.5, s, m), dn = coupling_coefficient(0.5, -0.5, s, m);
        CHECK(up * up + dn * dn == doctest::Approx(1.0));
      }
      const double up = coupling_coefficient(-0.5, 0.5, s, m), dn = coupling_coefficient(-0.5, -0.5, s, m);
      CHECK(up * up + dn * dn == doctest::Approx(1.0));
    }
}

TEST_CASE("open-shell singlet pattern") {
  const auto v = prepare(parse_spec("csf:11:+-"), 4);
  // alpha on orbital 0 with beta on orbital 1, and the swap
  CHECK(std::abs(std::abs(v[0b1001]) - std::sqrt(0.5)) < 1e-14);
  CHECK(std::abs(std::abs(v[0b0110]) - std::sqrt(0.5)) < 1e-14);
  CHECK(std::abs(s2_of(v)) < 1e-14);
  const auto t = prepare(parse_spec("csf:11:++"), 4);
  CHECK(std::abs(s2_of(t) - 2.0) < 1e-14);
}

TEST_CASE("four open shells: 2 singlets, 3 triplets, 1 quintet, orthonormal") {
  const auto paths = coupling_paths(4, 0.0);
  CHECK(paths.size() == 6);
  std::vector<sim::StateVector> states;
  int singlets = 0, triplets = 0, quintets = 0;
  for (const auto& p : paths) {
    CsfSpec c{{1, 1, 1, 1}, p, 0.0};
    states.push_back(prepare_csf(c, 8));
    const double s = c.spin();
    CHECK(std::abs(s2_of(states.back()) - s * (s + 1)) < 1e-10);
    CHECK(std::abs(sz_of(states.back())) < 1e-14);
    singlets += s == 0.0;
    triplets += s == 1.0;
    quintets += s == 2.0;
  }
  CHECK(singlets == 2);
  CHECK(triplets == 3);
  CHECK(quintets == 1);
  for (size_t a = 0; a < states.size(); ++a)
    for (size_t b = 0; b < states.size(); ++b)
      CHECK(std::abs(sim::inner_product(states[a], states[b]) - (a == b ? 1.0 : 0.0)) < 1e-10);
}

TEST_CASE("nonzero projections") {
  const auto v = prepare(parse_spec("csf:1111:++++:m=1"), 8);
  CHECK(std::abs(sz_of(v) - 1.0) < 1e-14);
  CHECK(std::abs(s2_of(v) - 6.0) < 1e-12);
  CHECK_THROWS_AS(prepare(parse_spec("csf:1111:++--:m=1"), 8), DomainError);
}

TEST_CASE("guess pools for H4") {
  const auto p = harness::build_problem(molint::Geometry::rectangle(1.5, 1.0));
  const auto csf = guess_pool(p.op, 4, 4, 0.0, PoolKind::CSF);
  const auto sd = guess_pool(p.op, 4, 4, 0.0, PoolKind::SD);
  const auto mixed = guess_pool(p.op, 4, 4, 0.0, PoolKind::Mixed);
  CHECK(csf.size() == 36);
  CHECK(sd.size() == 36);
  CHECK(mixed.size() == 36 + 30);
  for (const auto* pool : {&csf, &sd, &mixed}) {
    std::set<std::string> labels;
    for (size_t i = 0; i < pool->size(); ++i) {
      labels.insert((*pool)[i].label);
      if (i > 0) CHECK((*pool)[i].energy >= (*pool)[i - 1].energy - 1e-9);
    }
    CHECK(labels.size() == pool->size());
  }
  // every CSF is an S^2 eigenstate with the spin of its path
  double worst = 0.0;
  for (const auto& g : csf) {
    const double s = std::get<CsfSpec>(g.spec).spin();
    worst = std::max(worst, std::abs(s2_of(prepare(g.spec, 8)) - s * (s + 1)));
  }
  CHECK(worst < 1e-10);
  CHECK(csf.front().label == "csf:2200:");
  CHECK(std::abs(csf.front().energy - p.scf.energy) < 1e-10);
  CHECK_THROWS_AS(guess_pool(p.op, 4, 4, 0.5, PoolKind::CSF), DomainError);
  CHECK(parse_pool_kind("mixed") == PoolKind::Mixed);
  CHECK_THROWS_AS(parse_pool_kind("other"), ParseError);
}
