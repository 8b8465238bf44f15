#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/constants/constants.hpp>
#include <cmath>
#include <filesystem>
#include <random>

#include "escqe/error.hpp"
#include "escqe/molint.hpp"
#include "oracles.hpp"

using namespace escqe;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

double integrate(const std::function<double(double)>& f, double a, double b) {
  return gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-13);
}

// Axially symmetric 3D integral over cylindrical (rho, z); the molecule lies on z.
double cylinder(const std::function<double(double, double)>& f, double extent = 12.0) {
  return integrate(
      [&](double z) { return integrate([&](double rho) { return 2.0 * kPi * rho * f(rho, z); }, 0.0, extent); },
      -extent, extent);
}

double value(const molint::ContractedGaussian& g, double rho, double z) {
  return g(Eigen::Vector3d(rho, 0.0, z));
}

// Laplacian of a contracted s function, analytic per primitive.
double laplacian(const molint::ContractedGaussian& g, double rho, double z) {
  const double r2 = (Eigen::Vector3d(rho, 0.0, z) - g.center()).squaredNorm();
  double v = 0.0;
  for (const auto& p : g.primitives()) {
    const double a = p.exponent;
    v += p.coefficient * (4.0 * a * a * r2 - 6.0 * a) * std::exp(-a * r2);
  }
  return v;
}

}  // namespace

TEST_CASE("Boys function against quadrature of its defining integral") {
  CHECK(molint::boys_f0(0.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(molint::boys_f0(1e-12) - 1.0) < 1e-9);
  for (double x : {1e-6, 0.3, 1.0, 4.5, 17.0, 30.0, 80.0}) {
    const double ref = integrate([x](double t) { return std::exp(-x * t * t); }, 0.0, 1.0);
    CHECK(std::abs(molint::boys_f0(x) - ref) < 1e-13);
  }
  const double erf_form = 0.5 * std::sqrt(kPi) * std::erf(1.0);
  CHECK(std::abs(molint::boys_f0(1.0) - erf_form) < 1e-14);
}

TEST_CASE("one-electron integrals of H2 at 1.4 bohr against numerical quadrature") {
  const double r = 1.4 / molint::kBohrPerAngstrom;
  const auto geo = molint::Geometry::diatomic(r);
  const auto bf = molint::basis_functions(geo);
  const auto ints = molint::build_integrals(geo);
  REQUIRE(bf.size() == 2);
  const double za = bf[0].center().z(), zb = bf[1].center().z();
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      const double s = cylinder([&](double rho, double z) { return value(bf[a], rho, z) * value(bf[b], rho, z); });
      CHECK(std::abs(ints.overlap(a, b) - s) < 1e-7);
      const double t = cylinder([&](double rho, double z) { return -0.5 * value(bf[a], rho, z) * laplacian(bf[b], rho, z); });
      // Nuclear attraction in spherical coordinates around each nucleus removes
      // the 1/r singularity: r^2 dr / r.
      double v = 0.0;
      for (double zc : {za, zb}) {
        v -= integrate(
            [&](double rr) {
              return integrate(
                  [&](double th) {
                    const double rho = rr * std::sin(th), z = zc + rr * std::cos(th);
                    return 2.0 * kPi * rr * std::sin(th) * value(bf[a], rho, z) * value(bf[b], rho, z);
                  },
                  0.0, kPi);
            },
            0.0, 14.0);
      }
      CHECK(std::abs(ints.hcore(a, b) - (t + v)) < 1e-7);
    }
  CHECK(ints.enuc == doctest::Approx(1.0 / 1.4).epsilon(1e-12));
}

TEST_CASE("single-centre repulsion integral against radial quadrature") {
  molint::Geometry geo;
  geo.atoms = {{"H", Eigen::Vector3d::Zero()}};
  geo.multiplicity = 2;
  const auto bf = molint::basis_functions(geo);
  const auto ints = molint::build_integrals(geo);
  CHECK(ints.nbasis() == 1);
  CHECK(ints.overlap(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  // Spherical density: V(r) = Q(r)/r + ∫_r^∞ 4π r' ρ(r') dr'.
  auto rho = [&](double rr) {
    double v = bf[0](Eigen::Vector3d(rr, 0.0, 0.0));
    return v * v;
  };
  auto pot = [&](double rr) {
    const double inner = rr > 0 ? integrate([&](double t) { return 4.0 * kPi * t * t * rho(t); }, 0.0, rr) / rr : 0.0;
    const double outer = integrate([&](double t) { return 4.0 * kPi * t * rho(t); }, rr, 14.0);
    return inner + outer;
  };
  const double eri = integrate([&](double rr) { return 4.0 * kPi * rr * rr * rho(rr) * pot(rr); }, 0.0, 14.0);
  CHECK(ints.eri(0, 0, 0, 0) > 0.0);
  CHECK(std::abs(ints.eri(0, 0, 0, 0) - eri) < 1e-8);
}

TEST_CASE("self overlap and coincident nuclei") {
  molint::Geometry geo;
  geo.atoms = {{"H", Eigen::Vector3d(0.1, 0.2, 0.3)}, {"H", Eigen::Vector3d(0.1, 0.2, 1.3)}};
  const auto ints = molint::build_integrals(geo);
  CHECK(std::abs(ints.overlap(0, 0) - 1.0) < 1e-10);
  CHECK(std::abs(ints.overlap(1, 1) - 1.0) < 1e-10);
  geo.atoms[1].position = geo.atoms[0].position;
  CHECK_THROWS_AS(molint::build_integrals(geo), DomainError);
}

TEST_CASE("integrals are invariant under rigid motions") {
  const auto geo = molint::Geometry::rectangle(1.5, 1.0);
  Eigen::Matrix3d rot = Eigen::AngleAxisd(0.7, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  const auto a = molint::build_integrals(geo);
  const auto b = molint::build_integrals(geo.rotated(rot).translated(Eigen::Vector3d(0.3, -1.0, 2.0)));
  CHECK((a.overlap - b.overlap).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.hcore - b.hcore).cwiseAbs().maxCoeff() < 1e-12);
  double d = 0.0;
  for (size_t i = 0; i < a.eri.data().size(); ++i) d = std::max(d, std::abs(a.eri.data()[i] - b.eri.data()[i]));
  CHECK(d < 1e-12);
  CHECK(a.enuc == doctest::Approx(b.enuc).epsilon(1e-14));
}

TEST_CASE("RHF agrees with an independent dense SCF") {
  for (double r : {0.74, 1.2}) {
    const auto ints = molint::build_integrals(molint::Geometry::diatomic(r));
    const auto scf = molint::rhf(ints, 2);
    CHECK(std::abs(scf.energy - oracle::rhf_energy(ints, 2)) < 1e-8);
  }
  const auto h4 = molint::build_integrals(molint::Geometry::rectangle(1.5, 1.0));
  CHECK(std::abs(molint::rhf(h4, 4).energy - oracle::rhf_energy(h4, 4)) < 1e-8);
}

TEST_CASE("RHF for rectangular H4") {
  const auto geo = molint::Geometry::rectangle(1.5, 1.0);
  const auto ints = molint::build_integrals(geo);
  molint::ScfOptions opt;
  opt.symmetry = molint::ao_symmetry(geo);
  REQUIRE(opt.symmetry.has_value());
  const auto scf = molint::rhf(ints, 4, opt);
  CHECK(scf.commutator_norm < 1e-9);
  for (int i = 1; i < 4; ++i) CHECK(scf.orbital_energies(i) - scf.orbital_energies(i - 1) > 1e-3);
  CHECK(scf.irreps.size() == 4);
  // restarting from converged orbitals is a fixed point
  const auto again = molint::rhf(ints, 4, scf.coefficients, opt);
  CHECK(std::abs(again.energy - scf.energy) < 1e-12);
}

TEST_CASE("spin-orbital Hamiltonian consistency") {
  const auto ints = molint::build_integrals(molint::Geometry::diatomic(0.74));
  const auto scf = molint::rhf(ints, 2);
  const auto h = molint::to_spin_orbitals(ints, scf.coefficients);
  CHECK(h.n_spin_orbitals == 4);
  CHECK(std::abs(molint::determinant_energy(h, {0, 1}) - scf.energy) < 1e-10);

  const auto h4 = molint::to_spin_orbitals(molint::build_integrals(molint::Geometry::rectangle(1.5, 1.0)),
                                           molint::rhf(molint::build_integrals(molint::Geometry::rectangle(1.5, 1.0)), 4).coefficients);
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> idx(0, 7);
  for (int t = 0; t < 100; ++t) {
    int p = idx(rng), r = idx(rng), q = idx(rng), s = idx(rng);
    CHECK(h4.v2(p, r, q, s) == doctest::Approx(-h4.v2(r, p, q, s)).epsilon(1e-14));
    CHECK(h4.v2(p, r, q, s) == doctest::Approx(-h4.v2(p, r, s, q)).epsilon(1e-14));
  }
}

TEST_CASE("FCIDUMP parsing conventions") {
  const auto d = molint::parse_fcidump(
      "&FCI NORB=1,NELEC=2,MS2=0,\n ORBSYM=1,\n ISYM=1,\n&END\n"
      " 0.5 1 1 1 1\n -1.25 1 1 0 0\n 0.75 0 0 0 0\n");
  CHECK(d.norb == 1);
  CHECK(d.nelec == 2);
  CHECK(d.integrals.eri(0, 0, 0, 0) == 0.5);
  CHECK(d.integrals.hcore(0, 0) == -1.25);
  CHECK(d.integrals.enuc == 0.75);
  CHECK_THROWS_AS(molint::parse_fcidump("NORB=1\n 1 1 1 1 1\n"), ParseError);
}

TEST_CASE("FCIDUMP round trip for H4") {
  const auto ints = molint::build_integrals(molint::Geometry::rectangle(1.5, 1.0));
  const auto scf = molint::rhf(ints, 4);
  molint::FcidumpData d;
  d.integrals = ints.transformed(scf.coefficients);
  d.norb = 4;
  d.nelec = 4;
  d.orbsym = {1, 1, 1, 1};
  const auto path = std::filesystem::temp_directory_path() / "escqe_roundtrip.fcidump";
  molint::write_fcidump(path.string(), d);
  const auto back = molint::read_fcidump(path.string());
  std::filesystem::remove(path);
  CHECK(back.norb == 4);
  CHECK(back.nelec == 4);
  CHECK((back.integrals.hcore - d.integrals.hcore).cwiseAbs().maxCoeff() < 1e-12);
  double m = 0.0;
  for (size_t i = 0; i < d.integrals.eri.data().size(); ++i)
    m = std::max(m, std::abs(back.integrals.eri.data()[i] - d.integrals.eri.data()[i]));
  CHECK(m < 1e-12);
  CHECK(std::abs(back.integrals.enuc - d.integrals.enuc) < 1e-12);
}

TEST_CASE("geometry parsing and errors") {
  const auto g = molint::Geometry::from_xyz("2\nH2\nH 0 0 0\nH 0 0 0.74\n");
  CHECK(g.atoms.size() == 2);
  CHECK(g.nuclear_charge() == 2);
  CHECK_THROWS_AS(molint::Geometry::from_xyz("3\nbad\nH 0 0 0\n"), ParseError);
  CHECK_THROWS(molint::element_basis("sto-3g", "Xx"));
}
