#include "escqe/molint.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numbers>
#include <sstream>

#include "escqe/basis_data.hpp"
#include "escqe/d2h.hpp"
#include "escqe/error.hpp"

namespace escqe::molint {

namespace {

constexpr double kPi = std::numbers::pi;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string canonical_symbol(std::string_view s) {
  std::string out(s);
  if (out.empty()) return out;
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  for (size_t i = 1; i < out.size(); ++i)
    out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(out[i])));
  return out;
}

const nlohmann::json& basis_json(std::string_view basis) {
  static const nlohmann::json sto3g = nlohmann::json::parse(detail::kSto3gJson);
  std::string name = upper(basis);
  if (name == "STO-3G" || name == "STO3G") return sto3g;
  throw UnsupportedError("basis '" + std::string(basis) + "' is not bundled");
}

double primitive_norm(double alpha) { return std::pow(2.0 * alpha / kPi, 0.75); }

// Unnormalized s-Gaussian overlap.
double s_overlap(double a, double b, double ab2) {
  double p = a + b;
  return std::pow(kPi / p, 1.5) * std::exp(-a * b / p * ab2);
}

}  // namespace

// ---------------------------------------------------------------- geometry --

Geometry Geometry::from_xyz(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  auto next = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  };
  if (!next()) throw ParseError("empty XYZ input", 1);
  int count = 0;
  {
    std::istringstream ls(line);
    if (!(ls >> count) || count < 1) throw ParseError("bad atom count", line_no);
  }
  Geometry g;
  if (!next()) throw ParseError("missing comment line", line_no + 1);
  g.comment = line;
  while (static_cast<int>(g.atoms.size()) < count) {
    if (!next()) throw ParseError("expected " + std::to_string(count) + " atoms", line_no + 1);
    std::istringstream ls(line);
    std::string sym;
    double x, y, z;
    if (!(ls >> sym)) continue;  // blank line
    if (!(ls >> x >> y >> z)) throw ParseError("bad atom record", line_no);
    g.atoms.push_back({canonical_symbol(sym), Eigen::Vector3d(x, y, z)});
  }
  g.validate();
  return g;
}

std::string Geometry::to_xyz() const {
  std::ostringstream out;
  out.precision(12);
  out << atoms.size() << "\n" << comment << "\n";
  for (const auto& a : atoms) {
    out << a.symbol << " " << std::fixed << a.position.x() << " " << a.position.y()
        << " " << a.position.z() << "\n";
    out.unsetf(std::ios::fixed);
  }
  return out.str();
}

Geometry Geometry::rectangle(double side_x, double side_y) {
  Geometry g;
  double hx = 0.5 * side_x, hy = 0.5 * side_y;
  g.atoms = {{"H", {-hx, -hy, 0.0}},
             {"H", {-hx, hy, 0.0}},
             {"H", {hx, -hy, 0.0}},
             {"H", {hx, hy, 0.0}}};
  std::ostringstream c;
  c << "rectangular H4 " << side_x << " x " << side_y << " Angstrom";
  g.comment = c.str();
  return g;
}

Geometry Geometry::diatomic(double bond) {
  Geometry g;
  g.atoms = {{"H", {0.0, 0.0, -0.5 * bond}}, {"H", {0.0, 0.0, 0.5 * bond}}};
  g.comment = "H2 " + std::to_string(bond) + " Angstrom";
  return g;
}

Geometry Geometry::translated(const Eigen::Vector3d& shift) const {
  Geometry g = *this;
  for (auto& a : g.atoms) a.position += shift;
  return g;
}

Geometry Geometry::rotated(const Eigen::Matrix3d& rotation) const {
  Geometry g = *this;
  for (auto& a : g.atoms) a.position = rotation * a.position;
  return g;
}

int Geometry::nuclear_charge() const {
  int z = 0;
  for (const auto& a : atoms) {
    const auto& el = basis_json("sto-3g")["elements"];
    if (!el.contains(a.symbol)) throw UnsupportedError("unsupported element " + a.symbol);
    z += el[a.symbol]["Z"].get<int>();
  }
  return z;
}

void Geometry::validate() const {
  if (atoms.empty()) throw DomainError("geometry has no atoms");
  for (const auto& a : atoms) {
    if (!a.position.allFinite()) throw DomainError("non-finite atom position");
  }
}

// ------------------------------------------------------------------ basis --

ContractedGaussian::ContractedGaussian(Eigen::Vector3d center,
                                       std::vector<Primitive> primitives)
    : center_(std::move(center)), primitives_(std::move(primitives)) {
  double self = 0.0;
  for (const auto& pa : primitives_) {
    if (!(pa.exponent > 0.0)) throw DomainError("Gaussian exponent must be positive");
    for (const auto& pb : primitives_) {
      self += pa.coefficient * pb.coefficient * primitive_norm(pa.exponent) *
              primitive_norm(pb.exponent) * s_overlap(pa.exponent, pb.exponent, 0.0);
    }
  }
  double scale = 1.0 / std::sqrt(self);
  for (auto& p : primitives_) p.coefficient *= scale * primitive_norm(p.exponent);
}

double ContractedGaussian::operator()(const Eigen::Vector3d& r) const {
  double r2 = (r - center_).squaredNorm();
  double v = 0.0;
  for (const auto& p : primitives_) v += p.coefficient * std::exp(-p.exponent * r2);
  return v;
}

ElementBasis element_basis(std::string_view basis, std::string_view symbol) {
  const auto& js = basis_json(basis);
  std::string sym = canonical_symbol(symbol);
  if (!js["elements"].contains(sym)) {
    throw UnsupportedError("element '" + sym + "' is not supported by the built-in integral code");
  }
  const auto& el = js["elements"][sym];
  ElementBasis out;
  out.atomic_number = el["Z"].get<int>();
  for (const auto& shell : el["electron_shells"]) {
    if (shell["angular_momentum"][0].get<int>() != 0) continue;
    const auto& exps = shell["exponents"];
    for (const auto& coefs : shell["coefficients"]) {
      std::vector<Primitive> prims;
      for (size_t i = 0; i < exps.size(); ++i) {
        prims.push_back({std::stod(exps[i].get<std::string>()),
                         std::stod(coefs[i].get<std::string>())});
      }
      out.s_shells.push_back(std::move(prims));
    }
  }
  return out;
}

std::string basis_data_version(std::string_view basis) {
  const auto& js = basis_json(basis);
  return js["name"].get<std::string>() + " v" + js["version"].get<std::string>();
}

std::vector<ContractedGaussian> basis_functions(const Geometry& geometry,
                                                std::string_view basis) {
  geometry.validate();
  std::vector<ContractedGaussian> out;
  for (const auto& atom : geometry.atoms) {
    if (atom.symbol != "H") {
      throw UnsupportedError("element '" + atom.symbol +
                             "' is not supported by the built-in integral code");
    }
    auto eb = element_basis(basis, atom.symbol);
    for (const auto& shell : eb.s_shells) {
      out.emplace_back(atom.position * kBohrPerAngstrom, shell);
    }
  }
  return out;
}

// -------------------------------------------------------------- integrals --

double boys_f0(double x) {
  if (!(x >= 0.0)) throw DomainError("boys_f0 requires x >= 0");
  if (x < 1e-8) return 1.0 - x / 3.0 + x * x / 10.0;
  double s = std::sqrt(x);
  return 0.5 * std::sqrt(kPi) * std::erf(s) / s;
}

void Eri::set_symmetric(int p, int q, int r, int s, double v) {
  (*this)(p, q, r, s) = v;
  (*this)(q, p, r, s) = v;
  (*this)(p, q, s, r) = v;
  (*this)(q, p, s, r) = v;
  (*this)(r, s, p, q) = v;
  (*this)(s, r, p, q) = v;
  (*this)(r, s, q, p) = v;
  (*this)(s, r, q, p) = v;
}

IntegralSet build_integrals(const Geometry& geometry, std::string_view basis) {
  auto bf = basis_functions(geometry, basis);
  const int n = static_cast<int>(bf.size());
  IntegralSet out;
  out.overlap = Eigen::MatrixXd::Zero(n, n);
  out.hcore = Eigen::MatrixXd::Zero(n, n);
  out.eri = Eri(n);

  std::vector<std::pair<Eigen::Vector3d, double>> nuclei;
  for (const auto& a : geometry.atoms) {
    nuclei.emplace_back(a.position * kBohrPerAngstrom,
                        static_cast<double>(element_basis(basis, a.symbol).atomic_number));
  }
  for (size_t i = 0; i < nuclei.size(); ++i) {
    for (size_t j = i + 1; j < nuclei.size(); ++j) {
      double d = (nuclei[i].first - nuclei[j].first).norm();
      if (d < 1e-8) throw DomainError("coincident nuclei make the nuclear repulsion singular");
      out.enuc += nuclei[i].second * nuclei[j].second / d;
    }
  }

  for (int mu = 0; mu < n; ++mu) {
    for (int nu = 0; nu <= mu; ++nu) {
      const auto& A = bf[mu].center();
      const auto& B = bf[nu].center();
      double ab2 = (A - B).squaredNorm();
      double s = 0.0, t = 0.0, v = 0.0;
      for (const auto& pa : bf[mu].primitives()) {
        for (const auto& pb : bf[nu].primitives()) {
          double a = pa.exponent, b = pb.exponent, p = a + b;
          double cc = pa.coefficient * pb.coefficient;
          double sab = s_overlap(a, b, ab2);
          s += cc * sab;
          double red = a * b / p;
          t += cc * red * (3.0 - 2.0 * red * ab2) * sab;
          Eigen::Vector3d P = (a * A + b * B) / p;
          double pre = 2.0 * kPi / p * std::exp(-red * ab2);
          for (const auto& [C, Z] : nuclei) {
            v -= cc * Z * pre * boys_f0(p * (P - C).squaredNorm());
          }
        }
      }
      out.overlap(mu, nu) = out.overlap(nu, mu) = s;
      out.hcore(mu, nu) = out.hcore(nu, mu) = t + v;
    }
  }

  // (pq|rs) over unique quartets.
  for (int p = 0; p < n; ++p) {
    for (int q = 0; q <= p; ++q) {
      int pq = p * (p + 1) / 2 + q;
      for (int r = 0; r < n; ++r) {
        for (int s = 0; s <= r; ++s) {
          int rs = r * (r + 1) / 2 + s;
          if (rs > pq) continue;
          const auto& A = bf[p].center();
          const auto& B = bf[q].center();
          const auto& C = bf[r].center();
          const auto& D = bf[s].center();
          double ab2 = (A - B).squaredNorm();
          double cd2 = (C - D).squaredNorm();
          double val = 0.0;
          for (const auto& pa : bf[p].primitives()) {
            for (const auto& pb : bf[q].primitives()) {
              double a = pa.exponent, b = pb.exponent, zeta = a + b;
              Eigen::Vector3d P = (a * A + b * B) / zeta;
              double kab = std::exp(-a * b / zeta * ab2);
              for (const auto& pc : bf[r].primitives()) {
                for (const auto& pd : bf[s].primitives()) {
                  double c = pc.exponent, d = pd.exponent, eta = c + d;
                  Eigen::Vector3d Q = (c * C + d * D) / eta;
                  double kcd = std::exp(-c * d / eta * cd2);
                  double rho = zeta * eta / (zeta + eta);
                  double pre = 2.0 * std::pow(kPi, 2.5) /
                               (zeta * eta * std::sqrt(zeta + eta));
                  val += pa.coefficient * pb.coefficient * pc.coefficient *
                         pd.coefficient * pre * kab * kcd *
                         boys_f0(rho * (P - Q).squaredNorm());
                }
              }
            }
          }
          out.eri.set_symmetric(p, q, r, s, val);
        }
      }
    }
  }
  return out;
}

IntegralSet IntegralSet::transformed(const Eigen::MatrixXd& c) const {
  const int n = nbasis();
  const int m = static_cast<int>(c.cols());
  if (c.rows() != n) throw DomainError("coefficient matrix shape mismatch");
  IntegralSet out;
  out.overlap = c.transpose() * overlap * c;
  out.hcore = c.transpose() * hcore * c;
  out.enuc = enuc;
  // Four quarter transformations.
  std::vector<double> t1(static_cast<size_t>(m) * n * n * n, 0.0);
  auto i1 = [&](int a, int q, int r, int s) { return ((static_cast<size_t>(a) * n + q) * n + r) * n + s; };
  for (int a = 0; a < m; ++a)
    for (int p = 0; p < n; ++p) {
      double cpa = c(p, a);
      if (cpa == 0.0) continue;
      for (int q = 0; q < n; ++q)
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) t1[i1(a, q, r, s)] += cpa * eri(p, q, r, s);
    }
  std::vector<double> t2(static_cast<size_t>(m) * m * n * n, 0.0);
  auto i2 = [&](int a, int b, int r, int s) { return ((static_cast<size_t>(a) * m + b) * n + r) * n + s; };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int q = 0; q < n; ++q) {
        double cqb = c(q, b);
        if (cqb == 0.0) continue;
        for (int r = 0; r < n; ++r)
          for (int s = 0; s < n; ++s) t2[i2(a, b, r, s)] += cqb * t1[i1(a, q, r, s)];
      }
  std::vector<double> t3(static_cast<size_t>(m) * m * m * n, 0.0);
  auto i3 = [&](int a, int b, int cc, int s) { return ((static_cast<size_t>(a) * m + b) * m + cc) * n + s; };
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        for (int r = 0; r < n; ++r) {
          double crc = c(r, cc);
          if (crc == 0.0) continue;
          for (int s = 0; s < n; ++s) t3[i3(a, b, cc, s)] += crc * t2[i2(a, b, r, s)];
        }
  out.eri = Eri(m);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int cc = 0; cc < m; ++cc)
        for (int d = 0; d < m; ++d) {
          double v = 0.0;
          for (int s = 0; s < n; ++s) v += c(s, d) * t3[i3(a, b, cc, s)];
          out.eri(a, b, cc, d) = v;
        }
  return out;
}

// --------------------------------------------------------------- symmetry --

std::optional<AoSymmetry> ao_symmetry(const Geometry& geometry, double tol) {
  const int natom = static_cast<int>(geometry.atoms.size());
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& a : geometry.atoms) centroid += a.position;
  centroid /= natom;
  const std::array<Eigen::Vector3d, 3> ops{Eigen::Vector3d(-1, -1, 1),
                                           Eigen::Vector3d(-1, 1, -1),
                                           Eigen::Vector3d(-1, -1, -1)};
  // AO offsets per atom (s shells only, same count per element).
  std::vector<int> first_ao(natom + 1, 0);
  for (int i = 0; i < natom; ++i) {
    first_ao[i + 1] = first_ao[i] + static_cast<int>(element_basis("sto-3g", geometry.atoms[i].symbol).s_shells.size());
  }
  const int nao = first_ao[natom];
  AoSymmetry out;
  for (int g = 0; g < 3; ++g) {
    Eigen::MatrixXd rep = Eigen::MatrixXd::Zero(nao, nao);
    for (int i = 0; i < natom; ++i) {
      Eigen::Vector3d image =
          centroid + ops[g].cwiseProduct(geometry.atoms[i].position - centroid);
      int match = -1;
      for (int j = 0; j < natom; ++j) {
        if (geometry.atoms[j].symbol == geometry.atoms[i].symbol &&
            (geometry.atoms[j].position - image).norm() < tol) {
          match = j;
          break;
        }
      }
      if (match < 0) return std::nullopt;
      for (int k = 0; k < first_ao[i + 1] - first_ao[i]; ++k) {
        rep(first_ao[match] + k, first_ao[i] + k) = 1.0;
      }
    }
    out.generators[g] = rep;
  }
  return out;
}

// -------------------------------------------------------------------- SCF --

namespace {

Eigen::MatrixXd build_fock(const IntegralSet& ints, const Eigen::MatrixXd& density) {
  const int n = ints.nbasis();
  Eigen::MatrixXd f = ints.hcore;
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      double g = 0.0;
      for (int la = 0; la < n; ++la)
        for (int si = 0; si < n; ++si) {
          g += density(la, si) *
               (ints.eri(mu, nu, la, si) - 0.5 * ints.eri(mu, la, nu, si));
        }
      f(mu, nu) += g;
    }
  return f;
}

struct OrbitalSolve {
  Eigen::MatrixXd coeffs;
  Eigen::VectorXd energies;
  std::vector<int> irreps;
};

// Diagonalizes F in an S-orthonormal basis; with symmetry, one block per irrep.
class OrbitalSolver {
 public:
  OrbitalSolver(const Eigen::MatrixXd& overlap, const std::optional<AoSymmetry>& sym)
      : n_(static_cast<int>(overlap.rows())) {
    if (!sym) {
      blocks_.push_back({orthonormalize(overlap, Eigen::MatrixXd::Identity(n_, n_)), -1});
      return;
    }
    // Representation matrices of all eight group elements.
    std::array<Eigen::MatrixXd, 8> elements;
    std::array<std::array<int, 3>, 8> powers;
    for (int e = 0; e < 8; ++e) {
      Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n_, n_);
      for (int g = 0; g < 3; ++g) {
        powers[e][g] = (e >> g) & 1;
        if (powers[e][g]) m = sym->generators[g] * m;
      }
      elements[e] = m;
    }
    int total = 0;
    for (int irrep = 0; irrep < d2h::kIrrepCount; ++irrep) {
      auto chi = d2h::characters(static_cast<d2h::Irrep>(irrep));
      Eigen::MatrixXd proj = Eigen::MatrixXd::Zero(n_, n_);
      for (int e = 0; e < 8; ++e) {
        double c = 1.0;
        for (int g = 0; g < 3; ++g) if (powers[e][g]) c *= chi[g];
        proj += c * elements[e];
      }
      proj /= 8.0;
      Eigen::MatrixXd b = orthonormalize(overlap, proj);
      if (b.cols() == 0) continue;
      total += static_cast<int>(b.cols());
      blocks_.push_back({b, irrep});
    }
    if (total != n_) throw Error("symmetry-adapted basis is incomplete");
  }

  OrbitalSolve solve(const Eigen::MatrixXd& fock) const {
    std::vector<std::tuple<double, int, Eigen::VectorXd>> orbs;
    for (const auto& [b, irrep] : blocks_) {
      Eigen::MatrixXd fb = b.transpose() * fock * b;
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (fb + fb.transpose()));
      for (int k = 0; k < fb.rows(); ++k) {
        orbs.emplace_back(es.eigenvalues()(k), irrep, b * es.eigenvectors().col(k));
      }
    }
    std::stable_sort(orbs.begin(), orbs.end(), [](const auto& x, const auto& y) {
      return std::get<0>(x) < std::get<0>(y);
    });
    // Near-degenerate runs are ordered by irrep label.
    constexpr double kDegenerate = 1e-8;
    for (size_t i = 0; i < orbs.size();) {
      size_t j = i + 1;
      while (j < orbs.size() && std::get<0>(orbs[j]) - std::get<0>(orbs[j - 1]) < kDegenerate) ++j;
      std::stable_sort(orbs.begin() + i, orbs.begin() + j, [](const auto& x, const auto& y) {
        return std::get<1>(x) < std::get<1>(y);
      });
      i = j;
    }
    OrbitalSolve out;
    out.coeffs.resize(n_, n_);
    out.energies.resize(n_);
    for (int k = 0; k < n_; ++k) {
      Eigen::VectorXd v = std::get<2>(orbs[k]);
      // Deterministic sign: largest-magnitude coefficient positive.
      Eigen::Index imax;
      v.cwiseAbs().maxCoeff(&imax);
      if (v(imax) < 0) v = -v;
      out.coeffs.col(k) = v;
      out.energies(k) = std::get<0>(orbs[k]);
      out.irreps.push_back(std::get<1>(orbs[k]));
    }
    return out;
  }

 private:
  // S-orthonormal basis for the column space of `span`.
  static Eigen::MatrixXd orthonormalize(const Eigen::MatrixXd& s, const Eigen::MatrixXd& span) {
    Eigen::MatrixXd m = span.transpose() * s * span;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    std::vector<int> keep;
    for (int k = 0; k < m.rows(); ++k) {
      if (es.eigenvalues()(k) > 1e-10) keep.push_back(k);
    }
    Eigen::MatrixXd out(span.rows(), static_cast<Eigen::Index>(keep.size()));
    for (size_t c = 0; c < keep.size(); ++c) {
      out.col(c) = span * es.eigenvectors().col(keep[c]) / std::sqrt(es.eigenvalues()(keep[c]));
    }
    return out;
  }

  int n_;
  std::vector<std::pair<Eigen::MatrixXd, int>> blocks_;
};

Eigen::MatrixXd density_from(const Eigen::MatrixXd& c, int nocc) {
  Eigen::MatrixXd occ = c.leftCols(nocc);
  return 2.0 * occ * occ.transpose();
}

RhfResult run_scf(const IntegralSet& ints, int n_electrons, Eigen::MatrixXd density,
                  const OrbitalSolver& solver, const ScfOptions& opt) {
  const int nocc = n_electrons / 2;
  const Eigen::MatrixXd& s = ints.overlap;
  std::deque<Eigen::MatrixXd> focks, errors;
  double last_norm = 0.0;
  for (int it = 1; it <= opt.max_cycles; ++it) {
    Eigen::MatrixXd f = build_fock(ints, density);
    Eigen::MatrixXd err = f * density * s - s * density * f;
    last_norm = err.cwiseAbs().maxCoeff();
    if (last_norm < opt.convergence) {
      OrbitalSolve orbs = solver.solve(f);
      Eigen::MatrixXd d = density_from(orbs.coeffs, nocc);
      Eigen::MatrixXd fd = build_fock(ints, d);
      RhfResult out;
      out.coefficients = orbs.coeffs;
      out.orbital_energies = orbs.energies;
      out.energy = 0.5 * (d.cwiseProduct(ints.hcore + fd)).sum() + ints.enuc;
      out.iterations = it;
      out.commutator_norm = last_norm;
      if (opt.symmetry) out.irreps = orbs.irreps;
      return out;
    }
    focks.push_back(f);
    errors.push_back(err);
    if (static_cast<int>(focks.size()) > opt.diis_history) {
      focks.pop_front();
      errors.pop_front();
    }
    Eigen::MatrixXd fx = f;
    const int m = static_cast<int>(focks.size());
    if (it > opt.diis_start && m >= 2) {
      Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m + 1, m + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) b(i, j) = errors[i].cwiseProduct(errors[j]).sum();
        b(i, m) = b(m, i) = -1.0;
      }
      rhs(m) = -1.0;
      Eigen::VectorXd w = b.colPivHouseholderQr().solve(rhs);
      if (w.allFinite()) {
        fx.setZero();
        for (int i = 0; i < m; ++i) fx += w(i) * focks[i];
      }
    }
    OrbitalSolve orbs = solver.solve(fx);
    Eigen::MatrixXd dnew = density_from(orbs.coeffs, nocc);
    if (it <= opt.diis_start) dnew = (1.0 - opt.damping) * dnew + opt.damping * density;
    density = dnew;
  }
  throw ConvergenceError("SCF did not converge in " + std::to_string(opt.max_cycles) +
                             " cycles (commutator " + std::to_string(last_norm) + ")",
                         last_norm);
}

void check_electrons(const IntegralSet& ints, int n_electrons) {
  if (n_electrons < 0 || n_electrons % 2 != 0) {
    throw DomainError("closed-shell SCF needs an even, non-negative electron count");
  }
  if (n_electrons > 2 * ints.nbasis()) throw DomainError("too many electrons for the basis");
}

}  // namespace

RhfResult rhf(const IntegralSet& ints, int n_electrons, const ScfOptions& opt) {
  check_electrons(ints, n_electrons);
  OrbitalSolver solver(ints.overlap, opt.symmetry);
  OrbitalSolve core = solver.solve(ints.hcore);
  return run_scf(ints, n_electrons, density_from(core.coeffs, n_electrons / 2), solver, opt);
}

RhfResult rhf(const IntegralSet& ints, int n_electrons, const Eigen::MatrixXd& guess,
              const ScfOptions& opt) {
  check_electrons(ints, n_electrons);
  OrbitalSolver solver(ints.overlap, opt.symmetry);
  return run_scf(ints, n_electrons, density_from(guess, n_electrons / 2), solver, opt);
}

// ---------------------------------------------------------- spin orbitals --

SpinOrbitalHamiltonian to_spin_orbitals(const IntegralSet& mo) {
  const int r = mo.nbasis();
  const int n = 2 * r;
  SpinOrbitalHamiltonian h;
  h.n_spin_orbitals = n;
  h.enuc = mo.enuc;
  h.k1 = Eigen::MatrixXd::Zero(n, n);
  h.v2 = Tensor4(n);
  for (int p = 0; p < r; ++p)
    for (int q = 0; q < r; ++q)
      for (int s = 0; s < 2; ++s) h.k1(spin_orbital(p, s), spin_orbital(q, s)) = mo.hcore(p, q);
  // <pr|qs> = (pq|rs) when spin(p)=spin(q) and spin(r)=spin(s).
  auto phys = [&](int p, int r_, int q, int s) {
    if ((p & 1) != (q & 1) || (r_ & 1) != (s & 1)) return 0.0;
    return mo.eri(p >> 1, q >> 1, r_ >> 1, s >> 1);
  };
  for (int p = 0; p < n; ++p)
    for (int r_ = 0; r_ < n; ++r_)
      for (int q = 0; q < n; ++q)
        for (int s = 0; s < n; ++s) h.v2(p, r_, q, s) = phys(p, r_, q, s) - phys(p, r_, s, q);
  return h;
}

SpinOrbitalHamiltonian to_spin_orbitals(const IntegralSet& integrals,
                                        const Eigen::MatrixXd& mo_coeffs) {
  return to_spin_orbitals(integrals.transformed(mo_coeffs));
}

double determinant_energy(const SpinOrbitalHamiltonian& h, const std::vector<int>& occ) {
  double e = h.enuc;
  for (int i : occ) e += h.k1(i, i);
  for (int i : occ)
    for (int j : occ) e += 0.5 * h.v2(i, j, i, j);
  return e;
}

// ---------------------------------------------------------------- FCIDUMP --

namespace {

using EriKey = std::array<int, 4>;

EriKey canonical_eri_key(int i, int j, int k, int l) {
  if (i < j) std::swap(i, j);
  if (k < l) std::swap(k, l);
  if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) {
    std::swap(i, k);
    std::swap(j, l);
  }
  return {i, j, k, l};
}

std::vector<int> parse_int_list(const std::string& v, int line) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
    if (tok.empty()) continue;
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ParseError("bad integer '" + tok + "' in header", line);
    }
  }
  return out;
}

}  // namespace

FcidumpData parse_fcidump(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  // Header: everything up to &END or a line holding only '/'.
  std::string header;
  bool header_done = false;
  int header_line = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::string u = upper(line);
    auto end = u.find("&END");
    std::string trimmed = u;
    trimmed.erase(std::remove_if(trimmed.begin(), trimmed.end(), ::isspace), trimmed.end());
    if (end != std::string::npos || trimmed == "/") {
      header += " " + u.substr(0, end == std::string::npos ? 0 : end);
      header_done = true;
      break;
    }
    header += " " + u;
  }
  if (!header_done || header.find("&FCI") == std::string::npos) {
    throw ParseError("missing &FCI ... &END header", header_line);
  }
  header.erase(0, header.find("&FCI") + 4);
  // Split into KEY=VALUE groups; values may contain commas.
  std::map<std::string, std::string> keys;
  {
    std::string current_key;
    std::string token;
    std::string flat;
    for (char c : header) flat += (c == '\n' ? ' ' : c);
    size_t pos = 0;
    while (pos < flat.size()) {
      size_t eq = flat.find('=', pos);
      if (eq == std::string::npos) break;
      size_t ks = flat.find_last_of(" ,", eq - 1);
      ks = (ks == std::string::npos || ks < pos) ? pos : ks + 1;
      std::string key = flat.substr(ks, eq - ks);
      key.erase(std::remove_if(key.begin(), key.end(), ::isspace), key.end());
      size_t next_eq = flat.find('=', eq + 1);
      size_t vend = flat.size();
      if (next_eq != std::string::npos) {
        size_t nk = flat.find_last_of(" ,", next_eq - 1);
        vend = (nk == std::string::npos || nk <= eq) ? next_eq : nk;
      }
      keys[key] = flat.substr(eq + 1, vend - eq - 1);
      pos = vend;
    }
  }
  FcidumpData data;
  auto need = [&](const std::string& k) -> int {
    auto it = keys.find(k);
    if (it == keys.end()) throw ParseError("header lacks " + k, header_line);
    auto v = parse_int_list(it->second, header_line);
    if (v.size() != 1) throw ParseError("header key " + k + " must be a single integer", header_line);
    return v[0];
  };
  data.norb = need("NORB");
  data.nelec = need("NELEC");
  data.ms2 = keys.count("MS2") ? need("MS2") : 0;
  data.isym = keys.count("ISYM") ? need("ISYM") : 1;
  if (keys.count("ORBSYM")) data.orbsym = parse_int_list(keys["ORBSYM"], header_line);
  if (data.norb <= 0) throw ParseError("NORB must be positive", header_line);
  if (!data.orbsym.empty() && static_cast<int>(data.orbsym.size()) != data.norb) {
    throw ParseError("ORBSYM length differs from NORB", header_line);
  }

  const int n = data.norb;
  auto& ints = data.integrals;
  ints.overlap = Eigen::MatrixXd::Identity(n, n);
  ints.hcore = Eigen::MatrixXd::Zero(n, n);
  ints.eri = Eri(n);
  std::map<EriKey, std::pair<double, int>> seen_eri;
  std::map<std::pair<int, int>, std::pair<double, int>> seen_h;
  bool seen_enuc = false;
  constexpr double kConflict = 1e-10;

  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string vs;
    if (!(ls >> vs)) continue;
    double v;
    int i, j, k, l;
    try {
      std::replace(vs.begin(), vs.end(), 'D', 'E');
      std::replace(vs.begin(), vs.end(), 'd', 'e');
      v = std::stod(vs);
    } catch (const std::exception&) {
      throw ParseError("bad value '" + vs + "'", line_no);
    }
    if (!(ls >> i >> j >> k >> l)) throw ParseError("record needs value and four indices", line_no);
    for (int idx : {i, j, k, l}) {
      if (idx < 0 || idx > n) throw ParseError("index out of range", line_no);
    }
    if (i > 0 && j > 0 && k > 0 && l > 0) {
      EriKey key = canonical_eri_key(i - 1, j - 1, k - 1, l - 1);
      auto [it, fresh] = seen_eri.emplace(key, std::make_pair(v, line_no));
      if (!fresh && std::abs(it->second.first - v) > kConflict) {
        throw ParseError("conflicting duplicate of record on line " +
                             std::to_string(it->second.second),
                         line_no);
      }
      ints.eri.set_symmetric(i - 1, j - 1, k - 1, l - 1, v);
    } else if (i > 0 && j > 0 && k == 0 && l == 0) {
      auto key = std::minmax(i - 1, j - 1);
      auto [it, fresh] = seen_h.emplace(key, std::make_pair(v, line_no));
      if (!fresh && std::abs(it->second.first - v) > kConflict) {
        throw ParseError("conflicting duplicate of record on line " +
                             std::to_string(it->second.second),
                         line_no);
      }
      ints.hcore(i - 1, j - 1) = ints.hcore(j - 1, i - 1) = v;
    } else if (i == 0 && j == 0 && k == 0 && l == 0) {
      if (seen_enuc && std::abs(ints.enuc - v) > kConflict) {
        throw ParseError("conflicting core energy record", line_no);
      }
      seen_enuc = true;
      ints.enuc = v;
    } else if (i > 0 && j == 0 && k == 0 && l == 0) {
      // orbital energy record: informational only
    } else {
      throw ParseError("unrecognized index pattern", line_no);
    }
  }
  return data;
}

FcidumpData read_fcidump(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open " + path, 0);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_fcidump(ss.str());
}

std::string format_fcidump(const FcidumpData& data, double threshold) {
  const auto& ints = data.integrals;
  const int n = ints.nbasis();
  std::ostringstream out;
  out << "&FCI NORB=" << n << ",NELEC=" << data.nelec << ",MS2=" << data.ms2 << ",\n ORBSYM=";
  for (int p = 0; p < n; ++p) {
    out << (data.orbsym.empty() ? 1 : data.orbsym[p]) << ",";
  }
  out << "\n ISYM=" << data.isym << ",\n&END\n";
  char buf[96];
  auto rec = [&](double v, int i, int j, int k, int l) {
    std::snprintf(buf, sizeof buf, "%24.16e %4d %4d %4d %4d\n", v, i, j, k, l);
    out << buf;
  };
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j)
      for (int k = 0; k < n; ++k)
        for (int l = 0; l <= k; ++l) {
          if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
          double v = ints.eri(i, j, k, l);
          if (std::abs(v) > threshold) rec(v, i + 1, j + 1, k + 1, l + 1);
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = ints.hcore(i, j);
      if (std::abs(v) > threshold) rec(v, i + 1, j + 1, 0, 0);
    }
  rec(ints.enuc, 0, 0, 0, 0);
  return out.str();
}

void write_fcidump(const std::string& path, const FcidumpData& data) {
  std::ofstream f(path);
  if (!f) throw Error("cannot write " + path);
  f << format_fcidump(data);
}

}  // namespace escqe::molint
