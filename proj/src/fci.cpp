#include "escqe/fci.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "escqe/error.hpp"
#include "fock.hpp"

namespace escqe::fci {

using detail::annihilate;
using detail::create;

// ------------------------------------------------------------ SectorBasis --

SectorBasis::SectorBasis(int r, int na, int nb, std::vector<std::uint64_t> dets)
    : r_(r), na_(na), nb_(nb), dets_(std::move(dets)) {
  for (int i = 0; i < dim(); ++i) index_.emplace(dets_[i], i);
}

int SectorBasis::index_of(std::uint64_t det) const {
  auto it = index_.find(det);
  return it == index_.end() ? -1 : it->second;
}

Eigen::VectorXcd SectorBasis::embed(const Eigen::VectorXcd& c) const {
  if (c.size() != dim()) throw DomainError("coefficient count does not match sector");
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(Eigen::Index{1} << n_spin_orbitals());
  for (int i = 0; i < dim(); ++i) out(static_cast<Eigen::Index>(dets_[i])) = c(i);
  return out;
}

Eigen::VectorXcd SectorBasis::embed(const Eigen::VectorXd& c) const {
  return embed(Eigen::VectorXcd(c.cast<cplx>()));
}

Eigen::VectorXcd SectorBasis::restrict(const Eigen::VectorXcd& amp) const {
  if (amp.size() != (Eigen::Index{1} << n_spin_orbitals())) throw DomainError("amplitude size mismatch");
  Eigen::VectorXcd out(dim());
  for (int i = 0; i < dim(); ++i) out(i) = amp(static_cast<Eigen::Index>(dets_[i]));
  return out;
}

namespace {

// Occupation strings of m electrons in r orbitals, ascending lexicographic
// order of the occupied-index list.
void combinations(int r, int m, int start, std::uint64_t acc, std::vector<std::uint64_t>& out) {
  if (m == 0) {
    out.push_back(acc);
    return;
  }
  for (int p = start; p <= r - m; ++p) combinations(r, m - 1, p + 1, acc | (std::uint64_t{1} << p), out);
}

std::uint64_t interleave(std::uint64_t alpha, std::uint64_t beta, int r) {
  std::uint64_t det = 0;
  for (int p = 0; p < r; ++p) {
    if (alpha >> p & 1) det |= std::uint64_t{1} << (2 * p);
    if (beta >> p & 1) det |= std::uint64_t{1} << (2 * p + 1);
  }
  return det;
}

}  // namespace

SectorBasis enumerate_sector(int r, int na, int nb) {
  if (r < 0 || r > 31 || na < 0 || nb < 0 || na > r || nb > r) {
    throw DomainError("invalid sector specification");
  }
  std::vector<std::uint64_t> as, bs, dets;
  combinations(r, na, 0, 0, as);
  combinations(r, nb, 0, 0, bs);
  dets.reserve(as.size() * bs.size());
  for (auto a : as)
    for (auto b : bs) dets.push_back(interleave(a, b, r));
  return SectorBasis(r, na, nb, std::move(dets));
}

Eigen::MatrixXd sector_hamiltonian(const molint::SpinOrbitalHamiltonian& h, const SectorBasis& basis) {
  const int n = h.n_spin_orbitals;
  if (n != basis.n_spin_orbitals()) throw DomainError("Hamiltonian and sector sizes differ");
  const int dim = basis.dim();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(dim, dim);
  for (int col = 0; col < dim; ++col) {
    const std::uint64_t det = basis[col];
    m(col, col) += h.enuc;
    for (int q = 0; q < n; ++q) {
      std::uint64_t d1 = det;
      int s1 = 1;
      if (!annihilate(d1, q, s1)) continue;
      for (int p = 0; p < n; ++p) {
        const double v = h.k1(p, q);
        if (v == 0.0) continue;
        std::uint64_t d2 = d1;
        int s2 = s1;
        if (!create(d2, p, s2)) continue;
        int row = basis.index_of(d2);
        if (row >= 0) m(row, col) += s2 * v;
      }
    }
    for (int q = 0; q < n; ++q)
      for (int s = q + 1; s < n; ++s) {
        std::uint64_t d1 = det;
        int s1 = 1;
        if (!annihilate(d1, q, s1) || !annihilate(d1, s, s1)) continue;
        for (int p = 0; p < n; ++p)
          for (int r = p + 1; r < n; ++r) {
            const double v = h.v2(p, r, q, s);
            if (v == 0.0) continue;
            std::uint64_t d2 = d1;
            int s2 = s1;
            if (!create(d2, r, s2) || !create(d2, p, s2)) continue;
            int row = basis.index_of(d2);
            if (row >= 0) m(row, col) += s2 * v;
          }
      }
  }
  return m;
}

Eigen::MatrixXd sector_s2(const SectorBasis& basis) {
  const int r = basis.n_spatial();
  const int dim = basis.dim();
  const double sz = 0.5 * (basis.n_alpha() - basis.n_beta());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim, dim) * (sz * sz + sz);
  // S- S+ = Σ_pq a†_{p,b} a_{p,a} a†_{q,a} a_{q,b}
  for (int col = 0; col < dim; ++col) {
    for (int q = 0; q < r; ++q) {
      std::uint64_t d1 = basis[col];
      int s1 = 1;
      if (!annihilate(d1, 2 * q + 1, s1) || !create(d1, 2 * q, s1)) continue;
      for (int p = 0; p < r; ++p) {
        std::uint64_t d2 = d1;
        int s2 = s1;
        if (!annihilate(d2, 2 * p, s2) || !create(d2, 2 * p + 1, s2)) continue;
        int row = basis.index_of(d2);
        if (row >= 0) m(row, col) += s2;
      }
    }
  }
  return m;
}

namespace {

void fix_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    Eigen::Index imax = 0;
    v.col(j).cwiseAbs().maxCoeff(&imax);
    if (v(imax, j) < 0) v.col(j) *= -1.0;
  }
}

}  // namespace

Eigensystem fci_solve(const Eigen::MatrixXd& matrix) {
  if (matrix.rows() != matrix.cols()) throw DomainError("matrix is not square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix);
  if (es.info() != Eigen::Success) throw ConvergenceError("dense eigensolver failed", 0.0);
  Eigensystem out{es.eigenvalues(), es.eigenvectors()};
  fix_signs(out.vectors);
  return out;
}

// --------------------------------------------------------------- symmetry --

std::string SymmetryLabel::str() const {
  std::string s = spin ? fmt::format("S={:g}", *spin) : std::string("S=mixed");
  return s + " " + (irrep ? std::string(d2h::label(*irrep)) : std::string("mixed"));
}

d2h::Irrep determinant_irrep(std::uint64_t det, const std::vector<d2h::Irrep>& mo) {
  d2h::Irrep g = d2h::Irrep::Ag;
  for (int p = 0; p < 2 * static_cast<int>(mo.size()); ++p) {
    if (det >> p & 1) g = d2h::product(g, mo[p / 2]);
  }
  return g;
}

Eigen::VectorXd generator_diagonal(const SectorBasis& basis, const std::vector<d2h::Irrep>& mo,
                                   int generator) {
  if (mo.empty()) throw UnsupportedError("no point-group information for this geometry");
  if (static_cast<int>(mo.size()) != basis.n_spatial()) throw DomainError("orbital irrep count mismatch");
  Eigen::VectorXd d(basis.dim());
  for (int i = 0; i < basis.dim(); ++i) d(i) = d2h::characters(determinant_irrep(basis[i], mo))[generator];
  return d;
}

namespace {

std::optional<double> spin_from_s2(double s2, double tol) {
  double s = 0.5 * (std::sqrt(std::max(0.0, 1.0 + 4.0 * s2)) - 1.0);
  double s_half = std::round(2.0 * s) / 2.0 + 0.0;  // + 0.0 turns -0 into 0
  if (std::abs(s_half * (s_half + 1.0) - s2) < tol) return s_half;
  return std::nullopt;
}

}  // namespace

SymmetryLabel classify(const SectorBasis& basis, const Eigen::VectorXcd& c,
                       const std::vector<d2h::Irrep>& mo, bool require_irrep) {
  if (c.size() != basis.dim()) throw DomainError("coefficient count does not match sector");
  SymmetryLabel out;
  const double nrm2 = c.squaredNorm();
  out.sz = 0.5 * (basis.n_alpha() - basis.n_beta());
  out.s2 = (c.adjoint() * sector_s2(basis).cast<cplx>() * c)(0).real() / nrm2;
  out.spin = spin_from_s2(out.s2, 1e-6);
  if (mo.empty()) {
    if (require_irrep) throw UnsupportedError("irrep classification unavailable: geometry lacks D2h symmetry");
    return out;
  }
  std::array<int, 3> chi{};
  for (int g = 0; g < 3; ++g) {
    double e = (c.cwiseAbs2().array() * generator_diagonal(basis, mo, g).array()).sum() / nrm2;
    if (std::abs(std::abs(e) - 1.0) > 1e-6) return out;
    chi[g] = e > 0 ? 1 : -1;
  }
  out.irrep = d2h::from_characters(chi);
  return out;
}

ClassifiedSpectrum classify_spectrum(const molint::SpinOrbitalHamiltonian& h, const SectorBasis& basis,
                                     const std::vector<d2h::Irrep>& mo, double tol) {
  const Eigen::MatrixXd hm = sector_hamiltonian(h, basis);
  const Eigen::MatrixXd s2 = sector_s2(basis);
  const int dim = basis.dim();

  std::vector<std::vector<int>> blocks;
  if (mo.empty()) {
    blocks.emplace_back(dim);
    std::iota(blocks[0].begin(), blocks[0].end(), 0);
  } else {
    blocks.resize(d2h::kIrrepCount);
    for (int i = 0; i < dim; ++i) blocks[static_cast<int>(determinant_irrep(basis[i], mo))].push_back(i);
  }

  struct Entry {
    double energy;
    int block;
    double s2;
    Eigen::VectorXd vec;
  };
  std::vector<Entry> entries;
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& idx = blocks[b];
    const int m = static_cast<int>(idx.size());
    if (m == 0) continue;
    Eigen::MatrixXd hb(m, m), sb(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        hb(i, j) = hm(idx[i], idx[j]);
        sb(i, j) = s2(idx[i], idx[j]);
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hb);
    Eigen::VectorXd vals = es.eigenvalues();
    Eigen::MatrixXd vecs = es.eigenvectors();
    for (int start = 0; start < m;) {
      int end = start + 1;
      while (end < m && vals(end) - vals(end - 1) < tol) ++end;
      if (end - start > 1) {
        Eigen::MatrixXd sub = vecs.middleCols(start, end - start);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ss(sub.transpose() * sb * sub);
        vecs.middleCols(start, end - start) = sub * ss.eigenvectors();
      }
      start = end;
    }
    for (int j = 0; j < m; ++j) {
      Eigen::VectorXd full = Eigen::VectorXd::Zero(dim);
      for (int i = 0; i < m; ++i) full(idx[i]) = vecs(i, j);
      entries.push_back({vals(j), static_cast<int>(b), full.dot(s2 * full), full});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [&](const Entry& a, const Entry& b) {
    if (std::abs(a.energy - b.energy) >= tol) return a.energy < b.energy;
    if (a.block != b.block) return a.block < b.block;
    return a.s2 < b.s2 - 1e-6;
  });

  ClassifiedSpectrum out;
  out.energies.resize(dim);
  out.vectors.resize(dim, dim);
  for (int j = 0; j < dim; ++j) {
    out.energies(j) = entries[j].energy;
    out.vectors.col(j) = entries[j].vec;
  }
  fix_signs(out.vectors);
  for (int j = 0; j < dim; ++j) {
    out.labels.push_back(classify(basis, out.vectors.col(j).cast<cplx>(), mo, false));
  }
  return out;
}

std::map<std::pair<d2h::Irrep, int>, int> dimension_table(const ClassifiedSpectrum& spectrum) {
  std::map<std::pair<d2h::Irrep, int>, int> table;
  for (const auto& l : spectrum.labels) {
    if (!l.irrep || !l.spin) throw SymmetryError("eigenstate without a definite symmetry label");
    ++table[{*l.irrep, l.multiplicity()}];
  }
  return table;
}

std::string spectrum_csv(const ClassifiedSpectrum& spectrum) {
  std::string out = "index,energy,S,irrep\n";
  for (Eigen::Index j = 0; j < spectrum.energies.size(); ++j) {
    const auto& l = spectrum.labels[j];
    out += fmt::format("{},{:.12f},{},{}\n", j, spectrum.energies(j),
                       l.spin ? fmt::format("{:g}", *l.spin) : std::string("mixed"),
                       l.irrep ? std::string(d2h::label(*l.irrep)) : std::string("mixed"));
  }
  return out;
}

}  // namespace escqe::fci
