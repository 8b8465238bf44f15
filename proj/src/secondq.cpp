#include "escqe/secondq.hpp"

#include <algorithm>
#include <cstdio>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "escqe/error.hpp"

namespace escqe::secondq {

namespace {

constexpr cplx kI{0.0, 1.0};

int letter_code(const PauliWord& w, int q) {
  std::uint64_t bit = std::uint64_t{1} << q;
  bool x = w.x & bit, z = w.z & bit;
  if (x && z) return 2;
  if (x) return 1;
  if (z) return 3;
  return 0;
}

cplx i_pow(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

void check_qubit(int p, int n) {
  if (p < 0 || p >= n) throw DomainError("orbital index " + std::to_string(p) + " out of range");
}

}  // namespace

// ------------------------------------------------------------- PauliWord --

PauliWord PauliWord::single(int q, char letter) {
  PauliWord w;
  std::uint64_t bit = std::uint64_t{1} << q;
  switch (letter) {
    case 'I': break;
    case 'X': w.x = bit; break;
    case 'Y': w.x = bit; w.z = bit; break;
    case 'Z': w.z = bit; break;
    default: throw DomainError(std::string("bad Pauli letter ") + letter);
  }
  return w;
}

PauliWord PauliWord::parse(std::string_view text) {
  PauliWord w;
  const int n = static_cast<int>(text.size());
  for (int i = 0; i < n; ++i) {
    PauliWord s = single(n - 1 - i, text[i]);
    w.x |= s.x;
    w.z |= s.z;
  }
  return w;
}

char PauliWord::letter(int q) const { return "IXYZ"[letter_code(*this, q)]; }

std::string PauliWord::str(int n) const {
  std::string s(static_cast<size_t>(n), 'I');
  for (int q = 0; q < n; ++q) s[n - 1 - q] = letter(q);
  return s;
}

bool PauliWordLess::operator()(const PauliWord& a, const PauliWord& b) const {
  std::uint64_t d = (a.x ^ b.x) | (a.z ^ b.z);
  if (d == 0) return false;
  int q = 63 - __builtin_clzll(d);
  return letter_code(a, q) < letter_code(b, q);
}

std::pair<cplx, PauliWord> multiply(const PauliWord& a, const PauliWord& b) {
  // P = i^{|x&z|} X^x Z^z, so Z^{z1} X^{x2} = (-1)^{|z1&x2|} X^{x2} Z^{z1}.
  PauliWord c{a.x ^ b.x, a.z ^ b.z};
  int k = a.y_count() + b.y_count() - c.y_count() + 2 * __builtin_popcountll(a.z & b.x);
  return {i_pow(k), c};
}

// -------------------------------------------------------------- PauliSum --

PauliSum PauliSum::identity(int n, cplx c) { return term(n, PauliWord{}, c); }

PauliSum PauliSum::term(int n, PauliWord w, cplx c) {
  PauliSum s(n);
  s.add(w, c);
  return s;
}

cplx PauliSum::coefficient(const PauliWord& w) const {
  auto it = terms_.find(w);
  return it == terms_.end() ? cplx{} : it->second;
}

void PauliSum::add(const PauliWord& w, cplx c) {
  if (c == cplx{}) return;
  terms_[w] += c;
}

PauliSum& PauliSum::simplify(double threshold) {
  for (auto it = terms_.begin(); it != terms_.end();) {
    if (std::abs(it->second) < threshold) {
      it = terms_.erase(it);
    } else {
      ++it;
    }
  }
  return *this;
}

PauliSum& PauliSum::operator+=(const PauliSum& o) {
  if (n_ == 0) n_ = o.n_;
  for (const auto& [w, c] : o.terms_) terms_[w] += c;
  return simplify();
}

PauliSum& PauliSum::operator-=(const PauliSum& o) {
  if (n_ == 0) n_ = o.n_;
  for (const auto& [w, c] : o.terms_) terms_[w] -= c;
  return simplify();
}

PauliSum& PauliSum::operator*=(cplx s) {
  for (auto& [w, c] : terms_) c *= s;
  return simplify();
}

PauliSum operator*(const PauliSum& a, const PauliSum& b) {
  PauliSum out(std::max(a.n_qubits(), b.n_qubits()));
  for (const auto& [wa, ca] : a.terms()) {
    for (const auto& [wb, cb] : b.terms()) {
      auto [phase, w] = multiply(wa, wb);
      out.add(w, phase * ca * cb);
    }
  }
  return out.simplify();
}

PauliSum PauliSum::adjoint() const {
  PauliSum out(n_);
  for (const auto& [w, c] : terms_) out.terms_[w] = std::conj(c);
  return out;
}

bool PauliSum::is_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [&](const auto& t) { return std::abs(t.second.imag()) <= tol; });
}

bool PauliSum::is_anti_hermitian(double tol) const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [&](const auto& t) { return std::abs(t.second.real()) <= tol; });
}

double PauliSum::coefficient_norm(bool include_identity) const {
  double s = 0.0;
  for (const auto& [w, c] : terms_) {
    if (!include_identity && w.is_identity()) continue;
    s += std::abs(c);
  }
  return s;
}

Eigen::MatrixXcd PauliSum::to_dense() const {
  const std::uint64_t dim = std::uint64_t{1} << n_;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
  for (const auto& [w, c] : terms_) {
    cplx yph = i_pow(w.y_count());
    for (std::uint64_t b = 0; b < dim; ++b) {
      double sign = (__builtin_popcountll(b & w.z) & 1) ? -1.0 : 1.0;
      m(b ^ w.x, b) += c * yph * sign;
    }
  }
  return m;
}

std::string PauliSum::dump() const {
  std::ostringstream out;
  char buf[128];
  bool real = is_hermitian(0.0);
  for (const auto& [w, c] : terms_) {
    if (real) {
      std::snprintf(buf, sizeof buf, "%+.9e %s\n", c.real(), w.str(n_).c_str());
    } else {
      std::snprintf(buf, sizeof buf, "%+.9e %+.9e %s\n", c.real(), c.imag(), w.str(n_).c_str());
    }
    out << buf;
  }
  return out.str();
}

PauliSum PauliSum::parse_dump(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  PauliSum out;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<std::string> tok;
    std::string t;
    while (ls >> t) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 2 && tok.size() != 3) throw ParseError("bad Pauli term", line_no);
    cplx c;
    try {
      c = tok.size() == 2 ? cplx(std::stod(tok[0]), 0.0) : cplx(std::stod(tok[0]), std::stod(tok[1]));
    } catch (const std::exception&) {
      throw ParseError("bad coefficient", line_no);
    }
    const std::string& word = tok.back();
    if (out.n_ == 0) out.n_ = static_cast<int>(word.size());
    if (static_cast<int>(word.size()) != out.n_) throw ParseError("word length mismatch", line_no);
    try {
      out.add(PauliWord::parse(word), c);
    } catch (const DomainError& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return out;
}

// ------------------------------------------------------------ fermions --

PauliSum jw_fermion_op(Ladder kind, int p, int n) {
  check_qubit(p, n);
  PauliWord zs;
  zs.z = (std::uint64_t{1} << p) - 1;
  PauliWord xw = PauliWord::single(p, 'X');
  PauliWord yw = PauliWord::single(p, 'Y');
  xw.z |= zs.z;
  yw.z |= zs.z;
  PauliSum s(n);
  double sy = kind == Ladder::Create ? -0.5 : 0.5;
  s.add(xw, 0.5);
  s.add(yw, cplx(0.0, sy));
  return s;
}

PauliSum gamma_op(int i, int k, int l, int j, int n) {
  return jw_fermion_op(Ladder::Create, i, n) * jw_fermion_op(Ladder::Create, k, n) *
         jw_fermion_op(Ladder::Annihilate, l, n) * jw_fermion_op(Ladder::Annihilate, j, n);
}

PauliSum number_operator(int n) {
  PauliSum s(n);
  for (int p = 0; p < n; ++p) {
    s.add(PauliWord{}, 0.5);
    s.add(PauliWord::single(p, 'Z'), -0.5);
  }
  return s.simplify();
}

PauliSum sz_operator(int n) {
  PauliSum s(n);
  for (int p = 0; p < n; ++p) {
    s.add(PauliWord::single(p, 'Z'), (p % 2 == 0) ? -0.25 : 0.25);
  }
  return s.simplify();
}

PauliSum s2_operator(int n) {
  PauliSum splus(n);
  for (int p = 0; p + 1 < n; p += 2) {
    splus += jw_fermion_op(Ladder::Create, p, n) * jw_fermion_op(Ladder::Annihilate, p + 1, n);
  }
  PauliSum sz = sz_operator(n);
  return splus.adjoint() * splus + sz + sz * sz;
}

// ------------------------------------------------------------ PairIndex --

PairIndex::PairIndex(int n) : n_(n), index_(static_cast<size_t>(n) * n, -1) {
  for (int i = 0; i < n; ++i) {
    for (int k = i + 1; k < n; ++k) {
      index_[i * n + k] = static_cast<int>(pairs_.size());
      pairs_.emplace_back(i, k);
    }
  }
}

int PairIndex::alpha_count(int p) const {
  auto [i, k] = pairs_[p];
  return (i % 2 == 0) + (k % 2 == 0);
}

// -------------------------------------------------- TwoBodyCoefficients --

TwoBodyCoefficients::TwoBodyCoefficients(int n, Hermiticity h)
    : n_(n), herm_(h), m_(Eigen::MatrixXcd::Zero(n * (n - 1) / 2, n * (n - 1) / 2)) {}

TwoBodyCoefficients::TwoBodyCoefficients(int n, Eigen::MatrixXcd m, Hermiticity h)
    : n_(n), herm_(h), m_(std::move(m)) {
  const int np = n * (n - 1) / 2;
  if (m_.rows() != np || m_.cols() != np) throw DomainError("pair matrix has wrong shape");
}

TwoBodyCoefficients TwoBodyCoefficients::from_full(int n, const std::vector<cplx>& full,
                                                   Hermiticity h, double tol) {
  if (full.size() != static_cast<size_t>(n) * n * n * n) throw DomainError("full tensor has wrong size");
  auto at = [&](int i, int k, int j, int l) {
    return full[((static_cast<size_t>(i) * n + k) * n + j) * n + l];
  };
  TwoBodyCoefficients out(n, h);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int l = 0; l < n; ++l) {
          cplx v = at(i, k, j, l);
          if (std::abs(v + at(k, i, j, l)) > tol || std::abs(v + at(i, k, l, j)) > tol) {
            throw SymmetryError("two-body tensor is not antisymmetric");
          }
          if (i < k && j < l) out.set(i, k, j, l, v);
        }
  out.validate(tol);
  return out;
}

cplx TwoBodyCoefficients::operator()(int i, int k, int j, int l) const {
  if (i == k || j == l) return {};
  double s = 1.0;
  if (i > k) { std::swap(i, k); s = -s; }
  if (j > l) { std::swap(j, l); s = -s; }
  static thread_local std::unique_ptr<PairIndex> idx;
  if (!idx || idx->n() != n_) idx = std::make_unique<PairIndex>(n_);
  return s * m_((*idx)(i, k), (*idx)(j, l));
}

void TwoBodyCoefficients::set(int i, int k, int j, int l, cplx v) {
  if (i == k || j == l) throw SymmetryError("diagonal pair index in antisymmetric tensor");
  double s = 1.0;
  if (i > k) { std::swap(i, k); s = -s; }
  if (j > l) { std::swap(j, l); s = -s; }
  PairIndex idx(n_);
  m_(idx(i, k), idx(j, l)) = s * v;
}

void TwoBodyCoefficients::validate(double tol) const {
  if (herm_ == Hermiticity::AntiHermitian) {
    double dev = (m_ + m_.adjoint()).cwiseAbs().maxCoeff();
    if (dev > tol) {
      throw SymmetryError("tensor declared anti-Hermitian deviates by " + std::to_string(dev));
    }
  }
}

TwoBodyCoefficients& TwoBodyCoefficients::operator+=(const TwoBodyCoefficients& o) {
  m_ += o.m_;
  if (herm_ != o.herm_) herm_ = Hermiticity::General;
  return *this;
}

TwoBodyCoefficients& TwoBodyCoefficients::operator*=(cplx s) {
  m_ *= s;
  if (s.imag() != 0.0) herm_ = Hermiticity::General;
  return *this;
}

TwoBodyCoefficients anti_hermitize(const TwoBodyCoefficients& j) {
  Eigen::MatrixXcd m = 0.5 * (j.matrix() - j.matrix().adjoint());
  return TwoBodyCoefficients(j.n(), std::move(m), Hermiticity::AntiHermitian);
}

// ------------------------------------------------------------ GammaTable --

GammaTable::GammaTable(int n) : pairs_(n) {
  const int np = pairs_.size();
  std::vector<PauliSum> create(n), annihilate(n);
  for (int p = 0; p < n; ++p) {
    create[p] = jw_fermion_op(Ladder::Create, p, n);
    annihilate[p] = jw_fermion_op(Ladder::Annihilate, p, n);
  }
  std::vector<PauliSum> up(np), down(np);
  for (int p = 0; p < np; ++p) {
    auto [i, k] = pairs_[p];
    up[p] = create[i] * create[k];
    down[p] = annihilate[k] * annihilate[i];  // a_l a_j with (j,l) = (i,k)
  }
  table_.resize(static_cast<size_t>(np) * np);
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) table_[p * np + q] = up[p] * down[q];
}

const GammaTable& gamma_table(int n) {
  static std::mutex mu;
  static std::unordered_map<int, std::unique_ptr<GammaTable>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<GammaTable>(n);
  return *slot;
}

PauliSum two_body_to_pauli(const TwoBodyCoefficients& a) {
  a.validate();
  const auto& table = gamma_table(a.n());
  const int np = table.pairs().size();
  PauliSum out(a.n());
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) {
      cplx c = a.matrix()(p, q);
      if (c == cplx{}) continue;
      for (const auto& [w, g] : table.gamma(p, q).terms()) out.add(w, c * g);
    }
  return out.simplify();
}

std::vector<PauliSum> two_body_terms_to_pauli(const TwoBodyCoefficients& a) {
  a.validate();
  const auto& table = gamma_table(a.n());
  const int np = table.pairs().size();
  std::vector<PauliSum> out;
  for (int p = 0; p < np; ++p)
    for (int q = p; q < np; ++q) {
      const cplx cpq = a.matrix()(p, q);
      const cplx cqp = p == q ? cplx{} : a.matrix()(q, p);
      // real and imaginary parts separately: their words anticommute
      for (bool imag : {false, true}) {
        auto part = [imag](cplx c) { return imag ? cplx(0.0, c.imag()) : cplx(c.real()); };
        if (part(cpq) == cplx{} && part(cqp) == cplx{}) continue;
        PauliSum term(a.n());
        for (const auto& [w, g] : table.gamma(p, q).terms()) term.add(w, part(cpq) * g);
        if (p != q)
          for (const auto& [w, g] : table.gamma(q, p).terms()) term.add(w, part(cqp) * g);
        term.simplify();
        if (!term.empty()) out.push_back(std::move(term));
      }
    }
  return out;
}

PauliSum assemble_hamiltonian(const molint::SpinOrbitalHamiltonian& h) {
  const int n = h.n_spin_orbitals;
  PauliSum out = PauliSum::identity(n, h.enuc);
  for (int p = 0; p < n; ++p)
    for (int q = 0; q < n; ++q) {
      double v = h.k1(p, q);
      if (v == 0.0) continue;
      out += (jw_fermion_op(Ladder::Create, p, n) * jw_fermion_op(Ladder::Annihilate, q, n)) * cplx(v);
    }
  const auto& table = gamma_table(n);
  const auto& pairs = table.pairs();
  PauliSum two(n);
  for (int P = 0; P < pairs.size(); ++P)
    for (int Q = 0; Q < pairs.size(); ++Q) {
      auto [p, r] = pairs[P];
      auto [q, s] = pairs[Q];
      double v = h.v2(p, r, q, s);
      if (v == 0.0) continue;
      for (const auto& [w, g] : table.gamma(P, Q).terms()) two.add(w, v * g);
    }
  out += two;
  return out.simplify();
}

}  // namespace escqe::secondq
