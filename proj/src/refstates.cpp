#include "escqe/refstates.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <tuple>

#include "escqe/error.hpp"
#include "fock.hpp"

namespace escqe::refstates {

// ------------------------------------------------------------------ specs --

std::string DeterminantSpec::str() const { return fmt::format("det:{}", fmt::join(occupied, ",")); }

std::uint64_t DeterminantSpec::bits() const {
  std::uint64_t b = 0;
  for (int p : occupied) {
    if (p < 0 || p > 62) throw DomainError("spin-orbital index out of range");
    if (b >> p & 1) throw DomainError("spin orbital occupied twice");
    b |= std::uint64_t{1} << p;
  }
  return b;
}

double CsfSpec::spin() const {
  double s = 0.0;
  for (char c : path) s += c == '+' ? 0.5 : -0.5;
  return s;
}

int CsfSpec::open_shells() const {
  return static_cast<int>(std::count(occupation.begin(), occupation.end(), 1));
}

void CsfSpec::validate() const {
  for (int o : occupation) {
    if (o < 0 || o > 2) throw DomainError("orbital occupation must be 0, 1 or 2");
  }
  if (static_cast<int>(path.size()) != open_shells()) {
    throw DomainError(fmt::format("coupling path '{}' does not match {} open shells", path, open_shells()));
  }
  double s = 0.0;
  for (char c : path) {
    if (c != '+' && c != '-') throw DomainError(fmt::format("invalid coupling step '{}'", c));
    s += c == '+' ? 0.5 : -0.5;
    if (s < 0.0) throw DomainError(fmt::format("coupling path '{}' branches below zero spin", path));
  }
  if (std::abs(m) > s + 1e-12 || std::abs(std::round(s - m) - (s - m)) > 1e-12) {
    throw DomainError(fmt::format("projection M={} is incompatible with S={}", m, s));
  }
}

std::string CsfSpec::str() const {
  std::string occ;
  for (int o : occupation) occ += static_cast<char>('0' + o);
  std::string s = fmt::format("csf:{}:{}", occ, path);
  if (m != 0.0) s += fmt::format(":m={:g}", m);
  return s;
}

std::string spec_string(const GuessSpec& spec) {
  return std::visit([](const auto& s) { return s.str(); }, spec);
}

namespace {

int parse_int(std::string_view s) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(fmt::format("invalid integer '{}'", s), 0);
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

GuessSpec parse_spec(std::string_view text) {
  auto parts = split(text, ':');
  if (parts[0] == "det" && parts.size() == 2) {
    DeterminantSpec d;
    if (!parts[1].empty())
      for (auto tok : split(parts[1], ',')) d.occupied.push_back(parse_int(tok));
    std::sort(d.occupied.begin(), d.occupied.end());
    return d;
  }
  if (parts[0] == "csf" && (parts.size() == 3 || parts.size() == 4)) {
    CsfSpec c;
    for (char ch : parts[1]) {
      if (ch < '0' || ch > '2') throw ParseError(fmt::format("invalid occupation '{}'", parts[1]), 0);
      c.occupation.push_back(ch - '0');
    }
    c.path = std::string(parts[2]);
    if (parts.size() == 4) {
      if (parts[3].substr(0, 2) != "m=") throw ParseError("expected m=<value>", 0);
      c.m = std::stod(std::string(parts[3].substr(2)));
    }
    return c;
  }
  throw ParseError(fmt::format("unrecognized state spec '{}'", text), 0);
}

// ------------------------------------------------------------ preparation --

StateVector prepare_determinant(const DeterminantSpec& spec, int n) {
  std::uint64_t b = spec.bits();
  if (n < 64 && (b >> n) != 0) throw DomainError("determinant exceeds qubit count");
  return StateVector::basis(n, b);
}

double coupling_coefficient(double step, double sigma, double s, double m) {
  if (s < 0.0 || std::abs(m) > s + 1e-12) return 0.0;
  if (step > 0) {
    if (s == 0.0) return 0.0;
    return sigma > 0 ? std::sqrt((s + m) / (2.0 * s)) : std::sqrt((s - m) / (2.0 * s));
  }
  return sigma > 0 ? -std::sqrt((s + 1.0 - m) / (2.0 * s + 2.0)) : std::sqrt((s + 1.0 + m) / (2.0 * s + 2.0));
}

StateVector prepare_csf(const CsfSpec& spec, int n) {
  spec.validate();
  const int r = static_cast<int>(spec.occupation.size());
  if (2 * r != n) throw DomainError("CSF orbital count does not match qubit count");
  std::uint64_t core = 0;
  std::vector<int> open;
  for (int p = 0; p < r; ++p) {
    if (spec.occupation[p] == 2) core |= (std::uint64_t{3} << (2 * p));
    if (spec.occupation[p] == 1) open.push_back(p);
  }
  const int m_open = static_cast<int>(open.size());
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(Eigen::Index{1} << n);
  // Spin assignment: bit j set means the j-th open orbital carries beta.
  for (std::uint32_t mask = 0; mask < (1u << m_open); ++mask) {
    double s = 0.0, mz = 0.0, coeff = 1.0;
    for (int j = 0; j < m_open && coeff != 0.0; ++j) {
      double step = spec.path[j] == '+' ? 0.5 : -0.5;
      double sigma = (mask >> j & 1) ? -0.5 : 0.5;
      s += step;
      mz += sigma;
      coeff *= coupling_coefficient(step, sigma, s, mz);
    }
    if (coeff == 0.0 || std::abs(mz - spec.m) > 1e-12) continue;
    // a†_{o1 σ1} ... a†_{om σm} |core>, rightmost operator first.
    std::uint64_t det = core;
    int sign = 1;
    for (int j = m_open - 1; j >= 0; --j) {
      detail::create(det, 2 * open[j] + static_cast<int>(mask >> j & 1), sign);
    }
    amp(static_cast<Eigen::Index>(det)) += sign * coeff;
  }
  for (Eigen::Index i = 0; i < amp.size(); ++i) {
    if (std::abs(amp(i)) > 1e-14) {
      if (amp(i).real() < 0) amp = -amp;
      break;
    }
  }
  const double nrm = amp.norm();
  if (nrm < 1e-12) throw DomainError("coupling path yields no state for this projection");
  amp /= nrm;
  return StateVector::from_amplitudes(n, std::move(amp));
}

StateVector prepare(const GuessSpec& spec, int n) {
  if (auto* d = std::get_if<DeterminantSpec>(&spec)) return prepare_determinant(*d, n);
  return prepare_csf(std::get<CsfSpec>(spec), n);
}

// -------------------------------------------------------------------- pool --

PoolKind parse_pool_kind(std::string_view t) {
  if (t == "sd") return PoolKind::SD;
  if (t == "csf") return PoolKind::CSF;
  if (t == "mixed") return PoolKind::Mixed;
  throw ParseError(fmt::format("unknown guess kind '{}'", t), 0);
}

std::string_view pool_kind_name(PoolKind k) {
  switch (k) {
    case PoolKind::SD: return "sd";
    case PoolKind::CSF: return "csf";
    default: return "mixed";
  }
}

std::vector<std::string> coupling_paths(int open, double m) {
  std::vector<std::string> out;
  std::string cur;
  auto rec = [&](auto&& self, int twice_s) -> void {
    if (static_cast<int>(cur.size()) == open) {
      if (twice_s >= std::lround(2 * std::abs(m)) && ((twice_s - std::lround(2 * m)) % 2 == 0)) out.push_back(cur);
      return;
    }
    cur.push_back('+');
    self(self, twice_s + 1);
    cur.back() = '-';
    if (twice_s > 0) self(self, twice_s - 1);
    cur.pop_back();
  };
  rec(rec, 0);
  return out;
}

namespace {

void occupations(int r, int left, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == r) {
    if (left == 0) out.push_back(cur);
    return;
  }
  for (int o = 2; o >= 0; --o) {
    if (o > left) continue;
    cur.push_back(o);
    occupations(r, left - o, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<Guess> guess_pool(const QubitOperator& h, int r, int n_electrons, double sz, PoolKind kind) {
  const int n = 2 * r;
  if (h.n_qubits() != n) throw DomainError("Hamiltonian does not match orbital count");
  const long twice_sz = std::lround(2 * sz);
  if ((n_electrons + twice_sz) % 2 != 0 || std::abs(twice_sz) > n_electrons) {
    throw DomainError("Sz incompatible with electron count");
  }
  std::vector<GuessSpec> specs;
  if (kind != PoolKind::CSF) {
    const int na = static_cast<int>((n_electrons + twice_sz) / 2), nb = n_electrons - na;
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << n); ++b) {
      int ca = 0, cb = 0;
      DeterminantSpec d;
      for (int p = 0; p < n; ++p) {
        if (!(b >> p & 1)) continue;
        (p % 2 == 0 ? ca : cb)++;
        d.occupied.push_back(p);
      }
      if (ca == na && cb == nb) specs.emplace_back(std::move(d));
    }
  }
  if (kind != PoolKind::SD) {
    std::vector<std::vector<int>> occs;
    std::vector<int> cur;
    occupations(r, n_electrons, cur, occs);
    for (const auto& occ : occs) {
      int open = static_cast<int>(std::count(occ.begin(), occ.end(), 1));
      if (kind == PoolKind::Mixed && open == 0) continue;
      for (const auto& path : coupling_paths(open, sz)) specs.emplace_back(CsfSpec{occ, path, sz});
    }
  }
  std::vector<Guess> pool;
  pool.reserve(specs.size());
  for (auto& s : specs) {
    StateVector v = prepare(s, n);
    double e = sim::expectation(v, h).real();
    pool.push_back({s, e, spec_string(s)});
  }
  std::stable_sort(pool.begin(), pool.end(), [](const Guess& a, const Guess& b) {
    auto ka = std::llround(a.energy * 1e10), kb = std::llround(b.energy * 1e10);
    return std::tie(ka, a.label) < std::tie(kb, b.label);
  });
  return pool;
}

}  // namespace escqe::refstates
