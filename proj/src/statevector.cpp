#include "escqe/statevector.hpp"

#include <spdlog/spdlog.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "escqe/error.hpp"

namespace escqe::sim {

namespace {

constexpr cplx kI{0.0, 1.0};

cplx i_pow(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

inline bool parity(std::uint64_t v) { return std::popcount(v) & 1; }

constexpr char kSnapshotMagic[8] = {'E', 'S', 'C', 'Q', 'E', 'S', 'V', '1'};

}  // namespace

// ------------------------------------------------------------ StateVector --

StateVector StateVector::basis(int n, std::uint64_t index) {
  if (n < 0 || n > 30) throw DomainError("unsupported qubit count");
  if (index >= (std::uint64_t{1} << n)) throw DomainError("basis index out of range");
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(std::uint64_t{1} << n));
  amp(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(n, std::move(amp));
}

StateVector StateVector::from_amplitudes(int n, Eigen::VectorXcd amp, double tol) {
  if (amp.size() != static_cast<Eigen::Index>(std::uint64_t{1} << n)) {
    throw DomainError("amplitude count does not match qubit count");
  }
  if (std::abs(amp.norm() - 1.0) > tol) {
    throw DomainError("state is not normalized (norm " + std::to_string(amp.norm()) + ")");
  }
  return StateVector(n, std::move(amp));
}

double StateVector::renormalize() {
  double nrm = amp_.norm();
  if (nrm == 0.0) throw DomainError("cannot renormalize the zero vector");
  if (std::abs(nrm - 1.0) > 1e-14) {
    spdlog::debug("renormalizing state: norm deviation {:.3e}", nrm - 1.0);
  }
  amp_ /= nrm;
  return nrm;
}

void GadgetSequence::append(const GadgetSequence& other) {
  if (n_qubits == 0) n_qubits = other.n_qubits;
  if (other.n_qubits != n_qubits && !other.empty()) throw DomainError("gadget qubit mismatch");
  gadgets.insert(gadgets.end(), other.gadgets.begin(), other.gadgets.end());
}

// ---------------------------------------------------------------- gadgets --

void apply_gadget(Eigen::VectorXcd& amp, const PauliWord& w, double angle) {
  if (angle == 0.0) return;
  const std::uint64_t dim = static_cast<std::uint64_t>(amp.size());
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  if (w.x == 0) {
    const cplx plus(c, s), minus(c, -s);
    for (std::uint64_t b = 0; b < dim; ++b) amp(b) *= parity(b & w.z) ? minus : plus;
    return;
  }
  // P|b> = i^{ny} (-1)^{|b&z|} |b^x>; update each pair (b, b^x) once.
  const cplx yph = i_pow(w.y_count());
  const std::uint64_t top = std::uint64_t{1} << (63 - std::countl_zero(w.x));
  for (std::uint64_t b = 0; b < dim; ++b) {
    if (b & top) continue;
    const std::uint64_t b2 = b ^ w.x;
    const cplx p_b = yph * (parity(b & w.z) ? -1.0 : 1.0);   // <b2|P|b>
    const cplx p_b2 = yph * (parity(b2 & w.z) ? -1.0 : 1.0);  // <b|P|b2>
    const cplx a = amp(b), a2 = amp(b2);
    amp(b) = c * a + kI * s * p_b2 * a2;
    amp(b2) = c * a2 + kI * s * p_b * a;
  }
}

void apply_gadget(StateVector& state, const PauliWord& w, double angle) {
  apply_gadget(state.mutable_amplitudes(), w, angle);
}

void apply_sequence(StateVector& state, const GadgetSequence& seq) {
  if (!seq.empty() && seq.n_qubits != state.n_qubits()) throw DomainError("gadget qubit mismatch");
  for (const auto& g : seq.gadgets) apply_gadget(state.mutable_amplitudes(), g.word, g.angle);
}

Eigen::VectorXcd pauli_action(const Eigen::VectorXcd& v, const PauliWord& w) {
  const std::uint64_t dim = static_cast<std::uint64_t>(v.size());
  const cplx yph = i_pow(w.y_count());
  Eigen::VectorXcd out(v.size());
  for (std::uint64_t b = 0; b < dim; ++b) {
    out(b ^ w.x) = yph * (parity(b & w.z) ? -1.0 : 1.0) * v(b);
  }
  return out;
}

GadgetSequence trotter_sequence(const PauliSum& op, double epsilon) {
  GadgetSequence seq;
  seq.n_qubits = op.n_qubits();
  for (const auto& [w, c] : op.terms()) {
    if (std::abs(c.real()) > 1e-12) throw SymmetryError("trotter generator is not anti-Hermitian");
    if (w.is_identity()) continue;  // global phase
    double angle = epsilon * c.imag();
    if (angle != 0.0) seq.gadgets.push_back({w, angle});
  }
  return seq;
}

GadgetSequence apply_two_body_step(StateVector& state, const TwoBodyCoefficients& a,
                                   double epsilon) {
  if (a.hermiticity() != secondq::Hermiticity::AntiHermitian) {
    throw SymmetryError("two-body step requires an anti-Hermitian generator");
  }
  if (a.n() != state.n_qubits()) throw DomainError("generator size does not match the state");
  GadgetSequence seq;
  seq.n_qubits = a.n();
  for (const auto& term : secondq::two_body_terms_to_pauli(a)) seq.append(trotter_sequence(term, epsilon));
  apply_sequence(state, seq);
  return seq;
}

// -------------------------------------------------------------- operators --

QubitOperator::QubitOperator(const PauliSum& op) : n_(op.n_qubits()), pauli_(op) {
  const std::uint64_t dim = std::uint64_t{1} << n_;
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(op.size() * dim);
  for (const auto& [w, c] : op.terms()) {
    const cplx yph = c * i_pow(w.y_count());
    for (std::uint64_t b = 0; b < dim; ++b) {
      trip.emplace_back(static_cast<int>(b ^ w.x), static_cast<int>(b),
                        parity(b & w.z) ? -yph : yph);
    }
  }
  m_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  m_.setFromTriplets(trip.begin(), trip.end());
  m_.prune(cplx(0.0), 1e-15);
}

cplx expectation(const StateVector& state, const PauliSum& op) {
  if (op.n_qubits() != state.n_qubits()) throw DomainError("operator size does not match the state");
  const auto& v = state.amplitudes();
  const std::uint64_t dim = state.dim();
  cplx total = 0.0;
  for (const auto& [w, c] : op.terms()) {
    const cplx yph = i_pow(w.y_count());
    cplx acc = 0.0;
    for (std::uint64_t b = 0; b < dim; ++b) {
      acc += std::conj(v(b ^ w.x)) * (parity(b & w.z) ? -1.0 : 1.0) * v(b);
    }
    total += c * yph * acc;
  }
  return total;
}

cplx expectation(const StateVector& state, const QubitOperator& op) {
  return state.amplitudes().dot(op.apply(state.amplitudes()));
}

cplx inner_product(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw DomainError("qubit count mismatch");
  return a.amplitudes().dot(b.amplitudes());  // conjugates the first argument
}

// ---------------------------------------------------------- density matrices --

Eigen::MatrixXcd pair_annihilate(const Eigen::VectorXcd& v, int n) {
  const int np = n * (n - 1) / 2;
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), np);
  int p = 0;
  for (int i = 0; i < n; ++i) {
    const std::uint64_t bi = std::uint64_t{1} << i;
    for (int k = i + 1; k < n; ++k, ++p) {
      const std::uint64_t bk = std::uint64_t{1} << k;
      for (std::uint64_t b = 0; b < dim; ++b) {
        if (!(b & bi) || !(b & bk)) continue;
        const cplx amp = v(b);
        if (amp == cplx{}) continue;
        const std::uint64_t b1 = b ^ bi;
        const bool s = parity(b & (bi - 1)) ^ parity(b1 & (bk - 1));
        w(b1 ^ bk, p) = s ? -amp : amp;
      }
    }
  }
  return w;
}

TwoBodyCoefficients transition_2rdm(const Eigen::MatrixXcd& wa, const Eigen::MatrixXcd& wb,
                                    int n) {
  return TwoBodyCoefficients(n, wa.adjoint() * wb);
}

TwoBodyCoefficients transition_2rdm(const StateVector& a, const StateVector& b) {
  if (a.n_qubits() != b.n_qubits()) throw DomainError("qubit count mismatch");
  const int n = a.n_qubits();
  return transition_2rdm(pair_annihilate(a.amplitudes(), n), pair_annihilate(b.amplitudes(), n), n);
}

// ------------------------------------------------------ controlled circuits --

StateVector controlled_pair_circuit(const GadgetSequence& seq_k, const StateVector& init_k,
                                    const GadgetSequence& seq_j, const StateVector& init_j) {
  const int n = init_k.n_qubits();
  if (init_j.n_qubits() != n || (!seq_k.empty() && seq_k.n_qubits != n) ||
      (!seq_j.empty() && seq_j.n_qubits != n)) {
    throw DomainError("branch qubit counts differ");
  }
  const std::uint64_t half = std::uint64_t{1} << n;
  Eigen::VectorXcd amp(static_cast<Eigen::Index>(2 * half));
  amp.head(half) = init_k.amplitudes() / std::sqrt(2.0);
  amp.tail(half) = init_j.amplitudes() / std::sqrt(2.0);
  const std::uint64_t anc = half;
  auto controlled = [&](const Gadget& g, bool on_one) {
    PauliWord iz = g.word;
    iz.z |= anc;
    apply_gadget(amp, g.word, 0.5 * g.angle);
    apply_gadget(amp, iz, on_one ? -0.5 * g.angle : 0.5 * g.angle);
  };
  const size_t steps = std::max(seq_k.size(), seq_j.size());
  for (size_t s = 0; s < steps; ++s) {
    if (s < seq_k.size()) controlled(seq_k.gadgets[s], false);
    if (s < seq_j.size()) controlled(seq_j.gadgets[s], true);
  }
  return StateVector::from_amplitudes(n + 1, std::move(amp));
}

cplx ancilla_overlap(const StateVector& pair_state) {
  const int n = pair_state.n_qubits();
  auto x = expectation(pair_state, PauliSum::term(n, PauliWord::single(n - 1, 'X'), 1.0));
  auto y = expectation(pair_state, PauliSum::term(n, PauliWord::single(n - 1, 'Y'), 1.0));
  return x - kI * y;
}

cplx controlled_pair_tdm(const StateVector& pair_state, int i, int k, int l, int j) {
  const int n = pair_state.n_qubits() - 1;
  PauliSum gamma = secondq::gamma_op(i, k, l, j, n);
  PauliSum xg(n + 1), yg(n + 1);
  for (const auto& [w, c] : gamma.terms()) {
    auto [px, wx] = secondq::multiply(PauliWord::single(n, 'X'), w);
    auto [py, wy] = secondq::multiply(PauliWord::single(n, 'Y'), w);
    xg.add(wx, px * c);
    yg.add(wy, py * c);
  }
  return expectation(pair_state, xg) - kI * expectation(pair_state, yg);
}

// -------------------------------------------------------------- snapshots --

void write_snapshot(const std::string& path, const StateVector& state) {
  static_assert(std::endian::native == std::endian::little, "snapshot writer assumes little-endian");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f.write(kSnapshotMagic, 8);
  std::uint32_t n = static_cast<std::uint32_t>(state.n_qubits());
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (std::uint64_t b = 0; b < state.dim(); ++b) {
    double re = state[b].real(), im = state[b].imag();
    f.write(reinterpret_cast<const char*>(&re), sizeof re);
    f.write(reinterpret_cast<const char*>(&im), sizeof im);
  }
}

StateVector read_snapshot(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open " + path, 0);
  char magic[8];
  std::uint32_t n = 0;
  if (!f.read(magic, 8) || std::memcmp(magic, kSnapshotMagic, 8) != 0) {
    throw ParseError("not a statevector snapshot", 0);
  }
  if (!f.read(reinterpret_cast<char*>(&n), sizeof n) || n > 30) throw ParseError("bad snapshot header", 0);
  const std::uint64_t dim = std::uint64_t{1} << n;
  Eigen::VectorXcd amp(static_cast<Eigen::Index>(dim));
  for (std::uint64_t b = 0; b < dim; ++b) {
    double re, im;
    if (!f.read(reinterpret_cast<char*>(&re), sizeof re) || !f.read(reinterpret_cast<char*>(&im), sizeof im)) {
      throw ParseError("truncated snapshot", 0);
    }
    amp(b) = cplx(re, im);
  }
  return StateVector::from_amplitudes(static_cast<int>(n), std::move(amp));
}

// ---------------------------------------------------------------- sampling --

double ShotSampler::estimate(const StateVector& state, const PauliWord& w) {
  if (w.is_identity()) return 1.0;
  double exact = expectation(state, PauliSum::term(state.n_qubits(), w, 1.0)).real();
  double p = std::clamp(0.5 * (1.0 + exact), 0.0, 1.0);
  std::binomial_distribution<std::uint64_t> dist(shots_, p);
  return 2.0 * static_cast<double>(dist(rng_)) / static_cast<double>(shots_) - 1.0;
}

cplx ShotSampler::estimate(const StateVector& state, const PauliSum& op) {
  cplx total = 0.0;
  for (const auto& [w, c] : op.terms()) total += c * estimate(state, w);
  return total;
}

}  // namespace escqe::sim
