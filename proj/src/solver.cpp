#include "escqe/solver.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <memory>
#include <mutex>

#include "escqe/error.hpp"

namespace escqe::solver {

using cplx = std::complex<double>;
using secondq::Hermiticity;
using secondq::PairIndex;
using secondq::PauliWord;

// --------------------------------------------------------------- strategy --

ConstraintStrategy ConstraintStrategy::parse(std::string_view text) {
  ConstraintStrategy s;
  std::string_view name = text.substr(0, text.find(':'));
  if (name == "lagrangian") s.kind = StrategyKind::Lagrangian;
  else if (name == "penalty") s.kind = StrategyKind::Penalty;
  else if (name == "augmented") s.kind = StrategyKind::Augmented;
  else if (name == "deflation") s.kind = StrategyKind::Deflation;
  else throw ParseError(fmt::format("unknown strategy '{}'", name), 0);
  if (name.size() < text.size()) {
    std::string_view rest = text.substr(name.size() + 1);
    while (!rest.empty()) {
      size_t comma = rest.find(',');
      std::string_view kv = rest.substr(0, comma);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      size_t eq = kv.find('=');
      if (eq == std::string_view::npos) throw ParseError(fmt::format("expected key=value in '{}'", kv), 0);
      std::string key(kv.substr(0, eq));
      double v;
      try {
        size_t used = 0;
        std::string num(kv.substr(eq + 1));
        v = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError(fmt::format("invalid number in '{}'", kv), 0);
      }
      if (key == "lambda") s.lambda = v;
      else if (key == "mu") s.mu = v;
      else if (key == "growth") s.growth = v;
      else if (key == "beta") s.beta = v;
      else throw ParseError(fmt::format("unknown strategy parameter '{}'", key), 0);
    }
  }
  s.validate();
  return s;
}

std::string ConstraintStrategy::str() const {
  switch (kind) {
    case StrategyKind::Lagrangian: return fmt::format("lagrangian:lambda={:g}", lambda);
    case StrategyKind::Penalty: return fmt::format("penalty:mu={:g}", mu);
    case StrategyKind::Augmented: return fmt::format("augmented:mu={:g},lambda={:g},growth={:g}", mu, lambda, growth);
    default: return fmt::format("deflation:beta={:g}", beta);
  }
}

void ConstraintStrategy::validate() const {
  if (!(mu > 0)) throw DomainError("mu must be positive");
  if (!(beta > 0)) throw DomainError("beta must be positive");
  if (!(growth >= 1)) throw DomainError("growth factor must be at least 1");
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
}

void OptimizerConfig::validate() const {
  if (!(residual_threshold > 0) || !(violation_threshold > 0) || !(norm_threshold > 0)) {
    throw DomainError("thresholds must be positive");
  }
  if (max_iterations < 0) throw DomainError("max_iterations must be non-negative");
  if (!(shrink > 0 && shrink < 1) || !(armijo_c1 > 0 && armijo_c1 < 1)) throw DomainError("invalid line search constants");
  if (method == Method::LBFGS && lbfgs_history < 1) throw DomainError("L-BFGS history must be positive");
}

// ----------------------------------------------------------- TangentSpace --

TangentSpace::TangentSpace(int n) : n_(n) {
  PairIndex pairs(n);
  const int np = pairs.size();
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q)
      if (pairs.alpha_count(p) == pairs.alpha_count(q)) mask_.emplace_back(p, q);
  for (auto [p, q] : mask_) {
    if (p < q) {
      params_.push_back({p, q, false});
      params_.push_back({p, q, true});
    } else if (p == q) {
      params_.push_back({p, q, true});
    }
  }
  // One gadget group per parameter: each is a real or imaginary excitation
  // term, so its words commute and the group is exact and number-conserving.
  for (size_t j = 0; j < params_.size(); ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(size());
    e(j) = 1.0;
    const secondq::PauliSum ps = secondq::two_body_to_pauli(generator(e));
    for (const auto& [w, c] : ps.terms()) {
      if (w.is_identity()) continue;
      words_.push_back(w);
      word_weights_.push_back({{static_cast<int>(j), c.imag()}});
    }
  }
}

Eigen::VectorXd TangentSpace::gradient(const Eigen::MatrixXcd& g) const {
  Eigen::VectorXd out(size());
  const cplx i(0.0, 1.0);
  for (int j = 0; j < size(); ++j) {
    const auto& pr = params_[j];
    cplx d;
    if (!pr.imaginary) d = g(pr.p, pr.q) - g(pr.q, pr.p);
    else if (pr.p != pr.q) d = i * (g(pr.p, pr.q) + g(pr.q, pr.p));
    else d = i * g(pr.p, pr.p);
    out(j) = d.real();
  }
  return out;
}

TwoBodyCoefficients TangentSpace::generator(const Eigen::VectorXd& theta) const {
  const int np = n_ * (n_ - 1) / 2;
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(np, np);
  for (int j = 0; j < size(); ++j) {
    const auto& pr = params_[j];
    const double t = theta(j);
    if (!pr.imaginary) {
      m(pr.p, pr.q) += t;
      m(pr.q, pr.p) -= t;
    } else {
      m(pr.p, pr.q) += cplx(0.0, t);
      if (pr.p != pr.q) m(pr.q, pr.p) += cplx(0.0, t);
    }
  }
  return TwoBodyCoefficients(n_, std::move(m), Hermiticity::AntiHermitian);
}

GadgetSequence TangentSpace::gadgets(const Eigen::VectorXd& theta) const {
  GadgetSequence seq;
  seq.n_qubits = n_;
  for (size_t w = 0; w < words_.size(); ++w) {
    double angle = 0.0;
    for (auto [j, c] : word_weights_[w]) angle += c * theta(j);
    if (angle != 0.0) seq.gadgets.push_back({words_[w], angle});
  }
  return seq;
}

double TangentSpace::residual_norm(const Eigen::MatrixXcd& g) const {
  double s = 0.0;
  for (auto [p, q] : mask_) s += std::norm(g(p, q));
  return std::sqrt(s);
}

namespace {

template <class T>
const T& cached(int n, T (*build)(int)) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<T>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<T>(build(n));
  return *slot;
}

TangentSpace build_tangent(int n) { return TangentSpace(n); }
QubitOperator build_s2(int n) { return QubitOperator(secondq::s2_operator(n)); }

const TangentSpace& tangent_space(int n) { return cached<TangentSpace>(n, &build_tangent); }
const QubitOperator& s2_operator(int n) { return cached<QubitOperator>(n, &build_s2); }

}  // namespace

// ------------------------------------------------------------- objective --

double Evaluation::max_violation() const {
  double m = 0.0;
  for (double h : overlaps) m = std::max(m, h);
  return m;
}

ObjectiveAdapter::ObjectiveAdapter(const QubitOperator& h, const ProjectionSet& p, ConstraintStrategy strategy,
                                   const OptimizerConfig& config)
    : h_(h), p_(p), strategy_(strategy), config_(config) {
  strategy_.validate();
  mult_.lambda.assign(p.size(), strategy_.lambda);
  mult_.mu = strategy_.mu;
  fallback_weight_ = config.fallback_weight > 0 ? config.fallback_weight : 10.0 * h.pauli().coefficient_norm(false);
}

bool ObjectiveAdapter::needs_fallback(const StateVector& psi) const {
  if (strategy_.kind == StrategyKind::Deflation || p_.empty()) return false;
  double n = 1.0, worst = 0.0;
  for (const auto& e : p_.entries()) {
    double h = std::norm(sim::inner_product(e.state, psi));
    n -= h;
    worst = std::max(worst, h);
  }
  return n < config_.norm_threshold || worst > config_.fallback_violation;
}

Evaluation ObjectiveAdapter::evaluate(const StateVector& psi, bool fallback) const {
  const residuals::Terms t = residuals::evaluate_terms(psi, h_, p_);
  Evaluation ev;
  ev.expectation = t.energy;
  ev.norm_n = t.norm;
  for (size_t a = 0; a < p_.size(); ++a) ev.overlaps.push_back(t.overlap_sq(a));
  const bool projectable = t.norm >= config_.norm_threshold;
  ev.energy = projectable ? residuals::projected_energy(t, p_, config_.norm_threshold) : t.energy;

  if (strategy_.kind == StrategyKind::Deflation) {
    ev.value = t.energy;
    for (size_t a = 0; a < p_.size(); ++a) ev.value -= (p_[a].energy - strategy_.beta) * ev.overlaps[a];
    ev.gradient = residuals::deflated_residual(t, p_, -strategy_.beta).values.matrix();
    return ev;
  }
  if (fallback) {
    ev.fallback = true;
    ev.value = t.energy;
    ev.gradient = t.commutator;
    for (size_t a = 0; a < p_.size(); ++a) {
      ev.value += (fallback_weight_ - p_[a].energy) * ev.overlaps[a];
      ev.gradient += (fallback_weight_ - p_[a].energy) * t.omega(a);
    }
    return ev;
  }
  if (!projectable) throw residuals::ProjectionCollapse(t.norm);
  ev.gradient = residuals::acpse_residual(t, p_, ev.energy).values.matrix();
  ev.value = ev.energy;
  for (size_t a = 0; a < p_.size(); ++a) {
    const double h = ev.overlaps[a];
    double weight = 0.0;
    switch (strategy_.kind) {
      case StrategyKind::Lagrangian:
        ev.value += mult_.lambda[a] * h;
        weight = mult_.lambda[a];
        break;
      case StrategyKind::Penalty:
        ev.value += 0.5 * mult_.mu * h * h;
        weight = mult_.mu * h;
        break;
      default:
        ev.value += mult_.lambda[a] * h + 0.5 * mult_.mu * h * h;
        weight = mult_.lambda[a] + mult_.mu * h;
        break;
    }
    if (weight != 0.0) ev.gradient += weight * t.omega(a);
  }
  return ev;
}

bool ObjectiveAdapter::update_multipliers(const Evaluation& at) {
  if (strategy_.kind != StrategyKind::Augmented || p_.empty()) return false;
  const double viol = at.max_violation();
  for (size_t a = 0; a < p_.size(); ++a) mult_.lambda[a] += mult_.mu * at.overlaps[a];
  if (mult_.last_violation > 0 && viol > 0.25 * mult_.last_violation) mult_.mu *= strategy_.growth;
  mult_.last_violation = viol;
  return true;
}

Evaluation objective_and_gradient(const StateVector& psi, const QubitOperator& h, const ProjectionSet& p,
                                  const ConstraintStrategy& strategy) {
  ObjectiveAdapter adapter(h, p, strategy);
  return adapter.evaluate(psi);
}

// ------------------------------------------------------------- optimizer --

namespace {

class QuasiNewton {
 public:
  QuasiNewton(Method m, int dim, int history) : method_(m), dim_(dim), history_(history) { reset(); }

  void reset() {
    hinv_.resize(0, 0);
    pairs_.clear();
    gamma_ = 1.0;
  }

  bool pristine() const { return hinv_.size() == 0 && pairs_.empty(); }

  Eigen::VectorXd direction(const Eigen::VectorXd& g) const {
    if (method_ == Method::BFGS) return hinv_.size() ? Eigen::VectorXd(-(hinv_ * g)) : Eigen::VectorXd(-g);
    Eigen::VectorXd q = g;
    std::vector<double> alpha(pairs_.size());
    for (int i = static_cast<int>(pairs_.size()) - 1; i >= 0; --i) {
      alpha[i] = pairs_[i].rho * pairs_[i].s.dot(q);
      q -= alpha[i] * pairs_[i].y;
    }
    q *= gamma_;
    for (size_t i = 0; i < pairs_.size(); ++i) {
      double b = pairs_[i].rho * pairs_[i].y.dot(q);
      q += (alpha[i] - b) * pairs_[i].s;
    }
    return -q;
  }

  void update(const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sy = s.dot(y);
    if (!(sy > 1e-12 * s.norm() * y.norm())) return;  // curvature condition fails
    const double yy = y.squaredNorm();
    if (method_ == Method::LBFGS) {
      gamma_ = sy / yy;
      pairs_.push_back({s, y, 1.0 / sy});
      if (static_cast<int>(pairs_.size()) > history_) pairs_.pop_front();
      return;
    }
    if (hinv_.size() == 0) hinv_ = Eigen::MatrixXd::Identity(dim_, dim_) * (sy / yy);
    const Eigen::VectorXd hy = hinv_ * y;
    const double yhy = y.dot(hy);
    hinv_ += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) - (hy * s.transpose() + s * hy.transpose()) / sy;
  }

 private:
  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  Method method_;
  int dim_;
  int history_;
  Eigen::MatrixXd hinv_;
  std::deque<Pair> pairs_;
  double gamma_ = 1.0;
};

IterationRecord make_record(int it, const Evaluation& ev, double rnorm, double step, size_t gadgets) {
  IterationRecord r;
  r.iteration = it;
  r.energy = ev.energy;
  r.expectation = ev.expectation;
  r.objective = ev.value;
  r.residual_norm = rnorm;
  r.violations = ev.overlaps;
  r.step = step;
  r.gadgets = gadgets;
  r.fallback = ev.fallback;
  return r;
}

}  // namespace

std::vector<StartPoint> start_points(const std::vector<refstates::Guess>& pool, int n) {
  std::vector<StartPoint> out;
  out.reserve(pool.size());
  for (const auto& g : pool) out.push_back({g.label, refstates::prepare(g.spec, n)});
  return out;
}

StateVector replay(const StateVector& initial, const GadgetSequence& history) {
  StateVector s = initial;
  sim::apply_sequence(s, history);
  return s;
}

StateResult run_single_state(const StartPoint& start, const QubitOperator& h, const ProjectionSet& p,
                             const ConstraintStrategy& strategy, const OptimizerConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n = start.state.n_qubits();
  if (h.n_qubits() != n) throw DomainError("Hamiltonian does not match the initial state");
  const TangentSpace& tangent = tangent_space(n);

  StateResult res{start.state, start.state, GadgetSequence{n, {}}, RunRecord{}};
  RunRecord& rec = res.record;
  rec.start = start.label;

  ObjectiveAdapter adapter(h, p, strategy, config);
  QuasiNewton qn(config.method, tangent.size(), config.lbfgs_history);
  bool mode = adapter.needs_fallback(res.state);
  Evaluation ev = adapter.evaluate(res.state, mode);
  double rnorm = tangent.residual_norm(ev.gradient);
  rec.iterations.push_back(make_record(0, ev, rnorm, 0.0, 0));
  rec.fallback_engaged = mode;

  int accepted = 0;
  bool retried_steepest = false;
  while (true) {
    const double viol = ev.max_violation();
    if (rnorm < config.residual_threshold) {
      if (!ev.fallback && viol < config.violation_threshold) {
        rec.converged = true;
        rec.status = "converged";
        break;
      }
      if (!ev.fallback && rec.multiplier_updates < config.max_multiplier_updates &&
          accepted < config.max_iterations && adapter.update_multipliers(ev)) {
        ++rec.multiplier_updates;
        ev = adapter.evaluate(res.state, mode);
        rnorm = tangent.residual_norm(ev.gradient);
        qn.reset();
        continue;
      }
      rec.status = "stalled";
      break;
    }
    if (accepted >= config.max_iterations) {
      rec.status = "max_iterations";
      break;
    }

    const Eigen::VectorXd g = tangent.gradient(ev.gradient);
    Eigen::VectorXd d = qn.direction(g);
    double slope = g.dot(d);
    if (!(slope < 0)) {
      qn.reset();
      d = -g;
      slope = -g.squaredNorm();
    }
    double alpha = config.initial_step;
    bool ok = false;
    StateVector trial;
    GadgetSequence seq;
    Evaluation trial_ev;
    for (int b = 0; b < config.max_backtracks; ++b, alpha *= config.shrink) {
      seq = tangent.gadgets(alpha * d);
      trial = res.state;
      sim::apply_sequence(trial, seq);
      try {
        trial_ev = adapter.evaluate(trial, mode);
      } catch (const residuals::ProjectionCollapse&) {
        continue;
      }
      if (trial_ev.value <= ev.value + config.armijo_c1 * alpha * slope) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      if (!qn.pristine() && !retried_steepest) {
        qn.reset();
        retried_steepest = true;
        continue;
      }
      rec.status = "line_search";
      break;
    }
    retried_steepest = false;
    ++accepted;
    res.state = std::move(trial);
    res.history.append(seq);

    const bool new_mode = adapter.needs_fallback(res.state);
    if (new_mode != mode) {
      mode = new_mode;
      rec.fallback_engaged = rec.fallback_engaged || mode;
      ev = adapter.evaluate(res.state, mode);
      qn.reset();
    } else {
      const Eigen::VectorXd g_new = tangent.gradient(trial_ev.gradient);
      ev = std::move(trial_ev);
      if (config.reset_memory_each_step) qn.reset();
      else qn.update(alpha * d, g_new - g);
    }
    rnorm = tangent.residual_norm(ev.gradient);
    rec.iterations.push_back(make_record(accepted, ev, rnorm, alpha, seq.size()));
  }

  rec.n_iterations = accepted;
  rec.energy = ev.expectation;
  rec.projected_energy = ev.energy;
  rec.residual_norm = rnorm;
  rec.max_violation = ev.max_violation();
  rec.variance = residuals::variance(res.state, h);
  rec.s2 = sim::expectation(res.state, s2_operator(n)).real();
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  spdlog::debug("state from {}: {} after {} iterations, E={:.10f}, |A|={:.2e}, var={:.2e}", rec.start,
                rec.status, accepted, rec.energy, rnorm, rec.variance);
  return res;
}

std::vector<StateResult> run_spectrum(const QubitOperator& h, const std::vector<StartPoint>& starts, int k,
                                      const ConstraintStrategy& strategy, const OptimizerConfig& config) {
  if (k < 0) throw DomainError("k must be non-negative");
  ProjectionSet p;
  std::vector<StateResult> results;
  size_t next = 0;
  auto duplicate_of = [&](const StateVector& s) {
    for (const auto& e : p.entries())
      if (std::norm(sim::inner_product(e.state, s)) > config.duplicate_overlap) return true;
    return false;
  };
  for (int idx = 0; idx < k; ++idx) {
    if (next >= starts.size()) {
      spdlog::warn("guess pool exhausted after {} states", idx);
      break;
    }
    StateResult r = run_single_state(starts[next++], h, p, strategy, config);
    if (duplicate_of(r.state) && next < starts.size()) {
      spdlog::info("state {} re-converged onto a found state; retrying from {}", idx, starts[next].label);
      r = run_single_state(starts[next++], h, p, strategy, config);
    }
    r.record.run_index = idx;
    if (duplicate_of(r.state)) {
      r.record.duplicate = true;
      spdlog::warn("state {} is a duplicate of a found state", idx);
    } else {
      p.add(r.state, r.record.energy);
    }
    spdlog::info("state {:2d} [{}]: E={:.8f} {} it={} var={:.1e}", idx, r.record.start, r.record.energy,
                 r.record.status, r.record.n_iterations, r.record.variance);
    results.push_back(std::move(r));
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const StateResult& a, const StateResult& b) { return a.record.energy < b.record.energy; });
  return results;
}

std::vector<StartPoint> cqe_plus(const QubitOperator& h, const std::vector<StartPoint>& starts, int k,
                                 const ConstraintStrategy& strategy, const PrescanConfig& prescan,
                                 const OptimizerConfig& base) {
  if (prescan.factor < 1) throw DomainError("prescan factor must be positive");
  const size_t n_scan = std::min(starts.size(), static_cast<size_t>(prescan.factor) * static_cast<size_t>(k));
  OptimizerConfig cfg = base;
  cfg.residual_threshold = prescan.residual_threshold;
  cfg.max_iterations = prescan.max_iterations;
  ProjectionSet p;
  std::vector<std::pair<double, size_t>> scored;
  std::vector<StateVector> scanned;
  for (size_t i = 0; i < n_scan; ++i) {
    StateResult r = run_single_state(starts[i], h, p, strategy, cfg);
    p.add(r.state, r.record.energy);
    scored.emplace_back(r.record.energy, i);
    scanned.push_back(std::move(r.state));
  }
  // Same rounding as the guess pool, so near-ties keep their pool order.
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    return std::llround(a.first * 1e10) < std::llround(b.first * 1e10);
  });
  std::vector<StartPoint> out;
  for (size_t j = 0; j < scored.size() && static_cast<int>(out.size()) < k; ++j) {
    const size_t i = scored[j].second;
    out.push_back({starts[i].label, prescan.warm_start ? scanned[i] : starts[i].state});
  }
  return out;
}

}  // namespace escqe::solver
