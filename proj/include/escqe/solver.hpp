#pragma once

// Excited-state contracted eigensolver: quasi-Newton descent over two-body
// unitaries with overlap constraints, the k-state outer loop and the
// prescreened initial-guess variant.

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "escqe/refstates.hpp"
#include "escqe/residuals.hpp"
#include "escqe/statevector.hpp"

namespace escqe::solver {

using residuals::ProjectionSet;
using sim::GadgetSequence;
using sim::QubitOperator;
using sim::StateVector;
using secondq::TwoBodyCoefficients;

enum class StrategyKind { Lagrangian, Penalty, Augmented, Deflation };

struct ConstraintStrategy {
  StrategyKind kind = StrategyKind::Augmented;
  double lambda = 1.0;  // initial multiplier (Lagrangian, Augmented)
  double mu = 1.0;      // quadratic weight (Penalty, Augmented)
  double growth = 2.0;  // mu growth factor (Augmented)
  double beta = 2.0;    // level assigned to found states (Deflation)

  /// "augmented", "penalty:mu=10", "augmented:mu=1,lambda=1,growth=2",
  /// "deflation:beta=2", "lagrangian:lambda=1".
  static ConstraintStrategy parse(std::string_view text);
  std::string str() const;
  void validate() const;
};

enum class Method { BFGS, LBFGS };

struct OptimizerConfig {
  Method method = Method::BFGS;
  int lbfgs_history = 10;
  double residual_threshold = 1e-5;
  double violation_threshold = 1e-4;
  int max_iterations = 100;
  double armijo_c1 = 1e-4;
  double shrink = 0.5;
  double initial_step = 1.0;
  int max_backtracks = 40;
  bool reset_memory_each_step = false;
  double norm_threshold = residuals::kDefaultNormThreshold;
  double fallback_violation = 0.1;
  double fallback_weight = 0.0;     // 0: ten times the Pauli norm of H
  double duplicate_overlap = 0.5;
  int max_multiplier_updates = 60;

  void validate() const;
};

/// Real coordinates of the anti-Hermitian, Sz-conserving two-body generators
/// at the current state: Re/Im of M_PQ for P<Q and Im of M_PP.
class TangentSpace {
 public:
  explicit TangentSpace(int n_spin_orbitals);

  int n() const { return n_; }
  int size() const { return static_cast<int>(params_.size()); }

  /// Derivative of Σ M G with respect to each coordinate.
  Eigen::VectorXd gradient(const Eigen::MatrixXcd& g) const;
  /// Anti-Hermitian coefficients for a coordinate vector.
  TwoBodyCoefficients generator(const Eigen::VectorXd& theta) const;
  /// First-order product formula for exp(generator(theta)): one group per
  /// coordinate, each as its commuting Pauli gadgets in canonical word order.
  GadgetSequence gadgets(const Eigen::VectorXd& theta) const;
  /// Frobenius norm of a residual restricted to the Sz-conserving entries.
  double residual_norm(const Eigen::MatrixXcd& g) const;
  size_t word_count() const { return words_.size(); }

 private:
  struct Param {
    int p, q;
    bool imaginary;
  };
  int n_;
  std::vector<Param> params_;
  std::vector<secondq::PauliWord> words_;
  std::vector<std::vector<std::pair<int, double>>> word_weights_;  // per word
  std::vector<std::pair<int, int>> mask_;
};

struct Multipliers {
  std::vector<double> lambda;
  double mu = 1.0;
  double last_violation = -1.0;
};

struct Evaluation {
  double value = 0.0;
  Eigen::MatrixXcd gradient;    // pair-matrix layout, anti-Hermitian
  double energy = 0.0;          // projected energy (or <H> when unavailable)
  double expectation = 0.0;     // <H>
  double norm_n = 1.0;
  std::vector<double> overlaps;  // |<α|ψ>|²
  bool fallback = false;

  double max_violation() const;
};

/// Objective/gradient pair for one strategy against a fixed projection set.
class ObjectiveAdapter {
 public:
  ObjectiveAdapter(const QubitOperator& h, const ProjectionSet& p, ConstraintStrategy strategy,
                   const OptimizerConfig& config = {});

  Evaluation evaluate(const StateVector& psi, bool fallback) const;
  /// Chooses the fallback form when the projected norm is degenerate or an
  /// overlap exceeds the configured violation.
  bool needs_fallback(const StateVector& psi) const;
  Evaluation evaluate(const StateVector& psi) const { return evaluate(psi, needs_fallback(psi)); }

  /// Augmented update after a converged inner solve; returns false when the
  /// strategy has no multipliers to update.
  bool update_multipliers(const Evaluation& at);

  const ConstraintStrategy& strategy() const { return strategy_; }
  const Multipliers& multipliers() const { return mult_; }
  double fallback_weight() const { return fallback_weight_; }

 private:
  const QubitOperator& h_;
  const ProjectionSet& p_;
  ConstraintStrategy strategy_;
  OptimizerConfig config_;
  Multipliers mult_;
  double fallback_weight_;
};

/// Default-multiplier evaluation with automatic fallback selection.
Evaluation objective_and_gradient(const StateVector& psi, const QubitOperator& h,
                                  const ProjectionSet& p, const ConstraintStrategy& strategy);

struct IterationRecord {
  int iteration = 0;
  double energy = 0.0;
  double expectation = 0.0;
  double objective = 0.0;
  double residual_norm = 0.0;
  std::vector<double> violations;
  double step = 0.0;
  size_t gadgets = 0;
  bool fallback = false;
};

struct RunRecord {
  std::string start;  // label of the initial state
  std::vector<IterationRecord> iterations;
  bool converged = false;
  std::string status;  // converged, max_iterations, stalled, line_search
  double energy = 0.0;
  double projected_energy = 0.0;
  double residual_norm = 0.0;
  double max_violation = 0.0;
  double variance = 0.0;
  double s2 = 0.0;
  std::string label;
  int n_iterations = 0;
  int multiplier_updates = 0;
  bool fallback_engaged = false;
  bool duplicate = false;
  int run_index = 0;
  double wall_seconds = 0.0;
};

struct StartPoint {
  std::string label;
  StateVector state;
};

std::vector<StartPoint> start_points(const std::vector<refstates::Guess>& pool, int n_qubits);

struct StateResult {
  StateVector initial;
  StateVector state;
  GadgetSequence history;
  RunRecord record;
};

StateResult run_single_state(const StartPoint& start, const QubitOperator& h,
                             const ProjectionSet& p, const ConstraintStrategy& strategy,
                             const OptimizerConfig& config = {});

/// Runs k states from `starts` in order, growing the projection set. Results
/// are returned sorted by final energy.
std::vector<StateResult> run_spectrum(const QubitOperator& h, const std::vector<StartPoint>& starts,
                                      int k, const ConstraintStrategy& strategy,
                                      const OptimizerConfig& config = {});

struct PrescanConfig {
  double residual_threshold = 0.01;
  int max_iterations = 6;
  bool warm_start = true;  // hand back the prescanned states, not the raw guesses
  int factor = 2;          // number of scanned guesses per requested state
};

/// Prescreens the first factor*k starts with a cheap constrained run each,
/// reorders them by the resulting <H> and returns the k lowest.
std::vector<StartPoint> cqe_plus(const QubitOperator& h, const std::vector<StartPoint>& starts,
                                 int k, const ConstraintStrategy& strategy,
                                 const PrescanConfig& prescan, const OptimizerConfig& base = {});

/// Replays a gadget history from an initial state.
StateVector replay(const StateVector& initial, const GadgetSequence& history);

}  // namespace escqe::solver
