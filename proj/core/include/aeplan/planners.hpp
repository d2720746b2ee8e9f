#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "aeplan/dataset.hpp"
#include "aeplan/env/environment.hpp"
#include "aeplan/uncertainty.hpp"
#include "aeplan/world_model.hpp"

namespace aeplan {

using ActionSequence = std::vector<VectorXd>;

enum class PlanMode {
  /// maximise sum_i (-alpha * cost_i - beta * u_i)
  control,
  /// maximise sum_i u_i, rejecting plans whose total passes the cap
  explore,
};

struct Objective {
  double alpha = 1.0;
  double beta = 0.0;
  PlanMode mode = PlanMode::control;
  Index horizon = 200;
  std::optional<double> uncertainty_cap;

  /// Throws ConfigError on a negative alpha, a non-positive horizon or cap.
  void validate() const;
  bool needs_uncertainty() const { return mode == PlanMode::explore || beta != 0.0; }
};

struct PlanResult {
  ActionSequence actions;
  PredictedTrajectory predicted;
  UncertaintyProfile uncertainty;  // empty when no autoencoder was supplied
  double score = 0.0;
  double predicted_cumulative_cost = 0.0;
  /// False for explore plans above the cap.
  bool admissible = true;
  /// Set by gradient_plan when it stopped on a non-finite gradient.
  bool numeric_fault = false;
  int iterations = 0;
};

/// Everything a planner reads. The autoencoder is optional for plain cost
/// planning; it uses the world model's normalisation.
struct PlanningContext {
  const WorldModel& model;
  const UncertaintyModel* uncertainty;
  const env::Environment& env;
  const History& history;
};

struct ShootingConfig {
  Index candidates = 1000;
  std::uint64_t seed = 0;
  /// Each sampled action is held for a uniform 1..hold_max steps; 1 gives
  /// independent draws at every step.
  Index hold_max = 1;
};

struct GradientConfig {
  int iterations = 100;
  double step_size = 0.05;  // in normalised action units
};

/// K uniform action sequences within bounds. Deterministic in the seed.
std::vector<ActionSequence> sample_candidates(const env::ActionBounds& bounds, Index horizon,
                                              const ShootingConfig& config);

PlanResult score_sequence(const PlanningContext& ctx, const ActionSequence& actions,
                          const Objective& objective);

/// Scores every candidate in one batched rollout; result order matches input.
std::vector<PlanResult> score_candidates(const PlanningContext& ctx,
                                         const std::vector<ActionSequence>& candidates,
                                         const Objective& objective);

/// Highest-scoring admissible plan; ties go to the lowest index. Throws
/// NoAdmissiblePlan when there is none.
const PlanResult& select_best(const std::vector<PlanResult>& plans);

PlanResult random_shooting(const PlanningContext& ctx, const Objective& objective,
                           const ShootingConfig& shooting);

struct ScoreGradient {
  double score = 0.0;
  double cumulative_uncertainty = 0.0;
  ActionSequence actions;  // d score / d a_i in raw action units
};

ScoreGradient score_gradient(const PlanningContext& ctx, const ActionSequence& actions,
                             const Objective& objective);

/// Gradient ascent on the action sequence with clamping after each step.
/// Returns the best iterate seen (the initial one included).
PlanResult gradient_plan(const PlanningContext& ctx, const Objective& objective,
                         const ActionSequence& init_actions, const GradientConfig& config);

/// Keeps plans with lo <= cumulative u <= hi, in input order.
std::vector<PlanResult> filter_by_uncertainty_range(const std::vector<PlanResult>& plans, double lo,
                                                    double hi);

/// Replans with beta = 0 and returns only the first action.
VectorXd mpc_baseline_step(const PlanningContext& ctx, const Objective& objective,
                           const ShootingConfig& shooting);

/// Number of plan actions to execute: everything before the first predicted
/// u_t above the threshold, at least one.
Index stop_index(const PlanResult& plan, double u_threshold);

struct ExecutionResult {
  Index executed_steps = 0;
  std::vector<VectorXd> observations;  // realised s_{k+1} .. s_{k+executed}
  std::vector<double> costs;
  double realized_cost = 0.0;
  bool fault = false;
};

/// Runs plan actions in `env` from its current state up to stop_index, ending
/// early on an environment fault or end of episode.
ExecutionResult open_loop_execute(env::Environment& env, const PlanResult& plan, double u_threshold);

/// Mean over executed steps and state dimensions of (predicted - realised)^2.
double trajectory_mse(const PlanResult& plan, const ExecutionResult& executed);

}  // namespace aeplan
