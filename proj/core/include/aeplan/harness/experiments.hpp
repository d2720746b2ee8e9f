#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aeplan/dataset.hpp"
#include "aeplan/env/environment.hpp"
#include "aeplan/harness/config.hpp"
#include "aeplan/harness/report.hpp"
#include "aeplan/planners.hpp"
#include "aeplan/uncertainty.hpp"
#include "aeplan/world_model.hpp"

namespace aeplan::harness {

/// Independent stream of seeds: mixes the master seed with a stream tag and
/// an index (splitmix64 finaliser).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

/// Episode id ranges keep data sources apart inside one experiment.
inline constexpr std::int64_t kValidationIdBase = 100000;
inline constexpr std::int64_t kActiveIdBase = 200000;
inline constexpr std::int64_t kRandomIdBase = 300000;

/// Uniform random actions; with hold_max > 1 each draw is repeated for a
/// uniform 1..hold_max steps. Episode e is reset with derive_seed(seed, 0, e).
Dataset collect_random(env::Environment& env, int episodes, int steps, std::uint64_t seed,
                       std::int64_t first_id = 0, int hold_max = 1);

/// Resets `env` with `seed` and applies `steps` uniform random actions.
History random_warmup(env::Environment& env, std::uint64_t seed, int steps);

WorldModelTrainConfig world_model_config(const RunConfig& config, std::uint64_t seed);
AutoencoderTrainConfig autoencoder_config(const RunConfig& config, std::uint64_t seed);

struct TrainedModels {
  WorldModel world;
  UncertaintyModel uncertainty;
};

/// World model and autoencoder fitted on the same data and normalisation.
TrainedModels train_models(const Dataset& data, const RunConfig& config, std::uint64_t seed);

/// Linear-interpolation percentile, p in [0, 100].
double percentile(std::vector<double> values, double p);

/// Uncertainty of random candidate plans from a few warmed-up start states.
struct Calibration {
  std::vector<double> cumulative_u;  // one per candidate
  std::vector<double> step_u;        // every per-step u of every candidate

  double mean_cumulative() const;
};

Calibration calibrate(std::string_view env_id, const TrainedModels& models,
                      const RunConfig& config, std::uint64_t seed, Index horizon);

/// Warm up on the first `warmup_steps` real steps of each trajectory, roll the
/// model open-loop over the remaining recorded actions and average the squared
/// error over steps, dimensions and trajectories (raw units).
double validation_mse(const WorldModel& model, const Dataset& validation, int warmup_steps);

struct ControlCondition {
  enum class Kind { blind, aware, percentile_range, absolute_range };
  std::string label;
  Kind kind = Kind::blind;
  double lo = 0.0;
  double hi = 0.0;
};

/// Comma-separated list of `blind`, `aware`, `range` (absolute bounds from
/// u_range_lo/u_range_hi), `range:P1:P2` (calibration percentiles) and
/// `urange:LO:HI` (absolute).
std::vector<ControlCondition> parse_conditions(const RunConfig& config);

/// Throws RuntimeFailure when a validation episode id shows up in any
/// training set.
void require_disjoint_ids(const Dataset& validation, std::span<const Dataset* const> training);

using Progress = std::function<void(std::string_view)>;

/// Columns: executed_steps, trajectory_mse, full_horizon_mse, predicted_cost,
/// realized_cost, cost_error, plan_u, executed_u, u_threshold.
ExperimentReport run_control_experiment(const RunConfig& config, const Progress& progress = {});

/// Columns: validation_mse, training_steps, uncertainty_cap, mean_collected_u.
ExperimentReport run_active_learning_experiment(const RunConfig& config,
                                                const Progress& progress = {});

}  // namespace aeplan::harness
