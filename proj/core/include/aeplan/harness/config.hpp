#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace aeplan::harness {

/// Flat run configuration. Every field maps to a JSON key of the same name.
struct RunConfig {
  std::string env = "surrogate";
  std::uint64_t seed = 0;

  // random exploration for the control experiment and `collect`
  int explore_episodes = 10;
  int explore_steps = 500;

  // models
  int window = 10;
  int epochs = 100;
  double lr = 1e-3;
  int batch_size = 16;
  int truncation = 32;
  int ae_epochs = 200;
  double ae_lr = 1e-3;
  int ae_batch_size = 64;
  int ae_hidden = 100;
  std::string ae_loss = "mse";  // "mse" or "rss"

  // planning
  int horizon = 200;
  int candidates = 1000;
  int hold_max = 1;
  double alpha = 1.0;
  double beta = 0.1;
  std::string planner = "shooting";  // "shooting" or "gradient"
  int grad_iters = 100;
  double grad_step = 0.05;
  std::optional<double> u_range_lo;
  std::optional<double> u_range_hi;
  std::optional<double> u_threshold;
  std::optional<double> u_threshold_percentile;
  double threshold_factor = 1.3;

  // control experiment
  std::string conditions = "blind,aware";
  int eval_episodes = 10;
  int warmup_steps = 10;
  int calibration_episodes = 3;
  int max_retries = 3;

  // active-learning experiment
  int initial_steps = 2000;
  int episode_steps = 100;
  int phase2_episodes = 30;
  int phase2_steps = 100;
  int validation_trajectories = 20;
  int validation_steps = 50;
  int validation_hold_max = 10;
  int retrainings = 3;
  int repeats = 3;

  std::string out_dir = "out";

  /// Throws ConfigError naming the first offending key.
  void validate() const;
};

/// Parses a flat JSON object. Missing keys keep their defaults; unknown keys
/// and wrongly typed values throw ConfigError.
RunConfig parse_config(std::string_view json_text);
RunConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const RunConfig& config);

}  // namespace aeplan::harness
