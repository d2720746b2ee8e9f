#pragma once

#include <cstdint>
#include <memory>

#include "aeplan/env/surrogate.hpp"

#include "aeplan/dataset.hpp"
#include "aeplan/env/environment.hpp"
#include "aeplan/uncertainty.hpp"
#include "aeplan/world_model.hpp"

namespace aeplan::testing {

/// Scalar linear process s' = decay * s + gain * a with a in [-1, 1] and cost
/// s'^2 + action_weight * a^2. Reset draws s_0 uniformly from [-1, 1].
class LinearSystem final : public env::Environment {
 public:
  struct Config {
    double decay = 0.9;
    double gain = 0.1;
    double action_weight = 0.0;
    int episode_length = 100;
  };

  LinearSystem() : LinearSystem(Config{}) {}
  explicit LinearSystem(Config config);

  std::string_view name() const override { return "linear"; }
  Index observation_dim() const override { return 1; }
  Index action_dim() const override { return 1; }
  const env::ActionBounds& action_bounds() const override { return bounds_; }
  int episode_length() const override { return config_.episode_length; }

  env::Observation reset(std::uint64_t seed) override;
  env::StepResult step(const env::Action& action) override;
  double cost_of(const env::Observation& observation, const env::Action& action) const override;
  env::CostGradient cost_gradient(const env::Observation& observation,
                                  const env::Action& action) const override;
  std::unique_ptr<env::Environment> clone() const override;

  void set_state(double s) { state_ = s; }
  double state() const { return state_; }

 private:
  Config config_;
  env::ActionBounds bounds_;
  double state_ = 0.0;
  int steps_ = 0;
};

/// Random-action episodes of the linear system.
Dataset linear_dataset(int episodes, int steps, std::uint64_t seed);

/// Training settings for the linear fixture: every segment in one batch.
WorldModelTrainConfig linear_train_config(int epochs);

/// World model fitted once per process on 40 x 50 linear-system steps.
const WorldModelTraining& trained_linear_model();

/// Normalisation with arbitrary but fixed non-trivial offsets and scales.
NormStats skewed_norm(Index state_dim, Index action_dim, std::uint64_t seed);

/// Small world model (LSTM width `hidden`, dense width `dense`) for gradient
/// checks and hand-composed oracles.
WorldModel tiny_world_model(Index state_dim, Index action_dim, std::uint64_t seed, Index hidden = 2,
                            Index dense = 3);

UncertaintyModel tiny_autoencoder(Index window, Index state_dim, Index action_dim, Index hidden,
                                  std::uint64_t seed);

/// Real history of `steps` uniform random actions from the environment.
/// Decoder weights zeroed: reconstructs `centre` for every input.
UncertaintyModel constant_autoencoder(Index window, Index state_dim, Index action_dim,
                                      const VectorXd& centre);

History random_history(env::Environment& env, std::uint64_t seed, int steps);

/// Surrogate episodes whose actions are drawn uniformly from [lo, hi] in
/// every component.
Dataset surrogate_band_dataset(int episodes, int steps, double lo, double hi, std::uint64_t seed);

/// Autoencoder trained on windows from one action band (A = [0.3, 1]) and
/// scored on held-out A windows and on windows of the mirrored band B.
struct OodScores {
  double held_out_mean = 0.0;
  double other_band_mean = 0.0;
  double ratio() const { return other_band_mean / held_out_mean; }
};
OodScores surrogate_ood_scores(std::uint64_t seed);

}  // namespace aeplan::testing
