#include "fixtures.hpp"

#include <random>

namespace aeplan::testing {

LinearSystem::LinearSystem(Config config) : config_(config) {
  bounds_.lower = VectorXd::Constant(1, -1.0);
  bounds_.upper = VectorXd::Constant(1, 1.0);
}

env::Observation LinearSystem::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  state_ = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
  steps_ = 0;
  return VectorXd::Constant(1, state_);
}

env::StepResult LinearSystem::step(const env::Action& action) {
  const VectorXd a = bounds_.clamp(action);
  state_ = config_.decay * state_ + config_.gain * a[0];
  ++steps_;
  env::StepResult r;
  r.observation = VectorXd::Constant(1, state_);
  r.cost = cost_of(r.observation, a);
  r.done = steps_ >= config_.episode_length;
  return r;
}

double LinearSystem::cost_of(const env::Observation& observation, const env::Action& action) const {
  return observation[0] * observation[0] + config_.action_weight * action[0] * action[0];
}

env::CostGradient LinearSystem::cost_gradient(const env::Observation& observation,
                                              const env::Action& action) const {
  return {VectorXd::Constant(1, 2.0 * observation[0]),
          VectorXd::Constant(1, 2.0 * config_.action_weight * action[0])};
}

std::unique_ptr<env::Environment> LinearSystem::clone() const {
  return std::make_unique<LinearSystem>(*this);
}

Dataset linear_dataset(int episodes, int steps, std::uint64_t seed) {
  LinearSystem env;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Dataset data;
  for (int e = 0; e < episodes; ++e) {
    Episode ep;
    ep.id = e;
    ep.observations.push_back(env.reset(rng()));
    for (int t = 0; t < steps; ++t) {
      const VectorXd a = VectorXd::Constant(1, unit(rng));
      const auto r = env.step(a);
      ep.actions.push_back(a);
      ep.observations.push_back(r.observation);
      ep.costs.push_back(r.cost);
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

WorldModelTrainConfig linear_train_config(int epochs) {
  WorldModelTrainConfig c;
  c.epochs = epochs;
  c.learning_rate = 4e-3;
  c.batch_size = 4096;
  c.seed = 5;
  return c;
}

const WorldModelTraining& trained_linear_model() {
  static const WorldModelTraining t = train_world_model(linear_dataset(40, 50, 1), linear_train_config(200));
  return t;
}

NormStats skewed_norm(Index state_dim, Index action_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-0.5, 0.5);
  std::uniform_real_distribution<double> scale(0.5, 2.0);
  const auto fill = [&](Index n, VectorXd& mean, VectorXd& sd) {
    mean.resize(n);
    sd.resize(n);
    for (Index i = 0; i < n; ++i) {
      mean[i] = offset(rng);
      sd[i] = scale(rng);
    }
  };
  NormStats norm;
  fill(state_dim, norm.state_mean, norm.state_std);
  fill(action_dim, norm.action_mean, norm.action_std);
  fill(state_dim, norm.delta_mean, norm.delta_std);
  return norm;
}

WorldModel tiny_world_model(Index state_dim, Index action_dim, std::uint64_t seed, Index hidden,
                            Index dense) {
  WorldModel model;
  model.params = init_world_model(state_dim, action_dim, seed, {hidden, dense});
  // Non-zero biases keep relu units and gates away from their symmetric points.
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);
  for (auto* b : {&model.params.lstm.bias, &model.params.hidden.bias, &model.params.output.bias})
    for (Index i = 0; i < b->size(); ++i) (*b)[i] = unit(rng);
  model.params.hidden.bias.array() += 0.3;
  model.norm = skewed_norm(state_dim, action_dim, seed + 1);
  model.seed = seed;
  return model;
}

UncertaintyModel tiny_autoencoder(Index window, Index state_dim, Index action_dim, Index hidden,
                                  std::uint64_t seed) {
  UncertaintyModel ae;
  ae.window = window;
  ae.state_dim = state_dim;
  ae.action_dim = action_dim;
  ae.seed = seed;
  ae.params = init_autoencoder(ae.window_dim(), hidden, seed);
  std::mt19937_64 rng(seed ^ 0xae);
  std::uniform_real_distribution<double> unit(-0.3, 0.3);
  for (auto* b : {&ae.params.encoder.bias, &ae.params.decoder.bias})
    for (Index i = 0; i < b->size(); ++i) (*b)[i] = unit(rng);
  return ae;
}

UncertaintyModel constant_autoencoder(Index window, Index state_dim, Index action_dim,
                                      const VectorXd& centre) {
  UncertaintyModel ae = tiny_autoencoder(window, state_dim, action_dim, 4, 1);
  ae.params.decoder.weights.setZero();
  ae.params.decoder.bias = centre;
  return ae;
}

History random_history(env::Environment& env, std::uint64_t seed, int steps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto& bounds = env.action_bounds();
  History h;
  h.observations.push_back(env.reset(seed));
  for (int t = 0; t < steps; ++t) {
    VectorXd a(env.action_dim());
    for (Index j = 0; j < a.size(); ++j)
      a[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * unit(rng);
    const auto r = env.step(a);
    h.actions.push_back(a);
    h.observations.push_back(r.observation);
  }
  return h;
}

Dataset surrogate_band_dataset(int episodes, int steps, double lo, double hi, std::uint64_t seed) {
  env::Surrogate env;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> band(lo, hi);
  Dataset data;
  for (int e = 0; e < episodes; ++e) {
    Episode ep;
    ep.id = e;
    ep.observations.push_back(env.reset(seed + static_cast<std::uint64_t>(e)));
    for (int t = 0; t < steps; ++t) {
      VectorXd a(3);
      for (auto& x : a) x = band(rng);
      const auto r = env.step(a);
      ep.actions.push_back(a);
      ep.observations.push_back(r.observation);
      ep.costs.push_back(r.cost);
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

OodScores surrogate_ood_scores(std::uint64_t seed) {
  constexpr Index kWindow = 10;
  const Dataset train = surrogate_band_dataset(8, 100, 0.3, 1.0, seed);
  const Dataset held_out = surrogate_band_dataset(3, 100, 0.3, 1.0, seed + 1000);
  const Dataset other = surrogate_band_dataset(3, 100, -1.0, -0.3, seed + 2000);
  const NormStats norm = compute_norm_stats(train);

  AutoencoderTrainConfig config;
  config.epochs = 100;
  config.seed = seed;
  const auto ae = train_autoencoder(build_windows(train, kWindow, norm), kWindow, 6, 3, config).model;
  return {uncertainty_batch(ae, build_windows(held_out, kWindow, norm).windows).mean(),
          uncertainty_batch(ae, build_windows(other, kWindow, norm).windows).mean()};
}

}  // namespace aeplan::testing
