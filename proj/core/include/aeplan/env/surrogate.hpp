#pragma once

#include <Eigen/Core>

#include "aeplan/env/environment.hpp"

namespace aeplan::env {

struct SurrogateConfig {
  int episode_length = 500;
  double action_limit = 1.0;
};

/// Non-Markovian linear process with 3 actions and 6 observed outputs. Two
/// hidden quantities carry history the observation does not reveal:
///
///   visible'  = A visible + B a + C momentum + d fatigue
///   momentum' = 0.9 momentum + 0.1 B2 a
///   fatigue'  = 0.95 fatigue + 0.05 |a|_1
///
/// A is block diagonal with three damped 2x2 rotations (spectral radius 0.9).
/// Cost: |visible'|_2 + 0.1 |a|_2.
class Surrogate final : public Environment {
 public:
  using Visible = Eigen::Matrix<double, 6, 1>;
  using Momentum = Eigen::Vector2d;

  explicit Surrogate(SurrogateConfig config = {});

  std::string_view name() const override { return "surrogate"; }
  Index observation_dim() const override { return 6; }
  Index action_dim() const override { return 3; }
  const ActionBounds& action_bounds() const override { return bounds_; }
  int episode_length() const override { return config_.episode_length; }

  Observation reset(std::uint64_t seed) override;
  StepResult step(const Action& action) override;
  double cost_of(const Observation& observation, const Action& action) const override;
  CostGradient cost_gradient(const Observation& observation, const Action& action) const override;
  std::unique_ptr<Environment> clone() const override;

  static const Eigen::Matrix<double, 6, 6>& transition();
  static const Eigen::Matrix<double, 6, 3>& input_matrix();
  static const Eigen::Matrix<double, 6, 2>& momentum_matrix();
  static const Visible& fatigue_vector();
  static const Eigen::Matrix<double, 2, 3>& momentum_input();

  const Visible& visible() const { return visible_; }
  const Momentum& momentum() const { return momentum_; }
  double fatigue() const { return fatigue_; }
  void set_hidden(const Visible& visible, const Momentum& momentum, double fatigue);

 private:
  SurrogateConfig config_;
  ActionBounds bounds_;
  Visible visible_ = Visible::Zero();
  Momentum momentum_ = Momentum::Zero();
  double fatigue_ = 0.0;
  int steps_ = 0;
};

}  // namespace aeplan::env
