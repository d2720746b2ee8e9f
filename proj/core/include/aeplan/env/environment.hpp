#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace aeplan::env {

using Eigen::Index;
using Eigen::VectorXd;
using Observation = Eigen::VectorXd;
using Action = Eigen::VectorXd;

struct ActionBounds {
  VectorXd lower;
  VectorXd upper;

  Action clamp(const Action& a) const { return a.cwiseMax(lower).cwiseMin(upper); }
  bool contains(const Action& a) const {
    return (a.array() >= lower.array()).all() && (a.array() <= upper.array()).all();
  }
};

struct StepResult {
  Observation observation;
  double cost = 0.0;
  bool done = false;
  /// Set when the integration produced a non-finite state; the episode is over.
  bool fault = false;
};

/// Partial derivatives of the per-step cost.
struct CostGradient {
  VectorXd observation;
  VectorXd action;
};

/// Uniform reset/step interface. Instances are independent value-like objects:
/// copy one with clone() to branch a trajectory.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string_view name() const = 0;
  virtual Index observation_dim() const = 0;
  virtual Index action_dim() const = 0;
  virtual const ActionBounds& action_bounds() const = 0;
  virtual int episode_length() const = 0;

  virtual Observation reset(std::uint64_t seed) = 0;
  /// Out-of-bounds actions are clamped.
  virtual StepResult step(const Action& action) = 0;

  /// Pure cost of arriving at `observation` after applying `action`. Equals the
  /// cost returned by step() for the same pair.
  virtual double cost_of(const Observation& observation, const Action& action) const = 0;
  virtual CostGradient cost_gradient(const Observation& observation, const Action& action) const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;
};

/// "drone" or "surrogate"; episode_length <= 0 keeps the environment default.
std::unique_ptr<Environment> make_environment(std::string_view id, int episode_length = 0);

}  // namespace aeplan::env
