#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace aeplan {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One time-ordered episode: observations s_0..s_L, actions a_0..a_{L-1} and
/// the cost received after each action.
struct Episode {
  std::int64_t id = 0;
  std::vector<VectorXd> observations;
  std::vector<VectorXd> actions;
  std::vector<double> costs;

  Index length() const { return static_cast<Index>(actions.size()); }
};

struct Dataset {
  std::vector<Episode> episodes;

  Index total_steps() const;
  Index state_dim() const;
  Index action_dim() const;
  /// Throws ConfigError when an episode breaks |actions| = |observations| - 1
  /// or dimensions disagree between steps.
  void validate() const;
};

Dataset concatenate(const Dataset& a, const Dataset& b);

/// Real past interaction feeding a rollout: observations has one more entry
/// than actions and its last entry is the current state.
struct History {
  std::vector<VectorXd> observations;
  std::vector<VectorXd> actions;

  const VectorXd& current() const { return observations.back(); }
  Index length() const { return static_cast<Index>(actions.size()); }
};

/// Per-dimension affine normalisation fitted on training data.
struct NormStats {
  static constexpr double kStdFloor = 1e-6;

  VectorXd state_mean, state_std;
  VectorXd action_mean, action_std;
  VectorXd delta_mean, delta_std;

  Index state_dim() const { return state_mean.size(); }
  Index action_dim() const { return action_mean.size(); }

  VectorXd normalize_state(const VectorXd& s) const;
  VectorXd normalize_action(const VectorXd& a) const;
  VectorXd denormalize_state(const VectorXd& z) const;
  VectorXd denormalize_action(const VectorXd& z) const;
  VectorXd normalize_delta(const VectorXd& d) const;
  VectorXd denormalize_delta(const VectorXd& z) const;
};

NormStats compute_norm_stats(const Dataset& data);

}  // namespace aeplan
