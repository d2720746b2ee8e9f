#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aeplan/nn/dense.hpp"
#include "aeplan/planners.hpp"
#include "aeplan/uncertainty.hpp"

namespace aeplan::testing {

/// Analytic gradient against central differences (h = 1e-5) on one fixture.
struct GradientCheck {
  std::string name;
  std::size_t parameters = 0;  // fixture size
  std::size_t entries = 0;     // gradient entries compared
  double max_error = 0.0;
  double tolerance = 1e-4;

  bool passed() const { return max_error < tolerance; }
};

inline constexpr double kLayerTolerance = 1e-4;
inline constexpr double kObjectiveTolerance = 1e-3;

GradientCheck check_dense(nn::Activation activation, std::uint64_t seed);
/// Loss weights every hidden output by a random coefficient, or by one when
/// `sum_of_hiddens` is set.
GradientCheck check_lstm(std::uint64_t seed, bool sum_of_hiddens);
GradientCheck check_world_model_loss(std::uint64_t seed);
GradientCheck check_rollout_actions(std::uint64_t seed);
GradientCheck check_autoencoder_loss(ReconstructionLoss loss, std::uint64_t seed);
GradientCheck check_uncertainty_input(std::uint64_t seed);
GradientCheck check_objective(PlanMode mode, std::uint64_t seed);

/// Every check above.
std::vector<GradientCheck> run_gradient_suite(std::uint64_t seed);

}  // namespace aeplan::testing
