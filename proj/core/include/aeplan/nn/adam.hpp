#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "aeplan/nn/params.hpp"

namespace aeplan::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First and second moment estimates, one vector per parameter array.
struct AdamState {
  std::vector<VectorXd> first_moment;
  std::vector<VectorXd> second_moment;
  std::uint64_t step_count = 0;

  template <ParameterSet P>
  static AdamState for_parameters(const P& params) {
    AdamState s;
    for (const auto& span : params.parameters()) {
      const auto n = static_cast<Index>(span.values.size());
      s.first_moment.push_back(VectorXd::Zero(n));
      s.second_moment.push_back(VectorXd::Zero(n));
    }
    return s;
  }
};

/// One bias-corrected Adam step. Parameters are left untouched when any
/// gradient entry is non-finite; the error names the offending array.
template <ParameterSet P>
void adam_update(P& params, const P& grads, AdamState& state, const AdamConfig& config) {
  require_same_shape(params, grads);
  auto p_spans = params.parameters();
  const auto g_spans = grads.parameters();
  if (state.first_moment.empty()) state = AdamState::for_parameters(params);
  if (state.first_moment.size() != p_spans.size())
    throw ShapeError("Adam state tracks a different parameter set");

  for (std::size_t k = 0; k < g_spans.size(); ++k) {
    if (static_cast<std::size_t>(state.first_moment[k].size()) != p_spans[k].values.size())
      throw ShapeError("Adam moments for '" + p_spans[k].name + "' have the wrong length");
    for (double g : g_spans[k].values)
      if (!std::isfinite(g))
        throw NumericError("non-finite gradient in parameter '" + g_spans[k].name + "'");
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t k = 0; k < p_spans.size(); ++k) {
    auto& m = state.first_moment[k];
    auto& v = state.second_moment[k];
    auto values = p_spans[k].values;
    const auto g = g_spans[k].values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const auto jj = static_cast<Index>(j);
      m[jj] = config.beta1 * m[jj] + (1.0 - config.beta1) * g[j];
      v[jj] = config.beta2 * v[jj] + (1.0 - config.beta2) * g[j] * g[j];
      values[j] -= config.learning_rate * (m[jj] / c1) / (std::sqrt(v[jj] / c2) + config.epsilon);
    }
  }
}

}  // namespace aeplan::nn
