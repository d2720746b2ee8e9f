#include "aeplan/dataset.hpp"

#include <cmath>
#include <string>

#include "aeplan/error.hpp"

namespace aeplan {

Index Dataset::total_steps() const {
  Index n = 0;
  for (const auto& e : episodes) n += e.length();
  return n;
}

Index Dataset::state_dim() const {
  for (const auto& e : episodes)
    if (!e.observations.empty()) return e.observations.front().size();
  return 0;
}

Index Dataset::action_dim() const {
  for (const auto& e : episodes)
    if (!e.actions.empty()) return e.actions.front().size();
  return 0;
}

void Dataset::validate() const {
  const Index n = state_dim();
  const Index m = action_dim();
  for (const auto& e : episodes) {
    const std::string tag = "episode " + std::to_string(e.id);
    if (e.observations.size() != e.actions.size() + 1)
      throw ConfigError(tag + ": expected one more observation than actions");
    if (e.costs.size() != e.actions.size())
      throw ConfigError(tag + ": expected one cost per action");
    for (const auto& s : e.observations)
      if (s.size() != n) throw ShapeError(tag + ": inconsistent observation dimension");
    for (const auto& a : e.actions)
      if (a.size() != m) throw ShapeError(tag + ": inconsistent action dimension");
  }
}

Dataset concatenate(const Dataset& a, const Dataset& b) {
  Dataset out = a;
  out.episodes.insert(out.episodes.end(), b.episodes.begin(), b.episodes.end());
  return out;
}

namespace {

void check_dim(const VectorXd& v, Index expected, const char* what) {
  if (v.size() != expected)
    throw ShapeError(std::string(what) + " has " + std::to_string(v.size()) +
                     " entries, normalisation expects " + std::to_string(expected));
}

struct Moments {
  VectorXd sum, sum_sq;
  Index count = 0;

  void add(const VectorXd& v) {
    if (count == 0) {
      sum = VectorXd::Zero(v.size());
      sum_sq = VectorXd::Zero(v.size());
    }
    sum += v;
    sum_sq += v.cwiseAbs2();
    ++count;
  }

  void finish(VectorXd& mean, VectorXd& std) const {
    const double n = static_cast<double>(count);
    mean = sum / n;
    const VectorXd var = (sum_sq / n - mean.cwiseAbs2()).cwiseMax(0.0);
    std = var.cwiseSqrt().cwiseMax(NormStats::kStdFloor);
  }
};

}  // namespace

VectorXd NormStats::normalize_state(const VectorXd& s) const {
  check_dim(s, state_dim(), "state");
  return (s - state_mean).cwiseQuotient(state_std);
}

VectorXd NormStats::normalize_action(const VectorXd& a) const {
  check_dim(a, action_dim(), "action");
  return (a - action_mean).cwiseQuotient(action_std);
}

VectorXd NormStats::denormalize_state(const VectorXd& z) const {
  check_dim(z, state_dim(), "state");
  return z.cwiseProduct(state_std) + state_mean;
}

VectorXd NormStats::denormalize_action(const VectorXd& z) const {
  check_dim(z, action_dim(), "action");
  return z.cwiseProduct(action_std) + action_mean;
}

VectorXd NormStats::normalize_delta(const VectorXd& d) const {
  check_dim(d, state_dim(), "delta");
  return (d - delta_mean).cwiseQuotient(delta_std);
}

VectorXd NormStats::denormalize_delta(const VectorXd& z) const {
  check_dim(z, state_dim(), "delta");
  return z.cwiseProduct(delta_std) + delta_mean;
}

NormStats compute_norm_stats(const Dataset& data) {
  data.validate();
  Moments states, actions, deltas;
  for (const auto& e : data.episodes) {
    for (Index t = 0; t < e.length(); ++t) {
      states.add(e.observations[t]);
      actions.add(e.actions[t]);
      deltas.add(e.observations[t + 1] - e.observations[t]);
    }
  }
  if (states.count == 0) throw ConfigError("cannot fit normalisation on an empty dataset");
  NormStats stats;
  states.finish(stats.state_mean, stats.state_std);
  actions.finish(stats.action_mean, stats.action_std);
  deltas.finish(stats.delta_mean, stats.delta_std);
  return stats;
}

}  // namespace aeplan
