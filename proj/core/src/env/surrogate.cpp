#include "aeplan/env/surrogate.hpp"

#include <cmath>
#include <limits>

#include "aeplan/error.hpp"

namespace aeplan::env {

namespace {

Eigen::Matrix<double, 6, 6> make_transition() {
  constexpr double radius = 0.9;
  const double angles[3] = {0.3, 0.6, 0.15};
  Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();
  for (int b = 0; b < 3; ++b) {
    const double c = radius * std::cos(angles[b]);
    const double s = radius * std::sin(angles[b]);
    a.block<2, 2>(2 * b, 2 * b) << c, -s, s, c;
  }
  return a;
}

}  // namespace

const Eigen::Matrix<double, 6, 6>& Surrogate::transition() {
  static const Eigen::Matrix<double, 6, 6> a = make_transition();
  return a;
}

const Eigen::Matrix<double, 6, 3>& Surrogate::input_matrix() {
  static const Eigen::Matrix<double, 6, 3> b = [] {
    Eigen::Matrix<double, 6, 3> m;
    m << 0.30, 0.00, 0.10,
         0.00, 0.25, 0.00,
         0.10, 0.30, 0.00,
         0.00, 0.00, 0.25,
         0.00, 0.10, 0.30,
         0.25, 0.00, 0.00;
    return m;
  }();
  return b;
}

const Eigen::Matrix<double, 6, 2>& Surrogate::momentum_matrix() {
  static const Eigen::Matrix<double, 6, 2> c = [] {
    Eigen::Matrix<double, 6, 2> m;
    m << 0.20, 0.00,
         0.00, 0.20,
         0.15, 0.05,
         0.05, 0.15,
         0.10, 0.00,
         0.00, 0.10;
    return m;
  }();
  return c;
}

const Surrogate::Visible& Surrogate::fatigue_vector() {
  static const Visible d = [] {
    Visible v;
    v << 0.10, -0.05, 0.05, 0.10, -0.10, 0.05;
    return v;
  }();
  return d;
}

const Eigen::Matrix<double, 2, 3>& Surrogate::momentum_input() {
  static const Eigen::Matrix<double, 2, 3> b2 = [] {
    Eigen::Matrix<double, 2, 3> m;
    m << 1.0, 0.0, -1.0,
         0.0, 1.0, 1.0;
    return m;
  }();
  return b2;
}

Surrogate::Surrogate(SurrogateConfig config) : config_(config) {
  if (!(config_.action_limit > 0.0) || !std::isfinite(config_.action_limit))
    throw ConfigError("surrogate action limit must be finite and positive");
  bounds_.lower = VectorXd::Constant(3, -config_.action_limit);
  bounds_.upper = VectorXd::Constant(3, config_.action_limit);
}

Observation Surrogate::reset(std::uint64_t /*seed*/) {
  visible_.setZero();
  momentum_.setZero();
  fatigue_ = 0.0;
  steps_ = 0;
  return visible_;
}

void Surrogate::set_hidden(const Visible& visible, const Momentum& momentum, double fatigue) {
  visible_ = visible;
  momentum_ = momentum;
  fatigue_ = fatigue;
}

StepResult Surrogate::step(const Action& action) {
  if (action.size() != 3) throw ShapeError("surrogate actions have 3 entries");
  const Eigen::Vector3d a = bounds_.clamp(action);

  const Visible next = transition() * visible_ + input_matrix() * a +
                       momentum_matrix() * momentum_ + fatigue_vector() * fatigue_;
  momentum_ = 0.9 * momentum_ + 0.1 * momentum_input() * a;
  fatigue_ = 0.95 * fatigue_ + 0.05 * a.lpNorm<1>();

  ++steps_;
  StepResult result;
  result.fault = !next.allFinite();
  if (!result.fault) visible_ = next;
  result.observation = next;
  result.cost = result.fault ? std::numeric_limits<double>::quiet_NaN() : cost_of(next, a);
  result.done = result.fault || steps_ >= config_.episode_length;
  return result;
}

double Surrogate::cost_of(const Observation& observation, const Action& action) const {
  if (observation.size() != 6 || action.size() != 3)
    throw ShapeError("surrogate cost expects 6 observations and 3 actions");
  return observation.norm() + 0.1 * action.norm();
}

CostGradient Surrogate::cost_gradient(const Observation& observation, const Action& action) const {
  if (observation.size() != 6 || action.size() != 3)
    throw ShapeError("surrogate cost expects 6 observations and 3 actions");
  CostGradient g{VectorXd::Zero(6), VectorXd::Zero(3)};
  const double on = observation.norm();
  const double an = action.norm();
  if (on > 0.0) g.observation = observation / on;
  if (an > 0.0) g.action = 0.1 * action / an;
  return g;
}

std::unique_ptr<Environment> Surrogate::clone() const { return std::make_unique<Surrogate>(*this); }

}  // namespace aeplan::env
