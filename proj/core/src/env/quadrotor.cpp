#include "aeplan/env/quadrotor.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "aeplan/error.hpp"

namespace aeplan::env {

namespace {

double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * std::numbers::pi);
  if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
  return w;
}

}  // namespace

double QuadrotorConfig::hover_speed() const {
  return std::sqrt(mass * gravity / (4.0 * thrust_coeff));
}

Quadrotor::Quadrotor(QuadrotorConfig config) : config_(config) {
  if (!(config_.dt > 0.0)) throw ConfigError("quadrotor dt must be positive");
  if (!(config_.max_rotor_speed > 0.0) || !std::isfinite(config_.max_rotor_speed))
    throw ConfigError("quadrotor rotor speed bound must be finite and positive");
  bounds_.lower = VectorXd::Zero(4);
  bounds_.upper = VectorXd::Constant(4, config_.max_rotor_speed);
}

Observation Quadrotor::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-config_.reset_spread, config_.reset_spread);
  for (Index i = 0; i < 12; ++i) state_[i] = dist(rng);
  steps_ = 0;
  return state_;
}

void Quadrotor::set_state(const State& state) {
  state_ = state;
  for (Index i = 6; i < 9; ++i) state_[i] = wrap_angle(state_[i]);
}

StepResult Quadrotor::step(const Action& action) {
  if (action.size() != 4) throw ShapeError("drone actions have 4 rotor speeds");
  const Action w = bounds_.clamp(action);
  const Eigen::Vector4d w2 = w.array().square().matrix();
  const double kf = config_.thrust_coeff;
  const double L = config_.arm_length;
  const double dt = config_.dt;

  const double thrust = kf * w2.sum();
  const Eigen::Vector3d torque{L * kf * (w2[1] - w2[3]), L * kf * (w2[2] - w2[0]),
                               config_.yaw_coeff * (w2[0] - w2[1] + w2[2] - w2[3])};

  const double roll = state_[6], pitch = state_[7], yaw = state_[8];
  const double cr = std::cos(roll), sr = std::sin(roll);
  const double cp = std::cos(pitch), sp = std::sin(pitch);
  const double cy = std::cos(yaw), sy = std::sin(yaw);

  // Third column of R = Rz(yaw) Ry(pitch) Rx(roll): body z in world frame.
  const Eigen::Vector3d body_z{cy * sp * cr + sy * sr, sy * sp * cr - cy * sr, cp * cr};
  const Eigen::Vector3d accel =
      thrust / config_.mass * body_z - Eigen::Vector3d(0.0, 0.0, config_.gravity);

  // Body momentum h = I w evolves as dh/dt = tau - w x h. The cross term is
  // taken implicitly in h: (1 + dt [w]x) h' = h + dt tau. The matrix has a
  // skew-symmetric part only, so |h'| <= |h + dt tau| at any spin rate.
  const Eigen::Vector3d rates = state_.segment<3>(9);
  const Eigen::Vector3d& I = config_.inertia;
  Eigen::Matrix3d lhs = Eigen::Matrix3d::Identity();
  lhs(0, 1) = -dt * rates.z();
  lhs(0, 2) = dt * rates.y();
  lhs(1, 0) = dt * rates.z();
  lhs(1, 2) = -dt * rates.x();
  lhs(2, 0) = -dt * rates.y();
  lhs(2, 1) = dt * rates.x();
  const Eigen::Vector3d momentum =
      lhs.partialPivLu().solve(I.cwiseProduct(rates) + dt * torque);

  State next = state_;
  next.segment<3>(3) += dt * accel;
  next.segment<3>(9) = momentum.cwiseQuotient(I);
  next.segment<3>(0) += dt * next.segment<3>(3);

  const double p = next[9], q = next[10], r = next[11];
  const double roll_dot = p + (q * sr + r * cr) * std::tan(pitch);
  const double pitch_dot = q * cr - r * sr;
  const double yaw_dot = (q * sr + r * cr) / cp;
  next[6] = wrap_angle(roll + dt * roll_dot);
  next[7] = wrap_angle(pitch + dt * pitch_dot);
  next[8] = wrap_angle(yaw + dt * yaw_dot);

  ++steps_;
  StepResult result;
  result.fault = !next.allFinite();
  if (!result.fault) state_ = next;
  result.observation = next;
  result.cost = result.fault ? std::numeric_limits<double>::quiet_NaN() : cost_of(next, w);
  result.done = result.fault || steps_ >= config_.episode_length;
  return result;
}

double Quadrotor::cost_of(const Observation& observation, const Action& /*action*/) const {
  if (observation.size() != 12) throw ShapeError("drone observations have 12 entries");
  return (observation.head<3>() - config_.goal).norm();
}

CostGradient Quadrotor::cost_gradient(const Observation& observation, const Action& action) const {
  if (observation.size() != 12) throw ShapeError("drone observations have 12 entries");
  CostGradient g{VectorXd::Zero(12), VectorXd::Zero(action.size())};
  const Eigen::Vector3d diff = observation.head<3>() - config_.goal;
  const double dist = diff.norm();
  if (dist > 0.0) g.observation.head<3>() = diff / dist;
  return g;
}

std::unique_ptr<Environment> Quadrotor::clone() const { return std::make_unique<Quadrotor>(*this); }

}  // namespace aeplan::env
