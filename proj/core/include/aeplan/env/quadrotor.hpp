#pragma once

#include <Eigen/Core>

#include "aeplan/env/environment.hpp"

namespace aeplan::env {

struct QuadrotorConfig {
  double dt = 0.05;             // s
  double mass = 1.0;            // kg
  double gravity = 9.81;        // m/s^2
  double arm_length = 0.2;      // m
  double thrust_coeff = 1e-5;   // N / (rad/s)^2
  double yaw_coeff = 1e-6;      // N m / (rad/s)^2
  Eigen::Vector3d inertia{0.01, 0.01, 0.02};  // kg m^2, body-axis diagonal
  double max_rotor_speed = 800.0;              // rad/s
  int episode_length = 500;
  Eigen::Vector3d goal{1.0, 1.0, 1.0};
  double reset_spread = 0.05;

  /// Rotor speed at which the four rotors exactly carry the weight.
  double hover_speed() const;
};

/// Rigid-body quadrotor, no aerodynamic effects.
///
/// Rotors sit on the body axes ("+" layout): 1 at +x, 2 at +y, 3 at -x, 4 at
/// -y; rotors 1 and 3 spin opposite to 2 and 4. With F_i = k_f w_i^2:
///   thrust  = sum F_i along body z
///   tau_x   = L (F_2 - F_4),  tau_y = L (F_3 - F_1)
///   tau_z   = k_m (w_1^2 - w_2^2 + w_3^2 - w_4^2)
///
/// Observation (12): x y z, vx vy vz (world frame), roll pitch yaw (ZYX Euler,
/// wrapped to (-pi, pi]), p q r (body rates). Semi-implicit Euler: velocities
/// and body rates first, then positions and angles from the new values.
class Quadrotor final : public Environment {
 public:
  using State = Eigen::Matrix<double, 12, 1>;

  explicit Quadrotor(QuadrotorConfig config = {});

  std::string_view name() const override { return "drone"; }
  Index observation_dim() const override { return 12; }
  Index action_dim() const override { return 4; }
  const ActionBounds& action_bounds() const override { return bounds_; }
  int episode_length() const override { return config_.episode_length; }

  Observation reset(std::uint64_t seed) override;
  StepResult step(const Action& action) override;
  double cost_of(const Observation& observation, const Action& action) const override;
  CostGradient cost_gradient(const Observation& observation, const Action& action) const override;
  std::unique_ptr<Environment> clone() const override;

  const QuadrotorConfig& config() const { return config_; }
  const State& state() const { return state_; }
  void set_state(const State& state);

 private:
  QuadrotorConfig config_;
  ActionBounds bounds_;
  State state_ = State::Zero();
  int steps_ = 0;
};

}  // namespace aeplan::env
