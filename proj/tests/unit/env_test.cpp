#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

#include "aeplan/env/quadrotor.hpp"
#include "aeplan/env/surrogate.hpp"
#include "aeplan/error.hpp"

namespace {

using namespace aeplan;
using namespace aeplan::env;

VectorXd hover_action(const Quadrotor& drone) {
  return VectorXd::Constant(4, drone.config().hover_speed());
}

TEST(Quadrotor, HoverSpeedLiesInsideBounds) {
  Quadrotor drone;
  const double wh = drone.config().hover_speed();
  EXPECT_NEAR(4.0 * drone.config().thrust_coeff * wh * wh, drone.config().mass * drone.config().gravity,
              1e-9);
  EXPECT_GT(wh, 490.0);
  EXPECT_LT(wh, 500.0);
  EXPECT_TRUE(drone.action_bounds().contains(hover_action(drone)));
}

TEST(Quadrotor, HoverKeepsRestStateEachStep) {
  Quadrotor drone;
  drone.set_state(Quadrotor::State::Zero());
  for (int t = 0; t < 5; ++t) {
    const auto r = drone.step(hover_action(drone));
    EXPECT_LT(r.observation.head<6>().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Quadrotor, HoverDriftOverHundredSteps) {
  Quadrotor drone;
  drone.set_state(Quadrotor::State::Zero());
  double drift = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto r = drone.step(hover_action(drone));
    drift = std::max(drift, r.observation.head<3>().norm());
  }
  EXPECT_LT(drift, 1e-9);
}

TEST(Quadrotor, FreeFallOneStepIsSemiImplicit) {
  Quadrotor drone;
  drone.set_state(Quadrotor::State::Zero());
  const auto r = drone.step(VectorXd::Zero(4));
  const double g = drone.config().gravity, dt = drone.config().dt;
  EXPECT_NEAR(r.observation[5], -g * dt, 1e-12);
  EXPECT_NEAR(r.observation[2], -g * dt * dt, 1e-12);
  EXPECT_NEAR(r.observation.head<2>().norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.observation.tail<6>().norm(), 0.0, 1e-12);
}

TEST(Quadrotor, DifferentialThrustRollsPositively) {
  // Rotor 2 sits on +y: extra thrust there gives a positive roll torque.
  Quadrotor drone;
  drone.set_state(Quadrotor::State::Zero());
  VectorXd a = hover_action(drone);
  a[1] += 50.0;
  const auto r = drone.step(a);
  EXPECT_GT(r.observation[9], 0.0);
  EXPECT_NEAR(r.observation[10], 0.0, 1e-12);
}

TEST(Quadrotor, ResetIsSeededAndSmall) {
  Quadrotor a, b;
  const auto oa = a.reset(42);
  EXPECT_EQ(oa, b.reset(42));
  EXPECT_NE(oa, b.reset(43));
  EXPECT_EQ(oa.size(), 12);
  EXPECT_LE(oa.cwiseAbs().maxCoeff(), 0.05);
}

TEST(Quadrotor, CostIsDistanceToGoal) {
  Quadrotor drone;
  Observation s = Observation::Zero(12);
  EXPECT_NEAR(drone.cost_of(s, VectorXd::Zero(4)), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(drone.cost_of(s, VectorXd::Zero(4)), 1.7320508, 1e-7);
  s.head<3>().setOnes();
  EXPECT_EQ(drone.cost_of(s, VectorXd::Zero(4)), 0.0);
}

TEST(Quadrotor, DeterministicTrajectory) {
  const auto run = [] {
    Quadrotor drone;
    drone.reset(7);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> w(0.0, 800.0);
    std::vector<double> trace;
    for (int t = 0; t < 200; ++t) {
      VectorXd a(4);
      for (auto& x : a) x = w(rng);
      const auto r = drone.step(a);
      trace.insert(trace.end(), r.observation.begin(), r.observation.end());
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}

TEST(Quadrotor, AnglesStayWrappedAndRatesFinite) {
  Quadrotor drone;
  drone.reset(1);
  VectorXd a(4);
  a << 800, 0, 0, 800;  // sustained spin
  for (int t = 0; t < 500; ++t) {
    const auto r = drone.step(a);
    ASSERT_FALSE(r.fault);
    for (int k = 6; k < 9; ++k) {
      EXPECT_GT(r.observation[k], -std::numbers::pi);
      EXPECT_LE(r.observation[k], std::numbers::pi);
    }
    ASSERT_TRUE(r.observation.allFinite());
  }
}

TEST(Quadrotor, ClampsActionsSilently) {
  Quadrotor a, b;
  a.set_state(Quadrotor::State::Zero());
  b.set_state(Quadrotor::State::Zero());
  const auto ra = a.step(VectorXd::Constant(4, 5000.0));
  const auto rb = b.step(VectorXd::Constant(4, 800.0));
  EXPECT_EQ(ra.observation, rb.observation);
}

TEST(Quadrotor, NonFiniteStateRaisesFault) {
  Quadrotor drone;
  Quadrotor::State s = Quadrotor::State::Zero();
  s[3] = std::numeric_limits<double>::infinity();
  drone.set_state(s);
  EXPECT_TRUE(drone.step(VectorXd::Zero(4)).fault);
}

TEST(Quadrotor, DoneAtEpisodeLength) {
  QuadrotorConfig config;
  config.episode_length = 3;
  Quadrotor drone(config);
  drone.reset(0);
  EXPECT_FALSE(drone.step(hover_action(drone)).done);
  EXPECT_FALSE(drone.step(hover_action(drone)).done);
  EXPECT_TRUE(drone.step(hover_action(drone)).done);
}

TEST(Surrogate, ResetIsZero) {
  Surrogate env;
  EXPECT_TRUE(env.reset(0).isZero(0.0));
  EXPECT_TRUE(env.reset(99).isZero(0.0));
  EXPECT_EQ(env.observation_dim(), 6);
  EXPECT_EQ(env.action_dim(), 3);
}

TEST(Surrogate, ZeroActionFromZeroStaysZero) {
  Surrogate env;
  env.reset(0);
  for (int t = 0; t < 10; ++t) {
    const auto r = env.step(VectorXd::Zero(3));
    EXPECT_TRUE(r.observation.isZero(0.0));
    EXPECT_EQ(r.cost, 0.0);
  }
}

TEST(Surrogate, TransitionIsContracting) {
  const Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> es(Surrogate::transition());
  EXPECT_LT(es.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
}

TEST(Surrogate, HiddenFatigueBreaksMarkovProperty) {
  Surrogate fresh, tired;
  fresh.reset(0);
  tired.reset(0);
  for (int t = 0; t < 30; ++t) tired.step(VectorXd::Ones(3));
  // Same visible state, same action, different histories.
  fresh.set_hidden(tired.visible(), tired.momentum(), 0.0);
  const VectorXd a = (VectorXd(3) << 0.2, -0.4, 0.1).finished();
  const auto rf = fresh.step(a);
  const auto rt = tired.step(a);
  EXPECT_GT((rf.observation - rt.observation).norm(), 1e-3);
}

TEST(Surrogate, HiddenMomentumBreaksMarkovProperty) {
  Surrogate a, b;
  a.reset(0);
  b.reset(0);
  a.set_hidden(Surrogate::Visible::Zero(), Eigen::Vector2d(0.5, -0.5), 0.0);
  b.set_hidden(Surrogate::Visible::Zero(), Eigen::Vector2d::Zero(), 0.0);
  const VectorXd u = VectorXd::Zero(3);
  EXPECT_GT((a.step(u).observation - b.step(u).observation).norm(), 1e-3);
}

TEST(Surrogate, BoundedUnderBoundedActions) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int pattern = 0; pattern < 3; ++pattern) {
    Surrogate env;
    env.reset(0);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      VectorXd a(3);
      for (auto& x : a) x = pattern == 0 ? unit(rng) : pattern == 1 ? 1.0 : (t % 2 ? 1.0 : -1.0);
      worst = std::max(worst, env.step(a).observation.norm());
    }
    EXPECT_LT(worst, 100.0) << "pattern " << pattern;
  }
}

TEST(Environments, StepCostEqualsCostOf) {
  for (const auto* id : {"drone", "surrogate"}) {
    auto env = make_environment(id);
    env->reset(3);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto& b = env->action_bounds();
    for (int t = 0; t < 50; ++t) {
      VectorXd a(env->action_dim());
      for (Index j = 0; j < a.size(); ++j) a[j] = b.lower[j] + (b.upper[j] - b.lower[j]) * unit(rng);
      const auto r = env->step(a);
      EXPECT_EQ(r.cost, env->cost_of(r.observation, a)) << id;
    }
  }
}

TEST(Environments, CostGradientMatchesDifferences) {
  for (const auto* id : {"drone", "surrogate"}) {
    auto env = make_environment(id);
    Observation s = env->reset(4);
    s.array() += 0.3;
    VectorXd a = 0.5 * (env->action_bounds().lower + env->action_bounds().upper);
    a[0] += 0.1;
    const auto g = env->cost_gradient(s, a);
    const double h = 1e-6;
    for (Index i = 0; i < s.size(); ++i) {
      Observation up = s, dn = s;
      up[i] += h;
      dn[i] -= h;
      EXPECT_NEAR(g.observation[i], (env->cost_of(up, a) - env->cost_of(dn, a)) / (2 * h), 1e-6);
    }
    for (Index i = 0; i < a.size(); ++i) {
      VectorXd up = a, dn = a;
      up[i] += h;
      dn[i] -= h;
      EXPECT_NEAR(g.action[i], (env->cost_of(s, up) - env->cost_of(s, dn)) / (2 * h), 1e-6);
    }
  }
}

TEST(Environments, CloneBranchesIndependently) {
  auto env = make_environment("surrogate");
  env->reset(0);
  env->step(VectorXd::Ones(3));
  auto copy = env->clone();
  const auto a = env->step(VectorXd::Constant(3, -0.5));
  const auto b = copy->step(VectorXd::Constant(3, -0.5));
  EXPECT_EQ(a.observation, b.observation);
  env->step(VectorXd::Ones(3));
  EXPECT_NE(env->step(VectorXd::Zero(3)).observation, copy->step(VectorXd::Zero(3)).observation);
}

TEST(Environments, UnknownIdIsConfigError) {
  EXPECT_THROW(make_environment("minitaur"), ConfigError);
}

TEST(Environments, EpisodeLengthOverride) {
  EXPECT_EQ(make_environment("drone", 20)->episode_length(), 20);
  EXPECT_EQ(make_environment("surrogate")->episode_length(), 500);
}

}  // namespace
