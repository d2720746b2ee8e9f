#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "aeplan/error.hpp"
#include "aeplan/planners.hpp"
#include "fixtures.hpp"

namespace {

using namespace aeplan;
using aeplan::testing::LinearSystem;

VectorXd scalar(double v) { return VectorXd::Constant(1, v); }

ActionSequence constant_plan(Index horizon, double v) {
  return ActionSequence(static_cast<std::size_t>(horizon), scalar(v));
}

/// Tiny random world model and autoencoder over the linear system.
struct TinySetup {
  LinearSystem env{LinearSystem::Config{.action_weight = 0.1}};
  WorldModel model = aeplan::testing::tiny_world_model(1, 1, 21);
  UncertaintyModel ae = aeplan::testing::tiny_autoencoder(3, 1, 1, 4, 22);
  History history = aeplan::testing::random_history(env, 23, 4);

  PlanningContext context() const { return {model, &ae, env, history}; }
};

Objective control(double alpha, double beta, Index horizon) {
  Objective o;
  o.alpha = alpha;
  o.beta = beta;
  o.horizon = horizon;
  return o;
}

TEST(Objective, Validation) {
  EXPECT_THROW(control(-1.0, 0.0, 5).validate(), ConfigError);
  EXPECT_THROW(control(1.0, 0.0, 0).validate(), ConfigError);
  Objective capped = control(1.0, 0.0, 5);
  capped.uncertainty_cap = 0.0;
  EXPECT_THROW(capped.validate(), ConfigError);
  Objective explore;
  explore.mode = PlanMode::explore;
  explore.alpha = -3.0;  // ignored when exploring
  EXPECT_NO_THROW(explore.validate());
}

TEST(Candidates, InsideBoundsAndSeeded) {
  LinearSystem env;
  const auto a = sample_candidates(env.action_bounds(), 7, {.candidates = 20, .seed = 4});
  const auto b = sample_candidates(env.action_bounds(), 7, {.candidates = 20, .seed = 4});
  const auto c = sample_candidates(env.action_bounds(), 7, {.candidates = 20, .seed = 5});
  ASSERT_EQ(a.size(), 20u);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (const auto& seq : a) {
    ASSERT_EQ(seq.size(), 7u);
    for (const auto& x : seq) EXPECT_TRUE(env.action_bounds().contains(x));
  }
}

TEST(Candidates, HoldRunsAreBounded) {
  LinearSystem env;
  const auto seqs =
      sample_candidates(env.action_bounds(), 50, {.candidates = 30, .seed = 1, .hold_max = 4});
  bool saw_hold = false;
  for (const auto& seq : seqs) {
    int run = 1;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      run = seq[i] == seq[i - 1] ? run + 1 : 1;
      saw_hold = saw_hold || run > 1;
      EXPECT_LE(run, 4);
    }
  }
  EXPECT_TRUE(saw_hold);
}

TEST(Scoring, DecomposesIntoCostAndUncertainty) {
  TinySetup s;
  const auto ctx = s.context();
  const auto objective = control(1.3, 0.4, 6);
  const auto candidates = sample_candidates(s.env.action_bounds(), 6, {.candidates = 30, .seed = 2});
  const auto scored = score_candidates(ctx, candidates, objective);
  for (std::size_t c = 0; c < scored.size(); ++c) {
    const auto& p = scored[c];
    double cost = 0.0, u = 0.0;
    for (double x : p.predicted.costs) cost += x;
    for (double x : p.uncertainty.per_step) u += x;
    EXPECT_NEAR(p.score, -1.3 * cost - 0.4 * u, 1e-10);
    EXPECT_NEAR(p.predicted_cumulative_cost, cost, 1e-10);
    EXPECT_NEAR(p.uncertainty.cumulative, u, 1e-10);
    const auto single = score_sequence(ctx, candidates[c], objective);
    EXPECT_NEAR(single.score, p.score, 1e-12);
  }
}

TEST(Scoring, DegenerateWeights) {
  TinySetup s;
  const auto ctx = s.context();
  const auto plan = constant_plan(5, 0.3);
  const auto blind = score_sequence(ctx, plan, control(2.0, 0.0, 5));
  EXPECT_NEAR(blind.score, -2.0 * blind.predicted_cumulative_cost, 1e-12);
  const auto u_only = score_sequence(ctx, plan, control(0.0, 1.0, 5));
  EXPECT_NEAR(u_only.score, -u_only.uncertainty.cumulative, 1e-12);

  Objective explore = control(5.0, 0.0, 5);
  explore.mode = PlanMode::explore;
  const auto e = score_sequence(ctx, plan, explore);
  EXPECT_NEAR(e.score, e.uncertainty.cumulative, 1e-12);
}

TEST(Scoring, HandComposedTwoStepPlan) {
  TinySetup s;
  const auto ctx = s.context();
  const auto& norm = s.model.norm;
  const ActionSequence plan{scalar(0.4), scalar(-0.7)};
  const auto result = score_sequence(ctx, plan, control(1.0, 0.5, 2));

  const auto& h = s.history;
  const Index k = h.length();  // index of the current state
  const auto first = predict_step(s.model, warm_up(s.model, h), h.current(), plan[0]);
  const auto second = predict_step(s.model, first.state, first.next_state, plan[1]);
  const double cost0 = s.env.cost_of(first.next_state, plan[0]);
  const double cost1 = s.env.cost_of(second.next_state, plan[1]);

  const auto pair = [&](const VectorXd& st, const VectorXd& a) {
    VectorXd p(2);
    p << norm.normalize_state(st), norm.normalize_action(a);
    return p;
  };
  const auto hist = [&](Index j) { return pair(h.observations[j], h.actions[j]); };
  VectorXd w0(6), w1(6);
  w0 << hist(k - 2), hist(k - 1), pair(h.current(), plan[0]);
  w1 << hist(k - 1), pair(h.current(), plan[0]), pair(first.next_state, plan[1]);
  const double u0 = uncertainty_u(s.ae, w0);
  const double u1 = uncertainty_u(s.ae, w1);

  EXPECT_NEAR(result.predicted.states[0][0], first.next_state[0], 1e-14);
  EXPECT_NEAR(result.predicted.states[1][0], second.next_state[0], 1e-14);
  ASSERT_EQ(result.uncertainty.per_step.size(), 2u);
  EXPECT_NEAR(result.uncertainty.per_step[0], u0, 1e-12);
  EXPECT_NEAR(result.uncertainty.per_step[1], u1, 1e-12);
  EXPECT_NEAR(result.score, -(cost0 + cost1) - 0.5 * (u0 + u1), 1e-12);
}

TEST(Scoring, ContextMismatchesAreReported) {
  TinySetup s;
  const auto plan = constant_plan(3, 0.0);
  const PlanningContext no_ae{s.model, nullptr, s.env, s.history};
  EXPECT_THROW(score_sequence(no_ae, plan, control(1.0, 0.2, 3)), ConfigError);
  EXPECT_NO_THROW(score_sequence(no_ae, plan, control(1.0, 0.0, 3)));
  const auto wide = aeplan::testing::tiny_autoencoder(3, 2, 1, 4, 1);
  const PlanningContext bad{s.model, &wide, s.env, s.history};
  EXPECT_THROW(score_sequence(bad, plan, control(1.0, 0.2, 3)), ShapeError);
  EXPECT_THROW(score_sequence(s.context(), constant_plan(2, 0.0), control(1.0, 0.2, 3)), ShapeError);
}

TEST(Shooting, SingleCandidateIsReturned) {
  TinySetup s;
  const ShootingConfig shooting{.candidates = 1, .seed = 9};
  const auto objective = control(1.0, 0.1, 4);
  const auto only = sample_candidates(s.env.action_bounds(), 4, shooting).front();
  EXPECT_EQ(random_shooting(s.context(), objective, shooting).actions, only);
  EXPECT_EQ(mpc_baseline_step(s.context(), objective, shooting), only.front());
}

TEST(Shooting, ReturnsBruteForceArgmax) {
  TinySetup s;
  const auto ctx = s.context();
  const auto objective = control(1.0, 0.2, 5);
  auto candidates = sample_candidates(s.env.action_bounds(), 5, {.candidates = 40, .seed = 3});
  candidates.insert(candidates.begin() + 17, constant_plan(5, -1.0));
  double best = -std::numeric_limits<double>::infinity();
  std::size_t arg = 0;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double v = score_sequence(ctx, candidates[c], objective).score;
    if (v > best) {
      best = v;
      arg = c;
    }
  }
  const auto scored = score_candidates(ctx, candidates, objective);
  const auto& chosen = select_best(scored);
  EXPECT_EQ(&chosen - scored.data(), static_cast<std::ptrdiff_t>(arg));
  for (const auto& p : scored) EXPECT_GE(chosen.score, p.score);
}

TEST(Shooting, PlantedDominantSequenceWins) {
  // From s = 1 the linear system's cost falls fastest under full negative action.
  const auto& model = aeplan::testing::trained_linear_model().model;
  LinearSystem env;
  History h;
  h.observations.push_back(scalar(1.0));
  const PlanningContext ctx{model, nullptr, env, h};
  auto candidates = sample_candidates(env.action_bounds(), 5, {.candidates = 25, .seed = 8});
  for (auto& seq : candidates)
    for (auto& a : seq) a = a.cwiseAbs();  // only non-negative actions
  candidates.insert(candidates.begin() + 11, constant_plan(5, -1.0));
  const auto scored = score_candidates(ctx, candidates, control(1.0, 0.0, 5));
  EXPECT_EQ(&select_best(scored) - scored.data(), 11);
}

TEST(Shooting, TiesGoToLowestIndex) {
  std::vector<PlanResult> plans(4);
  plans[0].score = 1.0;
  plans[1].score = 3.0;
  plans[2].score = 3.0;
  plans[3].score = 2.0;
  EXPECT_EQ(&select_best(plans), &plans[1]);
  plans[1].admissible = false;
  EXPECT_EQ(&select_best(plans), &plans[2]);
}

TEST(Shooting, DeterministicInSeed) {
  TinySetup s;
  const ShootingConfig shooting{.candidates = 50, .seed = 12};
  const auto a = random_shooting(s.context(), control(1.0, 0.1, 6), shooting);
  const auto b = random_shooting(s.context(), control(1.0, 0.1, 6), shooting);
  EXPECT_EQ(a.actions, b.actions);
  EXPECT_EQ(a.score, b.score);
}

TEST(Shooting, ScalingWeightsKeepsTheChoice) {
  TinySetup s;
  const ShootingConfig shooting{.candidates = 80, .seed = 13};
  for (double factor : {0.1, 2.5, 40.0}) {
    const auto a = random_shooting(s.context(), control(1.0, 0.3, 6), shooting);
    const auto b = random_shooting(s.context(), control(factor, 0.3 * factor, 6), shooting);
    EXPECT_EQ(a.actions, b.actions) << factor;
  }
}

TEST(Shooting, NoAdmissiblePlanUnderTinyCap) {
  TinySetup s;
  Objective explore = control(1.0, 0.0, 4);
  explore.mode = PlanMode::explore;
  explore.uncertainty_cap = 1e-9;
  EXPECT_THROW(random_shooting(s.context(), explore, {.candidates = 10, .seed = 1}),
               NoAdmissiblePlan);
}

TEST(Shooting, ExploreRespectsCap) {
  TinySetup s;
  Objective explore = control(1.0, 0.0, 4);
  explore.mode = PlanMode::explore;
  const auto candidates = sample_candidates(s.env.action_bounds(), 4, {.candidates = 60, .seed = 2});
  const auto free = score_candidates(s.context(), candidates, explore);
  std::vector<double> u;
  for (const auto& p : free) u.push_back(p.uncertainty.cumulative);
  std::sort(u.begin(), u.end());
  explore.uncertainty_cap = u[u.size() / 2];
  const auto capped = random_shooting(s.context(), explore, {.candidates = 60, .seed = 2});
  EXPECT_LE(capped.uncertainty.cumulative, *explore.uncertainty_cap);
  EXPECT_EQ(capped.uncertainty.cumulative, u[u.size() / 2]);
}

// --- gradient planning -----------------------------------------------------------

TEST(GradientPlan, StationaryInitIsReturned) {
  LinearSystem env(LinearSystem::Config{.action_weight = 0.1});
  auto model = aeplan::testing::tiny_world_model(1, 1, 4);
  model.params.output.weights.setZero();  // constant prediction, no action influence
  History h;
  h.observations.push_back(scalar(0.5));
  const PlanningContext ctx{model, nullptr, env, h};
  const auto init = constant_plan(4, 0.0);
  const auto result = gradient_plan(ctx, control(1.0, 0.0, 4), init, {.iterations = 20});
  EXPECT_EQ(result.actions, init);
  EXPECT_FALSE(result.numeric_fault);
}

TEST(GradientPlan, ReachesGridOptimum) {
  const auto& model = aeplan::testing::trained_linear_model().model;
  LinearSystem env(LinearSystem::Config{.action_weight = 0.1});
  History h;
  h.observations.push_back(scalar(1.0));
  const PlanningContext ctx{model, nullptr, env, h};
  const auto objective = control(1.0, 0.0, 3);

  std::vector<ActionSequence> grid;
  for (int i = 0; i < 21; ++i)
    for (int j = 0; j < 21; ++j)
      for (int k = 0; k < 21; ++k)
        grid.push_back({scalar(-1.0 + 0.1 * i), scalar(-1.0 + 0.1 * j), scalar(-1.0 + 0.1 * k)});
  const double grid_best = select_best(score_candidates(ctx, grid, objective)).score;

  const auto init = constant_plan(3, 0.0);
  const auto result = gradient_plan(ctx, objective, init, {.iterations = 100, .step_size = 0.5});
  EXPECT_GT(result.score, grid_best - 1e-3) << "grid " << grid_best;
  EXPECT_GE(result.score, score_sequence(ctx, init, objective).score);
}

TEST(GradientPlan, BestScoreNeverDecreasesWithIterations) {
  TinySetup s;
  const auto objective = control(1.0, 0.2, 5);
  const auto init = constant_plan(5, 0.6);
  double previous = score_sequence(s.context(), init, objective).score;
  for (int it = 0; it <= 12; ++it) {
    const auto r = gradient_plan(s.context(), objective, init, {.iterations = it, .step_size = 0.3});
    EXPECT_GE(r.score, previous) << it;
    EXPECT_NEAR(r.score, score_sequence(s.context(), r.actions, objective).score, 1e-12);
    for (const auto& a : r.actions) EXPECT_TRUE(s.env.action_bounds().contains(a));
    previous = r.score;
  }
}

TEST(GradientPlan, ExploreStopsAtCap) {
  TinySetup s;
  Objective explore = control(1.0, 0.0, 5);
  explore.mode = PlanMode::explore;
  const auto init = constant_plan(5, 0.1);
  const double start = score_sequence(s.context(), init, explore).uncertainty.cumulative;
  const auto free = gradient_plan(s.context(), explore, init, {.iterations = 50, .step_size = 0.5});
  ASSERT_GT(free.uncertainty.cumulative, start);
  explore.uncertainty_cap = 0.5 * (start + free.uncertainty.cumulative);
  const auto capped = gradient_plan(s.context(), explore, init, {.iterations = 50, .step_size = 0.5});
  EXPECT_TRUE(capped.admissible);
  EXPECT_LE(capped.uncertainty.cumulative, *explore.uncertainty_cap);
  EXPECT_LT(capped.iterations, 50);
}

/// Linear system whose cost gradient is poisoned.
class NanGradientSystem final : public env::Environment {
 public:
  std::string_view name() const override { return "nan"; }
  Index observation_dim() const override { return 1; }
  Index action_dim() const override { return 1; }
  const env::ActionBounds& action_bounds() const override { return inner_.action_bounds(); }
  int episode_length() const override { return 100; }
  env::Observation reset(std::uint64_t seed) override { return inner_.reset(seed); }
  env::StepResult step(const env::Action& a) override { return inner_.step(a); }
  double cost_of(const env::Observation& s, const env::Action& a) const override {
    return inner_.cost_of(s, a);
  }
  env::CostGradient cost_gradient(const env::Observation&, const env::Action&) const override {
    return {scalar(std::nan("")), scalar(0.0)};
  }
  std::unique_ptr<env::Environment> clone() const override {
    return std::make_unique<NanGradientSystem>(*this);
  }

 private:
  LinearSystem inner_;
};

TEST(GradientPlan, NonFiniteGradientStopsWithFlag) {
  NanGradientSystem env;
  const auto model = aeplan::testing::tiny_world_model(1, 1, 4);
  History h;
  h.observations.push_back(scalar(0.5));
  const PlanningContext ctx{model, nullptr, env, h};
  const auto init = constant_plan(3, 0.2);
  const auto r = gradient_plan(ctx, control(1.0, 0.0, 3), init, {});
  EXPECT_TRUE(r.numeric_fault);
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.actions, init);
}

// --- range filter, MPC and execution ------------------------------------------------

std::vector<PlanResult> plans_with_u(std::initializer_list<double> totals) {
  std::vector<PlanResult> out;
  for (double u : totals) {
    PlanResult p;
    p.uncertainty.cumulative = u;
    p.score = u;
    out.push_back(p);
  }
  return out;
}

TEST(RangeFilter, KeepsOnlyPlansInside) {
  const auto plans = plans_with_u({5.0, 20.0, 40.0});
  const auto kept = filter_by_uncertainty_range(plans, 15.0, 30.0);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept.front().uncertainty.cumulative, 20.0);
  EXPECT_EQ(filter_by_uncertainty_range(plans, 0.0, std::numeric_limits<double>::infinity()).size(), 3u);
  EXPECT_TRUE(filter_by_uncertainty_range(plans, 50.0, 60.0).empty());
  EXPECT_EQ(filter_by_uncertainty_range(plans, 20.0, 20.0).size(), 1u);
  EXPECT_THROW(filter_by_uncertainty_range(plans, 2.0, 1.0), ConfigError);
}

TEST(Mpc, MatchesFirstShootingAction) {
  TinySetup s;
  const ShootingConfig shooting{.candidates = 30, .seed = 17};
  const auto objective = control(1.0, 0.0, 5);
  EXPECT_EQ(mpc_baseline_step(s.context(), control(1.0, 0.7, 5), shooting),
            random_shooting(s.context(), objective, shooting).actions.front());
}

TEST(Mpc, DrivesLinearSystemToOrigin) {
  const auto& model = aeplan::testing::trained_linear_model().model;
  LinearSystem env;
  env.set_state(1.0);
  History h;
  h.observations.push_back(scalar(1.0));
  for (std::uint64_t t = 0; t < 50; ++t) {
    const PlanningContext ctx{model, nullptr, env, h};
    const VectorXd a = mpc_baseline_step(ctx, control(1.0, 0.0, 5), {.candidates = 64, .seed = t});
    const auto r = env.step(a);
    h.actions.push_back(a);
    h.observations.push_back(r.observation);
  }
  EXPECT_LT(std::abs(env.state()), 0.1);
}

PlanResult plan_with_u(std::vector<double> u) {
  PlanResult p;
  for (std::size_t i = 0; i < u.size(); ++i) {
    p.actions.push_back(scalar(0.5));
    p.predicted.states.push_back(scalar(0.0));
  }
  p.uncertainty.per_step = std::move(u);
  return p;
}

TEST(Execution, StopIndexRules) {
  EXPECT_EQ(stop_index(plan_with_u({0.1, 0.2, 0.1, 0.3, 0.2}), 1.0), 5);
  EXPECT_EQ(stop_index(plan_with_u({0.1, 0.2, 0.1, 1.3, 0.2}), 1.0), 3);
  EXPECT_EQ(stop_index(plan_with_u({0.1, 0.2, 0.1, 0.3, 0.2}), 0.0), 1);
  EXPECT_EQ(stop_index(plan_with_u({2.0, 0.2}), 1.0), 1);
  EXPECT_EQ(stop_index(plan_with_u({1.0, 1.0}), 1.0), 2);  // strictly above stops
  EXPECT_THROW(stop_index(PlanResult{}, 1.0), ConfigError);
}

TEST(Execution, ExecutesUpToStopIndex) {
  LinearSystem env;
  env.set_state(1.0);
  const auto plan = plan_with_u({0.1, 0.2, 0.1, 1.3, 0.2});
  const auto r = open_loop_execute(env, plan, 1.0);
  EXPECT_EQ(r.executed_steps, 3);
  ASSERT_EQ(r.observations.size(), 3u);
  EXPECT_NEAR(r.observations[2][0], 0.9 * (0.9 * (0.9 + 0.05) + 0.05) + 0.05, 1e-12);
  EXPECT_NEAR(r.realized_cost, r.costs[0] + r.costs[1] + r.costs[2], 1e-15);
}

TEST(Execution, EndsAtEpisodeEnd) {
  LinearSystem env(LinearSystem::Config{.episode_length = 2});
  env.reset(0);
  const auto r = open_loop_execute(env, plan_with_u({0.0, 0.0, 0.0, 0.0}), 1.0);
  EXPECT_EQ(r.executed_steps, 2);
}

TEST(Execution, TrajectoryMseOverExecutedSteps) {
  auto plan = plan_with_u({0.0, 0.0, 0.0});
  plan.predicted.states = {scalar(1.0), scalar(2.0), scalar(100.0)};
  ExecutionResult ex;
  ex.executed_steps = 2;
  ex.observations = {scalar(0.0), scalar(4.0)};
  EXPECT_NEAR(trajectory_mse(plan, ex), (1.0 + 4.0) / 2.0, 1e-15);
  EXPECT_TRUE(std::isnan(trajectory_mse(plan, ExecutionResult{})));
}

}  // namespace
