#include <benchmark/benchmark.h>

#include "aeplan/env/environment.hpp"
#include "aeplan/harness/experiments.hpp"
#include "aeplan/nn/init.hpp"
#include "aeplan/nn/lstm.hpp"
#include "aeplan/planners.hpp"
#include "aeplan/uncertainty.hpp"
#include "aeplan/world_model.hpp"

namespace {

using namespace aeplan;

// Models with real normalisation statistics; one epoch is enough for timing.
struct Setup {
  std::unique_ptr<env::Environment> env = env::make_environment("surrogate", 500);
  harness::TrainedModels models;
  History history;

  Setup()
      : models(train(*env)),
        history(harness::random_warmup(*env, 7, 10)) {}

  static harness::TrainedModels train(env::Environment& env) {
    harness::RunConfig config;
    config.epochs = 1;
    config.ae_epochs = 1;
    return harness::train_models(harness::collect_random(env, 4, 200, 1), config, 2);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_LstmStep(benchmark::State& state) {
  nn::Rng rng(1);
  const Index batch = state.range(0);
  const auto params = nn::init_lstm(9, 32, rng);
  const auto s0 = nn::LstmState::zeros(32, batch);
  const MatrixXd x = MatrixXd::Random(9, batch);
  for (auto _ : state) benchmark::DoNotOptimize(nn::lstm_step(params, s0, x, nullptr));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_LstmStep)->Arg(1)->Arg(100)->Arg(1000);

void BM_RolloutBatch(benchmark::State& state) {
  const auto& s = setup();
  const Index horizon = state.range(0), batch = state.range(1);
  const auto warm = warm_up(s.models.world, s.history);
  const std::vector<MatrixXd> actions(static_cast<std::size_t>(horizon), MatrixXd::Random(3, batch));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        rollout_batch(s.models.world, warm, s.history.observations.back(), actions, false));
  state.SetItemsProcessed(state.iterations() * horizon * batch);
}
BENCHMARK(BM_RolloutBatch)->Args({50, 100})->Args({200, 1000})->Unit(benchmark::kMillisecond);

void BM_UncertaintyBatch(benchmark::State& state) {
  const auto& s = setup();
  const MatrixXd windows = MatrixXd::Random(s.models.uncertainty.window_dim(), state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(uncertainty_batch(s.models.uncertainty, windows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_UncertaintyBatch)->Arg(200)->Arg(10000);

void BM_RandomShooting(benchmark::State& state) {
  const auto& s = setup();
  Objective objective;
  objective.beta = 0.1;
  objective.horizon = 50;
  const PlanningContext ctx{s.models.world, &s.models.uncertainty, *s.env, s.history};
  const ShootingConfig shooting{state.range(0), 3, 1};
  for (auto _ : state) benchmark::DoNotOptimize(random_shooting(ctx, objective, shooting));
}
BENCHMARK(BM_RandomShooting)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_GradientPlanIteration(benchmark::State& state) {
  const auto& s = setup();
  Objective objective;
  objective.beta = 0.1;
  objective.horizon = 50;
  const PlanningContext ctx{s.models.world, &s.models.uncertainty, *s.env, s.history};
  const auto init = sample_candidates(s.env->action_bounds(), 50, ShootingConfig{1, 4, 1}).front();
  for (auto _ : state) benchmark::DoNotOptimize(score_gradient(ctx, init, objective));
}
BENCHMARK(BM_GradientPlanIteration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
