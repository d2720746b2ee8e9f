#include "aeplan/harness/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "aeplan/error.hpp"
#include "aeplan/nn/init.hpp"

namespace aeplan::harness {

namespace {

// stream tags for derive_seed
enum Stream : std::uint64_t {
  kRepeat = 1,
  kCollect,
  kTrain,
  kCalibrate,
  kEval,
  kPlan,
  kValidation,
  kActive,
  kRandomArm,
  kRetrain,
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

VectorXd uniform_action(const env::ActionBounds& bounds, nn::Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  VectorXd a(bounds.lower.size());
  for (Index j = 0; j < a.size(); ++j)
    a[j] = bounds.lower[j] + (bounds.upper[j] - bounds.lower[j]) * unit(rng);
  return a;
}

void report(const Progress& progress, const std::string& msg) {
  if (progress) progress(msg);
}

std::vector<MatrixXd> as_columns(const std::vector<VectorXd>& xs) {
  return {xs.begin(), xs.end()};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ stream) ^ index);
}

Dataset collect_random(env::Environment& env, int episodes, int steps, std::uint64_t seed,
                       std::int64_t first_id, int hold_max) {
  if (episodes < 0 || steps < 0 || hold_max < 1)
    throw ConfigError("collect_random needs episodes, steps >= 0 and hold_max >= 1");
  const auto& bounds = env.action_bounds();
  Dataset data;
  for (int e = 0; e < episodes; ++e) {
    Episode ep;
    ep.id = first_id + e;
    ep.observations.push_back(env.reset(derive_seed(seed, 0, static_cast<std::uint64_t>(e))));
    nn::Rng rng(derive_seed(seed, 1, static_cast<std::uint64_t>(e)));
    std::uniform_int_distribution<int> hold(1, hold_max);
    VectorXd action;
    int left = 0;
    for (int t = 0; t < steps; ++t) {
      if (left == 0) {
        action = uniform_action(bounds, rng);
        left = hold_max > 1 ? hold(rng) : 1;
      }
      --left;
      const auto r = env.step(action);
      if (r.fault) break;
      ep.actions.push_back(action);
      ep.costs.push_back(r.cost);
      ep.observations.push_back(r.observation);
      if (r.done) break;
    }
    data.episodes.push_back(std::move(ep));
  }
  return data;
}

History random_warmup(env::Environment& env, std::uint64_t seed, int steps) {
  History h;
  h.observations.push_back(env.reset(seed));
  nn::Rng rng(derive_seed(seed, 1, 0));
  for (int t = 0; t < steps; ++t) {
    const VectorXd a = uniform_action(env.action_bounds(), rng);
    const auto r = env.step(a);
    if (r.fault) throw RuntimeFailure("environment fault during warm-up");
    h.actions.push_back(a);
    h.observations.push_back(r.observation);
  }
  return h;
}

WorldModelTrainConfig world_model_config(const RunConfig& config, std::uint64_t seed) {
  WorldModelTrainConfig c;
  c.epochs = config.epochs;
  c.learning_rate = config.lr;
  c.seed = seed;
  c.truncation_length = config.truncation;
  c.batch_size = config.batch_size;
  return c;
}

AutoencoderTrainConfig autoencoder_config(const RunConfig& config, std::uint64_t seed) {
  AutoencoderTrainConfig c;
  c.epochs = config.ae_epochs;
  c.learning_rate = config.ae_lr;
  c.seed = seed;
  c.batch_size = config.ae_batch_size;
  c.hidden_units = config.ae_hidden;
  c.loss = config.ae_loss == "rss" ? ReconstructionLoss::root_sum_squares : ReconstructionLoss::mse;
  return c;
}

TrainedModels train_models(const Dataset& data, const RunConfig& config, std::uint64_t seed) {
  TrainedModels m;
  m.world = train_world_model(data, world_model_config(config, derive_seed(seed, 0, 0))).model;
  const WindowSet windows = build_windows(data, config.window, m.world.norm);
  m.uncertainty = train_autoencoder(windows, config.window, data.state_dim(), data.action_dim(),
                                    autoencoder_config(config, derive_seed(seed, 1, 0)))
                      .model;
  return m;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw ConfigError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ConfigError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double Calibration::mean_cumulative() const {
  if (cumulative_u.empty()) throw ConfigError("empty calibration");
  double s = 0.0;
  for (const double u : cumulative_u) s += u;
  return s / static_cast<double>(cumulative_u.size());
}

Calibration calibrate(std::string_view env_id, const TrainedModels& models,
                      const RunConfig& config, std::uint64_t seed, Index horizon) {
  Calibration cal;
  for (int c = 0; c < config.calibration_episodes; ++c) {
    auto env = env::make_environment(env_id, config.warmup_steps + static_cast<int>(horizon));
    const History history =
        random_warmup(*env, derive_seed(seed, 0, static_cast<std::uint64_t>(c)), config.warmup_steps);
    const PlanningContext ctx{models.world, &models.uncertainty, *env, history};
    const ShootingConfig shooting{config.candidates, derive_seed(seed, 1, static_cast<std::uint64_t>(c)),
                                  config.hold_max};
    Objective objective;
    objective.alpha = config.alpha;
    objective.horizon = horizon;
    const auto candidates = sample_candidates(env->action_bounds(), horizon, shooting);
    for (const auto& plan : score_candidates(ctx, candidates, objective)) {
      if (!std::isfinite(plan.uncertainty.cumulative)) continue;
      cal.cumulative_u.push_back(plan.uncertainty.cumulative);
      cal.step_u.insert(cal.step_u.end(), plan.uncertainty.per_step.begin(),
                        plan.uncertainty.per_step.end());
    }
  }
  if (cal.cumulative_u.empty()) throw RuntimeFailure("calibration produced no finite plans");
  return cal;
}

double validation_mse(const WorldModel& model, const Dataset& validation, int warmup_steps) {
  double sum = 0.0;
  Index trajectories = 0;
  for (const auto& e : validation.episodes) {
    if (e.length() <= warmup_steps) continue;
    const auto w = static_cast<std::size_t>(warmup_steps);
    History h;
    h.observations.assign(e.observations.begin(), e.observations.begin() + static_cast<long>(w) + 1);
    h.actions.assign(e.actions.begin(), e.actions.begin() + static_cast<long>(w));
    const std::vector<VectorXd> future(e.actions.begin() + static_cast<long>(w), e.actions.end());
    const auto fwd = rollout_batch(model, warm_up(model, h), h.current(), as_columns(future), false);
    double err = 0.0;
    for (std::size_t i = 0; i < future.size(); ++i)
      err += (fwd.states[i].col(0) - e.observations[w + 1 + i]).squaredNorm();
    sum += err / static_cast<double>(future.size() * static_cast<std::size_t>(model.norm.state_dim()));
    ++trajectories;
  }
  if (trajectories == 0)
    throw ConfigError("no validation trajectory is longer than the warm-up");
  return sum / static_cast<double>(trajectories);
}

std::vector<ControlCondition> parse_conditions(const RunConfig& config) {
  std::vector<ControlCondition> out;
  std::stringstream list(config.conditions);
  std::string item;
  const auto number = [&](const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      throw ConfigError("condition '" + item + "' has a malformed bound '" + s + "'");
    }
  };
  while (std::getline(list, item, ',')) {
    ControlCondition c;
    c.label = item;
    std::vector<std::string> parts;
    std::stringstream ss(item);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.empty()) throw ConfigError("empty condition in 'conditions'");
    const auto& kind = parts[0];
    if (kind == "blind" && parts.size() == 1) {
      c.kind = ControlCondition::Kind::blind;
    } else if (kind == "aware" && parts.size() == 1) {
      c.kind = ControlCondition::Kind::aware;
    } else if (kind == "range" && parts.size() == 1) {
      c.kind = ControlCondition::Kind::absolute_range;
      c.lo = config.u_range_lo.value_or(0.0);
      c.hi = config.u_range_hi.value_or(kInf);
    } else if (kind == "range" && parts.size() == 3) {
      c.kind = ControlCondition::Kind::percentile_range;
      c.lo = number(parts[1]);
      c.hi = number(parts[2]);
      if (!(c.lo >= 0 && c.hi <= 100))
        throw ConfigError("percentile range '" + item + "' must lie in [0, 100]");
    } else if (kind == "urange" && parts.size() == 3) {
      c.kind = ControlCondition::Kind::absolute_range;
      c.lo = number(parts[1]);
      c.hi = number(parts[2]);
    } else {
      throw ConfigError("unknown condition '" + item +
                        "' (expected blind, aware, range, range:P1:P2 or urange:LO:HI)");
    }
    if (c.lo > c.hi) throw ConfigError("condition '" + item + "' has lo > hi");
    out.push_back(std::move(c));
  }
  if (out.empty()) throw ConfigError("no conditions given");
  return out;
}

namespace {

PlanResult plan_for_condition(const PlanningContext& ctx, const ControlCondition& cond,
                              const RunConfig& config, std::uint64_t seed, Index horizon) {
  Objective objective;
  objective.alpha = config.alpha;
  objective.beta = cond.kind == ControlCondition::Kind::aware ? config.beta : 0.0;
  objective.horizon = horizon;
  const ShootingConfig shooting{config.candidates, seed, config.hold_max};
  auto scored = score_candidates(ctx, sample_candidates(ctx.env.action_bounds(), horizon, shooting),
                                 objective);
  const bool ranged = cond.kind == ControlCondition::Kind::percentile_range ||
                      cond.kind == ControlCondition::Kind::absolute_range;
  if (ranged) scored = filter_by_uncertainty_range(scored, cond.lo, cond.hi);
  PlanResult best = select_best(scored);
  if (config.planner == "gradient" && !ranged)
    best = gradient_plan(ctx, objective, best.actions,
                         GradientConfig{config.grad_iters, config.grad_step});
  return best;
}

std::vector<double> failure_values(std::size_t n, double threshold) {
  std::vector<double> v(n, kNaN);
  v.back() = threshold;
  return v;
}

}  // namespace

ExperimentReport run_control_experiment(const RunConfig& config, const Progress& progress) {
  config.validate();
  if (config.warmup_steps < config.window - 1)
    throw ConfigError(fmt::format("warmup_steps ({}) must be at least window - 1 ({})",
                                  config.warmup_steps, config.window - 1));
  auto conditions = parse_conditions(config);
  const Index horizon = config.horizon;

  ExperimentReport rep;
  rep.group_column = "condition";
  rep.index_column = "episode";
  rep.metrics = {"executed_steps", "trajectory_mse", "full_horizon_mse",
                 "predicted_cost", "realized_cost",  "cost_error",
                 "plan_u",         "executed_u",     "u_threshold"};

  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = derive_seed(config.seed, kRepeat, static_cast<std::uint64_t>(r));
    report(progress, fmt::format("repeat {}: collecting {} x {} random steps", r,
                                 config.explore_episodes, config.explore_steps));
    auto collector = env::make_environment(config.env, config.explore_steps);
    const Dataset data = collect_random(*collector, config.explore_episodes, config.explore_steps,
                                        derive_seed(seed, kCollect, 0));
    report(progress, fmt::format("repeat {}: training world model and autoencoder", r));
    const TrainedModels models = train_models(data, config, derive_seed(seed, kTrain, 0));
    const Calibration cal = calibrate(config.env, models, config, derive_seed(seed, kCalibrate, 0), horizon);

    double threshold = kInf;
    if (config.u_threshold)
      threshold = *config.u_threshold;
    else if (config.u_threshold_percentile)
      threshold = percentile(cal.step_u, *config.u_threshold_percentile);

    for (const auto& proto : conditions) {
      ControlCondition cond = proto;
      if (cond.kind == ControlCondition::Kind::percentile_range) {
        cond.lo = percentile(cal.cumulative_u, proto.lo);
        cond.hi = percentile(cal.cumulative_u, proto.hi);
      }
      report(progress, fmt::format("repeat {}: condition {}", r, cond.label));
      for (int e = 0; e < config.eval_episodes; ++e) {
        const auto eidx = static_cast<std::uint64_t>(e);
        auto env = env::make_environment(config.env, config.warmup_steps + config.horizon);
        const History history =
            random_warmup(*env, derive_seed(seed, kEval, eidx), config.warmup_steps);
        const PlanningContext ctx{models.world, &models.uncertainty, *env, history};

        ReportRow row{r, cond.label, e, "ok", {}};
        std::optional<PlanResult> plan;
        for (int attempt = 0; attempt <= config.max_retries && !plan; ++attempt) {
          try {
            plan = plan_for_condition(ctx, cond, config,
                                      derive_seed(derive_seed(seed, kPlan, eidx), 0,
                                                  static_cast<std::uint64_t>(attempt)),
                                      horizon);
          } catch (const NoAdmissiblePlan&) {
          }
        }
        if (!plan) {
          row.status = "no_plan";
          row.values = failure_values(rep.metrics.size(), threshold);
          rep.rows.push_back(std::move(row));
          continue;
        }

        auto exec_env = env->clone();
        const ExecutionResult executed = open_loop_execute(*exec_env, *plan, threshold);
        auto full_env = env->clone();
        const ExecutionResult full = open_loop_execute(*full_env, *plan, kInf);
        if (executed.executed_steps == 0) {
          row.status = "env_fault";
          row.values = failure_values(rep.metrics.size(), threshold);
          rep.rows.push_back(std::move(row));
          continue;
        }
        if (executed.fault || full.fault) row.status = "partial";

        double predicted = 0.0, executed_u = 0.0;
        for (Index i = 0; i < executed.executed_steps; ++i) {
          predicted += plan->predicted.costs[static_cast<std::size_t>(i)];
          executed_u += plan->uncertainty.per_step[static_cast<std::size_t>(i)];
        }
        row.values = {static_cast<double>(executed.executed_steps),
                      trajectory_mse(*plan, executed),
                      trajectory_mse(*plan, full),
                      predicted,
                      executed.realized_cost,
                      std::abs(predicted - executed.realized_cost),
                      plan->uncertainty.cumulative,
                      executed_u,
                      threshold};
        rep.rows.push_back(std::move(row));
      }
    }
  }
  return rep;
}

namespace {

struct ActiveCollection {
  Dataset data;
  double mean_plan_u = 0.0;
};

ActiveCollection collect_active(const RunConfig& config, const TrainedModels& models,
                                std::uint64_t seed, double cap_per_step) {
  ActiveCollection out;
  double u_sum = 0.0;
  int plans = 0;
  for (int ep = 0; ep < config.phase2_episodes; ++ep) {
    const auto eidx = static_cast<std::uint64_t>(ep);
    auto env = env::make_environment(config.env, config.phase2_steps);
    History history = random_warmup(*env, derive_seed(seed, 0, eidx), config.warmup_steps);
    nn::Rng fallback_rng(derive_seed(seed, 2, eidx));
    bool alive = true;
    for (int segment = 0; alive && history.length() < config.phase2_steps; ++segment) {
      const Index horizon =
          std::min<Index>(config.horizon, config.phase2_steps - history.length());
      Objective objective;
      objective.mode = PlanMode::explore;
      objective.horizon = horizon;
      objective.uncertainty_cap = cap_per_step * static_cast<double>(horizon);
      const PlanningContext ctx{models.world, &models.uncertainty, *env, history};

      std::optional<PlanResult> plan;
      for (int attempt = 0; attempt <= config.max_retries && !plan; ++attempt) {
        const ShootingConfig shooting{
            config.candidates,
            derive_seed(derive_seed(seed, 1, eidx), static_cast<std::uint64_t>(segment),
                        static_cast<std::uint64_t>(attempt)),
            config.hold_max};
        try {
          plan = random_shooting(ctx, objective, shooting);
        } catch (const NoAdmissiblePlan&) {
        }
      }
      ActionSequence actions;
      if (plan) {
        if (config.planner == "gradient")
          plan = gradient_plan(ctx, objective, plan->actions,
                               GradientConfig{config.grad_iters, config.grad_step});
        u_sum += plan->uncertainty.cumulative / static_cast<double>(horizon);
        ++plans;
        actions = plan->actions;
      } else {
        for (Index i = 0; i < horizon; ++i)
          actions.push_back(uniform_action(env->action_bounds(), fallback_rng));
      }
      for (const auto& a : actions) {
        const auto r = env->step(a);
        if (r.fault) {
          alive = false;
          break;
        }
        history.actions.push_back(a);
        history.observations.push_back(r.observation);
        if (r.done) {
          alive = false;
          break;
        }
      }
    }
    Episode e;
    e.id = kActiveIdBase + ep;
    e.observations = std::move(history.observations);
    e.actions = std::move(history.actions);
    // costs are recomputed from the recorded pairs; they equal what step() returned
    for (std::size_t t = 0; t < e.actions.size(); ++t)
      e.costs.push_back(env->cost_of(e.observations[t + 1], e.actions[t]));
    out.data.episodes.push_back(std::move(e));
  }
  out.mean_plan_u = plans > 0 ? u_sum / plans : kNaN;
  return out;
}

}  // namespace

void require_disjoint_ids(const Dataset& validation, std::span<const Dataset* const> training) {
  std::set<std::int64_t> ids;
  for (const auto& e : validation.episodes) ids.insert(e.id);
  for (const auto* d : training)
    for (const auto& e : d->episodes)
      if (ids.contains(e.id))
        throw RuntimeFailure(fmt::format("validation episode id {} also appears in training data",
                                         e.id));
}

ExperimentReport run_active_learning_experiment(const RunConfig& config, const Progress& progress) {
  config.validate();
  if (config.warmup_steps < config.window - 1)
    throw ConfigError(fmt::format("warmup_steps ({}) must be at least window - 1 ({})",
                                  config.warmup_steps, config.window - 1));
  if (config.warmup_steps >= config.phase2_steps)
    throw ConfigError("phase2_steps must exceed warmup_steps");
  if (config.validation_steps <= config.warmup_steps)
    throw ConfigError("validation_steps must exceed warmup_steps");
  const int initial_episodes = std::max(1, config.initial_steps / config.episode_steps);

  ExperimentReport rep;
  rep.group_column = "arm";
  rep.index_column = "retraining";
  rep.metrics = {"validation_mse", "training_steps", "uncertainty_cap", "mean_plan_u"};

  for (int r = 0; r < config.repeats; ++r) {
    const std::uint64_t seed = derive_seed(config.seed, kRepeat, static_cast<std::uint64_t>(r));
    report(progress, fmt::format("repeat {}: initial random phase ({} x {})", r, initial_episodes,
                                 config.episode_steps));
    auto collector = env::make_environment(config.env, config.episode_steps);
    const Dataset initial = collect_random(*collector, initial_episodes, config.episode_steps,
                                           derive_seed(seed, kCollect, 0));
    auto val_env = env::make_environment(config.env, config.validation_steps);
    const Dataset validation =
        collect_random(*val_env, config.validation_trajectories, config.validation_steps,
                       derive_seed(seed, kValidation, 0), kValidationIdBase,
                       config.validation_hold_max);

    const TrainedModels models = train_models(initial, config, derive_seed(seed, kTrain, 0));
    const Index plan_horizon =
        std::min<Index>(config.horizon, config.phase2_steps - config.warmup_steps);
    const Calibration cal =
        calibrate(config.env, models, config, derive_seed(seed, kCalibrate, 0), plan_horizon);
    const double cap_per_step =
        config.threshold_factor * cal.mean_cumulative() / static_cast<double>(plan_horizon);

    report(progress, fmt::format("repeat {}: uncertainty-seeking collection", r));
    const ActiveCollection active =
        collect_active(config, models, derive_seed(seed, kActive, 0), cap_per_step);
    auto random_env = env::make_environment(config.env, config.phase2_steps);
    const Dataset random = collect_random(*random_env, config.phase2_episodes, config.phase2_steps,
                                          derive_seed(seed, kRandomArm, 0), kRandomIdBase);
    const std::array<const Dataset*, 3> training{&initial, &active.data, &random};
    require_disjoint_ids(validation, training);

    const Dataset active_union = concatenate(initial, active.data);
    const Dataset random_union = concatenate(initial, random);
    for (int k = 0; k < config.retrainings; ++k) {
      report(progress, fmt::format("repeat {}: retraining {}", r, k));
      const auto train_seed = derive_seed(seed, kRetrain, static_cast<std::uint64_t>(k));
      const auto wm_config = world_model_config(config, train_seed);
      const WorldModel wm_active = train_world_model(active_union, wm_config).model;
      const WorldModel wm_random = train_world_model(random_union, wm_config).model;
      rep.rows.push_back(ReportRow{r, "active", k, "ok",
                                   {validation_mse(wm_active, validation, config.warmup_steps),
                                    static_cast<double>(active_union.total_steps()),
                                    cap_per_step * static_cast<double>(plan_horizon),
                                    active.mean_plan_u}});
      rep.rows.push_back(ReportRow{r, "random", k, "ok",
                                   {validation_mse(wm_random, validation, config.warmup_steps),
                                    static_cast<double>(random_union.total_steps()), kNaN, kNaN}});
    }
  }
  return rep;
}

}  // namespace aeplan::harness
