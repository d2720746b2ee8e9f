#include "aeplan/harness/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "aeplan/error.hpp"
#include "aeplan/harness/config.hpp"
#include "aeplan/harness/dataset_io.hpp"
#include "aeplan/harness/experiments.hpp"
#include "aeplan/harness/persistence.hpp"
#include "aeplan/harness/report.hpp"

namespace aeplan::harness {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string data_path;
};

RunConfig effective_config(const Globals& g) {
  RunConfig config = g.config_path.empty() ? RunConfig{} : load_config(g.config_path);
  if (g.seed) config.seed = *g.seed;
  if (!g.out_dir.empty()) config.out_dir = g.out_dir;
  config.validate();
  return config;
}

fs::path out_path(const RunConfig& config, const char* name) {
  fs::create_directories(config.out_dir);
  return fs::path(config.out_dir) / name;
}

fs::path data_path(const Globals& g, const RunConfig& config) {
  return g.data_path.empty() ? fs::path(config.out_dir) / "dataset.csv" : fs::path(g.data_path);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

void write_curve(const fs::path& path, const std::vector<double>& curve) {
  auto out = open_out(path);
  out << "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << fmt::format("{},{}\n", i, curve[i]);
}

void cmd_collect(const Globals& g) {
  const RunConfig config = effective_config(g);
  auto env = env::make_environment(config.env, config.explore_steps);
  const Dataset data =
      collect_random(*env, config.explore_episodes, config.explore_steps, config.seed);
  const auto path = out_path(config, "dataset.csv");
  save_dataset(path, data);
  fmt::print("wrote {} transitions to {}\n", data.total_steps(), path.string());
}

void cmd_train_model(const Globals& g) {
  const RunConfig config = effective_config(g);
  const Dataset data = load_dataset(data_path(g, config));
  const auto trained = train_world_model(data, world_model_config(config, config.seed));
  save_world_model(out_path(config, "world_model.ckpt"), trained.model);
  write_curve(out_path(config, "world_model_curve.csv"), trained.training_curve);
  fmt::print("world model trained on {} transitions, final loss {}\n", data.total_steps(),
             trained.training_curve.empty() ? 0.0 : trained.training_curve.back());
}

void cmd_train_ae(const Globals& g) {
  const RunConfig config = effective_config(g);
  const Dataset data = load_dataset(data_path(g, config));
  const NormStats norm = compute_norm_stats(data);
  const WindowSet windows = build_windows(data, config.window, norm);
  const auto trained = train_autoencoder(windows, config.window, data.state_dim(),
                                         data.action_dim(), autoencoder_config(config, config.seed));
  save_uncertainty_model(out_path(config, "autoencoder.ckpt"), trained.model, norm);
  write_curve(out_path(config, "autoencoder_curve.csv"), trained.training_curve);
  fmt::print("autoencoder trained on {} windows ({} episodes skipped)\n", windows.count(),
             windows.skipped_episodes);
}

TrainedModels load_models(const RunConfig& config) {
  TrainedModels m;
  m.world = load_world_model(fs::path(config.out_dir) / "world_model.ckpt");
  NormStats ae_norm;
  m.uncertainty = load_uncertainty_model(fs::path(config.out_dir) / "autoencoder.ckpt", &ae_norm);
  if (m.uncertainty.window != config.window)
    throw ConfigError(fmt::format("autoencoder was trained with window {}, config says {}",
                                  m.uncertainty.window, config.window));
  return m;
}

PlanResult make_plan(const PlanningContext& ctx, const Objective& objective,
                     const RunConfig& config, std::uint64_t seed) {
  // Fresh candidate draws when every candidate breaks the uncertainty cap.
  std::optional<PlanResult> shot;
  for (int attempt = 0; !shot; ++attempt) {
    try {
      shot = random_shooting(ctx, objective,
                             ShootingConfig{config.candidates,
                                            derive_seed(seed, 9, static_cast<std::uint64_t>(attempt)),
                                            config.hold_max});
    } catch (const NoAdmissiblePlan&) {
      if (attempt >= config.max_retries) throw;
    }
  }
  PlanResult plan = std::move(*shot);
  if (config.planner == "gradient")
    plan = gradient_plan(ctx, objective, plan.actions,
                         GradientConfig{config.grad_iters, config.grad_step});
  return plan;
}

Objective control_objective(const RunConfig& config, Index horizon) {
  Objective o;
  o.alpha = config.alpha;
  o.beta = config.beta;
  o.horizon = horizon;
  return o;
}

void cmd_plan(const Globals& g) {
  const RunConfig config = effective_config(g);
  const TrainedModels models = load_models(config);
  auto env = env::make_environment(config.env, config.warmup_steps + config.horizon);
  const History history = random_warmup(*env, config.seed, config.warmup_steps);
  const PlanningContext ctx{models.world, &models.uncertainty, *env, history};
  const PlanResult plan =
      make_plan(ctx, control_objective(config, config.horizon), config, derive_seed(config.seed, 1, 0));

  auto out = open_out(out_path(config, "plan.csv"));
  std::string header = "step";
  for (Index j = 0; j < env->action_dim(); ++j) header += fmt::format(",a{}", j);
  for (Index j = 0; j < env->observation_dim(); ++j) header += fmt::format(",s{}", j);
  out << header << ",predicted_cost,u\n";
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    std::string line = fmt::format("{}", i);
    for (const double v : plan.actions[i]) line += fmt::format(",{}", v);
    for (const double v : plan.predicted.states[i]) line += fmt::format(",{}", v);
    line += fmt::format(",{},{}\n", plan.predicted.costs[i], plan.uncertainty.per_step[i]);
    out << line;
  }
  fmt::print("plan score {} predicted cost {} cumulative u {}\n", plan.score,
             plan.predicted_cumulative_cost, plan.uncertainty.cumulative);
}

// Plan, execute open-loop up to the threshold, re-plan, until episode_steps.
Dataset closed_loop(const RunConfig& config, const TrainedModels& models, bool explore) {
  auto env = env::make_environment(config.env, config.episode_steps);
  History history = random_warmup(*env, config.seed, config.warmup_steps);
  std::optional<double> cap;
  if (explore) {
    const Index h = std::min<Index>(config.horizon, config.episode_steps - config.warmup_steps);
    const Calibration cal = calibrate(config.env, models, config, derive_seed(config.seed, 2, 0), h);
    cap = config.threshold_factor * cal.mean_cumulative() / static_cast<double>(h);
  }
  const double threshold = config.u_threshold.value_or(std::numeric_limits<double>::infinity());
  bool alive = true;
  for (std::uint64_t k = 0; alive && history.length() < config.episode_steps; ++k) {
    const Index horizon = std::min<Index>(config.horizon, config.episode_steps - history.length());
    Objective objective = control_objective(config, horizon);
    if (explore) {
      objective.mode = PlanMode::explore;
      objective.uncertainty_cap = *cap * static_cast<double>(horizon);
    }
    const PlanningContext ctx{models.world, &models.uncertainty, *env, history};
    ActionSequence actions;
    Index steps = horizon;
    try {
      const PlanResult plan = make_plan(ctx, objective, config, derive_seed(config.seed, 3, k));
      if (!explore) steps = stop_index(plan, threshold);
      actions = plan.actions;
    } catch (const NoAdmissiblePlan&) {
      if (!explore) throw;
      // Past the cap everywhere: take a random segment, as the experiment does.
      fmt::print(stderr, "segment {}: no plan under the cap, acting randomly\n", k);
      actions = sample_candidates(env->action_bounds(), horizon,
                                  ShootingConfig{1, derive_seed(config.seed, 4, k), config.hold_max})
                    .front();
    }
    for (Index i = 0; i < steps; ++i) {
      const auto& a = actions[static_cast<std::size_t>(i)];
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
  e.observations = std::move(history.observations);
  e.actions = std::move(history.actions);
  for (std::size_t t = 0; t < e.actions.size(); ++t)
    e.costs.push_back(env->cost_of(e.observations[t + 1], e.actions[t]));
  Dataset d;
  d.episodes.push_back(std::move(e));
  return d;
}

void cmd_control(const Globals& g, bool explore) {
  const RunConfig config = effective_config(g);
  const TrainedModels models = load_models(config);
  const Dataset d = closed_loop(config, models, explore);
  const auto path = out_path(config, explore ? "explore_dataset.csv" : "control_trajectory.csv");
  save_dataset(path, d);
  double cost = 0.0;
  for (const double c : d.episodes.front().costs) cost += c;
  fmt::print("{} steps, cumulative cost {}, written to {}\n", d.total_steps(), cost, path.string());
}

void cmd_eval(const Globals& g) {
  const RunConfig config = effective_config(g);
  const WorldModel wm = load_world_model(fs::path(config.out_dir) / "world_model.ckpt");
  const Dataset data = load_dataset(data_path(g, config));
  const double mse = validation_mse(wm, data, config.warmup_steps);
  auto out = open_out(out_path(config, "eval.csv"));
  out << fmt::format("trajectories,validation_mse\n{},{}\n", data.episodes.size(), mse);
  fmt::print("validation MSE {}\n", mse);
}

void cmd_experiment(const Globals& g, bool active) {
  const RunConfig config = effective_config(g);
  const auto progress = [](std::string_view msg) { fmt::print(stderr, "{}\n", msg); };
  const ExperimentReport rep = active ? run_active_learning_experiment(config, progress)
                                      : run_control_experiment(config, progress);
  fs::create_directories(config.out_dir);
  save_report(config.out_dir, rep);
  auto cfg_out = open_out(fs::path(config.out_dir) / "config.json");
  cfg_out << serialize_config(config);
  fmt::print("{} group column, {} rows; see {}/summary.csv\n", rep.group_column, rep.rows.size(),
             config.out_dir);
  for (const auto& s : summarize(rep))
    fmt::print("{}: n={} failures={} mean {}={}\n", s.group, s.count, s.failures,
               rep.metrics.front(), s.mean.front());
}

}  // namespace

int cli_main(int argc, char** argv) {
  CLI::App app{"Uncertainty-aware model-based planning toolkit"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "flat JSON run configuration");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out-dir", g.out_dir, "output directory (overrides the config)");

  const auto sub = [&](const char* name, const char* help, bool takes_data) {
    auto* s = app.add_subcommand(name, help);
    s->fallthrough();
    if (takes_data) s->add_option("--data", g.data_path, "dataset CSV (default <out-dir>/dataset.csv)");
    return s;
  };
  auto* collect = sub("collect", "collect random-action episodes into dataset.csv", false);
  auto* train_model = sub("train-model", "train the world model on a dataset", true);
  auto* train_ae = sub("train-ae", "train the uncertainty autoencoder on a dataset", true);
  auto* plan = sub("plan", "plan one action sequence from a warmed-up state", false);
  auto* control = sub("control", "run one uncertainty-aware control episode", false);
  auto* explore = sub("explore", "run one uncertainty-seeking exploration episode", false);
  auto* eval = sub("eval", "open-loop prediction error of the world model on a dataset", true);
  auto* exp_control = sub("experiment-control", "uncertainty-aware control experiment", false);
  auto* exp_active = sub("experiment-active", "active versus random exploration experiment", false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    if (collect->parsed()) cmd_collect(g);
    else if (train_model->parsed()) cmd_train_model(g);
    else if (train_ae->parsed()) cmd_train_ae(g);
    else if (plan->parsed()) cmd_plan(g);
    else if (control->parsed()) cmd_control(g, false);
    else if (explore->parsed()) cmd_control(g, true);
    else if (eval->parsed()) cmd_eval(g);
    else if (exp_control->parsed()) cmd_experiment(g, false);
    else if (exp_active->parsed()) cmd_experiment(g, true);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace aeplan::harness
