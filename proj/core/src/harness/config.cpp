#include "aeplan/harness/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include "aeplan/error.hpp"
#include "json.hpp"

namespace aeplan::harness {

namespace {

using Json = nlohmann::ordered_json;

template <typename Config, typename Visitor>
void visit_fields(Config& c, Visitor&& v) {
  v("env", c.env);
  v("seed", c.seed);
  v("explore_episodes", c.explore_episodes);
  v("explore_steps", c.explore_steps);
  v("window", c.window);
  v("epochs", c.epochs);
  v("lr", c.lr);
  v("batch_size", c.batch_size);
  v("truncation", c.truncation);
  v("ae_epochs", c.ae_epochs);
  v("ae_lr", c.ae_lr);
  v("ae_batch_size", c.ae_batch_size);
  v("ae_hidden", c.ae_hidden);
  v("ae_loss", c.ae_loss);
  v("horizon", c.horizon);
  v("candidates", c.candidates);
  v("hold_max", c.hold_max);
  v("alpha", c.alpha);
  v("beta", c.beta);
  v("planner", c.planner);
  v("grad_iters", c.grad_iters);
  v("grad_step", c.grad_step);
  v("u_range_lo", c.u_range_lo);
  v("u_range_hi", c.u_range_hi);
  v("u_threshold", c.u_threshold);
  v("u_threshold_percentile", c.u_threshold_percentile);
  v("threshold_factor", c.threshold_factor);
  v("conditions", c.conditions);
  v("eval_episodes", c.eval_episodes);
  v("warmup_steps", c.warmup_steps);
  v("calibration_episodes", c.calibration_episodes);
  v("max_retries", c.max_retries);
  v("initial_steps", c.initial_steps);
  v("episode_steps", c.episode_steps);
  v("phase2_episodes", c.phase2_episodes);
  v("phase2_steps", c.phase2_steps);
  v("validation_trajectories", c.validation_trajectories);
  v("validation_steps", c.validation_steps);
  v("validation_hold_max", c.validation_hold_max);
  v("retrainings", c.retrainings);
  v("repeats", c.repeats);
  v("out_dir", c.out_dir);
}

template <typename T>
void read_value(const Json& j, std::string_view key, T& out) {
  const auto bad = [&](const char* expected) {
    return ConfigError("config key '" + std::string(key) + "' must be " + expected + ", got " +
                       j.dump());
  };
  if constexpr (std::is_same_v<T, std::string>) {
    if (!j.is_string()) throw bad("a string");
    out = j.get<std::string>();
  } else if constexpr (std::is_same_v<T, double>) {
    if (!j.is_number()) throw bad("a number");
    out = j.get<double>();
  } else if constexpr (std::is_same_v<T, std::optional<double>>) {
    if (j.is_null()) {
      out.reset();
    } else {
      if (!j.is_number()) throw bad("a number or null");
      out = j.get<double>();
    }
  } else if constexpr (std::is_same_v<T, std::uint64_t>) {
    if (!j.is_number_unsigned()) throw bad("a non-negative integer");
    out = j.get<std::uint64_t>();
  } else {
    static_assert(std::is_same_v<T, int>);
    if (!j.is_number_integer()) throw bad("an integer");
    const auto v = j.get<std::int64_t>();
    if (v < INT32_MIN || v > INT32_MAX) throw bad("a 32-bit integer");
    out = static_cast<int>(v);
  }
}

}  // namespace

void RunConfig::validate() const {
  const auto positive = [](const char* key, double v) {
    if (!(v > 0)) throw ConfigError(std::string("config key '") + key + "' must be positive");
  };
  const auto non_negative = [](const char* key, double v) {
    if (!(v >= 0)) throw ConfigError(std::string("config key '") + key + "' must be >= 0");
  };
  if (env != "drone" && env != "surrogate")
    throw ConfigError("config key 'env' must be \"drone\" or \"surrogate\", got \"" + env + "\"");
  positive("explore_episodes", explore_episodes);
  positive("explore_steps", explore_steps);
  positive("window", window);
  non_negative("epochs", epochs);
  positive("lr", lr);
  positive("batch_size", batch_size);
  if (truncation < 2) throw ConfigError("config key 'truncation' must be >= 2");
  non_negative("ae_epochs", ae_epochs);
  positive("ae_lr", ae_lr);
  positive("ae_batch_size", ae_batch_size);
  positive("ae_hidden", ae_hidden);
  if (ae_loss != "mse" && ae_loss != "rss")
    throw ConfigError("config key 'ae_loss' must be \"mse\" or \"rss\"");
  positive("horizon", horizon);
  positive("candidates", candidates);
  positive("hold_max", hold_max);
  non_negative("alpha", alpha);
  if (planner != "shooting" && planner != "gradient")
    throw ConfigError("config key 'planner' must be \"shooting\" or \"gradient\"");
  non_negative("grad_iters", grad_iters);
  positive("grad_step", grad_step);
  if (u_range_lo && u_range_hi && *u_range_lo > *u_range_hi)
    throw ConfigError("config keys 'u_range_lo' > 'u_range_hi'");
  if (u_threshold) non_negative("u_threshold", *u_threshold);
  if (u_threshold_percentile && !(*u_threshold_percentile >= 0 && *u_threshold_percentile <= 100))
    throw ConfigError("config key 'u_threshold_percentile' must lie in [0, 100]");
  positive("threshold_factor", threshold_factor);
  if (conditions.empty()) throw ConfigError("config key 'conditions' must not be empty");
  positive("eval_episodes", eval_episodes);
  non_negative("warmup_steps", warmup_steps);
  positive("calibration_episodes", calibration_episodes);
  non_negative("max_retries", max_retries);
  positive("initial_steps", initial_steps);
  positive("episode_steps", episode_steps);
  positive("phase2_episodes", phase2_episodes);
  positive("phase2_steps", phase2_steps);
  positive("validation_trajectories", validation_trajectories);
  positive("validation_steps", validation_steps);
  positive("validation_hold_max", validation_hold_max);
  positive("retrainings", retrainings);
  positive("repeats", repeats);
  if (out_dir.empty()) throw ConfigError("config key 'out_dir' must not be empty");
}

RunConfig parse_config(std::string_view json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");

  RunConfig config;
  std::set<std::string, std::less<>> known;
  visit_fields(config, [&](std::string_view key, auto& field) {
    known.emplace(key);
    if (const auto it = j.find(key); it != j.end()) read_value(*it, key, field);
  });
  for (const auto& item : j.items())
    if (!known.contains(item.key()))
      throw ConfigError("unknown config key '" + item.key() + "'");
  config.validate();
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return parse_config(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const RunConfig& config) {
  Json j = Json::object();
  visit_fields(config, [&](std::string_view key, const auto& field) {
    using T = std::decay_t<decltype(field)>;
    if constexpr (std::is_same_v<T, std::optional<double>>) {
      j[std::string(key)] = field ? Json(*field) : Json(nullptr);
    } else {
      j[std::string(key)] = field;
    }
  });
  return j.dump(2) + "\n";
}

}  // namespace aeplan::harness
