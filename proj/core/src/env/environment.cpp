#include "aeplan/env/environment.hpp"

#include <string>

#include "aeplan/env/quadrotor.hpp"
#include "aeplan/env/surrogate.hpp"
#include "aeplan/error.hpp"

namespace aeplan::env {

std::unique_ptr<Environment> make_environment(std::string_view id, int episode_length) {
  if (id == "drone") {
    QuadrotorConfig config;
    if (episode_length > 0) config.episode_length = episode_length;
    return std::make_unique<Quadrotor>(config);
  }
  if (id == "surrogate") {
    SurrogateConfig config;
    if (episode_length > 0) config.episode_length = episode_length;
    return std::make_unique<Surrogate>(config);
  }
  throw ConfigError("unknown environment '" + std::string(id) + "' (expected drone or surrogate)");
}

}  // namespace aeplan::env
