#include "aeplan/harness/persistence.hpp"

#include "aeplan/nn/checkpoint.hpp"

namespace aeplan::harness {

void save_world_model(const std::filesystem::path& path, const WorldModel& model) {
  nn::save_checkpoint_file(path, to_checkpoint(model));
}

WorldModel load_world_model(const std::filesystem::path& path) {
  return world_model_from_checkpoint(nn::load_checkpoint_file(path));
}

void save_uncertainty_model(const std::filesystem::path& path, const UncertaintyModel& model,
                            const NormStats& norm) {
  nn::save_checkpoint_file(path, to_checkpoint(model, norm));
}

UncertaintyModel load_uncertainty_model(const std::filesystem::path& path, NormStats* norm) {
  return uncertainty_from_checkpoint(nn::load_checkpoint_file(path), norm);
}

}  // namespace aeplan::harness
