#pragma once

#include <filesystem>

#include "aeplan/uncertainty.hpp"
#include "aeplan/world_model.hpp"

namespace aeplan::harness {

/// Thin file wrappers over the checkpoint format. Loading reports version,
/// truncation, parse and dimension problems as distinct CheckpointError kinds.
void save_world_model(const std::filesystem::path& path, const WorldModel& model);
WorldModel load_world_model(const std::filesystem::path& path);

void save_uncertainty_model(const std::filesystem::path& path, const UncertaintyModel& model,
                            const NormStats& norm);
UncertaintyModel load_uncertainty_model(const std::filesystem::path& path, NormStats* norm);

}  // namespace aeplan::harness
