#pragma once

#include <filesystem>
#include <iosfwd>

#include "aeplan/dataset.hpp"

namespace aeplan::harness {

/// One row per transition: episode, step, s0.., a0.., cost, ns0.. where the
/// ns columns hold the observation after the action. Rows are ordered by
/// (episode, step) and numbers use the shortest round-trip decimal form, so
/// write -> read -> write reproduces the file byte for byte.
void write_dataset_csv(std::ostream& out, const Dataset& data);
Dataset read_dataset_csv(std::istream& in);

void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace aeplan::harness
