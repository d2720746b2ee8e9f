#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "aeplan/nn/params.hpp"

namespace aeplan::nn {

/// On-disk layout:
///
///   AEPLAN-CHECKPOINT
///   version 1
///   kind <network kind>
///   seed <u64>
///   dim <name> <value>          (zero or more)
///   array <name> <count>        (one per array, declaration order)
///   end
///   <little-endian IEEE-754 binary64 payload, arrays back to back>
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  std::string kind;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::int64_t>> dims;
  std::vector<std::pair<std::string, std::vector<double>>> arrays;

  std::int64_t dim(const std::string& name) const;
  const std::vector<double>& array(const std::string& name) const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::filesystem::path& path);

/// Throws CheckpointError(dimension) naming both kinds when they differ.
void require_kind(const Checkpoint& ckpt, const std::string& expected);

template <ParameterSet P>
void append_arrays(Checkpoint& ckpt, const P& params) {
  for (const auto& span : params.parameters())
    ckpt.arrays.emplace_back(span.name, std::vector<double>(span.values.begin(), span.values.end()));
}

/// Copies arrays into an already shaped parameter set, matching by name.
template <ParameterSet P>
void restore_arrays(const Checkpoint& ckpt, P& params) {
  for (auto& span : params.parameters()) {
    const auto& stored = ckpt.array(span.name);
    if (stored.size() != span.values.size())
      throw CheckpointError(CheckpointError::Kind::dimension,
                            "array '" + span.name + "' holds " + std::to_string(stored.size()) +
                                " values, expected " + std::to_string(span.values.size()));
    std::copy(stored.begin(), stored.end(), span.values.begin());
  }
}

}  // namespace aeplan::nn
