#include "aeplan/nn/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace aeplan::nn {

namespace {

constexpr const char* kMagic = "AEPLAN-CHECKPOINT";
constexpr std::size_t kMaxHeaderLines = 100000;

using Kind = CheckpointError::Kind;

void put_le(std::ostream& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  std::array<char, 8> bytes{};
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(bytes.data(), bytes.size());
}

bool get_le(std::istream& in, double& v) {
  std::array<unsigned char, 8> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size())) return false;
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  v = std::bit_cast<double>(bits);
  return true;
}

bool valid_token(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r') return false;
  return true;
}

}  // namespace

std::int64_t Checkpoint::dim(const std::string& name) const {
  for (const auto& [key, value] : dims)
    if (key == name) return value;
  throw CheckpointError(Kind::parse, "checkpoint of kind '" + kind + "' lacks dim '" + name + "'");
}

const std::vector<double>& Checkpoint::array(const std::string& name) const {
  for (const auto& [key, values] : arrays)
    if (key == name) return values;
  throw CheckpointError(Kind::dimension,
                        "checkpoint of kind '" + kind + "' lacks array '" + name + "'");
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  if (!valid_token(ckpt.kind)) throw ConfigError("checkpoint kind must be a single token");
  out << kMagic << '\n' << "version " << Checkpoint::kFormatVersion << '\n';
  out << "kind " << ckpt.kind << '\n' << "seed " << ckpt.seed << '\n';
  for (const auto& [name, value] : ckpt.dims) {
    if (!valid_token(name)) throw ConfigError("checkpoint dim names must be single tokens");
    out << "dim " << name << ' ' << value << '\n';
  }
  for (const auto& [name, values] : ckpt.arrays) {
    if (!valid_token(name)) throw ConfigError("checkpoint array names must be single tokens");
    out << "array " << name << ' ' << values.size() << '\n';
  }
  out << "end\n";
  for (const auto& entry : ckpt.arrays)
    for (double v : entry.second) put_le(out, v);
  if (!out) throw CheckpointError(Kind::io, "failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError(Kind::truncated, "checkpoint is empty");
  if (line != kMagic)
    throw CheckpointError(Kind::parse, "not a checkpoint file (bad magic line '" + line + "')");

  Checkpoint ckpt;
  std::vector<std::size_t> counts;
  bool have_version = false;
  bool have_end = false;
  for (std::size_t n = 0; n < kMaxHeaderLines && std::getline(in, line); ++n) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "end") {
      have_end = true;
      break;
    }
    if (key == "version") {
      int version = 0;
      if (!(fields >> version)) throw CheckpointError(Kind::parse, "malformed version line");
      if (version != Checkpoint::kFormatVersion)
        throw CheckpointError(Kind::version, "unsupported checkpoint version " +
                                                 std::to_string(version) + " (expected " +
                                                 std::to_string(Checkpoint::kFormatVersion) + ")");
      have_version = true;
    } else if (key == "kind") {
      if (!(fields >> ckpt.kind)) throw CheckpointError(Kind::parse, "malformed kind line");
    } else if (key == "seed") {
      if (!(fields >> ckpt.seed)) throw CheckpointError(Kind::parse, "malformed seed line");
    } else if (key == "dim") {
      std::string name;
      std::int64_t value = 0;
      if (!(fields >> name >> value)) throw CheckpointError(Kind::parse, "malformed dim line");
      ckpt.dims.emplace_back(name, value);
    } else if (key == "array") {
      std::string name;
      long long count = -1;
      if (!(fields >> name >> count) || count < 0)
        throw CheckpointError(Kind::parse, "malformed array line '" + line + "'");
      ckpt.arrays.emplace_back(name, std::vector<double>{});
      counts.push_back(static_cast<std::size_t>(count));
    } else {
      throw CheckpointError(Kind::parse, "unexpected header line '" + line + "'");
    }
  }
  if (!have_end) throw CheckpointError(Kind::truncated, "checkpoint header is incomplete");
  if (!have_version) throw CheckpointError(Kind::version, "checkpoint header has no version");
  if (ckpt.kind.empty()) throw CheckpointError(Kind::parse, "checkpoint header has no kind");

  for (std::size_t k = 0; k < counts.size(); ++k) {
    auto& values = ckpt.arrays[k].second;
    values.reserve(std::min<std::size_t>(counts[k], std::size_t{1} << 20));
    for (std::size_t j = 0; j < counts[k]; ++j) {
      double v = 0.0;
      if (!get_le(in, v))
        throw CheckpointError(Kind::truncated,
                              "checkpoint payload ends inside array '" + ckpt.arrays[k].first + "'");
      values.push_back(v);
    }
  }
  return ckpt;
}

void save_checkpoint_file(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(Kind::io, "cannot open '" + path.string() + "' for writing");
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(Kind::io, "cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

void require_kind(const Checkpoint& ckpt, const std::string& expected) {
  if (ckpt.kind != expected)
    throw CheckpointError(Kind::dimension, "checkpoint holds network kind '" + ckpt.kind +
                                               "' but '" + expected + "' was requested");
}

}  // namespace aeplan::nn
