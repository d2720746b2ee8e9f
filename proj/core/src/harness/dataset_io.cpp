#include "aeplan/harness/dataset_io.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "aeplan/error.hpp"

namespace aeplan::harness {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ConfigError(fmt::format("dataset line {}: '{}' is not a number", line_no, field));
  return v;
}

std::int64_t parse_int(std::string_view field, std::size_t line_no) {
  std::int64_t v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ConfigError(fmt::format("dataset line {}: '{}' is not an integer", line_no, field));
  return v;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  data.validate();
  const Index n = data.state_dim();
  const Index m = data.action_dim();
  std::string header = "episode,step";
  for (Index i = 0; i < n; ++i) header += fmt::format(",s{}", i);
  for (Index i = 0; i < m; ++i) header += fmt::format(",a{}", i);
  header += ",cost";
  for (Index i = 0; i < n; ++i) header += fmt::format(",ns{}", i);
  out << header << '\n';

  fmt::memory_buffer row;
  for (const auto& e : data.episodes) {
    for (Index t = 0; t < e.length(); ++t) {
      const auto idx = static_cast<std::size_t>(t);
      row.clear();
      fmt::format_to(std::back_inserter(row), "{},{}", e.id, t);
      for (const double v : e.observations[idx]) fmt::format_to(std::back_inserter(row), ",{}", v);
      for (const double v : e.actions[idx]) fmt::format_to(std::back_inserter(row), ",{}", v);
      fmt::format_to(std::back_inserter(row), ",{}", e.costs[idx]);
      for (const double v : e.observations[idx + 1])
        fmt::format_to(std::back_inserter(row), ",{}", v);
      row.push_back('\n');
      out.write(row.data(), static_cast<std::streamsize>(row.size()));
    }
  }
}

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("dataset file is empty");
  const auto header = split(line);
  Index n = 0, m = 0;
  for (std::size_t i = 2; i < header.size(); ++i) {
    const auto h = header[i];
    if (h.starts_with("ns")) continue;
    if (h.starts_with("s")) ++n;
    if (h.starts_with("a")) ++m;
  }
  const std::size_t expected = static_cast<std::size_t>(2 * n + m + 3);
  if (header.size() != expected || header[0] != "episode" || header[1] != "step" || n == 0 ||
      m == 0)
    throw ConfigError("dataset header must be episode,step,s*,a*,cost,ns*");

  Dataset data;
  std::unordered_set<std::int64_t> seen_ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != expected)
      throw ConfigError(fmt::format("dataset line {}: expected {} fields, found {}", line_no,
                                    expected, f.size()));
    const auto id = parse_int(f[0], line_no);
    const auto step = parse_int(f[1], line_no);
    std::size_t k = 2;
    VectorXd s(n), a(m), next(n);
    for (Index i = 0; i < n; ++i) s[i] = parse_double(f[k++], line_no);
    for (Index i = 0; i < m; ++i) a[i] = parse_double(f[k++], line_no);
    const double cost = parse_double(f[k++], line_no);
    for (Index i = 0; i < n; ++i) next[i] = parse_double(f[k++], line_no);

    if (step == 0) {
      if (!seen_ids.insert(id).second)
        throw ConfigError(fmt::format("dataset line {}: episode {} appears twice", line_no, id));
      data.episodes.push_back(Episode{id, {s}, {}, {}});
    } else if (data.episodes.empty() || data.episodes.back().id != id ||
               data.episodes.back().length() != step) {
      throw ConfigError(fmt::format("dataset line {}: rows must be ordered by (episode, step)",
                                    line_no));
    } else if (data.episodes.back().observations.back() != s) {
      throw ConfigError(fmt::format("dataset line {}: state does not continue the episode",
                                    line_no));
    }
    auto& e = data.episodes.back();
    e.actions.push_back(std::move(a));
    e.costs.push_back(cost);
    e.observations.push_back(std::move(next));
  }
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write dataset " + path.string());
  write_dataset_csv(out, data);
  if (!out) throw RuntimeFailure("failed while writing dataset " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open dataset " + path.string());
  return read_dataset_csv(in);
}

}  // namespace aeplan::harness
