#include "aeplan/harness/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "aeplan/error.hpp"

namespace aeplan::harness {

std::size_t ExperimentReport::metric(const std::string& name) const {
  for (std::size_t i = 0; i < metrics.size(); ++i)
    if (metrics[i] == name) return i;
  throw ConfigError("report has no metric '" + name + "'");
}

std::vector<GroupSummary> summarize(const ExperimentReport& report) {
  std::vector<GroupSummary> out;
  const std::size_t k = report.metrics.size();
  for (const auto& row : report.rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const GroupSummary& g) { return g.group == row.group; });
    if (it == out.end()) {
      out.push_back(GroupSummary{row.group, 0, 0, {}, {}});
      it = std::prev(out.end());
    }
    if (row.status == "ok")
      ++it->count;
    else
      ++it->failures;
  }
  for (auto& g : out) {
    g.mean.assign(k, std::nan(""));
    g.stddev.assign(k, std::nan(""));
    for (std::size_t m = 0; m < k; ++m) {
      std::vector<double> xs;
      for (const auto& row : report.rows)
        if (row.group == g.group && row.status == "ok" && std::isfinite(row.values[m]))
          xs.push_back(row.values[m]);
      if (xs.empty()) continue;
      double sum = 0.0;
      for (const double x : xs) sum += x;
      const double mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      for (const double x : xs) ss += (x - mean) * (x - mean);
      g.mean[m] = mean;
      g.stddev[m] = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
    }
  }
  return out;
}

void write_report_csv(std::ostream& out, const ExperimentReport& report) {
  out << "repeat," << report.group_column << ',' << report.index_column << ",status";
  for (const auto& m : report.metrics) out << ',' << m;
  out << '\n';
  for (const auto& row : report.rows) {
    if (row.values.size() != report.metrics.size())
      throw RuntimeFailure("report row has the wrong number of values");
    std::string line = fmt::format("{},{},{},{}", row.repeat, row.group, row.index, row.status);
    for (const double v : row.values) line += fmt::format(",{}", v);
    out << line << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ExperimentReport& report) {
  out << report.group_column << ",count,failures";
  for (const auto& m : report.metrics) out << ",mean_" << m << ",std_" << m;
  out << '\n';
  for (const auto& g : summarize(report)) {
    std::string line = fmt::format("{},{},{}", g.group, g.count, g.failures);
    for (std::size_t m = 0; m < report.metrics.size(); ++m)
      line += fmt::format(",{},{}", g.mean[m], g.stddev[m]);
    out << line << '\n';
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double to_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("report field '" + s + "' is not a number");
  return v;
}

int to_int(const std::string& s) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError("report field '" + s + "' is not an integer");
  return v;
}

}  // namespace

ExperimentReport read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("report file is empty");
  const auto header = split_line(line);
  if (header.size() < 4 || header[0] != "repeat" || header[3] != "status")
    throw ConfigError("report header must start with repeat,<group>,<index>,status");
  ExperimentReport report;
  report.group_column = header[1];
  report.index_column = header[2];
  report.metrics.assign(header.begin() + 4, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != header.size()) throw ConfigError("report row has the wrong number of fields");
    ReportRow row{to_int(f[0]), f[1], to_int(f[2]), f[3], {}};
    for (std::size_t i = 4; i < f.size(); ++i) row.values.push_back(to_double(f[i]));
    report.rows.push_back(std::move(row));
  }
  return report;
}

void save_report(const std::filesystem::path& dir, const ExperimentReport& report) {
  std::filesystem::create_directories(dir);
  std::ofstream rep(dir / "report.csv", std::ios::binary);
  std::ofstream sum(dir / "summary.csv", std::ios::binary);
  if (!rep || !sum) throw RuntimeFailure("cannot write reports into " + dir.string());
  write_report_csv(rep, report);
  write_summary_csv(sum, report);
}

}  // namespace aeplan::harness
