#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace aeplan::harness {

struct ReportRow {
  int repeat = 0;
  std::string group;  // condition or arm
  int index = 0;      // episode or retraining
  std::string status = "ok";
  std::vector<double> values;  // one per metric
};

/// Per-episode (or per-retraining) rows of one experiment.
struct ExperimentReport {
  std::string group_column = "condition";
  std::string index_column = "episode";
  std::vector<std::string> metrics;
  std::vector<ReportRow> rows;

  /// Index of a metric column; throws ConfigError for unknown names.
  std::size_t metric(const std::string& name) const;
};

struct GroupSummary {
  std::string group;
  int count = 0;     // rows with status ok
  int failures = 0;  // any other status
  std::vector<double> mean;
  std::vector<double> stddev;  // sample standard deviation, 0 for a single row
};

/// One summary per group in order of first appearance. Only ok rows with a
/// finite value enter a metric's statistics.
std::vector<GroupSummary> summarize(const ExperimentReport& report);

void write_report_csv(std::ostream& out, const ExperimentReport& report);
void write_summary_csv(std::ostream& out, const ExperimentReport& report);
ExperimentReport read_report_csv(std::istream& in);

/// Writes report.csv and summary.csv into `dir`.
void save_report(const std::filesystem::path& dir, const ExperimentReport& report);

}  // namespace aeplan::harness
