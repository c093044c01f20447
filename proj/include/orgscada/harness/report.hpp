#pragma once

#include <map>
#include <string>
#include <vector>

#include "orgscada/org/organization.hpp"
#include "orgscada/scada/latency.hpp"

namespace orgscada {

struct ClassSummary {
  int count = 0;
  double mean_ms = 0.0;
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;

  bool operator==(const ClassSummary&) const = default;
};

struct LatencyReport {
  std::vector<std::string> orgs;     // column groups, in scenario order
  std::vector<LatencyRecord> rows;   // grouped by org, launch order within each
  std::vector<OpenFailure> failures; // per-row errors; the run went on
  std::map<PathClass, ClassSummary> summary;

  bool operator==(const LatencyReport&) const = default;
  std::vector<LatencyRecord> rows_of(const std::string& org) const;
};

std::map<PathClass, ClassSummary> summarize(const std::vector<LatencyRecord>& rows);
// Sorts rows into (org order, launch index) and fills the summary.
LatencyReport make_report(std::vector<std::string> orgs, std::vector<LatencyRecord> rows,
                          std::vector<OpenFailure> failures);

enum class ReportFormat { Text, Csv, Json };
ReportFormat report_format_from_string(const std::string& s);

std::string render_table(const LatencyReport& report, ReportFormat format);
LatencyReport report_from_json(const Json& j);
LatencyReport report_from_csv(const std::string& csv);
Json to_json(const LatencyReport& report);

}  // namespace orgscada
