#include "orgscada/harness/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace orgscada {

namespace {

constexpr const char* kCsvHeader =
    "requester_org,launch_index,service_name,path_class,t_service_ms,t_first_value_ms,ra";

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string seconds(Duration d) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", static_cast<double>(d.count()) / 1000.0);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<LatencyRecord> LatencyReport::rows_of(const std::string& org) const {
  std::vector<LatencyRecord> out;
  for (const auto& r : rows) {
    if (r.requester_org == org) out.push_back(r);
  }
  return out;
}

std::map<PathClass, ClassSummary> summarize(const std::vector<LatencyRecord>& rows) {
  std::map<PathClass, ClassSummary> out;
  std::map<PathClass, std::int64_t> total;
  for (const auto& r : rows) {
    ClassSummary& s = out[r.path_class];
    const std::int64_t ms = r.t_service.count();
    if (s.count == 0) {
      s.min_ms = s.max_ms = ms;
    } else {
      s.min_ms = std::min(s.min_ms, ms);
      s.max_ms = std::max(s.max_ms, ms);
    }
    ++s.count;
    total[r.path_class] += ms;
  }
  for (auto& [c, s] : out) s.mean_ms = static_cast<double>(total[c]) / s.count;
  return out;
}

LatencyReport make_report(std::vector<std::string> orgs, std::vector<LatencyRecord> rows,
                          std::vector<OpenFailure> failures) {
  auto rank = [&](const std::string& org) {
    const auto it = std::find(orgs.begin(), orgs.end(), org);
    return it - orgs.begin();
  };
  std::stable_sort(rows.begin(), rows.end(), [&](const LatencyRecord& a, const LatencyRecord& b) {
    const auto ra = rank(a.requester_org), rb = rank(b.requester_org);
    return ra != rb ? ra < rb : a.launch_index < b.launch_index;
  });
  LatencyReport r;
  r.orgs = std::move(orgs);
  r.summary = summarize(rows);
  r.rows = std::move(rows);
  r.failures = std::move(failures);
  return r;
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "csv") return ReportFormat::Csv;
  if (s == "json") return ReportFormat::Json;
  fail(ErrorCode::InvalidArgument, "format must be text, csv or json");
}

Json to_json(const LatencyReport& report) {
  Json rows = Json::array();
  for (const auto& r : report.rows) rows.push_back(to_json(r));
  Json failures = Json::array();
  for (const auto& f : report.failures) {
    failures.push_back(Json{{"ra", f.ra}, {"service_name", f.service}, {"reason", f.reason},
                            {"launch_index", f.launch_index}});
  }
  Json summary = Json::object();
  for (const auto& [c, s] : report.summary) {
    summary[std::string(to_string(c))] =
        Json{{"count", s.count}, {"mean_ms", s.mean_ms}, {"min_ms", s.min_ms}, {"max_ms", s.max_ms}};
  }
  return Json{{"orgs", report.orgs}, {"rows", rows}, {"failures", failures}, {"summary", summary}};
}

LatencyReport report_from_json(const Json& j) {
  std::vector<LatencyRecord> rows;
  std::vector<OpenFailure> failures;
  try {
    for (const auto& r : j.at("rows")) rows.push_back(latency_record_from_json(r));
    for (const auto& f : j.value("failures", Json::array())) {
      failures.push_back(OpenFailure{f.value("ra", ""), f.value("service_name", ""), f.value("reason", ""),
                                     f.value("launch_index", 0)});
    }
    return make_report(j.value("orgs", std::vector<std::string>{}), std::move(rows), std::move(failures));
  } catch (const Json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("report document: ") + e.what());
  }
}

LatencyReport report_from_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || split(line, ',') != split(kCsvHeader, ',')) {
    fail(ErrorCode::InvalidArgument, "csv header");
  }
  std::vector<std::string> orgs;
  std::vector<LatencyRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 7) fail(ErrorCode::InvalidArgument, "csv row: " + line);
    LatencyRecord r;
    r.requester_org = f[0];
    r.launch_index = std::stoi(f[1]);
    r.service_name = f[2];
    const auto c = path_class_from_string(f[3]);
    if (!c) fail(ErrorCode::InvalidArgument, "csv path class " + f[3]);
    r.path_class = *c;
    r.t_service = Duration{std::stoll(f[4])};
    if (!f[5].empty()) r.t_first_value = Duration{std::stoll(f[5])};
    r.ra = f[6];
    if (std::find(orgs.begin(), orgs.end(), r.requester_org) == orgs.end()) orgs.push_back(r.requester_org);
    rows.push_back(std::move(r));
  }
  return make_report(std::move(orgs), std::move(rows), {});
}

std::string render_table(const LatencyReport& report, ReportFormat format) {
  std::ostringstream out;
  if (format == ReportFormat::Json) return to_json(report).dump(2) + "\n";
  if (format == ReportFormat::Csv) {
    out << kCsvHeader << '\n';
    for (const auto& r : report.rows) {
      out << r.requester_org << ',' << r.launch_index << ',' << r.service_name << ','
          << to_string(r.path_class) << ',' << r.t_service.count() << ','
          << (r.t_first_value ? std::to_string(r.t_first_value->count()) : "") << ',' << r.ra << '\n';
    }
    return out.str();
  }

  // Text: one column group per organization, rows in launch order.
  constexpr std::size_t kService = 10, kClass = 14, kSeconds = 7;
  constexpr std::size_t kGroup = kService + kClass + kSeconds + 2;
  std::vector<std::vector<LatencyRecord>> cols;
  std::size_t height = 0;
  for (const auto& org : report.orgs) {
    cols.push_back(report.rows_of(org));
    height = std::max(height, cols.back().size());
  }
  out << pad("#", 4);
  for (const auto& org : report.orgs) out << "| " << pad(org, kGroup) << ' ';
  out << '\n' << pad("", 4);
  for (std::size_t i = 0; i < report.orgs.size(); ++i) {
    out << "| " << pad("service", kService) << ' ' << pad("class", kClass) << ' ' << pad("T_s", kSeconds) << ' ';
  }
  out << '\n';
  for (std::size_t row = 0; row < height; ++row) {
    out << pad(std::to_string(row + 1), 4);
    for (const auto& col : cols) {
      if (row < col.size()) {
        const auto& r = col[row];
        out << "| " << pad(r.service_name, kService) << ' ' << pad(std::string(to_string(r.path_class)), kClass)
            << ' ' << pad(seconds(r.t_service), kSeconds) << ' ';
      } else {
        out << "| " << pad("", kGroup) << ' ';
      }
    }
    out << '\n';
  }
  if (!report.rows.empty()) {
    out << '\n';
    for (const auto& [c, s] : report.summary) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%-14s count %3d  mean %8.1f ms  min %6lld ms  max %6lld ms\n",
                    std::string(to_string(c)).c_str(), s.count, s.mean_ms, static_cast<long long>(s.min_ms),
                    static_cast<long long>(s.max_ms));
      out << buf;
    }
  }
  for (const auto& f : report.failures) {
    out << "failed: " << f.ra << ' ' << f.service << ' ' << f.reason << '\n';
  }
  return out.str();
}

}  // namespace orgscada
