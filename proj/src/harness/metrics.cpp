#include "bret/harness/metrics.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "bret/csv.hpp"
#include "bret/error.hpp"

namespace bret {

std::string format_metrics_row_without_time(const MetricsRow& r) {
  std::ostringstream os;
  os << r.seed << ',' << r.method << ',' << format_real(r.delta) << ',' << r.n_retrieved << ','
     << format_real(r.fraction_retrieved) << ',' << format_real(r.precision) << ','
     << format_real(r.recall) << ',' << format_real(r.success_rate);
  return os.str();
}

std::string format_metrics_row(const MetricsRow& r) {
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.3f", r.wall_seconds);
  return format_metrics_row_without_time(r) + ',' + secs;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const auto& r : rows) out << format_metrics_row(r) << '\n';
}

std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) throw DataError("metrics CSV: unexpected header", 1);
  std::vector<MetricsRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[9];
    for (auto& field : f) {
      if (!std::getline(ss, field, ',')) throw DataError("metrics CSV: too few columns", line_no);
    }
    try {
      rows.push_back({std::stoull(f[0]), f[1], std::stod(f[2]), std::stoull(f[3]), std::stod(f[4]),
                      std::stod(f[5]), std::stod(f[6]), std::stod(f[7]), std::stod(f[8])});
    } catch (const std::exception&) {
      throw DataError("metrics CSV: bad number", line_no);
    }
  }
  return rows;
}

void write_intervention_csv(const std::filesystem::path& path, const std::vector<InterventionRow>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << kInterventionHeader << '\n';
  for (const auto& r : rows) {
    out << r.round << ',' << r.cumulative_interventions << ',' << format_metrics_row(r.metrics) << '\n';
  }
}

}  // namespace bret
