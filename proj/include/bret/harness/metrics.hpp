#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bret {

inline constexpr std::string_view kMetricsHeader =
    "seed,method,delta,n_retrieved,fraction_retrieved,precision,recall,success_rate,wall_seconds";

struct MetricsRow {
  std::uint64_t seed = 0;
  std::string method;
  double delta = 0.0;
  std::size_t n_retrieved = 0;
  double fraction_retrieved = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  double success_rate = 0.0;
  double wall_seconds = 0.0;
};

/// One CSV line (no newline), columns in kMetricsHeader order. wall_seconds is
/// printed with millisecond resolution, every other real in shortest round-trip form.
std::string format_metrics_row(const MetricsRow& row);

/// The row with its trailing wall_seconds column removed, for determinism checks.
std::string format_metrics_row_without_time(const MetricsRow& row);

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
std::vector<MetricsRow> read_metrics_csv(const std::filesystem::path& path);

/// Intervention experiment rows: round and cumulative intervention count
/// ahead of the standard metrics columns.
struct InterventionRow {
  std::size_t round = 0;
  std::size_t cumulative_interventions = 0;
  MetricsRow metrics;
};

inline constexpr std::string_view kInterventionHeader =
    "round,cumulative_interventions,seed,method,delta,n_retrieved,fraction_retrieved,precision,"
    "recall,success_rate,wall_seconds";

void write_intervention_csv(const std::filesystem::path& path, const std::vector<InterventionRow>& rows);

}  // namespace bret
