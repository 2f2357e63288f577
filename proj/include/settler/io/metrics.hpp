#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "settler/io/csv.hpp"

namespace settler::io {

struct VariableMetrics {
  std::string name;
  std::size_t n = 0;
  double rmse = 0.0;
  double max_abs = 0.0;
  /// Seconds from the first sample to the first step after which the error
  /// stays below the threshold; empty means never.
  std::optional<double> convergence_time;
  /// First step with error below the threshold and the fraction of the
  /// steps from there on that stay below it.
  std::optional<std::size_t> first_entry;
  double fraction_within_after_entry = 0.0;
};

VariableMetrics variable_metrics(std::string name, std::span<const double> tau, std::span<const double> predicted,
                                 std::span<const double> truth, double threshold);

struct SeriesMetrics {
  int member = -1;  // -1 is the ensemble mean
  std::vector<VariableMetrics> variables;

  const VariableMetrics* find(std::string_view name) const;
};

struct MetricsReport {
  double threshold = 0.005;
  double horizon = 0.0;
  std::vector<SeriesMetrics> members;
  std::optional<SeriesMetrics> mean;

  nlohmann::json to_json() const;
};

/// Prediction columns compared against truth; the truth table supplies
/// true_<name> when present, otherwise <name>.
inline const std::vector<std::string>& default_metric_variables() {
  static const std::vector<std::string> v{"h_hp_m", "h_dp_m"};
  return v;
}

/// `predicted` is a long table (optional member column, -1 = mean) keyed by
/// tau_s; rows are matched to truth rows with the same tau_s. Parse error
/// when a prediction stamp has no truth row.
MetricsReport evaluate_tables(const CsvTable& predicted, const CsvTable& truth, double threshold = 0.005,
                              const std::vector<std::string>& variables = default_metric_variables());

}  // namespace settler::io
