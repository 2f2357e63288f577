#include "settler/io/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "settler/core/error.hpp"

namespace settler::io {

VariableMetrics variable_metrics(std::string name, std::span<const double> tau, std::span<const double> predicted,
                                 std::span<const double> truth, double threshold) {
  if (tau.size() != predicted.size() || tau.size() != truth.size()) {
    fail(ErrorCategory::config, "variable_metrics: length mismatch");
  }
  VariableMetrics m;
  m.name = std::move(name);
  m.n = tau.size();
  if (m.n == 0) return m;
  std::vector<double> err(m.n);
  double sq = 0.0;
  for (std::size_t i = 0; i < m.n; ++i) {
    err[i] = std::abs(predicted[i] - truth[i]);
    if (!std::isfinite(err[i])) err[i] = std::numeric_limits<double>::infinity();
    sq += err[i] * err[i];
    m.max_abs = std::max(m.max_abs, err[i]);
  }
  m.rmse = std::sqrt(sq / static_cast<double>(m.n));

  std::size_t settled = m.n;
  while (settled > 0 && err[settled - 1] < threshold) --settled;
  if (settled < m.n) m.convergence_time = tau[settled] - tau[0];

  for (std::size_t i = 0; i < m.n; ++i) {
    if (err[i] < threshold) {
      m.first_entry = i;
      std::size_t inside = 0;
      for (std::size_t j = i; j < m.n; ++j) inside += err[j] < threshold ? 1 : 0;
      m.fraction_within_after_entry = static_cast<double>(inside) / static_cast<double>(m.n - i);
      break;
    }
  }
  return m;
}

const VariableMetrics* SeriesMetrics::find(std::string_view name) const {
  for (const auto& v : variables) {
    if (v.name == name) return &v;
  }
  return nullptr;
}

namespace {

nlohmann::json series_json(const SeriesMetrics& s) {
  nlohmann::json j;
  j["member"] = s.member;
  for (const auto& v : s.variables) {
    nlohmann::json e;
    e["n"] = v.n;
    e["rmse"] = v.rmse;
    e["max_abs"] = std::isfinite(v.max_abs) ? nlohmann::json(v.max_abs) : nlohmann::json(nullptr);
    e["convergence_time_s"] = v.convergence_time ? nlohmann::json(*v.convergence_time) : nlohmann::json("never");
    e["first_entry_step"] = v.first_entry ? nlohmann::json(*v.first_entry) : nlohmann::json("never");
    e["fraction_within_after_entry"] = v.fraction_within_after_entry;
    j["variables"][v.name] = e;
  }
  return j;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "settler-metrics/1";
  j["threshold_m"] = threshold;
  j["horizon_s"] = horizon;
  j["members"] = nlohmann::json::array();
  for (const auto& m : members) j["members"].push_back(series_json(m));
  j["mean"] = mean ? series_json(*mean) : nlohmann::json(nullptr);
  return j;
}

MetricsReport evaluate_tables(const CsvTable& predicted, const CsvTable& truth, double threshold,
                              const std::vector<std::string>& variables) {
  if (!(threshold > 0.0)) fail(ErrorCategory::config, "evaluate: threshold must be positive");
  const std::size_t p_tau = predicted.index("tau_s");
  const std::size_t t_tau = truth.index("tau_s");
  const auto p_member = predicted.find("member");

  std::map<double, std::size_t> truth_row;
  for (std::size_t i = 0; i < truth.rows.size(); ++i) truth_row[truth.rows[i][t_tau]] = i;

  struct Column {
    std::string name;
    std::size_t pred;
    std::size_t truth;
  };
  std::vector<Column> cols;
  for (const auto& v : variables) {
    const auto pc = predicted.find(v);
    if (!pc) continue;
    auto tc = truth.find("true_" + v);
    if (!tc) tc = truth.find(v);
    if (!tc) continue;
    cols.push_back({v, *pc, *tc});
  }
  if (cols.empty()) fail(ErrorCategory::parse, "evaluate: no comparable variables between prediction and truth");

  std::map<int, std::vector<std::size_t>> by_member;
  for (std::size_t i = 0; i < predicted.rows.size(); ++i) {
    const int m = p_member ? static_cast<int>(predicted.rows[i][*p_member]) : -1;
    by_member[m].push_back(i);
  }

  MetricsReport report;
  report.threshold = threshold;
  for (const auto& [member, idx] : by_member) {
    std::vector<double> tau;
    std::vector<std::size_t> trows;
    for (std::size_t i : idx) {
      const double t = predicted.rows[i][p_tau];
      const auto it = truth_row.find(t);
      if (it == truth_row.end()) {
        fail(ErrorCategory::parse, "evaluate: prediction stamp tau_s = " + std::to_string(t) + " has no truth row");
      }
      tau.push_back(t);
      trows.push_back(it->second);
    }
    if (!tau.empty()) report.horizon = std::max(report.horizon, tau.back() - tau.front());
    SeriesMetrics s;
    s.member = member;
    for (const auto& c : cols) {
      std::vector<double> p, g;
      for (std::size_t k = 0; k < idx.size(); ++k) {
        p.push_back(predicted.rows[idx[k]][c.pred]);
        g.push_back(truth.rows[trows[k]][c.truth]);
      }
      s.variables.push_back(variable_metrics(c.name, tau, p, g, threshold));
    }
    if (member == -1) {
      report.mean = std::move(s);
    } else {
      report.members.push_back(std::move(s));
    }
  }
  return report;
}

}  // namespace settler::io
