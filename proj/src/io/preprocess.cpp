#include "settler/io/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"
#include "settler/io/trajectory_io.hpp"

namespace settler::io {

namespace {

struct Series {
  std::vector<double> tau;
  std::vector<double> value;
};

// Linear interpolation at `t`; `bridged` is set when the bracketing samples
// are more than max_gap apart or `t` lies outside the samples.
double sample(const Series& s, double t, double max_gap, bool& bridged) {
  const auto it = std::lower_bound(s.tau.begin(), s.tau.end(), t);
  if (it != s.tau.end() && *it == t) {
    bridged = false;
    return s.value[static_cast<std::size_t>(it - s.tau.begin())];
  }
  if (it == s.tau.begin()) {
    bridged = true;
    return s.value.front();
  }
  if (it == s.tau.end()) {
    bridged = true;
    return s.value.back();
  }
  const std::size_t hi = static_cast<std::size_t>(it - s.tau.begin());
  const std::size_t lo = hi - 1;
  const double span = s.tau[hi] - s.tau[lo];
  bridged = span > max_gap;
  const double w = (t - s.tau[lo]) / span;
  return s.value[lo] + w * (s.value[hi] - s.value[lo]);
}

}  // namespace

PreprocessResult preprocess(const CsvTable& raw, const PreprocessOptions& options) {
  if (!(options.max_gap_s > 0.0)) fail(ErrorCategory::config, "preprocess: max_gap_s must be positive");
  const std::size_t c_tau = raw.index(col::tau);
  const auto c_gap = raw.find(col::gap_count);
  for (std::size_t i = 0; i < raw.rows.size(); ++i) {
    const double t = raw.rows[i][c_tau];
    if (!std::isfinite(t)) fail(ErrorCategory::parse, "preprocess: row " + std::to_string(i + 2) + " has no tau_s");
    if (i > 0 && !(t > raw.rows[i - 1][c_tau])) {
      fail(ErrorCategory::parse, "preprocess: tau_s must be strictly increasing (row " + std::to_string(i + 2) + ")");
    }
  }

  PreprocessResult out;
  std::vector<std::string> names;
  std::vector<Series> series;
  for (std::size_t c = 0; c < raw.header.size(); ++c) {
    if (c == c_tau || (c_gap && c == *c_gap)) continue;
    Series s;
    for (const auto& r : raw.rows) {
      if (std::isfinite(r[c])) {
        s.tau.push_back(r[c_tau]);
        s.value.push_back(r[c]);
      }
    }
    if (s.tau.size() < 2) {
      spdlog::warn("preprocess: channel '{}' has {} samples, dropped", raw.header[c], s.tau.size());
      out.dropped.push_back(raw.header[c]);
      continue;
    }
    names.push_back(raw.header[c]);
    series.push_back(std::move(s));
  }

  out.table.header.push_back(col::tau);
  out.table.header.insert(out.table.header.end(), names.begin(), names.end());
  std::vector<std::size_t> det;
  const bool has_hdp = std::find(names.begin(), names.end(), col::h_dp) != names.end();
  if (!has_hdp) {
    for (std::size_t k = 0; k < names.size(); ++k) {
      const auto& d = detection_columns();
      if (std::find(d.begin(), d.end(), names[k]) != d.end()) det.push_back(k);
    }
    if (!det.empty()) out.table.header.push_back(col::h_dp);
  }
  out.table.header.push_back(col::gap_count);
  if (raw.rows.empty()) return out;

  const double first = std::ceil(raw.rows.front()[c_tau]);
  const double last = std::floor(raw.rows.back()[c_tau]);
  for (double t = first; t <= last; t += 1.0) {
    std::vector<double> row{t};
    double gaps = 0.0;
    double det_sum = 0.0;
    for (std::size_t k = 0; k < series.size(); ++k) {
      bool bridged = false;
      row.push_back(sample(series[k], t, options.max_gap_s, bridged));
      if (bridged) gaps += 1.0;
    }
    if (!det.empty()) {
      for (std::size_t k : det) det_sum += row[k + 1];
      row.push_back(det_sum / static_cast<double>(det.size()));
    }
    if (c_gap) {
      const auto it = std::lower_bound(raw.rows.begin(), raw.rows.end(), t,
                                       [&](const std::vector<double>& r, double v) { return r[c_tau] < v; });
      if (it != raw.rows.end() && (*it)[c_tau] == t && std::isfinite((*it)[*c_gap])) {
        gaps = std::max(gaps, (*it)[*c_gap]);
      }
    }
    if (gaps > 0.0) ++out.flagged_points;
    row.push_back(gaps);
    out.table.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace settler::io
