#include "settler/io/trajectory_io.hpp"

#include <cmath>

#include "settler/core/error.hpp"

namespace settler::io {

const std::vector<std::string>& detection_columns() {
  static const std::vector<std::string> names{"h_3_0", "h_3_1", "h_3_2", "h_3_3",
                                              "h_4_0", "h_4_1", "h_4_2", "h_4_3"};
  return names;
}

CsvTable trajectory_table(const mech::TrajectoryDataset& traj, bool include_truth) {
  CsvTable t;
  t.header = {col::tau, col::q_in, col::q_bot, col::q_top, col::h_hp, col::h_dp};
  const bool det = !traj.points.empty() && traj.points.front().detections.has_value();
  const bool truth = include_truth && !traj.points.empty() && traj.points.front().truth.has_value();
  if (det) t.header.insert(t.header.end(), detection_columns().begin(), detection_columns().end());
  if (truth) {
    t.header.insert(t.header.end(),
                    {col::true_h_hp, col::true_h_dp, col::true_q_bot, col::true_q_top, col::true_q_c, col::true_q_s});
  }
  for (const auto& p : traj.points) {
    std::vector<double> r{p.tau, p.q_in, p.q_bot, p.q_top, p.h_hp, p.h_dp};
    if (det) {
      if (!p.detections) fail(ErrorCategory::config, "detection heights missing on some trajectory points");
      r.insert(r.end(), p.detections->begin(), p.detections->end());
    }
    if (truth) {
      if (!p.truth) fail(ErrorCategory::config, "truth channels missing on some trajectory points");
      const auto& g = *p.truth;
      r.insert(r.end(), {g.h_hp, g.h_dp, g.q_bot, g.q_top, g.q_c, g.q_s});
    }
    t.rows.push_back(std::move(r));
  }
  return t;
}

mech::TrajectoryDataset trajectory_from_table(const CsvTable& t) {
  const std::size_t c_tau = t.index(col::tau);
  const std::size_t c_qin = t.index(col::q_in);
  const std::size_t c_qb = t.index(col::q_bot);
  const std::size_t c_qt = t.index(col::q_top);
  const std::size_t c_hp = t.index(col::h_hp);
  const std::size_t c_dp = t.index(col::h_dp);
  std::vector<std::size_t> det;
  for (const auto& name : detection_columns()) {
    if (auto i = t.find(name)) det.push_back(*i);
  }
  if (!det.empty() && det.size() != mech::kDetectionCount) {
    fail(ErrorCategory::parse, "trajectory has some but not all detection columns");
  }
  const std::array<const char*, 6> truth_names{col::true_h_hp,  col::true_h_dp, col::true_q_bot,
                                               col::true_q_top, col::true_q_c,  col::true_q_s};
  std::array<std::optional<std::size_t>, 6> truth;
  for (std::size_t k = 0; k < 6; ++k) truth[k] = t.find(truth_names[k]);
  const bool has_truth = truth[0] && truth[1];

  mech::TrajectoryDataset out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& r = t.rows[i];
    mech::TrajectoryPoint p;
    p.tau = r[c_tau];
    p.q_in = r[c_qin];
    p.q_bot = r[c_qb];
    p.q_top = r[c_qt];
    p.h_hp = r[c_hp];
    p.h_dp = r[c_dp];
    if (!std::isfinite(p.tau)) fail(ErrorCategory::parse, "row " + std::to_string(i + 2) + ": tau is not finite");
    if (i > 0 && !(p.tau > out.points.back().tau)) {
      fail(ErrorCategory::parse, "row " + std::to_string(i + 2) + ": tau_s must be strictly increasing");
    }
    if (!det.empty()) {
      std::array<double, mech::kDetectionCount> d{};
      for (std::size_t k = 0; k < det.size(); ++k) d[k] = r[det[k]];
      p.detections = d;
    }
    if (has_truth) {
      auto get = [&](std::size_t k) { return truth[k] ? r[*truth[k]] : std::nan(""); };
      p.truth = mech::TruthChannels{get(0), get(1), get(2), get(3), get(4), get(5)};
    }
    out.points.push_back(p);
  }
  return out;
}

mech::TrajectoryDataset read_trajectory(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  try {
    return trajectory_from_table(t);
  } catch (const Error& e) {
    throw Error(e.category(), path.string() + ": " + e.what());
  }
}

void write_trajectory(const std::filesystem::path& path, const mech::TrajectoryDataset& traj, bool include_truth) {
  write_csv(path, trajectory_table(traj, include_truth));
}

CsvTable segment_table(const mech::SegmentDataset& data) {
  CsvTable t;
  t.header = {"segment",   "t_s",       "h_hp0_m",   "h_dp0_m", "q_in_m3s", "h_hp_m",
              "h_dp_m",    "q_bot_m3s", "q_top_m3s", "q_c_m3s", "q_s_m3s"};
  for (std::size_t s = 0; s < data.segments.size(); ++s) {
    const auto& seg = data.segments[s];
    for (std::size_t i = 0; i < seg.time.size(); ++i) {
      t.rows.push_back({static_cast<double>(s), seg.time[i], seg.initial.h_hp, seg.initial.h_dp, seg.q_in,
                        seg.states[i].h_hp, seg.states[i].h_dp, seg.flows[i].q_bot, seg.flows[i].q_top,
                        seg.internal[i].q_c, seg.internal[i].q_s});
    }
  }
  return t;
}

std::vector<mech::SampleRow> sample_rows_from_table(const CsvTable& t) {
  const std::size_t ct = t.index("t_s"), c0 = t.index("h_hp0_m"), c1 = t.index("h_dp0_m"), cq = t.index("q_in_m3s");
  const std::size_t ch = t.index("h_hp_m"), cd = t.index("h_dp_m"), cb = t.index("q_bot_m3s"),
                    cto = t.index("q_top_m3s");
  const auto cc = t.find("q_c_m3s");
  const auto cs = t.find("q_s_m3s");
  std::vector<mech::SampleRow> rows;
  rows.reserve(t.rows.size());
  for (const auto& r : t.rows) {
    mech::SampleRow s;
    s.t = r[ct];
    s.h_hp0 = r[c0];
    s.h_dp0 = r[c1];
    s.q_in = r[cq];
    s.h_hp = r[ch];
    s.h_dp = r[cd];
    s.q_bot = r[cb];
    s.q_top = r[cto];
    if (cc && cs && std::isfinite(r[*cc]) && std::isfinite(r[*cs])) {
      s.has_internal = true;
      s.q_c = r[*cc];
      s.q_s = r[*cs];
    }
    rows.push_back(s);
  }
  return rows;
}

std::vector<mech::ScheduleStep> read_schedule(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ch = t.index("hold_s");
  const std::size_t cq = t.index("q_in_m3s");
  std::vector<mech::ScheduleStep> steps;
  for (const auto& r : t.rows) steps.push_back({r[ch], r[cq]});
  if (steps.empty()) fail(ErrorCategory::parse, path.string() + ": schedule has no rows");
  return steps;
}

CsvTable schedule_table(const std::vector<mech::ScheduleStep>& steps) {
  CsvTable t;
  t.header = {"hold_s", "q_in_m3s"};
  for (const auto& s : steps) t.rows.push_back({s.hold_s, s.q_in});
  return t;
}

}  // namespace settler::io
