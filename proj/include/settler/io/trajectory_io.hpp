#pragma once

#include <filesystem>
#include <vector>

#include "settler/io/csv.hpp"
#include "settler/mech/dataset.hpp"

namespace settler::io {

/// Trajectory CSV columns (units in the suffix). Detection heights
/// h_3_0..h_3_3, h_4_0..h_4_3 and the true_* columns are optional.
namespace col {
inline constexpr const char* tau = "tau_s";
inline constexpr const char* q_in = "q_in_m3s";
inline constexpr const char* q_bot = "q_bot_m3s";
inline constexpr const char* q_top = "q_top_m3s";
inline constexpr const char* h_hp = "h_hp_m";
inline constexpr const char* h_dp = "h_dp_m";
inline constexpr const char* true_h_hp = "true_h_hp_m";
inline constexpr const char* true_h_dp = "true_h_dp_m";
inline constexpr const char* true_q_bot = "true_q_bot_m3s";
inline constexpr const char* true_q_top = "true_q_top_m3s";
inline constexpr const char* true_q_c = "true_q_c_m3s";
inline constexpr const char* true_q_s = "true_q_s_m3s";
inline constexpr const char* gap_count = "gap_count";
}  // namespace col

/// "h_3_0" .. "h_4_3" in camera/window order.
const std::vector<std::string>& detection_columns();

CsvTable trajectory_table(const mech::TrajectoryDataset& trajectory, bool include_truth = true);
/// Parse error when required columns are missing or tau is not strictly increasing.
mech::TrajectoryDataset trajectory_from_table(const CsvTable& table);

mech::TrajectoryDataset read_trajectory(const std::filesystem::path& path);
void write_trajectory(const std::filesystem::path& path, const mech::TrajectoryDataset& trajectory,
                      bool include_truth = true);

/// Pretraining dataset, one row per grid point.
CsvTable segment_table(const mech::SegmentDataset& data);
std::vector<mech::SampleRow> sample_rows_from_table(const CsvTable& table);

/// Schedule CSV with columns hold_s, q_in_m3s.
std::vector<mech::ScheduleStep> read_schedule(const std::filesystem::path& path);
CsvTable schedule_table(const std::vector<mech::ScheduleStep>& steps);

}  // namespace settler::io
