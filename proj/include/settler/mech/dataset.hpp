#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "settler/core/types.hpp"
#include "settler/mech/settler_model.hpp"

namespace settler::mech {

/// One supervised sample: network inputs (t, initial heights, q_in) and
/// physical-unit targets. Internal-flow targets exist only for simulated data.
struct SampleRow {
  double t = 0.0;
  double h_hp0 = 0.0;
  double h_dp0 = 0.0;
  double q_in = 0.0;
  double h_hp = 0.0;
  double h_dp = 0.0;
  double q_bot = 0.0;
  double q_top = 0.0;
  bool has_internal = false;
  double q_c = 0.0;
  double q_s = 0.0;
};

struct SegmentDataset {
  std::vector<SimSegment> segments;
  std::size_t resampled = 0;

  /// 11 rows per segment, one per grid point.
  std::vector<SampleRow> rows() const;
};

/// LHS over (h_hp(0), h_dp(0), q_in, q_bot) inside the extrapolation bounds.
/// The q_bot coordinate is stratified over the part of its range that keeps
/// q_top = q_in - q_bot inside the q_top bounds. Diverging segments are
/// replaced by uniform redraws from a per-segment seed.
SegmentDataset generate_pretrain_dataset(std::size_t n_segments, const SettlerConfig& config,
                                         const SubmodelSpec& spec, std::uint64_t seed);

inline constexpr std::size_t kDetectionCount = 8;

struct TruthChannels {
  double h_hp = 0.0;
  double h_dp = 0.0;
  double q_bot = 0.0;
  double q_top = 0.0;
  double q_c = 0.0;
  double q_s = 0.0;
};

/// One process-time sample at 1 s resolution. Measured channels may carry
/// noise; `truth` holds the clean twin values when known.
struct TrajectoryPoint {
  double tau = 0.0;
  double q_in = 0.0;
  double q_bot = 0.0;
  double q_top = 0.0;
  double h_hp = 0.0;
  double h_dp = 0.0;
  std::optional<std::array<double, kDetectionCount>> detections;
  std::optional<TruthChannels> truth;
};

struct TrajectoryDataset {
  std::vector<TrajectoryPoint> points;
  bool truncated = false;
  std::string diagnostic;
};

struct NoiseSpec {
  double sigma_h = 0.0;  // m
  double sigma_q = 0.0;  // m^3/s
  std::uint64_t seed = 0;
};

/// Wedge-shaped DPZ profile over the eight camera windows. Position offsets
/// average to zero, so the mean detection equals the band height.
struct DetectionModel {
  bool enabled = false;
  double wedge = 0.6;        // relative slope per metre at the reference flow
  double q_ref = 0.404e-3;   // m^3/s

  static const std::array<double, kDetectionCount>& positions();  // m from inlet
  std::array<double, kDetectionCount> profile(double h_dp, double q_in) const;
};

/// Bottom flow per segment: a fixed per-second schedule or the valve law.
using BottomFlowPolicy = std::variant<std::vector<double>, ValveLaw>;

/// Chains integrate_segment over a per-second q_in schedule. Emits one point
/// per segment start. Divergence truncates the trajectory with a diagnostic.
TrajectoryDataset simulate_trajectory(const SettlerState& initial, std::span<const double> q_in_schedule,
                                      const BottomFlowPolicy& bottom, const SubmodelSpec& spec,
                                      const SettlerConfig& config, const NoiseSpec& noise = {},
                                      const DetectionModel& detections = {});

struct ScheduleStep {
  double hold_s = 0.0;
  double q_in = 0.0;  // m^3/s
};

/// Per-second q_in values; hold times must be whole seconds.
std::vector<double> expand_schedule(std::span<const ScheduleStep> steps);

inline constexpr double kCubicMetresPerHour = 1.0 / 3600.0;

/// Step schedules shaped like the four experimental campaigns:
/// 1 training, 2 validation, 3 interpolation test, 4 extrapolation test.
std::vector<ScheduleStep> campaign_schedule(int id);

/// Steady state reached by holding q_in under the valve law.
SettlerState settle(const SettlerState& start, double q_in, const ValveLaw& valve, const SubmodelSpec& spec,
                    const SettlerConfig& config, std::size_t seconds = 3000);

/// Supervised rows from consecutive 1 s samples: a t = 0 row with the current
/// measurements and a t = 1 row with the next ones, both keyed by the current
/// measured heights and q_in.
std::vector<SampleRow> trajectory_rows(const TrajectoryDataset& trajectory);

}  // namespace settler::mech
