#include "settler/mech/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"
#include "settler/mech/lhs.hpp"

namespace settler::mech {

std::vector<SampleRow> SegmentDataset::rows() const {
  std::vector<SampleRow> out;
  out.reserve(segments.size() * (kSegmentSteps + 1));
  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < seg.time.size(); ++i) {
      SampleRow r;
      r.t = seg.time[i];
      r.h_hp0 = seg.initial.h_hp;
      r.h_dp0 = seg.initial.h_dp;
      r.q_in = seg.q_in;
      r.h_hp = seg.states[i].h_hp;
      r.h_dp = seg.states[i].h_dp;
      r.q_bot = seg.flows[i].q_bot;
      r.q_top = seg.flows[i].q_top;
      r.has_internal = true;
      r.q_c = seg.internal[i].q_c;
      r.q_s = seg.internal[i].q_s;
      out.push_back(r);
    }
  }
  return out;
}

namespace {

struct SegmentInputs {
  SettlerState initial;
  double q_in;
  double q_bot;
};

Interval feasible_q_bot(double q_in, const VariableBounds& b) {
  const auto& qb = b.q_bot.extrapolation;
  const auto& qt = b.q_top.extrapolation;
  Interval r{std::max(qb.lb, q_in - qt.ub), std::min(qb.ub, q_in - qt.lb)};
  if (r.lb > r.ub) r.lb = r.ub = qb.clamp(0.5 * (r.lb + r.ub));
  return r;
}

SegmentInputs map_unit_point(const double* u, const VariableBounds& b) {
  const auto lerp = [](const Interval& iv, double s) { return iv.lb + s * iv.width(); };
  SegmentInputs in;
  in.initial.h_hp = lerp(b.h_hp.extrapolation, u[0]);
  in.initial.h_dp = lerp(b.h_dp.extrapolation, u[1]);
  in.q_in = lerp(b.q_in.extrapolation, u[2]);
  in.q_bot = lerp(feasible_q_bot(in.q_in, b), u[3]);
  return in;
}

constexpr int kMaxRedraws = 100;

}  // namespace

SegmentDataset generate_pretrain_dataset(std::size_t n_segments, const SettlerConfig& config,
                                         const SubmodelSpec& spec, std::uint64_t seed) {
  constexpr std::size_t dims = 4;
  const auto design = latin_hypercube(n_segments, dims, seed);
  SegmentDataset data;
  data.segments.reserve(n_segments);
  for (std::size_t i = 0; i < n_segments; ++i) {
    SegmentInputs in = map_unit_point(&design[i * dims], config.bounds);
    std::mt19937_64 redraw(derive_seed(seed, i));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      try {
        data.segments.push_back(integrate_segment(in.initial, in.q_in, in.q_bot, spec, config));
        break;
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::divergence || attempt + 1 >= kMaxRedraws) throw;
        spdlog::warn("segment {} resampled: {}", i, e.what());
        ++data.resampled;
        double u[dims];
        for (auto& v : u) v = unit(redraw);
        in = map_unit_point(u, config.bounds);
      }
    }
  }
  return data;
}

const std::array<double, kDetectionCount>& DetectionModel::positions() {
  // Window centres of two cameras, four windows each.
  static const std::array<double, kDetectionCount> x{0.255, 0.345, 0.435, 0.525, 0.71125, 0.79375, 0.87625, 0.95875};
  return x;
}

std::array<double, kDetectionCount> DetectionModel::profile(double h_dp, double q_in) const {
  const auto& x = positions();
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(kDetectionCount);
  const double slope = wedge * q_in / q_ref;
  std::array<double, kDetectionCount> h{};
  for (std::size_t i = 0; i < kDetectionCount; ++i) h[i] = std::max(0.0, h_dp * (1.0 + slope * (x[i] - mean)));
  return h;
}

TrajectoryDataset simulate_trajectory(const SettlerState& initial, std::span<const double> q_in_schedule,
                                      const BottomFlowPolicy& bottom, const SubmodelSpec& spec,
                                      const SettlerConfig& config, const NoiseSpec& noise,
                                      const DetectionModel& detections) {
  if (const auto* fixed = std::get_if<std::vector<double>>(&bottom); fixed && fixed->size() < q_in_schedule.size()) {
    fail(ErrorCategory::config, "bottom flow schedule shorter than inlet schedule");
  }
  if (noise.sigma_h < 0.0 || noise.sigma_q < 0.0) fail(ErrorCategory::config, "noise sigma must be >= 0");
  std::mt19937_64 rng(noise.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto noisy = [&](double v, double sigma) { return sigma > 0.0 ? std::max(0.0, v + sigma * gauss(rng)) : v; };

  TrajectoryDataset out;
  out.points.reserve(q_in_schedule.size());
  SettlerState x = initial;
  const double eps_dp = config.dispersion.eps_dp;
  for (std::size_t k = 0; k < q_in_schedule.size(); ++k) {
    const double q_in = q_in_schedule[k];
    double q_bot = std::visit(
        [&](const auto& policy) -> double {
          using P = std::decay_t<decltype(policy)>;
          if constexpr (std::is_same_v<P, ValveLaw>) {
            return policy.q_bot(x, q_in, eps_dp);
          } else {
            return policy[k];
          }
        },
        bottom);
    q_bot = std::clamp(q_bot, 0.0, q_in);
    const double q_top = q_in - q_bot;

    TrajectoryPoint p;
    p.tau = static_cast<double>(k);
    p.q_in = q_in;
    p.q_bot = noisy(q_bot, noise.sigma_q);
    p.q_top = noisy(q_top, noise.sigma_q);
    p.h_hp = noisy(x.h_hp, noise.sigma_h);
    if (detections.enabled) {
      auto h = detections.profile(x.h_dp, q_in);
      double sum = 0.0;
      for (auto& v : h) {
        v = noisy(v, noise.sigma_h);
        sum += v;
      }
      p.detections = h;
      p.h_dp = sum / static_cast<double>(kDetectionCount);
    } else {
      p.h_dp = noisy(x.h_dp, noise.sigma_h);
    }
    const InternalFlows internal = eval_submodel(spec, x, config);
    p.truth = TruthChannels{x.h_hp, x.h_dp, q_bot, q_top, internal.q_c, internal.q_s};
    out.points.push_back(p);

    try {
      const SimSegment seg = integrate_segment(x, q_in, q_bot, spec, config);
      x = seg.states.back();
    } catch (const Error& e) {
      if (e.category() != ErrorCategory::divergence) throw;
      std::ostringstream msg;
      msg << "trajectory truncated after tau = " << k << " s: " << e.what();
      out.truncated = true;
      out.diagnostic = msg.str();
      spdlog::warn("{}", out.diagnostic);
      break;
    }
  }
  return out;
}

std::vector<double> expand_schedule(std::span<const ScheduleStep> steps) {
  std::vector<double> q;
  for (const auto& s : steps) {
    const double whole = std::round(s.hold_s);
    if (!(s.hold_s > 0.0) || std::abs(s.hold_s - whole) > 1e-9) {
      fail(ErrorCategory::config, "schedule hold times must be positive whole seconds");
    }
    if (!(s.q_in > 0.0) || !std::isfinite(s.q_in)) fail(ErrorCategory::config, "schedule q_in must be positive");
    q.insert(q.end(), static_cast<std::size_t>(whole), s.q_in);
  }
  return q;
}

std::vector<ScheduleStep> campaign_schedule(int id) {
  auto build = [](double hold, std::initializer_list<double> m3h) {
    std::vector<ScheduleStep> s;
    for (double v : m3h) s.push_back({hold, v * kCubicMetresPerHour});
    return s;
  };
  switch (id) {
    case 1: return build(120.0, {1.00, 1.50, 2.00, 1.50, 1.00});
    case 2: return build(90.0, {1.00, 1.50, 2.00, 1.50, 1.00});
    case 3: return build(120.0, {1.00, 1.25, 1.50, 1.75, 2.00, 1.75, 1.50, 1.25, 1.00});
    case 4: return build(120.0, {0.75, 1.25, 1.75, 2.25, 1.75, 1.25, 0.75});
    default: fail(ErrorCategory::config, "campaign schedule id must be 1..4");
  }
}

SettlerState settle(const SettlerState& start, double q_in, const ValveLaw& valve, const SubmodelSpec& spec,
                    const SettlerConfig& config, std::size_t seconds) {
  const std::vector<double> q(seconds + 1, q_in);
  const auto traj = simulate_trajectory(start, q, valve, spec, config);
  if (traj.truncated) fail(ErrorCategory::divergence, traj.diagnostic);
  const auto& t = traj.points.back().truth;
  return SettlerState(t->h_hp, t->h_dp);
}

std::vector<SampleRow> trajectory_rows(const TrajectoryDataset& trajectory) {
  std::vector<SampleRow> rows;
  const auto& p = trajectory.points;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    if (std::abs(p[k + 1].tau - p[k].tau - 1.0) > 1e-9) continue;
    SampleRow r;
    r.h_hp0 = p[k].h_hp;
    r.h_dp0 = p[k].h_dp;
    r.q_in = p[k].q_in;
    r.t = 0.0;
    r.h_hp = p[k].h_hp;
    r.h_dp = p[k].h_dp;
    r.q_bot = p[k].q_bot;
    r.q_top = p[k].q_top;
    rows.push_back(r);
    r.t = 1.0;
    r.h_hp = p[k + 1].h_hp;
    r.h_dp = p[k + 1].h_dp;
    r.q_bot = p[k + 1].q_bot;
    r.q_top = p[k + 1].q_top;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace settler::mech
