#include "settler/mech/settler_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "settler/core/error.hpp"

namespace settler::mech {

double chord_denominator(double h, const SettlerGeometry& geometry) {
  const double d = geometry.height();
  if (!std::isfinite(h) || h < 0.0 || h > d) {
    std::ostringstream msg;
    msg << "chord_denominator: height " << h << " m outside [0, " << d << "] m";
    fail(ErrorCategory::domain, msg.str());
  }
  return 2.0 * geometry.length * std::sqrt(h * (d - h));
}

Rates<double> mech_rhs(const SettlerState& state, double q_in, double q_bot, const InternalFlows& flows,
                       const SettlerConfig& config) {
  const auto& g = config.geometry;
  // Name the offending height before evaluating.
  if (!(state.h_hp > 0.0) || chord_denominator(std::clamp(state.h_hp, 0.0, g.height()), g) < kMinChordArea) {
    std::ostringstream msg;
    msg << "mech_rhs: singular heavy-phase chord at h_hp = " << state.h_hp << " m";
    fail(ErrorCategory::singularity, msg.str());
  }
  const double total = state.total();
  if (!(total < g.height()) || chord_denominator(std::clamp(total, 0.0, g.height()), g) < kMinChordArea) {
    std::ostringstream msg;
    msg << "mech_rhs: singular total chord at h_hp + h_dp = " << total << " m";
    fail(ErrorCategory::singularity, msg.str());
  }
  auto area = [&](double h) { return chord_denominator(h, g); };
  return balance_rates<double>(state.h_hp, state.h_dp, q_in, q_bot, flows.q_c, flows.q_s, config.dispersion.eps_dp,
                               area);
}

double ValveLaw::q_bot(const SettlerState& state, double q_in, double eps_dp) const {
  const double q = feed_fraction * q_in + gain * ((state.h_hp - h_ref) + (1.0 - eps_dp) * state.h_dp);
  return std::max(0.0, q);
}

ValveLaw valve_from_config(const ConfigFile& file) {
  ValveLaw v;
  v.feed_fraction = file.get("valve.feed_fraction", v.feed_fraction);
  v.gain = file.get("valve.gain", v.gain);
  v.h_ref = file.get("valve.h_ref", v.h_ref);
  if (v.feed_fraction < 0.0 || v.feed_fraction > 1.0 || v.gain < 0.0) {
    fail(ErrorCategory::config, "valve: feed_fraction must be in [0, 1] and gain >= 0");
  }
  return v;
}

MechConfig mech_config_from(const ConfigFile& file) { return {submodel_from_config(file), valve_from_config(file)}; }

namespace {

[[noreturn]] void diverged(double t, const std::array<double, 2>& x, const std::string& why) {
  std::ostringstream msg;
  msg << "segment diverged at t = " << t << " s (h_hp = " << x[0] << " m, h_dp = " << x[1] << " m): " << why;
  fail(ErrorCategory::divergence, msg.str());
}

}  // namespace

SimSegment integrate_segment(const SettlerState& initial, double q_in, double q_bot, const SubmodelSpec& spec,
                             const SettlerConfig& config) {
  if (!admissible(initial, config.geometry)) {
    diverged(0.0, {initial.h_hp, initial.h_dp}, "initial state not admissible");
  }
  SimSegment seg;
  seg.initial = initial;
  seg.q_in = q_in;
  seg.q_bot = q_bot;
  seg.time.reserve(kSegmentSteps + 1);
  seg.states.reserve(kSegmentSteps + 1);

  auto rhs = [&](double, const std::array<double, 2>& x) -> std::array<double, 2> {
    SettlerState s;
    s.h_hp = x[0];
    s.h_dp = std::max(0.0, x[1]);
    if (!admissible(s, config.geometry) || x[1] < -1e-12) {
      fail(ErrorCategory::divergence, "stage state not admissible");
    }
    const InternalFlows flows = eval_submodel(spec, s, config);
    const auto r = mech_rhs(s, q_in, q_bot, flows, config);
    return {r.h_hp, r.h_dp};
  };

  auto record = [&](double t, const std::array<double, 2>& x) {
    SettlerState s;
    s.h_hp = x[0];
    s.h_dp = x[1];
    if (!admissible(s, config.geometry)) diverged(t, x, "left the admissible region");
    seg.time.push_back(t);
    seg.states.push_back(s);
    seg.flows.push_back(FlowMeasurement(q_bot, balance_residual(q_in, q_bot, 0.0)));
    seg.internal.push_back(eval_submodel(spec, s, config));
  };

  std::array<double, 2> x{initial.h_hp, initial.h_dp};
  record(0.0, x);
  for (std::size_t i = 0; i < kSegmentSteps; ++i) {
    const double t = static_cast<double>(i) * kSegmentStep;
    try {
      x = rk4_step(rhs, t, x, kSegmentStep);
    } catch (const Error& e) {
      if (e.category() == ErrorCategory::divergence || e.category() == ErrorCategory::singularity ||
          e.category() == ErrorCategory::domain) {
        diverged(t, x, e.what());
      }
      throw;
    }
    record(static_cast<double>(i + 1) * kSegmentStep, x);
  }
  return seg;
}

SaturatingSubmodel calibrate_saturating(const SaturatingSubmodel& base, const ValveLaw& valve,
                                        const SettlerState& target, double q_in, const SettlerConfig& config) {
  // At a steady state the DPZ balance gives q_c = q_s and the heavy-phase
  // balance gives q_in - q_bot = q_s.
  const auto& g = config.geometry;
  const double q_bot = valve.q_bot(target, q_in, config.dispersion.eps_dp);
  const double q_s = q_in - q_bot;
  if (!(q_s > 0.0)) fail(ErrorCategory::config, "calibration target needs q_in > q_bot");
  SaturatingSubmodel m = base;
  m.k_s = q_s / (chord_denominator(target.h_hp, g) * std::pow(target.h_hp / g.height(), m.sed_exponent));
  m.k_c = q_s / (chord_denominator(target.total(), g) * target.h_dp / (target.h_dp + m.h_half));
  return m;
}

}  // namespace settler::mech
