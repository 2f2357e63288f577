#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "settler/core/config.hpp"
#include "settler/core/types.hpp"
#include "settler/mech/submodel.hpp"

namespace settler::mech {

/// 2 L sqrt(h (2r - h)): dV/dh of a horizontal cylinder segment filled to h.
/// Throws a domain error for h outside [0, 2r].
double chord_denominator(double h, const SettlerGeometry& geometry);

/// Volume balance residual q_in - q_bot - q_top.
constexpr double balance_residual(double q_in, double q_bot, double q_top) { return q_in - q_bot - q_top; }

template <class T>
struct Rates {
  T h_hp;
  T h_dp;
};

/// Height rates of the lumped volume balance. Generic over the scalar type so
/// the physics loss differentiates exactly the expression the simulator uses.
/// `area(h)` supplies the chord denominator; callers decide how to guard it.
template <class T, class Area>
Rates<T> balance_rates(const T& h_hp, const T& h_dp, const T& q_in, const T& q_bot, const T& q_c, const T& q_s,
                       double eps_dp, const Area& area) {
  const T heavy_net = q_in - q_bot - q_s * (1.0 / eps_dp) + q_c * ((1.0 - eps_dp) / eps_dp);
  const T rate_hp = heavy_net / area(h_hp);
  const T rate_dp = (q_in - q_bot - q_c) / area(h_hp + h_dp) - rate_hp;
  return {rate_hp, rate_dp};
}

inline constexpr double kMinChordArea = 1e-12;  // m^2

/// dh_hp/dt and dh_dp/dt in m/s. Requires 0 < h_hp and 0 < h_hp + h_dp < 2r;
/// throws a singularity error naming the height whose chord collapses.
Rates<double> mech_rhs(const SettlerState& state, double q_in, double q_bot, const InternalFlows& flows,
                       const SettlerConfig& config);

/// Hydrostatic bottom valve of the synthetic twin:
///   q_bot = feed_fraction*q_in + gain*((h_hp - h_ref) + (1 - eps_dp)*h_dp)
/// The h_dp term is the DPZ's share of the extra hydrostatic head.
struct ValveLaw {
  double feed_fraction = 0.5;
  double gain = 4e-3;   // m^2/s
  double h_ref = 0.0851;  // m

  double q_bot(const SettlerState& state, double q_in, double eps_dp) const;
};

ValveLaw valve_from_config(const ConfigFile& file);

struct MechConfig {
  SubmodelSpec submodel = SaturatingSubmodel{};
  ValveLaw valve;
};

MechConfig mech_config_from(const ConfigFile& file);

/// Classical RK4 on a 2-vector. `rhs(t, x)` returns dx/dt.
template <class Rhs>
std::array<double, 2> rk4_step(const Rhs& rhs, double t, const std::array<double, 2>& x, double dt) {
  auto axpy = [](const std::array<double, 2>& a, double s, const std::array<double, 2>& b) {
    return std::array<double, 2>{a[0] + s * b[0], a[1] + s * b[1]};
  };
  const auto k1 = rhs(t, x);
  const auto k2 = rhs(t + 0.5 * dt, axpy(x, 0.5 * dt, k1));
  const auto k3 = rhs(t + 0.5 * dt, axpy(x, 0.5 * dt, k2));
  const auto k4 = rhs(t + dt, axpy(x, dt, k3));
  return {x[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
          x[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])};
}

template <class Rhs>
std::array<double, 2> rk4_integrate(const Rhs& rhs, std::array<double, 2> x, double t0, double dt,
                                    std::size_t steps) {
  for (std::size_t i = 0; i < steps; ++i) x = rk4_step(rhs, t0 + static_cast<double>(i) * dt, x, dt);
  return x;
}

inline constexpr double kSegmentStep = 0.1;        // s
inline constexpr std::size_t kSegmentSteps = 10;  // 1 s segment, 11 grid points

/// One second of mechanistic simulation at constant q_in and q_bot.
struct SimSegment {
  SettlerState initial;
  double q_in = 0.0;
  double q_bot = 0.0;
  std::vector<double> time;
  std::vector<SettlerState> states;
  std::vector<FlowMeasurement> flows;
  std::vector<InternalFlows> internal;
};

/// RK4 with dt = 0.1 s over [0, 1] s. q_top is recorded as q_in - q_bot.
/// Throws a divergence error carrying the time and state when the
/// trajectory leaves the admissible region.
SimSegment integrate_segment(const SettlerState& initial, double q_in, double q_bot, const SubmodelSpec& spec,
                             const SettlerConfig& config);

/// Sets k_s and k_c so that `target` is the steady state of the twin at the
/// given inlet flow under `valve`; exponent and h_half are kept from `base`.
SaturatingSubmodel calibrate_saturating(const SaturatingSubmodel& base, const ValveLaw& valve,
                                        const SettlerState& target, double q_in, const SettlerConfig& config);

}  // namespace settler::mech
