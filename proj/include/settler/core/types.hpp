#pragma once

#include <array>
#include <string_view>

namespace settler {

/// Closed interval [lb, ub] of a physical quantity.
struct Interval {
  double lb = 0.0;
  double ub = 1.0;

  double width() const { return ub - lb; }
  double mid() const { return 0.5 * (lb + ub); }
  bool contains(double x) const { return x >= lb && x <= ub; }
  double clamp(double x) const { return x < lb ? lb : (x > ub ? ub : x); }
};

/// Affine map of [lb, ub] onto [-1, 1]. Throws a config error when lb >= ub.
double normalize(double value, double lb, double ub);
double denormalize(double normalized, double lb, double ub);
inline double normalize(double value, const Interval& range) { return normalize(value, range.lb, range.ub); }
inline double denormalize(double normalized, const Interval& range) {
  return denormalize(normalized, range.lb, range.ub);
}

struct SettlerGeometry {
  double length = 1.0;  // m, effective length behind the weir
  double radius = 0.1;  // m

  double height() const { return 2.0 * radius; }
  void validate() const;
};

struct PhysicalProperties {
  double rho_heavy = 996.0;    // kg/m^3, water
  double rho_light = 825.0;    // kg/m^3, 1-octanol
  double eta_heavy = 0.82e-3;  // Pa s
  double gamma = 8.2e-3;       // N/m

  double delta_rho() const { return rho_heavy - rho_light; }
  void validate() const;
};

struct DispersionParams {
  double eps_in = 0.5;              // feed phase fraction
  double eps_dp = 0.9;              // DPZ hold-up
  double d32_in = 0.5e-3;           // m
  double sigma_selfsimilar = 0.32;  // sigma / d32
  double n_swarm = 2.0;

  void validate() const;
};

/// Heavy-phase and dense-packed-zone heights in metres.
struct SettlerState {
  double h_hp = 0.0;
  double h_dp = 0.0;

  SettlerState() = default;
  SettlerState(double heavy, double dense);

  double total() const { return h_hp + h_dp; }
};

/// Inlet volume flow (m^3/s).
struct ControlInput {
  double q_in = 0.0;

  ControlInput() = default;
  explicit ControlInput(double inlet);
};

/// Outlet volume flows (m^3/s).
struct FlowMeasurement {
  double q_bot = 0.0;
  double q_top = 0.0;

  FlowMeasurement() = default;
  FlowMeasurement(double bottom, double top);
};

/// Coalescence and sedimentation flows (m^3/s).
struct InternalFlows {
  double q_c = 0.0;
  double q_s = 0.0;

  InternalFlows() = default;
  InternalFlows(double coalescence, double sedimentation);
};

/// True when 0 < h_hp and h_hp + h_dp < 2r with h_dp >= 0.
bool admissible(const SettlerState& state, const SettlerGeometry& geometry);

struct VariableRange {
  Interval interpolation;
  Interval extrapolation;
};

/// Operating ranges of the measured channels; flows in m^3/s.
struct VariableBounds {
  VariableRange h_hp{{0.071, 0.091}, {0.067, 0.100}};
  VariableRange h_dp{{0.023, 0.059}, {0.019, 0.069}};
  VariableRange q_in{{0.245e-3, 0.563e-3}, {0.175e-3, 0.644e-3}};
  VariableRange q_top{{0.105e-3, 0.286e-3}, {0.069e-3, 0.321e-3}};
  VariableRange q_bot{{0.117e-3, 0.295e-3}, {0.083e-3, 0.356e-3}};

  void validate() const;
};

struct ScalingConstants {
  double h_scale = 0.2;   // m
  double q_scale = 1e-3;  // m^3/s

  double scale_height(double h) const { return h / h_scale; }
  double unscale_height(double h) const { return h * h_scale; }
  double scale_flow(double q) const { return q / q_scale; }
  double unscale_flow(double q) const { return q * q_scale; }
  void validate() const;
};

/// Geometry, properties, hold-up, scaling and bounds shared by every module.
struct SettlerConfig {
  SettlerGeometry geometry;
  PhysicalProperties properties;
  DispersionParams dispersion;
  VariableBounds bounds;
  ScalingConstants scaling;

  void validate() const;
};

void require_finite(double value, std::string_view what);

}  // namespace settler
