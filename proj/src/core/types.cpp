#include "settler/core/types.hpp"

#include <cmath>
#include <string>

#include "settler/core/error.hpp"

namespace settler {

void require_finite(double value, std::string_view what) {
  if (!std::isfinite(value)) {
    fail(ErrorCategory::numeric, std::string(what) + " is not finite");
  }
}

namespace {

void require_nonnegative(double value, std::string_view what) {
  require_finite(value, what);
  if (value < 0.0) {
    fail(ErrorCategory::domain, std::string(what) + " must be >= 0, got " + std::to_string(value));
  }
}

void require_positive(double value, std::string_view what) {
  require_finite(value, what);
  if (value <= 0.0) {
    fail(ErrorCategory::config, std::string(what) + " must be > 0, got " + std::to_string(value));
  }
}

void validate_range(const VariableRange& range, std::string_view name) {
  for (const Interval* iv : {&range.interpolation, &range.extrapolation}) {
    require_finite(iv->lb, name);
    require_finite(iv->ub, name);
    if (!(iv->lb < iv->ub)) {
      fail(ErrorCategory::config, "bounds for " + std::string(name) + " need lb < ub");
    }
  }
  if (range.interpolation.lb < range.extrapolation.lb || range.interpolation.ub > range.extrapolation.ub) {
    fail(ErrorCategory::config,
         "interpolation bounds of " + std::string(name) + " must lie inside the extrapolation bounds");
  }
}

}  // namespace

double normalize(double value, double lb, double ub) {
  if (!(lb < ub)) {
    fail(ErrorCategory::config, "normalize: lower bound must be below upper bound");
  }
  return 2.0 * (value - lb) / (ub - lb) - 1.0;
}

double denormalize(double normalized, double lb, double ub) {
  if (!(lb < ub)) {
    fail(ErrorCategory::config, "denormalize: lower bound must be below upper bound");
  }
  return lb + 0.5 * (normalized + 1.0) * (ub - lb);
}

void SettlerGeometry::validate() const {
  require_positive(length, "geometry.length");
  require_positive(radius, "geometry.radius");
}

void PhysicalProperties::validate() const {
  require_positive(rho_heavy, "properties.rho_heavy");
  require_positive(rho_light, "properties.rho_light");
  require_positive(eta_heavy, "properties.eta_heavy");
  require_positive(gamma, "properties.gamma");
  require_positive(delta_rho(), "properties.delta_rho");
}

void DispersionParams::validate() const {
  require_finite(eps_in, "dispersion.eps_in");
  require_finite(eps_dp, "dispersion.eps_dp");
  if (!(eps_in > 0.0 && eps_in < 1.0)) fail(ErrorCategory::config, "dispersion.eps_in must be in (0, 1)");
  if (!(eps_dp > 0.0 && eps_dp <= 1.0)) fail(ErrorCategory::config, "dispersion.eps_dp must be in (0, 1]");
  require_positive(d32_in, "dispersion.d32_in");
  require_positive(sigma_selfsimilar, "dispersion.sigma_selfsimilar");
  require_positive(n_swarm, "dispersion.n_swarm");
}

SettlerState::SettlerState(double heavy, double dense) : h_hp(heavy), h_dp(dense) {
  require_nonnegative(h_hp, "h_hp");
  require_nonnegative(h_dp, "h_dp");
}

ControlInput::ControlInput(double inlet) : q_in(inlet) { require_nonnegative(q_in, "q_in"); }

FlowMeasurement::FlowMeasurement(double bottom, double top) : q_bot(bottom), q_top(top) {
  require_nonnegative(q_bot, "q_bot");
  require_nonnegative(q_top, "q_top");
}

InternalFlows::InternalFlows(double coalescence, double sedimentation) : q_c(coalescence), q_s(sedimentation) {
  require_nonnegative(q_c, "q_c");
  require_nonnegative(q_s, "q_s");
}

bool admissible(const SettlerState& state, const SettlerGeometry& geometry) {
  return std::isfinite(state.h_hp) && std::isfinite(state.h_dp) && state.h_hp > 0.0 && state.h_dp >= 0.0 &&
         state.total() < geometry.height();
}

void VariableBounds::validate() const {
  validate_range(h_hp, "h_hp");
  validate_range(h_dp, "h_dp");
  validate_range(q_in, "q_in");
  validate_range(q_top, "q_top");
  validate_range(q_bot, "q_bot");
}

void ScalingConstants::validate() const {
  require_positive(h_scale, "scaling.h_scale");
  require_positive(q_scale, "scaling.q_scale");
}

void SettlerConfig::validate() const {
  geometry.validate();
  properties.validate();
  dispersion.validate();
  bounds.validate();
  scaling.validate();
  if (bounds.h_hp.extrapolation.ub + bounds.h_dp.extrapolation.ub >= geometry.height()) {
    fail(ErrorCategory::config, "height bounds exceed the separator diameter");
  }
}

}  // namespace settler
