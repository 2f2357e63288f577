#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "settler/core/config.hpp"
#include "settler/core/types.hpp"

namespace settler::mech {

/// q_c = coalescence, q_s = sedimentation, both fixed.
struct ConstantSubmodel {
  double q_c = 0.0;
  double q_s = 0.0;
};

/// q_s = qs0 + qs_hp*h_hp ; q_c = qc0 + qc_hp*h_hp + qc_dp*h_dp (clamped at zero).
struct AffineSubmodel {
  double qs0 = 0.0;
  double qs_hp = 0.0;
  double qc0 = 0.0;
  double qc_hp = 0.0;
  double qc_dp = 0.0;
};

/// Interfacial-area surrogate for the droplet submodels.
///
///   q_s = k_s * A(h_hp) * (h_hp / 2r)^sed_exponent
///   q_c = k_c * A(h_hp + h_dp) * h_dp / (h_dp + h_half)
///
/// with A(h) = 2 L sqrt(h (2r - h)) the interface area at height h. Sedimentation
/// grows with the heavy-phase layer, coalescence grows with the DPZ and
/// saturates. Defaults put the steady states of the bottom-valve twin inside
/// the interpolation bounds (see calibrate_saturating).
struct SaturatingSubmodel {
  double k_s = 0.015486037764384312;  // m/s
  double sed_exponent = 3.0;
  double k_c = 0.011136504319436817;  // m/s
  double h_half = 0.4;                // m
};

using SubmodelSpec = std::variant<ConstantSubmodel, AffineSubmodel, SaturatingSubmodel>;

std::string_view submodel_tag(const SubmodelSpec& spec);
/// Throws a config error for unknown tags.
SubmodelSpec submodel_from_config(const ConfigFile& file);

InternalFlows eval_submodel(const SubmodelSpec& spec, const SettlerState& state, const SettlerConfig& config);

}  // namespace settler::mech
