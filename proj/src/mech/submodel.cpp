#include "settler/mech/submodel.hpp"

#include <algorithm>
#include <cmath>

#include "settler/core/error.hpp"
#include "settler/mech/settler_model.hpp"

namespace settler::mech {

std::string_view submodel_tag(const SubmodelSpec& spec) {
  struct Visitor {
    std::string_view operator()(const ConstantSubmodel&) const { return "constant"; }
    std::string_view operator()(const AffineSubmodel&) const { return "affine"; }
    std::string_view operator()(const SaturatingSubmodel&) const { return "saturating"; }
  };
  return std::visit(Visitor{}, spec);
}

SubmodelSpec submodel_from_config(const ConfigFile& file) {
  const std::string tag = file.get_string("submodel.variant", "saturating");
  if (tag == "constant") {
    ConstantSubmodel m;
    m.q_c = file.get("submodel.q_c", m.q_c);
    m.q_s = file.get("submodel.q_s", m.q_s);
    return m;
  }
  if (tag == "affine") {
    AffineSubmodel m;
    m.qs0 = file.get("submodel.qs0", m.qs0);
    m.qs_hp = file.get("submodel.qs_hp", m.qs_hp);
    m.qc0 = file.get("submodel.qc0", m.qc0);
    m.qc_hp = file.get("submodel.qc_hp", m.qc_hp);
    m.qc_dp = file.get("submodel.qc_dp", m.qc_dp);
    return m;
  }
  if (tag == "saturating") {
    SaturatingSubmodel m;
    m.k_s = file.get("submodel.k_s", m.k_s);
    m.sed_exponent = file.get("submodel.sed_exponent", m.sed_exponent);
    m.k_c = file.get("submodel.k_c", m.k_c);
    m.h_half = file.get("submodel.h_half", m.h_half);
    if (m.k_s < 0 || m.k_c < 0 || m.h_half <= 0) {
      fail(ErrorCategory::config, "saturating submodel needs k_s, k_c >= 0 and h_half > 0");
    }
    return m;
  }
  fail(ErrorCategory::config, "unknown submodel variant '" + tag + "'");
}

InternalFlows eval_submodel(const SubmodelSpec& spec, const SettlerState& state, const SettlerConfig& config) {
  const auto& g = config.geometry;
  auto clamp0 = [](double v) { return std::max(0.0, v); };
  struct Visitor {
    const SettlerState& x;
    const SettlerGeometry& g;
    decltype(clamp0)& clamp;

    InternalFlows operator()(const ConstantSubmodel& m) const { return {clamp(m.q_c), clamp(m.q_s)}; }
    InternalFlows operator()(const AffineSubmodel& m) const {
      return {clamp(m.qc0 + m.qc_hp * x.h_hp + m.qc_dp * x.h_dp), clamp(m.qs0 + m.qs_hp * x.h_hp)};
    }
    InternalFlows operator()(const SaturatingSubmodel& m) const {
      const double area_hp = chord_denominator(x.h_hp, g);
      const double area_total = chord_denominator(x.total(), g);
      const double q_s = m.k_s * area_hp * std::pow(x.h_hp / g.height(), m.sed_exponent);
      const double q_c = m.k_c * area_total * x.h_dp / (x.h_dp + m.h_half);
      return {clamp(q_c), clamp(q_s)};
    }
  };
  return std::visit(Visitor{state, g, clamp0}, spec);
}

}  // namespace settler::mech
