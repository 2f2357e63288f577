#include "settler/nn/mlp.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "settler/core/error.hpp"
#include "settler/nn/kernels.hpp"

namespace settler::nn {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation activation_from_string(std::string_view name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "identity") return Activation::identity;
  fail(ErrorCategory::parse, "unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(OutputRole r) {
  switch (r) {
    case OutputRole::height: return "height";
    case OutputRole::outlet_flow: return "outlet_flow";
    case OutputRole::internal_flow: return "internal_flow";
    case OutputRole::generic: return "generic";
  }
  return "?";
}

OutputRole output_role_from_string(std::string_view name) {
  if (name == "height") return OutputRole::height;
  if (name == "outlet_flow") return OutputRole::outlet_flow;
  if (name == "internal_flow") return OutputRole::internal_flow;
  if (name == "generic") return OutputRole::generic;
  fail(ErrorCategory::parse, "unknown output role '" + std::string(name) + "'");
}

namespace {

struct ActDerivs {
  double f, d1, d2;
};

inline ActDerivs activate(Activation act, double z) {
  switch (act) {
    case Activation::tanh: {
      const double t = std::tanh(z);
      const double d1 = 1.0 - t * t;
      return {t, d1, -2.0 * t * d1};
    }
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double d1 = s * (1.0 - s);
      return {s, d1, d1 * (1.0 - 2.0 * s)};
    }
    case Activation::identity: return {z, 1.0, 0.0};
  }
  return {z, 1.0, 0.0};
}

void check_dims(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) fail(ErrorCategory::config, "network needs at least an input and an output layer");
  for (auto d : dims) {
    if (d == 0) fail(ErrorCategory::config, "layer widths must be >= 1");
  }
}

}  // namespace

Mlp::Mlp(std::vector<std::size_t> dims, Activation hidden, Activation head)
    : dims_(std::move(dims)), hidden_(hidden), head_(head) {
  check_dims(dims_);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(n);
    n += dims_[l] * dims_[l + 1] + dims_[l + 1];
  }
  params_.assign(n, 0.0);
  input_bounds_.assign(n_in(), Interval{-1.0, 1.0});
  outputs_.resize(n_out());
  for (std::size_t k = 0; k < n_out(); ++k) outputs_[k].name = "y" + std::to_string(k);
}

void Mlp::set_input_bounds(std::vector<Interval> bounds) {
  if (bounds.size() != n_in()) fail(ErrorCategory::config, "input bounds count does not match the input width");
  for (const auto& b : bounds) {
    if (!(b.lb < b.ub)) fail(ErrorCategory::config, "input bounds need lb < ub");
  }
  input_bounds_ = std::move(bounds);
}

void Mlp::set_outputs(std::vector<OutputChannel> outputs) {
  if (outputs.size() != n_out()) fail(ErrorCategory::config, "output channel count does not match the output width");
  for (const auto& c : outputs) {
    if (!std::isfinite(c.offset) || !std::isfinite(c.span) || c.span == 0.0) {
      fail(ErrorCategory::config, "output channel '" + c.name + "' needs a finite offset and nonzero span");
    }
    if (c.skip_input >= static_cast<int>(n_in()) || !std::isfinite(c.skip_gain)) {
      fail(ErrorCategory::config, "output channel '" + c.name + "' has an invalid skip input");
    }
  }
  outputs_ = std::move(outputs);
}

void Mlp::validate() const {
  check_dims(dims_);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) n += dims_[l] * dims_[l + 1] + dims_[l + 1];
  if (n != params_.size() || offsets_.size() != layer_count()) {
    fail(ErrorCategory::config, "parameter vector does not match the layer dims");
  }
  if (input_bounds_.size() != n_in() || outputs_.size() != n_out()) {
    fail(ErrorCategory::config, "input bounds or output channels do not match the layer dims");
  }
  for (double p : params_) {
    if (!std::isfinite(p)) fail(ErrorCategory::numeric, "non-finite network parameter");
  }
  scaling.validate();
}

void Mlp::check_input(std::span<const double> x) const {
  if (x.size() != n_in()) {
    std::ostringstream msg;
    msg << "network expects " << n_in() << " inputs, got " << x.size();
    fail(ErrorCategory::config, msg.str());
  }
  for (double v : x) {
    if (!std::isfinite(v)) fail(ErrorCategory::numeric, "non-finite network input");
  }
}

void Mlp::forward_trace(std::span<const double> x, std::span<const double> dx, Trace& tr) const {
  check_input(x);
  const bool tangent = !dx.empty();
  if (tangent && dx.size() != n_in()) fail(ErrorCategory::config, "tangent direction has the wrong width");
  const std::size_t L = layer_count();
  tr.a.resize(L + 1);
  tr.z.resize(L);
  tr.has_tangent = tangent;
  if (tangent) {
    tr.adot.resize(L + 1);
    tr.zdot.resize(L);
  }
  tr.a[0].resize(n_in());
  if (tangent) tr.adot[0].resize(n_in());
  for (std::size_t i = 0; i < n_in(); ++i) {
    const auto& b = input_bounds_[i];
    tr.a[0][i] = normalize(x[i], b);
    if (tangent) tr.adot[0][i] = 2.0 * dx[i] / b.width();
  }
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const double* w = params_.data() + weight_offset(l);
    const double* bias = params_.data() + bias_offset(l);
    auto& z = tr.z[l];
    auto& a = tr.a[l + 1];
    z.resize(out);
    a.resize(out);
    kernels::gemv(w, tr.a[l].data(), bias, z.data(), out, in);
    const bool last = l + 1 == L;
    const Activation act = last ? head_ : hidden_;
    if (tangent) {
      auto& zd = tr.zdot[l];
      auto& ad = tr.adot[l + 1];
      zd.resize(out);
      ad.resize(out);
      kernels::gemv(w, tr.adot[l].data(), nullptr, zd.data(), out, in);
      for (std::size_t j = 0; j < out; ++j) {
        const auto d = activate(act, z[j]);
        const double span = last ? outputs_[j].span : 1.0;
        a[j] = last ? outputs_[j].offset + span * d.f : d.f;
        ad[j] = span * d.d1 * zd[j];
      }
    } else {
      for (std::size_t j = 0; j < out; ++j) {
        const double f = activate(act, z[j]).f;
        a[j] = last ? outputs_[j].offset + outputs_[j].span * f : f;
      }
    }
  }
  for (std::size_t j = 0; j < n_out(); ++j) {
    const auto& c = outputs_[j];
    if (c.skip_input < 0) continue;
    tr.a.back()[j] += c.skip_gain * x[static_cast<std::size_t>(c.skip_input)];
    if (tangent) tr.adot.back()[j] += c.skip_gain * dx[static_cast<std::size_t>(c.skip_input)];
  }
}

void Mlp::forward(std::span<const double> x, std::span<double> y) const {
  thread_local Trace tr;
  forward_trace(x, {}, tr);
  if (y.size() != n_out()) fail(ErrorCategory::config, "output buffer has the wrong width");
  std::copy(tr.a.back().begin(), tr.a.back().end(), y.begin());
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  std::vector<double> y(n_out());
  forward(x, y);
  return y;
}

std::vector<double> Mlp::forward_raw(std::span<const double> x) const {
  thread_local Trace tr;
  forward_trace(x, {}, tr);
  std::vector<double> raw(n_out());
  for (std::size_t j = 0; j < n_out(); ++j) raw[j] = activate(head_, tr.z.back()[j]).f;
  return raw;
}

std::vector<double> Mlp::jvp(std::span<const double> x, std::span<const double> dx) const {
  thread_local Trace tr;
  forward_trace(x, dx, tr);
  return tr.adot.back();
}

std::vector<double> Mlp::jvp_time(std::span<const double> x) const {
  std::vector<double> dx(n_in(), 0.0);
  dx[0] = 1.0;
  return jvp(x, dx);
}

std::vector<double> Mlp::input_jacobian(std::span<const double> x, std::span<const std::size_t> rows,
                                        std::span<const std::size_t> cols) const {
  for (auto r : rows) {
    if (r >= n_out()) fail(ErrorCategory::config, "jacobian row index out of range");
  }
  for (auto c : cols) {
    if (c >= n_in()) fail(ErrorCategory::config, "jacobian column index out of range");
  }
  std::vector<double> jac(rows.size() * cols.size());
  std::vector<double> dx(n_in());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    std::fill(dx.begin(), dx.end(), 0.0);
    dx[cols[c]] = 1.0;
    const auto col = jvp(x, dx);
    for (std::size_t r = 0; r < rows.size(); ++r) jac[r * cols.size() + c] = col[rows[r]];
  }
  return jac;
}

std::vector<double> Mlp::input_vjp(std::span<const double> x, std::span<const double> w) const {
  thread_local Trace tr;
  forward_trace(x, {}, tr);
  std::vector<double> x_bar(n_in(), 0.0);
  backward(tr, w, {}, {}, x_bar);
  return x_bar;
}

void Mlp::backward(const Trace& tr, std::span<const double> y_bar, std::span<const double> ydot_bar,
                   std::span<double> grad, std::span<double> x_bar) const {
  const bool tangent = !ydot_bar.empty();
  if (tangent && !tr.has_tangent) fail(ErrorCategory::config, "tangent cotangent given for a trace without tangent");
  if (y_bar.size() != n_out() || (tangent && ydot_bar.size() != n_out())) {
    fail(ErrorCategory::config, "output cotangent has the wrong width");
  }
  if (!grad.empty() && grad.size() != params_.size()) fail(ErrorCategory::config, "gradient buffer has the wrong size");
  if (!x_bar.empty() && x_bar.size() != n_in()) fail(ErrorCategory::config, "input cotangent buffer has the wrong size");

  thread_local std::vector<double> a_bar, ad_bar, z_bar, zd_bar;
  if (!x_bar.empty()) {
    for (std::size_t j = 0; j < n_out(); ++j) {
      const auto& c = outputs_[j];
      if (c.skip_input < 0) continue;
      const auto i = static_cast<std::size_t>(c.skip_input);
      x_bar[i] += c.skip_gain * y_bar[j];
    }
  }
  a_bar.assign(y_bar.begin(), y_bar.end());
  if (tangent) ad_bar.assign(ydot_bar.begin(), ydot_bar.end());

  const std::size_t L = layer_count();
  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const bool last = l + 1 == L;
    const Activation act = last ? head_ : hidden_;
    z_bar.resize(out);
    if (tangent) zd_bar.resize(out);
    for (std::size_t j = 0; j < out; ++j) {
      const auto d = activate(act, tr.z[l][j]);
      const double span = last ? outputs_[j].span : 1.0;
      z_bar[j] = span * d.d1 * a_bar[j];
      if (tangent) {
        z_bar[j] += span * d.d2 * tr.zdot[l][j] * ad_bar[j];
        zd_bar[j] = span * d.d1 * ad_bar[j];
      }
    }
    const double* w = params_.data() + weight_offset(l);
    if (!grad.empty()) {
      double* gw = grad.data() + weight_offset(l);
      double* gb = grad.data() + bias_offset(l);
      kernels::ger(1.0, z_bar.data(), tr.a[l].data(), gw, out, in);
      kernels::axpy(1.0, z_bar.data(), gb, out);
      if (tangent) kernels::ger(1.0, zd_bar.data(), tr.adot[l].data(), gw, out, in);
    }
    if (l == 0 && x_bar.empty()) break;
    a_bar.assign(in, 0.0);
    kernels::gemv_t_acc(w, z_bar.data(), a_bar.data(), out, in);
    if (tangent) {
      ad_bar.assign(in, 0.0);
      kernels::gemv_t_acc(w, zd_bar.data(), ad_bar.data(), out, in);
    }
  }
  if (!x_bar.empty()) {
    for (std::size_t i = 0; i < n_in(); ++i) x_bar[i] += a_bar[i] * 2.0 / input_bounds_[i].width();
  }
}

Mlp xavier_init(std::vector<std::size_t> dims, std::uint64_t seed, Activation hidden, Activation head) {
  check_dims(dims);
  Mlp m(std::move(dims), hidden, head);
  m.seed = seed;
  std::mt19937_64 rng(seed);
  const auto& d = m.dims();
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(d[l] + d[l + 1]));
    std::normal_distribution<double> normal(0.0, stddev);
    double* w = m.params().data() + m.weight_offset(l);
    for (std::size_t i = 0; i < d[l] * d[l + 1]; ++i) w[i] = normal(rng);
  }
  return m;
}

namespace {

OutputChannel widened(std::string name, OutputRole role, const Interval& range, double scale) {
  const double margin = kOutputMargin * range.width();
  const double lb = std::max(0.0, range.lb - margin);
  const double ub = range.ub + margin;
  return {std::move(name), role, lb / scale, (ub - lb) / scale};
}

}  // namespace

std::string_view to_string(OutputMapping m) {
  switch (m) {
    case OutputMapping::unit: return "unit";
    case OutputMapping::bounded: return "bounded";
    case OutputMapping::residual: return "residual";
  }
  return "?";
}

OutputMapping output_mapping_from_string(std::string_view name) {
  if (name == "unit") return OutputMapping::unit;
  if (name == "bounded") return OutputMapping::bounded;
  if (name == "residual") return OutputMapping::residual;
  fail(ErrorCategory::config, "output mapping must be unit, bounded or residual, got '" + std::string(name) + "'");
}

Mlp make_surrogate(const SettlerConfig& config, std::uint64_t seed, bool internal_flows, std::size_t hidden_width,
                   std::size_t hidden_layers, OutputMapping mapping) {
  config.validate();
  std::vector<std::size_t> dims{4};
  for (std::size_t i = 0; i < hidden_layers; ++i) dims.push_back(hidden_width);
  dims.push_back(internal_flows ? 6 : 4);
  Mlp m = xavier_init(dims, seed, Activation::tanh, Activation::sigmoid);
  const auto& b = config.bounds;
  m.set_input_bounds({Interval{0.0, 1.0}, b.h_hp.extrapolation, b.h_dp.extrapolation, b.q_in.extrapolation});
  const double hs = config.scaling.h_scale;
  const double qs = config.scaling.q_scale;
  std::vector<OutputChannel> out{
      widened("h_hp", OutputRole::height, b.h_hp.extrapolation, hs),
      widened("h_dp", OutputRole::height, b.h_dp.extrapolation, hs),
      widened("q_bot", OutputRole::outlet_flow, b.q_bot.extrapolation, qs),
      widened("q_top", OutputRole::outlet_flow, b.q_top.extrapolation, qs),
  };
  if (mapping == OutputMapping::unit) {
    for (auto& c : out) {
      c.offset = 0.0;
      c.span = 1.0;
    }
  }
  if (mapping == OutputMapping::residual) {
    for (std::size_t k = 0; k < 2; ++k) {
      out[k].span = 2.0 * kResidualStep / hs;
      out[k].offset = -0.5 * out[k].span;
      out[k].skip_input = static_cast<int>(k) + 1;
      out[k].skip_gain = 1.0 / hs;
    }
  }
  if (internal_flows && mapping == OutputMapping::unit) {
    out.push_back({"q_c", OutputRole::internal_flow, 0.0, 1.0});
    out.push_back({"q_s", OutputRole::internal_flow, 0.0, 1.0});
  } else if (internal_flows) {
    const Interval internal{0.0, (1.0 + kOutputMargin) * b.q_in.extrapolation.ub};
    out.push_back({"q_c", OutputRole::internal_flow, 0.0, internal.ub / qs});
    out.push_back({"q_s", OutputRole::internal_flow, 0.0, internal.ub / qs});
  }
  m.set_outputs(std::move(out));
  m.scaling = config.scaling;
  return m;
}

}  // namespace settler::nn
