#include "settler/train/losses.hpp"

#include <cmath>

#include "settler/core/error.hpp"
#include "settler/mech/lhs.hpp"
#include "settler/mech/settler_model.hpp"

namespace settler::train {

namespace ix = nn::io_index;
using nn::ad::Tape;
using nn::ad::Var;

void LossWeights::validate() const {
  for (double w : {lambda_1, lambda_2, lambda_g, lambda_z}) {
    if (!std::isfinite(w) || w < 0.0) fail(ErrorCategory::config, "loss weights must be finite and >= 0");
  }
}

CollocationSet sample_collocation(std::size_t n_physics, std::size_t n_init, const SettlerConfig& config,
                                  std::uint64_t seed) {
  const auto& b = config.bounds;
  const auto lerp = [](const Interval& iv, double s) { return iv.lb + s * iv.width(); };
  CollocationSet set;
  const auto phys = mech::latin_hypercube(n_physics, 4, mech::derive_seed(seed, 0));
  set.physics.reserve(n_physics);
  for (std::size_t i = 0; i < n_physics; ++i) {
    const double* u = &phys[4 * i];
    set.physics.push_back({u[0], lerp(b.h_hp.extrapolation, u[1]), lerp(b.h_dp.extrapolation, u[2]),
                           lerp(b.q_in.extrapolation, u[3])});
  }
  const auto init = mech::latin_hypercube(n_init, 3, mech::derive_seed(seed, 1));
  set.init.reserve(n_init);
  for (std::size_t i = 0; i < n_init; ++i) {
    const double* u = &init[3 * i];
    set.init.push_back(
        {lerp(b.h_hp.extrapolation, u[0]), lerp(b.h_dp.extrapolation, u[1]), lerp(b.q_in.extrapolation, u[2])});
  }
  return set;
}

LossValue combine(const std::array<double, kTermCount>& t, const LossWeights& w) {
  LossValue v;
  v.terms = t;
  v.data = t[data_meas] + w.lambda_z * t[data_internal];
  v.physics = w.lambda_g * t[physics_alg] + t[physics_ode];
  v.init = t[init_cond];
  v.total = w.lambda_1 * v.data + w.lambda_2 * v.physics + v.init;
  return v;
}

namespace {

constexpr double kMinChordArgument = 1e-12;  // m^2, floor of h (2r - h) in the loss

std::array<double, 6> scaled_targets(const mech::SampleRow& r, const ScalingConstants& s) {
  return {s.scale_height(r.h_hp), s.scale_height(r.h_dp), s.scale_flow(r.q_bot),
          s.scale_flow(r.q_top),  s.scale_flow(r.q_c),    s.scale_flow(r.q_s)};
}

void check_problem(const LossProblem& p) {
  if (!p.model || !p.config) fail(ErrorCategory::config, "loss problem needs a model and a config");
  if (p.n_out != 4 && p.n_out != 6) fail(ErrorCategory::config, "n_out must be 4 or 6");
  if (p.n_out > p.model->n_out()) fail(ErrorCategory::config, "n_out exceeds the network output width");
  if (p.physics && p.model->n_out() < 6) fail(ErrorCategory::config, "physics loss needs the internal-flow outputs");
  if (p.n_out == 6) {
    for (const auto& r : p.rows) {
      if (!r.has_internal) fail(ErrorCategory::config, "n_out = 6 needs internal-flow targets on every row");
    }
  }
}

struct Accumulator {
  std::array<double, kTermCount> sums{};
};

void add_grad(std::span<std::vector<double>> term_grads, std::size_t term, const nn::Mlp& m, const nn::Trace& tr,
              std::span<const double> ybar, std::span<const double> ydbar) {
  if (term_grads.empty()) return;
  m.backward(tr, ybar, ydbar, term_grads[term]);
}

}  // namespace

PhysicsResidual physics_residual(const std::array<Var, 6>& out, const Var& dhp_dt, const Var& ddp_dt, double q_in,
                                 const SettlerConfig& config) {
  const auto& s = config.scaling;
  const auto& g = config.geometry;
  const double d = g.height();
  const Var h_hp = out[ix::h_hp] * s.h_scale;
  const Var h_dp = out[ix::h_dp] * s.h_scale;
  const Var q_bot = out[ix::q_bot] * s.q_scale;
  const Var q_c = out[ix::q_c] * s.q_scale;
  const Var q_s = out[ix::q_s] * s.q_scale;
  auto area = [&](const Var& h) {
    return 2.0 * g.length * nn::ad::sqrt(nn::ad::fmax(h * (d - h), Var(kMinChordArgument)));
  };
  const auto rates = mech::balance_rates<Var>(h_hp, h_dp, Var(q_in), q_bot, q_c, q_s, config.dispersion.eps_dp, area);
  PhysicsResidual r;
  r.alg = s.scale_flow(q_in) - out[ix::q_bot] - out[ix::q_top];
  r.ode_hp = dhp_dt - rates.h_hp * (1.0 / s.h_scale);
  r.ode_dp = ddp_dt - rates.h_dp * (1.0 / s.h_scale);
  return r;
}

LossValue evaluate_loss(const LossProblem& p, const LossWeights& w, std::span<double> total_grad,
                        std::span<std::vector<double>> term_grads) {
  check_problem(p);
  w.validate();
  const nn::Mlp& m = *p.model;
  const SettlerConfig& cfg = *p.config;
  const std::size_t n_model = m.n_out();
  const bool want_total = !total_grad.empty();
  if (want_total && total_grad.size() != m.param_count()) fail(ErrorCategory::config, "gradient buffer size mismatch");
  if (!term_grads.empty()) {
    if (term_grads.size() != kTermCount) fail(ErrorCategory::config, "term gradient list must have 5 entries");
    for (auto& g : term_grads) g.assign(m.param_count(), 0.0);
  }

  Accumulator acc;
  nn::Trace tr;
  std::vector<double> ybar(n_model), ydbar(n_model), ybar2(n_model);

  // Data term.
  if (!p.rows.empty()) {
    const double norm = static_cast<double>(p.n_out) * static_cast<double>(p.rows.size());
    for (const auto& r : p.rows) {
      const std::array<double, 4> x{r.t, r.h_hp0, r.h_dp0, r.q_in};
      m.forward_trace(x, {}, tr);
      const auto y = tr.output();
      const auto tgt = scaled_targets(r, cfg.scaling);
      std::fill(ybar.begin(), ybar.end(), 0.0);
      std::fill(ybar2.begin(), ybar2.end(), 0.0);
      for (std::size_t k = 0; k < 4; ++k) {
        const double e = y[k] - tgt[k];
        acc.sums[data_meas] += e * e;
        ybar[k] = 2.0 * e / norm;
      }
      if (p.n_out == 6) {
        for (std::size_t k = 4; k < 6; ++k) {
          const double e = y[k] - tgt[k];
          acc.sums[data_internal] += e * e;
          ybar2[k] = 2.0 * e / norm;
        }
      }
      add_grad(term_grads, data_meas, m, tr, ybar, {});
      if (p.n_out == 6) add_grad(term_grads, data_internal, m, tr, ybar2, {});
      if (want_total) {
        for (std::size_t k = 0; k < n_model; ++k) ybar[k] = w.lambda_1 * (ybar[k] + w.lambda_z * ybar2[k]);
        m.backward(tr, ybar, {}, total_grad);
      }
    }
    acc.sums[data_meas] /= norm;
    acc.sums[data_internal] /= norm;
  }

  // Physics term.
  if (p.physics && p.collocation && !p.collocation->physics.empty()) {
    const double norm = 3.0 * static_cast<double>(p.collocation->physics.size());
    std::array<double, 4> dt{1.0, 0.0, 0.0, 0.0};
    Tape tape;
    for (const auto& x : p.collocation->physics) {
      m.forward_trace(x, dt, tr);
      const auto y = tr.output();
      const auto yd = tr.output_tangent();
      tape.clear();
      std::array<Var, 6> out;
      for (std::size_t k = 0; k < 6; ++k) out[k] = tape.variable(y[k]);
      const Var dhp = tape.variable(yd[ix::h_hp]);
      const Var ddp = tape.variable(yd[ix::h_dp]);
      const auto res = physics_residual(out, dhp, ddp, x[3], cfg);
      const Var ode = nn::ad::square(res.ode_hp) + nn::ad::square(res.ode_dp);
      const Var alg = nn::ad::square(res.alg);
      acc.sums[physics_ode] += ode.value();
      acc.sums[physics_alg] += alg.value();

      auto backprop = [&](const Var& objective, double scale, std::span<double> grad) {
        const auto adj = tape.gradient(objective);
        std::fill(ybar.begin(), ybar.end(), 0.0);
        std::fill(ydbar.begin(), ydbar.end(), 0.0);
        for (std::size_t k = 0; k < 6; ++k) ybar[k] = scale * adj[out[k].index()];
        ydbar[ix::h_hp] = scale * adj[dhp.index()];
        ydbar[ix::h_dp] = scale * adj[ddp.index()];
        m.backward(tr, ybar, ydbar, grad);
      };
      if (!term_grads.empty()) {
        backprop(ode, 1.0 / norm, term_grads[physics_ode]);
        backprop(alg, 1.0 / norm, term_grads[physics_alg]);
      }
      if (want_total) {
        const Var weighted = ode + w.lambda_g * alg;
        backprop(weighted, w.lambda_2 / norm, total_grad);
      }
    }
    acc.sums[physics_ode] /= norm;
    acc.sums[physics_alg] /= norm;
  }

  // Initial-condition term.
  if (p.collocation && !p.collocation->init.empty()) {
    const double norm = 2.0 * static_cast<double>(p.collocation->init.size());
    for (const auto& pt : p.collocation->init) {
      const std::array<double, 4> x{0.0, pt[0], pt[1], pt[2]};
      m.forward_trace(x, {}, tr);
      const auto y = tr.output();
      const double e0 = y[ix::h_hp] - cfg.scaling.scale_height(pt[0]);
      const double e1 = y[ix::h_dp] - cfg.scaling.scale_height(pt[1]);
      acc.sums[init_cond] += e0 * e0 + e1 * e1;
      std::fill(ybar.begin(), ybar.end(), 0.0);
      ybar[ix::h_hp] = 2.0 * e0 / norm;
      ybar[ix::h_dp] = 2.0 * e1 / norm;
      add_grad(term_grads, init_cond, m, tr, ybar, {});
      if (want_total) m.backward(tr, ybar, {}, total_grad);
    }
    acc.sums[init_cond] /= norm;
  }

  return combine(acc.sums, w);
}

std::array<double, 2> loss_data_terms(const nn::Mlp& model, std::span<const mech::SampleRow> rows, std::size_t n_out,
                                      const SettlerConfig& config) {
  LossProblem p{&model, rows, nullptr, n_out, false, &config};
  const auto v = evaluate_loss(p, LossWeights{}, {});
  return {v.terms[data_meas], v.terms[data_internal]};
}

double loss_data(const nn::Mlp& model, std::span<const mech::SampleRow> rows, std::size_t n_out, double lambda_z,
                 const SettlerConfig& config) {
  const auto t = loss_data_terms(model, rows, n_out, config);
  return t[0] + lambda_z * t[1];
}

std::array<double, 2> loss_physics_terms(const nn::Mlp& model, const CollocationSet& set,
                                         const SettlerConfig& config) {
  CollocationSet phys_only{set.physics, {}};
  LossProblem p{&model, {}, &phys_only, model.n_out(), true, &config};
  const auto v = evaluate_loss(p, LossWeights{}, {});
  return {v.terms[physics_ode], v.terms[physics_alg]};
}

double loss_physics(const nn::Mlp& model, const CollocationSet& set, double lambda_g, const SettlerConfig& config) {
  const auto t = loss_physics_terms(model, set, config);
  return t[0] + lambda_g * t[1];
}

double loss_init(const nn::Mlp& model, const CollocationSet& set, const SettlerConfig& config) {
  CollocationSet init_only{{}, set.init};
  LossProblem p{&model, {}, &init_only, std::min<std::size_t>(model.n_out(), 4), false, &config};
  return evaluate_loss(p, LossWeights{}, {}).terms[init_cond];
}

}  // namespace settler::train
