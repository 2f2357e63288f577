#include "settler/estimate/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"
#include "settler/core/parallel.hpp"

namespace settler::estimate {

namespace ix = nn::io_index;

FilterConfig FilterConfig::from(const ConfigFile& f) {
  FilterConfig c;
  c.P0(0, 0) = f.get("filter.p0_hp", c.P0(0, 0));
  c.P0(1, 1) = f.get("filter.p0_dp", c.P0(1, 1));
  const double r = f.get("filter.r_sensor", c.R(0, 0));
  c.R = Vec2(r, r).asDiagonal();
  c.w_attenuation = f.get("filter.w_attenuation", c.w_attenuation);
  c.max_condition = f.get("filter.max_condition", c.max_condition);
  c.clip_to_bounds = f.get_bool("filter.clip_to_bounds", c.clip_to_bounds);
  c.validate();
  return c;
}

void FilterConfig::validate() const {
  if (!(P0(0, 0) > 0.0) || !(P0(1, 1) > 0.0) || P0(0, 1) != 0.0 || P0(1, 0) != 0.0) {
    fail(ErrorCategory::config, "filter: P0 must be diagonal with positive entries");
  }
  if (!(R(0, 0) > 0.0) || !(R(1, 1) > 0.0) || R(0, 1) != 0.0 || R(1, 0) != 0.0) {
    fail(ErrorCategory::config, "filter: R must be diagonal with positive entries");
  }
  if (!(w_attenuation > 0.0)) fail(ErrorCategory::config, "filter: w_attenuation must be positive");
  if (!(max_condition > 1.0)) fail(ErrorCategory::config, "filter: max_condition must exceed 1");
}

StateBox StateBox::extrapolation(const SettlerConfig& c) {
  const double s = c.scaling.h_scale;
  const auto& hp = c.bounds.h_hp.extrapolation;
  const auto& dp = c.bounds.h_dp.extrapolation;
  return {{hp.lb / s, hp.ub / s}, {dp.lb / s, dp.ub / s}};
}

Vec2 StateBox::clip(const Vec2& x, bool* clipped) const {
  const Vec2 c(h_hp.clamp(x(0)), h_dp.clamp(x(1)));
  if (clipped) *clipped = c != x;
  return c;
}

namespace {

std::array<double, 4> surrogate_input(const nn::Mlp& m, double t, const Vec2& x, double q_in) {
  return {t, x(0) * m.scaling.h_scale, x(1) * m.scaling.h_scale, q_in};
}

Mat2 jacobian(const nn::Mlp& m, double t, const Vec2& x, double q_in, std::size_t row0, std::size_t row1) {
  const auto in = surrogate_input(m, t, x, q_in);
  const std::array<std::size_t, 2> rows{row0, row1};
  const std::array<std::size_t, 2> cols{ix::h_hp0, ix::h_dp0};
  const auto j = m.input_jacobian(in, rows, cols);
  Mat2 J;
  J << j[0], j[1], j[2], j[3];
  J *= m.scaling.h_scale;
  if (!J.allFinite()) fail(ErrorCategory::numeric, "surrogate Jacobian is not finite");
  return J;
}

Mat2 inverse_2x2(const Mat2& S) {
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  Mat2 adj;
  adj << S(1, 1), -S(0, 1), -S(1, 0), S(0, 0);
  return adj / det;
}

}  // namespace

Vec2 transition(const nn::Mlp& m, const Vec2& x, double q_in) {
  const auto y = m.forward(surrogate_input(m, 1.0, x, q_in));
  return {y[ix::h_hp], y[ix::h_dp]};
}

Mat2 transition_jacobian(const nn::Mlp& m, const Vec2& x, double q_in) {
  return jacobian(m, 1.0, x, q_in, ix::h_hp, ix::h_dp);
}

Vec2 measurement(const nn::Mlp& m, const Vec2& x, double q_in) {
  const auto y = m.forward(surrogate_input(m, 0.0, x, q_in));
  return {y[ix::q_bot], y[ix::q_top]};
}

Mat2 measurement_jacobian(const nn::Mlp& m, const Vec2& x, double q_in) {
  return jacobian(m, 0.0, x, q_in, ix::q_bot, ix::q_top);
}

FilterState predict(const FilterState& s, const nn::Mlp& model, double q_in, const Mat2& W) {
  FilterState out = s;
  const Mat2 F = transition_jacobian(model, s.x, q_in);
  out.x = transition(model, s.x, q_in);
  out.P = F * s.P * F.transpose() + W;
  out.P = 0.5 * (out.P + out.P.transpose()).eval();
  out.W = W;
  return out;
}

Mat2 adaptive_W(std::span<const nn::Mlp* const> members, const Vec2& mean_state, double q_in, double attenuation) {
  if (members.size() < 2) fail(ErrorCategory::config, "adaptive W needs at least two ensemble members");
  std::vector<Vec2> pred(members.size());
  Vec2 mean = Vec2::Zero();
  for (std::size_t i = 0; i < members.size(); ++i) {
    pred[i] = transition(*members[i], mean_state, q_in);
    mean += pred[i];
  }
  mean /= static_cast<double>(members.size());
  Mat2 cov = Mat2::Zero();
  for (const auto& p : pred) cov += (p - mean) * (p - mean).transpose();
  cov /= static_cast<double>(members.size() - 1);
  return cov / attenuation;
}

Mat2 joseph_update(const Mat2& P, const Mat2& K, const Mat2& H, const Mat2& R) {
  const Mat2 A = Mat2::Identity() - K * H;
  const Mat2 out = A * P * A.transpose() + K * R * K.transpose();
  return 0.5 * (out + out.transpose());
}

double condition_number(const Mat2& S) {
  const double a = S(0, 0);
  const double d = S(1, 1);
  const double b = 0.5 * (S(0, 1) + S(1, 0));
  const double mid = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  const double l1 = std::abs(mid + rad);
  const double l2 = std::abs(mid - rad);
  const double lo = std::min(l1, l2);
  const double hi = std::max(l1, l2);
  if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

UpdateResult update(const FilterState& pred, const nn::Mlp& model, double q_in, const Vec2& y, double max_condition) {
  UpdateResult r;
  r.state = pred;
  r.y_pred = measurement(model, pred.x, q_in);
  const Mat2 H = measurement_jacobian(model, pred.x, q_in);
  const Mat2 S = H * pred.P * H.transpose() + pred.R;
  const double cond = condition_number(S);
  if (!(cond <= max_condition)) {
    r.skipped = true;
    spdlog::debug("update skipped: innovation covariance condition {:.3e}", cond);
    return r;
  }
  const Mat2 K = pred.P * H.transpose() * inverse_2x2(S);
  r.state.K = K;
  r.state.x = pred.x + K * (y - r.y_pred);
  r.state.P = joseph_update(pred.P, K, H, pred.R);
  return r;
}

SettlerState initial_state_search(std::span<const nn::Mlp* const> members, const FlowMeasurement& y0, double q_in0,
                                  std::size_t n_samples, std::uint64_t seed, const Interval& hp_box,
                                  const Interval& dp_box) {
  if (members.empty()) fail(ErrorCategory::config, "initial state search needs at least one model");
  if (n_samples == 0) fail(ErrorCategory::config, "initial state search needs at least one candidate");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double qs = members.front()->scaling.q_scale;
  const double hs = members.front()->scaling.h_scale;
  const Vec2 y(y0.q_bot / qs, y0.q_top / qs);
  SettlerState best;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double h_hp = hp_box.lb + u01(rng) * hp_box.width();
    const double h_dp = dp_box.lb + u01(rng) * dp_box.width();
    const Vec2 x(h_hp / hs, h_dp / hs);
    Vec2 pred = Vec2::Zero();
    for (const auto* m : members) pred += measurement(*m, x, q_in0);
    pred /= static_cast<double>(members.size());
    const double err = (pred - y).squaredNorm();
    if (err < best_err) {
      best_err = err;
      best.h_hp = h_hp;
      best.h_dp = h_dp;
    }
  }
  return best;
}

EnsembleRun run_filter(std::span<const nn::Mlp* const> members, std::span<const FilterInput> inputs,
                       std::span<const SettlerState> initial, const FilterConfig& cfg, const SettlerConfig& settler,
                       const Mat2& external_W) {
  cfg.validate();
  const std::size_t n = members.size();
  if (n == 0) fail(ErrorCategory::config, "filter needs at least one model");
  if (initial.size() != n) fail(ErrorCategory::config, "one initial state per ensemble member is required");
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    if (std::abs(inputs[k].tau - inputs[k - 1].tau - 1.0) > 1e-9) {
      fail(ErrorCategory::config, "filter inputs must be at 1 s resolution");
    }
  }
  const StateBox box = StateBox::extrapolation(settler);
  const double hs = settler.scaling.h_scale;
  const double qs = settler.scaling.q_scale;

  EnsembleRun run;
  run.members.resize(n);
  std::vector<FilterState> state(n);
  std::vector<bool> alive(n, true);
  if (inputs.empty()) return run;

  auto record_mean = [&](std::size_t k) {
    Vec2 mean = Vec2::Zero();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      mean += run.members[i].steps[k].x_post;
      ++count;
    }
    if (count > 0) mean /= static_cast<double>(count);
    run.tau.push_back(inputs[k].tau);
    run.mean.push_back(mean);
    run.active.push_back(count);
    return mean;
  };

  for (std::size_t i = 0; i < n; ++i) {
    state[i].x = Vec2(initial[i].h_hp / hs, initial[i].h_dp / hs);
    state[i].P = cfg.P0;
    state[i].R = cfg.R;
    StepRecord rec;
    rec.tau = inputs[0].tau;
    rec.x_prior = rec.x_post = state[i].x;
    rec.P = state[i].P;
    rec.u = inputs[0].q_in;
    rec.y_meas = Vec2(inputs[0].y.q_bot / qs, inputs[0].y.q_top / qs);
    rec.y_pred = measurement(*members[i], state[i].x, inputs[0].q_in);
    run.members[i].steps.push_back(rec);
  }
  Vec2 mean = record_mean(0);

  for (std::size_t k = 1; k < inputs.size(); ++k) {
    const double u_prev = inputs[k - 1].q_in;
    const Vec2 y(inputs[k].y.q_bot / qs, inputs[k].y.q_top / qs);
    Mat2 W = external_W;
    std::vector<const nn::Mlp*> live;
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i]) live.push_back(members[i]);
    }
    if (live.empty()) break;
    if (live.size() >= 2) W = adaptive_W(live, box.clip(mean), u_prev, cfg.w_attenuation);

    parallel_for(n, [&](std::size_t i) {
      if (!alive[i]) return;
      StepRecord rec;
      rec.tau = inputs[k].tau;
      rec.u = u_prev;
      rec.y_meas = y;
      rec.W = W;
      try {
        FilterState s = state[i];
        bool clipped = false;
        if (cfg.clip_to_bounds) s.x = box.clip(s.x, &clipped);
        FilterState p = predict(s, *members[i], u_prev, W);
        rec.x_prior = p.x;
        UpdateResult u = update(p, *members[i], u_prev, y, cfg.max_condition);
        bool clipped_post = false;
        if (cfg.clip_to_bounds) u.state.x = box.clip(u.state.x, &clipped_post);
        if (!u.state.x.allFinite() || !u.state.P.allFinite()) fail(ErrorCategory::numeric, "non-finite estimate");
        rec.x_post = u.state.x;
        rec.P = u.state.P;
        rec.K = u.skipped ? Mat2::Zero() : u.state.K;
        rec.y_pred = u.y_pred;
        rec.update_skipped = u.skipped;
        rec.clipped = clipped || clipped_post;
        state[i] = u.state;
      } catch (const Error& e) {
        run.members[i].failed = true;
        run.members[i].failed_at = k;
        run.members[i].error = e.what();
        return;
      }
      run.members[i].steps.push_back(rec);
    });
    for (std::size_t i = 0; i < n; ++i) {
      if (alive[i] && run.members[i].failed) {
        alive[i] = false;
        spdlog::warn("filter member {} dropped at tau = {}: {}", i, inputs[k].tau, run.members[i].error);
      }
    }
    // Members that failed this step have no record for k; the mean skips them.
    Vec2 m = Vec2::Zero();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!alive[i]) continue;
      m += run.members[i].steps.back().x_post;
      ++count;
    }
    if (count > 0) m /= static_cast<double>(count);
    run.tau.push_back(inputs[k].tau);
    run.mean.push_back(m);
    run.active.push_back(count);
    mean = m;
  }
  return run;
}

Rollout chain_forward(std::span<const nn::Mlp* const> members, const SettlerState& initial,
                      std::span<const double> q_in_schedule, const SettlerConfig& settler) {
  if (members.empty()) fail(ErrorCategory::config, "rollout needs at least one model");
  const StateBox box = StateBox::extrapolation(settler);
  const double hs = settler.scaling.h_scale;
  Rollout out;
  out.members.resize(members.size());
  out.clipped_steps.assign(members.size(), 0);
  parallel_for(members.size(), [&](std::size_t i) {
    auto& traj = out.members[i];
    traj.reserve(q_in_schedule.size() + 1);
    Vec2 x(initial.h_hp / hs, initial.h_dp / hs);
    traj.push_back(x);
    for (double u : q_in_schedule) {
      bool clipped = false;
      x = box.clip(transition(*members[i], x, u), &clipped);
      if (clipped) ++out.clipped_steps[i];
      traj.push_back(x);
    }
  });
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (out.clipped_steps[i] > 0) {
      spdlog::info("rollout member {}: state clipped to the extrapolation box on {} steps", i, out.clipped_steps[i]);
    }
  }
  const std::size_t len = q_in_schedule.size() + 1;
  out.mean.assign(len, Vec2::Zero());
  for (const auto& traj : out.members) {
    for (std::size_t k = 0; k < len; ++k) out.mean[k] += traj[k];
  }
  for (auto& m : out.mean) m /= static_cast<double>(members.size());
  return out;
}

}  // namespace settler::estimate
