// Acceptance suite: `acceptance N` checks one criterion, no argument runs all.
// Trained ensembles are cached under SETTLER_ACCEPTANCE_CACHE (default: the
// build tree), keyed by the executable's hash and the training parameters.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "json.hpp"
#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"
#include "settler/core/parallel.hpp"
#include "settler/estimate/filter.hpp"
#include "settler/estimate/outlet_dpz.hpp"
#include "settler/io/csv.hpp"
#include "settler/mech/dataset.hpp"
#include "settler/mech/lhs.hpp"
#include "settler/mech/settler_model.hpp"
#include "settler/nn/model_io.hpp"
#include "settler/train/losses.hpp"
#include "settler/train/trainer.hpp"
#include "support.hpp"

#ifndef SETTLER_ACCEPTANCE_CACHE
#define SETTLER_ACCEPTANCE_CACHE "acceptance_cache"
#endif

using namespace settler;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

const SettlerConfig kCfg{};

std::vector<double> random_input(const nn::Mlp& m, std::mt19937_64& rng) {
  std::vector<double> x(m.n_in());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& b = m.input_bounds()[i];
    x[i] = std::uniform_real_distribution<double>(b.lb, b.ub)(rng);
  }
  return x;
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> v(n);
  std::normal_distribution<double> g;
  for (double& e : v) e = g(rng);
  return v;
}

double dotv(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

double rmse(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s / static_cast<double>(a.size()));
}

// ---------------------------------------------------------------------------
// Twins and cached ensembles

struct Twin {
  mech::TrajectoryDataset traj;
  std::vector<double> true_hp, true_dp;
};

Twin make_twin(int schedule, const mech::NoiseSpec& noise, std::size_t duration = 0) {
  auto q = mech::expand_schedule(mech::campaign_schedule(schedule));
  if (duration > 0 && q.size() > duration) q.resize(duration);
  const mech::SubmodelSpec spec = mech::SaturatingSubmodel{};
  const mech::ValveLaw valve;
  const SettlerState start = mech::settle(SettlerState(0.08, 0.04), q.front(), valve, spec, kCfg);
  Twin t;
  t.traj = mech::simulate_trajectory(start, q, valve, spec, kCfg, noise);
  if (t.traj.truncated) fail(ErrorCategory::divergence, "twin diverged: " + t.traj.diagnostic);
  for (const auto& p : t.traj.points) {
    t.true_hp.push_back(p.truth->h_hp);
    t.true_dp.push_back(p.truth->h_dp);
  }
  return t;
}

std::string exe_hash() {
  static const std::string h = [] {
    try {
      return sha256_hex(read_file("/proc/self/exe")).substr(0, 16);
    } catch (const Error&) {
      return std::string("nohash");
    }
  }();
  return h;
}

fs::path cache_dir(const std::string& tag) {
  const char* env = std::getenv("SETTLER_ACCEPTANCE_CACHE");
  const fs::path root = env && *env ? fs::path(env) : fs::path(SETTLER_ACCEPTANCE_CACHE);
  return root / exe_hash() / tag;
}

struct Ensemble {
  std::vector<nn::Mlp> models;
  std::vector<json> meta;

  std::vector<const nn::Mlp*> ptrs() const {
    std::vector<const nn::Mlp*> p;
    for (const auto& m : models) p.push_back(&m);
    return p;
  }
};

std::optional<Ensemble> load_cached(const fs::path& dir, std::size_t n) {
  if (!fs::exists(dir / "complete")) return std::nullopt;
  Ensemble e;
  for (std::size_t i = 0; i < n; ++i) {
    auto f = nn::load_model(dir / ("member_" + std::to_string(i) + ".snn"));
    e.models.push_back(std::move(f.model));
    e.meta.push_back(std::move(f.metadata));
  }
  return e;
}

void store(const fs::path& dir, const Ensemble& e) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < e.models.size(); ++i) {
    nn::save_model(dir / ("member_" + std::to_string(i) + ".snn"), e.models[i], e.meta[i]);
  }
  write_file_atomic(dir / "complete", std::string_view("ok\n"));
}

// Member i uses seed base + i; every member must train without aborting.
Ensemble train_members(std::size_t n, const std::function<train::StageResult(std::size_t)>& body,
                       train::Variant variant) {
  std::vector<std::optional<train::StageResult>> res(n);
  parallel_for(n, [&](std::size_t i) { res[i] = body(i); });
  Ensemble e;
  for (std::size_t i = 0; i < n; ++i) {
    if (!res[i] || res[i]->aborted) fail(ErrorCategory::divergence, "member " + std::to_string(i) + " aborted");
    auto meta = train::stage_metadata(*res[i], variant);
    json hist = json::array();
    for (const auto& h : res[i]->history) hist.push_back(h.loss.total);
    meta["total_history"] = hist;
    e.models.push_back(std::move(res[i]->model));
    e.meta.push_back(std::move(meta));
  }
  return e;
}

struct DeskSetup {
  std::size_t members = 8;
  std::size_t segments = 200;
  std::size_t n_physics = 2000;
  std::size_t n_init = 200;
  std::size_t adam = 500;
  std::size_t lbfgs = 50;
  std::uint64_t seed = 1;
  train::Variant variant = train::Variant::pinn;

  std::string tag() const {
    std::ostringstream s;
    s << train::to_string(variant) << "-m" << members << "-s" << segments << "-c" << n_physics << "_" << n_init << "-e"
      << adam << "_" << lbfgs << "-seed" << seed;
    return s.str();
  }

  train::PipelineConfig pipeline() const {
    train::PipelineConfig p;
    p.variant = variant;
    p.pretrain.adam_epochs = adam;
    p.pretrain.lbfgs_iters = lbfgs;
    return p;
  }

  std::vector<mech::SampleRow> rows() const {
    return mech::generate_pretrain_dataset(segments, kCfg, mech::SaturatingSubmodel{}, seed).rows();
  }

  train::CollocationSet collocation() const {
    return train::sample_collocation(n_physics, n_init, kCfg, mech::derive_seed(seed, 0xC0110C));
  }
};

Ensemble pretrained(const DeskSetup& d) {
  const fs::path dir = cache_dir("pre-" + d.tag());
  if (auto e = load_cached(dir, d.members)) return *e;
  const auto rows = d.rows();
  const auto coll = d.collocation();
  const auto p = d.pipeline();
  auto e = train_members(
      d.members, [&](std::size_t i) { return train::pretrain_member(p, {rows, &coll}, kCfg, d.seed + i); },
      d.variant);
  store(dir, e);
  return e;
}

train::CollocationSet finetune_collocation(std::uint64_t seed) {
  return train::sample_collocation(2000, 200, kCfg, mech::derive_seed(seed, 0xF17E));
}

// Fine-tunes `start` (or fresh networks when empty) on `traj`.
Ensemble finetuned(const std::string& tag, const DeskSetup& d, const Ensemble* start,
                   const mech::TrajectoryDataset& traj) {
  const fs::path dir = cache_dir("fin-" + tag + "-" + d.tag() + (start ? "-two_stage" : "-finetune_only"));
  if (auto e = load_cached(dir, d.members)) return *e;
  const auto rows = mech::trajectory_rows(traj);
  const auto coll = finetune_collocation(d.seed);
  const auto p = d.pipeline();
  auto e = train_members(
      d.members,
      [&](std::size_t i) {
        if (start) {
          return train::finetune_member(p, start->models[i], train::term_weights_from_metadata(start->meta[i]),
                                        train::weights_from_metadata(start->meta[i]), {rows, &coll}, kCfg,
                                        d.seed + i);
        }
        return train::finetune_member(p, std::nullopt, {1.0, 1.0, 1.0, 1.0, 1.0}, {}, {rows, &coll}, kCfg,
                                      d.seed + i);
      },
      d.variant);
  store(dir, e);
  return e;
}

struct RolloutError {
  double hp = 0.0, dp = 0.0;
};

std::vector<double> q_schedule(const Twin& t) {
  std::vector<double> q;
  for (std::size_t k = 0; k + 1 < t.traj.points.size(); ++k) q.push_back(t.traj.points[k].q_in);
  return q;
}

RolloutError open_loop(const Ensemble& e, const Twin& t, const SettlerState& x0) {
  const auto roll = estimate::chain_forward(e.ptrs(), x0, q_schedule(t), kCfg);
  std::vector<double> hp, dp;
  for (const auto& x : roll.mean) {
    hp.push_back(kCfg.scaling.unscale_height(x(0)));
    dp.push_back(kCfg.scaling.unscale_height(x(1)));
  }
  return {rmse(hp, t.true_hp), rmse(dp, t.true_dp)};
}

// ---------------------------------------------------------------------------
// 1. Autodiff

Outcome criterion_1() {
  std::mt19937_64 rng(2024);
  double worst_grad = 0.0, worst_jac = 0.0, worst_adj = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    auto m = test::random_model({4, 32, 32, 6}, 500 + trial,
                                trial % 2 ? nn::Activation::sigmoid : nn::Activation::identity);
    const auto x = random_input(m, rng);
    const auto w = random_vec(6, rng), v = random_vec(6, rng);

    // L = w . y + v . dy/dt
    auto probe = [&](const nn::Mlp& mm) { return dotv(w, mm.forward(x)) + dotv(v, mm.jvp_time(x)); };
    nn::Trace tr;
    const std::vector<double> dt{1.0, 0.0, 0.0, 0.0};
    m.forward_trace(x, dt, tr);
    std::vector<double> grad(m.param_count(), 0.0), fd(m.param_count()), diff(m.param_count());
    m.backward(tr, w, v, grad);
    const double h = 1e-6;
    for (std::size_t i = 0; i < m.param_count(); ++i) {
      const double p = m.params()[i];
      m.params()[i] = p + h;
      const double up = probe(m);
      m.params()[i] = p - h;
      const double dn = probe(m);
      m.params()[i] = p;
      fd[i] = (up - dn) / (2.0 * h);
      diff[i] = grad[i] - fd[i];
    }
    worst_grad = std::max(worst_grad, max_abs(diff) / max_abs(fd));

    const std::vector<std::size_t> rows{0, 1, 2, 3, 4, 5}, cols{0, 1, 2, 3};
    const auto jac = m.input_jacobian(x, rows, cols);
    std::vector<double> jfd(jac.size()), jdiff(jac.size());
    for (std::size_t c = 0; c < 4; ++c) {
      const double hx = 1e-6 * m.input_bounds()[c].width();
      auto up = x, dn = x;
      up[c] += hx;
      dn[c] -= hx;
      const auto yu = m.forward(up), yd = m.forward(dn);
      for (std::size_t r = 0; r < 6; ++r) {
        jfd[r * 4 + c] = (yu[r] - yd[r]) / (2.0 * hx);
        jdiff[r * 4 + c] = jac[r * 4 + c] - jfd[r * 4 + c];
      }
    }
    worst_jac = std::max(worst_jac, max_abs(jdiff) / max_abs(jfd));

    const auto a = random_vec(4, rng), b = random_vec(6, rng);
    const double lhs = dotv(m.jvp(x, a), b);
    const double rhs = dotv(a, m.input_vjp(x, b));
    worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
  }
  const bool pass = worst_grad < 1e-5 && worst_jac < 1e-5 && worst_adj <= 1e-10;
  return {pass, "20 pairs: param grad rel err " + fmt(worst_grad) + ", input jacobian rel err " + fmt(worst_jac) +
                    " (< 1e-5), adjoint gap " + fmt(worst_adj) + " (<= 1e-10)"};
}

// ---------------------------------------------------------------------------
// 2. Mechanistic model

Outcome criterion_2() {
  const SettlerState s(0.1, 0.03);
  const auto zero = mech::mech_rhs(s, 3e-4, 3e-4, InternalFlows(0.0, 0.0), kCfg);
  const auto r = mech::mech_rhs(s, 3e-4, 3e-4, InternalFlows(0.0, 1.8e-4), kCfg);
  const double e_hp = std::abs(r.h_hp + 1e-3) / 1e-3;
  const double e_dp = std::abs(r.h_dp - 1e-3) / 1e-3;
  const bool hand = zero.h_hp == 0.0 && zero.h_dp == 0.0 && e_hp <= 1e-12 && e_dp <= 1e-12;

  const mech::SaturatingSubmodel spec;
  const mech::ValveLaw valve;
  const double q_in = 0.55e-3;
  auto rhs = [&](double, const std::array<double, 2>& x) {
    const SettlerState st(x[0], x[1]);
    const auto f = mech::mech_rhs(st, q_in, valve.q_bot(st, q_in, kCfg.dispersion.eps_dp),
                                  mech::eval_submodel(spec, st, kCfg), kCfg);
    return std::array<double, 2>{f.h_hp, f.h_dp};
  };
  const std::array<double, 2> x0{0.07, 0.02};
  const double horizon = 240.0;
  auto end = [&](double dt) {
    return mech::rk4_integrate(rhs, x0, 0.0, dt, static_cast<std::size_t>(horizon / dt + 0.5));
  };
  const auto ref = end(0.5);
  auto err = [&](double dt) {
    const auto x = end(dt);
    return std::hypot(x[0] - ref[0], x[1] - ref[1]);
  };
  const double order = std::log2(err(8.0) / err(4.0));
  const bool rk4 = order >= 3.7 && order <= 4.3;

  const auto data = mech::generate_pretrain_dataset(200, kCfg, mech::SaturatingSubmodel{}, 1);
  std::size_t points = 0, broken = 0;
  for (const auto& seg : data.segments) {
    for (const auto& f : seg.flows) {
      ++points;
      if (seg.q_in - f.q_bot - f.q_top != 0.0) ++broken;
    }
  }
  return {hand && rk4 && broken == 0, "hand rhs rel err " + fmt(std::max(e_hp, e_dp)) + " (<= 1e-12), rk4 order " +
                                          fmt(order) + " (in [3.7, 4.3]), q_top identity broken at " +
                                          std::to_string(broken) + " of " + std::to_string(points) + " points"};
}

// ---------------------------------------------------------------------------
// 3. Loss assembly

nn::Mlp constant_model(const std::array<double, 6>& c) {
  nn::Mlp m({4, 3, 6}, nn::Activation::tanh, nn::Activation::identity);
  const auto& b = kCfg.bounds;
  m.set_input_bounds({Interval{0.0, 1.0}, b.h_hp.extrapolation, b.h_dp.extrapolation, b.q_in.extrapolation});
  std::vector<nn::OutputChannel> out;
  const char* names[] = {"h_hp", "h_dp", "q_bot", "q_top", "q_c", "q_s"};
  for (std::size_t k = 0; k < 6; ++k) out.push_back({names[k], nn::OutputRole::generic, c[k], 1.0});
  m.set_outputs(out);
  m.scaling = kCfg.scaling;
  return m;
}

Outcome criterion_3() {
  const auto& s = kCfg.scaling;
  const std::array<double, 6> c{0.4, 0.2, 0.3, 0.1, 0.05, 0.06};
  const auto m = constant_model(c);
  mech::SampleRow r;
  r.t = 0.5;
  r.h_hp0 = 0.08;
  r.h_dp0 = 0.04;
  r.q_in = 3e-4;
  r.h_hp = s.unscale_height(c[0] - 1.0);
  r.h_dp = s.unscale_height(c[1] + 1.0);
  r.q_bot = s.unscale_flow(c[2] - 1.0);
  r.q_top = s.unscale_flow(c[3] + 1.0);
  r.has_internal = true;
  r.q_c = s.unscale_flow(c[4] + 0.7);
  r.q_s = s.unscale_flow(c[5] - 0.3);
  const std::vector<mech::SampleRow> one{r};
  const double data_one = train::loss_data(m, one, 4, 0.0, kCfg);
  auto moved = r;
  moved.q_c += 1e-3;
  const std::vector<mech::SampleRow> one_moved{moved};
  const bool lz = train::loss_data(m, one_moved, 6, 0.0, kCfg) == train::loss_data(m, one, 6, 0.0, kCfg);

  train::CollocationSet init;
  init.init.push_back({s.unscale_height(-0.6), s.unscale_height(1.2), 3e-4});
  const double init_one = train::loss_init(m, init, kCfg);

  const double q_in = 4e-4;
  train::CollocationSet phys;
  phys.physics.push_back({0.3, 0.08, 0.03, q_in});
  const SettlerState st(s.unscale_height(c[0]), s.unscale_height(c[1]));
  const auto f = mech::mech_rhs(st, q_in, s.unscale_flow(c[2]),
                                InternalFlows(s.unscale_flow(c[4]), s.unscale_flow(c[5])), kCfg);
  const double fhp = f.h_hp / s.h_scale, fdp = f.h_dp / s.h_scale, alg = s.scale_flow(q_in) - c[2] - c[3];
  const double phys_expected = (fhp * fhp + fdp * fdp + 2.0 * alg * alg) / 3.0;
  const double phys_err = test::rel_err(train::loss_physics(m, phys, 2.0, kCfg), phys_expected, 1e-30);

  const auto rows = mech::generate_pretrain_dataset(4, kCfg, mech::SaturatingSubmodel{}, 2).rows();
  const auto coll = train::sample_collocation(30, 6, kCfg, 3);
  const auto net = nn::make_surrogate(kCfg, 9);
  const train::LossWeights w{0.7, 1.9, 0.3, 0.45};
  const train::LossProblem prob{&net, rows, &coll, 6, true, &kCfg};
  const auto lv = train::evaluate_loss(prob, w, {});
  const double composed = w.lambda_1 * train::loss_data(net, rows, 6, w.lambda_z, kCfg) +
                          w.lambda_2 * train::loss_physics(net, coll, w.lambda_g, kCfg) +
                          train::loss_init(net, coll, kCfg);
  const double comp_err = test::rel_err(lv.total, composed, 1e-30);

  const bool identities = data_one == 1.0 && lz && init_one == 1.0 && phys_err < 1e-12 && comp_err < 1e-12;

  // One mechanistic segment: data on its 11 grid points, physics at the same inputs.
  const auto seg = mech::generate_pretrain_dataset(1, kCfg, mech::SaturatingSubmodel{}, 17);
  const auto seg_rows = seg.rows();
  train::CollocationSet seg_coll;
  for (const auto& row : seg_rows) seg_coll.physics.push_back({row.t, row.h_hp0, row.h_dp0, row.q_in});
  seg_coll.init.push_back({seg_rows.front().h_hp0, seg_rows.front().h_dp0, seg_rows.front().q_in});
  train::TrainSchedule sched = train::TrainSchedule::pretrain_defaults();
  sched.adam_epochs = 2000;
  sched.lbfgs_iters = 1000;
  auto fitted = train::train_stage(nn::make_surrogate(kCfg, 5), sched, {seg_rows, &seg_coll}, kCfg, {});
  const auto pt = train::loss_physics_terms(fitted.model, seg_coll, kCfg);
  const double residual = pt[0] + pt[1];
  const bool fit = residual < 1e-6;
  return {identities && fit,
          "data example " + fmt(data_one) + ", init example " + fmt(init_one) + ", physics rel err " + fmt(phys_err) +
              ", composite rel err " + fmt(comp_err) + ", lambda_z invariance " + (lz ? "ok" : "broken") +
              "; fitted segment physics residual " + fmt(residual) + " (< 1e-6)"};
}

// ---------------------------------------------------------------------------
// 4. Desk pretraining

Outcome criterion_4() {
  const DeskSetup d;
  const auto e = pretrained(d);
  const auto rows = d.rows();
  const auto coll = d.collocation();
  const auto p = d.pipeline();
  double worst_drop = 1e300, worst_logged = 1e300;
  for (std::size_t i = 0; i < d.members; ++i) {
    const auto w = train::weights_from_metadata(e.meta[i]);
    const auto init = train::initial_model(p, kCfg, d.seed + i);
    const train::LossProblem before{&init, rows, &coll, 6, true, &kCfg};
    const train::LossProblem after{&e.models[i], rows, &coll, 6, true, &kCfg};
    const double l0 = train::evaluate_loss(before, w, {}).total;
    const double l1 = train::evaluate_loss(after, w, {}).total;
    worst_drop = std::min(worst_drop, l0 / l1);
    const auto& hist = e.meta[i].at("total_history");
    worst_logged = std::min(worst_logged, hist.front().get<double>() / hist.back().get<double>());
  }

  const auto fresh = train::sample_collocation(1000, 1, kCfg, 0xF2E5);
  double g_sum = 0.0;
  std::size_t g_n = 0;
  for (const auto& m : e.models) {
    for (const auto& x : fresh.physics) {
      const auto y = m.forward(std::span<const double>(x.data(), 4));
      g_sum += std::abs(kCfg.scaling.scale_flow(x[3]) - y[nn::io_index::q_bot] - y[nn::io_index::q_top]);
      ++g_n;
    }
  }
  const double g_mean = g_sum / static_cast<double>(g_n);
  return {worst_drop >= 100.0 && g_mean < 1e-3,
          "smallest member loss drop " + fmt(worst_drop) + "x at final weights (>= 100; logged objective " +
              fmt(worst_logged) + "x), mean |g_sep| on 1000 fresh points " + fmt(g_mean) + " (< 1e-3)"};
}

// ---------------------------------------------------------------------------
// 5. Chained rollout on the clean twin

Outcome criterion_5() {
  const DeskSetup d;
  const auto pre = pretrained(d);
  const auto t1 = make_twin(1, {});
  const auto t3 = make_twin(3, {}, 600);
  const auto two = finetuned("t1clean", d, &pre, t1.traj);
  const auto only = finetuned("t1clean", d, nullptr, t1.traj);
  const SettlerState x0(t3.true_hp.front(), t3.true_dp.front());
  const auto a = open_loop(two, t3, x0);
  const auto b = open_loop(only, t3, x0);
  const bool pass = a.dp < 0.005 && a.hp < 0.005 && b.dp > a.dp && b.hp > a.hp;
  return {pass, "two-stage rmse h_dp " + fmt(a.dp) + " m, h_hp " + fmt(a.hp) + " m (< 0.005); finetune-only h_dp " +
                    fmt(b.dp) + " m, h_hp " + fmt(b.hp) + " m (must be larger)"};
}

// ---------------------------------------------------------------------------
// 6. Filter on the noisy twin

Outcome criterion_6() {
  const DeskSetup d;
  const auto pre = pretrained(d);
  const auto t1 = make_twin(1, {0.002, 5e-7, 61});
  const auto t3 = make_twin(3, {0.0, 5e-7, 63});
  const auto models = finetuned("t1noisy61", d, &pre, t1.traj);

  const auto started = std::chrono::steady_clock::now();
  const auto ptrs = models.ptrs();
  std::vector<estimate::FilterInput> inputs;
  for (const auto& p : t3.traj.points) inputs.push_back({p.tau, p.q_in, FlowMeasurement(p.q_bot, p.q_top)});
  const auto& p0 = t3.traj.points.front();
  const Interval dp_box{std::max(kCfg.bounds.h_dp.extrapolation.lb, t3.true_dp.front() - 0.02),
                        std::min(kCfg.bounds.h_dp.extrapolation.ub, t3.true_dp.front() + 0.02)};
  const SettlerState x0 = estimate::initial_state_search(ptrs, FlowMeasurement(p0.q_bot, p0.q_top), p0.q_in, 100, 7,
                                                         kCfg.bounds.h_hp.extrapolation, dp_box);
  const std::vector<SettlerState> initial(ptrs.size(), x0);
  const auto run = estimate::run_filter(ptrs, inputs, initial, estimate::FilterConfig{}, kCfg);
  std::vector<double> dp, hp;
  for (const auto& x : run.mean) {
    hp.push_back(kCfg.scaling.unscale_height(x(0)));
    dp.push_back(kCfg.scaling.unscale_height(x(1)));
  }
  std::size_t entry = dp.size();
  for (std::size_t k = 0; k < dp.size(); ++k) {
    if (std::abs(dp[k] - t3.true_dp[k]) < 0.005) {
      entry = k;
      break;
    }
  }
  std::size_t inside = 0;
  for (std::size_t k = entry; k < dp.size(); ++k) inside += std::abs(dp[k] - t3.true_dp[k]) < 0.005 ? 1 : 0;
  const double frac = entry < dp.size() ? static_cast<double>(inside) / static_cast<double>(dp.size() - entry) : 0.0;
  const double filt_dp = rmse(dp, t3.true_dp), filt_hp = rmse(hp, t3.true_hp);
  const auto ol = open_loop(models, t3, x0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const bool pass = entry <= 150 && frac >= 0.8 && filt_dp <= ol.dp && secs < 600.0;
  return {pass, "h_dp error below 0.005 m from step " + std::to_string(entry) + " (<= 150), inside for " +
                    fmt(100.0 * frac) + "% after (>= 80%); filtered rmse h_dp " + fmt(filt_dp) + " m vs open loop " +
                    fmt(ol.dp) + " m (h_hp " + fmt(filt_hp) + " vs " + fmt(ol.hp) + "); start h_dp " + fmt(x0.h_dp) +
                    " m, truth " + fmt(t3.true_dp.front()) + " m; " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 7. Filter algebra

Outcome criterion_7() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  double worst_sym = 0.0, worst_eig = 0.0;
  for (int i = 0; i < 1000; ++i) {
    estimate::Mat2 a, k, h, b;
    a << g(rng), g(rng), g(rng), g(rng);
    b << g(rng), g(rng), g(rng), g(rng);
    k << u(rng), u(rng), u(rng), u(rng);
    h << u(rng), u(rng), u(rng), u(rng);
    const estimate::Mat2 P = a * a.transpose();
    const estimate::Mat2 R = b * b.transpose() * 1e-3;
    const auto out = estimate::joseph_update(P, k, h, R);
    const double scale = std::max(1.0, out.cwiseAbs().maxCoeff());
    worst_sym = std::max(worst_sym, std::abs(out(0, 1) - out(1, 0)) / scale);
    const Eigen::SelfAdjointEigenSolver<estimate::Mat2> es(out);
    worst_eig = std::min(worst_eig, es.eigenvalues().minCoeff() / scale);
  }

  // Two members whose t = 1 predictions differ by a fixed offset: covariance
  // of two samples is d d^T / 2.
  const auto base = nn::make_surrogate(kCfg, 3, false);
  auto shifted = base;
  auto outs = shifted.outputs();
  outs[nn::io_index::h_hp].offset += 0.02;
  outs[nn::io_index::h_dp].offset -= 0.01;
  shifted.set_outputs(outs);
  const std::vector<const nn::Mlp*> two{&base, &shifted};
  const estimate::Vec2 x(0.4, 0.15);
  const auto W = estimate::adaptive_W(two, x, 4e-4, 100.0);
  estimate::Mat2 expected;
  expected << 0.02 * 0.02, -0.02 * 0.01, -0.02 * 0.01, 0.01 * 0.01;
  expected /= 2.0 * 100.0;
  const double w_err = (W - expected).cwiseAbs().maxCoeff() / expected.cwiseAbs().maxCoeff();

  const estimate::FilterConfig cfg;
  const bool defaults = cfg.R(0, 0) == 2.5e-7 && cfg.R(1, 1) == 2.5e-7 && cfg.R(0, 1) == 0.0 && cfg.R(1, 0) == 0.0 &&
                        cfg.P0(0, 0) == 1e-4 && cfg.P0(1, 1) == 1e-4 && cfg.P0(0, 1) == 0.0 && cfg.P0(1, 0) == 0.0 &&
                        cfg.w_attenuation == 100.0;
  const bool pass = worst_sym < 1e-12 && worst_eig >= -1e-12 && w_err < 1e-12 && defaults;
  return {pass, "joseph asymmetry " + fmt(worst_sym) + " (< 1e-12), min eigenvalue " + fmt(worst_eig) +
                    " (>= -1e-12) over 1000 cases; adaptive_W rel err " + fmt(w_err) + "; defaults " +
                    (defaults ? "match" : "differ")};
}

// ---------------------------------------------------------------------------
// 8. PINN vs VNN on the extrapolation twin

Outcome criterion_8() {
  const auto t4 = make_twin(4, {});
  const SettlerState x0(t4.true_hp.front(), t4.true_dp.front());
  std::size_t wins = 0;
  std::ostringstream tally;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const auto t1 = make_twin(1, {0.002, 5e-7, 80 + s});
    DeskSetup d;
    d.members = 4;
    d.seed = 100 * s;
    const auto pinn_pre = pretrained(d);
    const auto pinn = finetuned("t1noisy" + std::to_string(80 + s), d, &pinn_pre, t1.traj);
    d.variant = train::Variant::vnn;
    const auto vnn_pre = pretrained(d);
    const auto vnn = finetuned("t1noisy" + std::to_string(80 + s), d, &vnn_pre, t1.traj);
    const double a = open_loop(pinn, t4, x0).dp;
    const double b = open_loop(vnn, t4, x0).dp;
    wins += a <= b ? 1 : 0;
    tally << (s > 1 ? ", " : "") << fmt(a) << "/" << fmt(b);
    std::printf("  seed %llu: pinn h_dp rmse %.4g m, vnn %.4g m\n", static_cast<unsigned long long>(s), a, b);
    std::fflush(stdout);
  }
  return {wins >= 7, "PINN <= VNN h_dp rmse on " + std::to_string(wins) + " of 10 seeds (>= 7); pinn/vnn [m]: " +
                         tally.str()};
}

// ---------------------------------------------------------------------------
// 9. Outlet-DPZ network

Outcome criterion_9() {
  const auto started = std::chrono::steady_clock::now();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(0.02, 0.07);
  std::normal_distribution<double> noise(0.0, 0.001);
  std::vector<double> avg, outlet;
  for (int i = 0; i < 600; ++i) {
    const double a = u(rng);
    avg.push_back(a);
    outlet.push_back(0.01 + 0.9 * a + 4.0 * (a - 0.02) * (a - 0.02) + noise(rng));
  }
  estimate::OutletDpzOptions opts;
  opts.seed = 5;
  const auto res = estimate::outlet_dpz_train(avg, outlet, opts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const bool pass = res.best_validation_rmse < 0.002 && res.epochs_run <= 1000 && secs < 60.0;
  return {pass, "validation rmse " + fmt(res.best_validation_rmse) + " m (< 0.002) after " +
                    std::to_string(res.epochs_run) + " epochs (<= 1000), " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------------------
// 10. CLI reproducibility

Outcome criterion_10() {
  const fs::path dir = fs::temp_directory_path() / "settler-acceptance-10";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cfg = (dir / "small.ini").string();
  write_file_atomic(cfg, std::string_view("[network]\nhidden_width = 8\n[collocation]\nn_physics = 200\nn_init = 20\n"
                                          "finetune_physics = 100\nfinetune_init = 10\n[pretrain]\nadam_epochs = 40\n"
                                          "lbfgs_iters = 10\n[finetune]\nadam_epochs = 30\nlbfgs_iters = 10\n"));
  auto p = [&](const char* name) { return (dir / name).string(); };
  const std::vector<std::vector<std::string>> steps{
      {"--config", cfg, "generate-data", "--segments", "20", "--seed", "3", "--out", p("gen")},
      {"make-twin", "--schedule", "T1", "--duration", "120", "--noise-h", "0.002", "--noise-q", "5e-7", "--seed", "4",
       "--out", p("train.csv")},
      {"make-twin", "--schedule", "T3", "--duration", "90", "--noise-q", "5e-7", "--seed", "5", "--out",
       p("test.csv")},
      {"--config", cfg, "pretrain", "--data", p("gen"), "--members", "3", "--out", p("pre")},
      {"--config", cfg, "finetune", "--data", p("train.csv"), "--init", p("pre"), "--out", p("fin")},
      {"--config", cfg, "simulate", "--models", p("fin"), "--trajectory", p("test.csv"), "--out", p("sim.csv")},
      {"--config", cfg, "estimate", "--models", p("fin"), "--trajectory", p("test.csv"), "--search", "30", "--out",
       p("est.csv")},
  };
  std::ostringstream sink;
  for (const auto& args : steps) {
    const int code = cli::run_cli(args, sink, sink);
    if (code != 0) return {false, "pipeline step '" + args[args[0] == "--config" ? 2 : 0] + "' exited " +
                                      std::to_string(code)};
  }
  const std::vector<std::pair<fs::path, fs::path>> runs{
      {dir / "gen" / "manifest.json", "gen"},          {dir / "train.csv.manifest.json", "train.csv"},
      {dir / "test.csv.manifest.json", "test.csv"},    {dir / "pre" / "manifest.json", "pre"},
      {dir / "fin" / "manifest.json", "fin"},          {dir / "sim.csv.manifest.json", "sim.csv"},
      {dir / "est.csv.manifest.json", "est.csv"},
  };
  std::size_t compared = 0, differing = 0;
  std::string first_bad;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const fs::path out = dir / ("rerun-" + std::to_string(i));
    std::ostringstream log;
    const int code = cli::run_cli({"rerun", "--manifest", runs[i].first.string(), "--out-dir", out.string()}, log, log);
    if (code != 0) return {false, "rerun of " + runs[i].second.string() + " exited " + std::to_string(code)};
    // Compare every CSV byte for byte against the original run.
    const fs::path orig = dir / runs[i].second;
    std::vector<std::pair<fs::path, fs::path>> pairs;
    if (fs::is_directory(orig)) {
      for (const auto& entry : fs::directory_iterator(orig)) {
        if (entry.path().extension() == ".csv" || entry.path().extension() == ".snn") pairs.emplace_back(entry.path(), out / entry.path().filename());
      }
    } else {
      pairs.emplace_back(orig, out / orig.filename());
      const fs::path metrics = fs::path(orig).replace_extension(".metrics.json");
      if (fs::exists(metrics)) pairs.emplace_back(metrics, out / metrics.filename());
    }
    for (const auto& [a, b] : pairs) {
      ++compared;
      if (!fs::exists(b) || read_file(a) != read_file(b)) {
        ++differing;
        if (first_bad.empty()) first_bad = a.filename().string();
      }
    }
  }
  return {differing == 0 && compared >= 7, std::to_string(runs.size()) + " reruns, " + std::to_string(compared) +
                                               " files compared, " + std::to_string(differing) + " differ" +
                                               (first_bad.empty() ? "" : " (first: " + first_bad + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::function<Outcome()>> criteria{criterion_1, criterion_2, criterion_3, criterion_4,
                                                       criterion_5, criterion_6, criterion_7, criterion_8,
                                                       criterion_9, criterion_10};
  std::vector<int> which;
  if (argc > 1) {
    for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  } else {
    which.resize(criteria.size());
    std::iota(which.begin(), which.end(), 1);
  }
  int failures = 0;
  for (int n : which) {
    if (n < 1 || n > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    const auto started = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::printf("%s criterion %d: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str(), secs);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
