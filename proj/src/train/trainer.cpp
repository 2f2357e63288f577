#include "settler/train/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"
#include "settler/core/parallel.hpp"
#include "settler/train/adam.hpp"
#include "settler/train/lbfgs.hpp"

namespace settler::train {

std::string_view to_string(Stage s) { return s == Stage::pretrain ? "pretrain" : "finetune"; }
std::string_view to_string(Variant v) { return v == Variant::pinn ? "pinn" : "vnn"; }
std::string_view to_string(Pipeline p) { return p == Pipeline::two_stage ? "two_stage" : "finetune_only"; }

Variant variant_from_string(std::string_view s) {
  if (s == "pinn") return Variant::pinn;
  if (s == "vnn") return Variant::vnn;
  fail(ErrorCategory::config, "variant must be pinn or vnn, got '" + std::string(s) + "'");
}

Pipeline pipeline_from_string(std::string_view s) {
  if (s == "two_stage") return Pipeline::two_stage;
  if (s == "finetune_only") return Pipeline::finetune_only;
  fail(ErrorCategory::config, "pipeline must be two_stage or finetune_only, got '" + std::string(s) + "'");
}

TrainSchedule TrainSchedule::pretrain_defaults() { return {Stage::pretrain, 2000, 1e-3, 300, true, 5, 6}; }
TrainSchedule TrainSchedule::finetune_defaults() { return {Stage::finetune, 1000, 1e-4, 200, false, 5, 4}; }

void TrainSchedule::validate() const {
  if (!(adam_lr > 0.0) || !std::isfinite(adam_lr)) fail(ErrorCategory::config, "adam_lr must be positive");
  if (idw_enabled && idw_period == 0) fail(ErrorCategory::config, "idw_period must be >= 1");
  if (n_out != 4 && n_out != 6) fail(ErrorCategory::config, "n_out must be 4 or 6");
}

namespace {

TrainSchedule schedule_from(const ConfigFile& f, const std::string& section, TrainSchedule s) {
  s.adam_epochs = static_cast<std::size_t>(f.get_int(section + ".adam_epochs", static_cast<long>(s.adam_epochs)));
  s.adam_lr = f.get(section + ".adam_lr", s.adam_lr);
  s.lbfgs_iters = static_cast<std::size_t>(f.get_int(section + ".lbfgs_iters", static_cast<long>(s.lbfgs_iters)));
  s.idw_enabled = f.get_bool(section + ".idw_enabled", s.idw_enabled);
  s.idw_period = static_cast<std::size_t>(f.get_int(section + ".idw_period", static_cast<long>(s.idw_period)));
  s.n_out = static_cast<std::size_t>(f.get_int(section + ".n_out", static_cast<long>(s.n_out)));
  s.validate();
  return s;
}

void enforce_variant(LossWeights& w, const TrainSchedule& s, bool physics) {
  if (!physics) w.lambda_2 = 0.0;
  if (s.n_out == 4) w.lambda_z = 0.0;
}

struct Evaluated {
  double f;
  LossValue value;
};

}  // namespace

PipelineConfig PipelineConfig::from(const ConfigFile& f) {
  PipelineConfig p;
  p.variant = variant_from_string(f.get_string("training.variant", "pinn"));
  p.pipeline = pipeline_from_string(f.get_string("training.pipeline", "two_stage"));
  p.pretrain = schedule_from(f, "pretrain", p.pretrain);
  p.finetune = schedule_from(f, "finetune", p.finetune);
  p.hidden_width = static_cast<std::size_t>(f.get_int("network.hidden_width", 32));
  p.hidden_layers = static_cast<std::size_t>(f.get_int("network.hidden_layers", 2));
  p.output_mapping = nn::output_mapping_from_string(f.get_string("network.output_mapping", "residual"));
  if (p.hidden_width == 0 || p.hidden_layers == 0) fail(ErrorCategory::config, "network needs hidden layers");
  return p;
}

StageResult train_stage(nn::Mlp model, const TrainSchedule& schedule, const StageData& data,
                        const SettlerConfig& config, const LossWeights& initial_weights, bool physics,
                        const std::array<double, kTermCount>& initial_term_weights) {
  schedule.validate();
  StageResult res;
  res.term_weights = initial_term_weights;
  LossWeights w = initial_weights;
  enforce_variant(w, schedule, physics);

  LossProblem problem{&model, data.rows, data.collocation, schedule.n_out, physics, &config};
  const std::size_t n = model.param_count();
  std::vector<double> grad(n);
  std::vector<std::vector<double>> term_grads(kTermCount);
  AdamState adam;
  const AdamOptions adam_opts{schedule.adam_lr};

  auto abort_with = [&](const std::string& why) {
    res.aborted = true;
    res.diagnostic = why;
    spdlog::error("{} stage aborted: {}", to_string(schedule.stage), why);
  };

  for (std::size_t epoch = 0; epoch < schedule.adam_epochs; ++epoch) {
    LossValue value;
    if (schedule.idw_enabled && epoch % schedule.idw_period == 0) {
      value = evaluate_loss(problem, w, {}, term_grads);
      std::array<double, kTermCount> stds{};
      for (std::size_t k = 0; k < kTermCount; ++k) stds[k] = gradient_std(term_grads[k]);
      const auto updated = idw_update(stds, res.term_weights);
      std::copy(updated.begin(), updated.end(), res.term_weights.begin());
      w = weights_from_terms(res.term_weights);
      enforce_variant(w, schedule, physics);
      const std::array<double, kTermCount> coef{w.lambda_1, w.lambda_1 * w.lambda_z, w.lambda_2,
                                                w.lambda_2 * w.lambda_g, 1.0};
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t k = 0; k < kTermCount; ++k) {
        for (std::size_t i = 0; i < n; ++i) grad[i] += coef[k] * term_grads[k][i];
      }
      value = combine(value.terms, w);
    } else {
      std::fill(grad.begin(), grad.end(), 0.0);
      value = evaluate_loss(problem, w, grad);
    }
    if (!std::isfinite(value.total)) {
      abort_with("non-finite total loss at adam epoch " + std::to_string(epoch));
      break;
    }
    res.history.push_back({"adam", epoch, value, w});
    adam_step(model.params(), grad, adam, adam_opts);
  }
  res.skipped_steps = adam.skipped;

  if (!res.aborted && schedule.lbfgs_iters > 0) {
    std::vector<Evaluated> evals;
    const Objective objective = [&](std::span<const double> x, std::span<double> g) {
      std::copy(x.begin(), x.end(), model.params().begin());
      std::fill(g.begin(), g.end(), 0.0);
      const LossValue v = evaluate_loss(problem, w, g);
      const double f = std::isfinite(v.total) ? v.total : std::numeric_limits<double>::infinity();
      evals.push_back({f, v});
      return f;
    };
    std::vector<double> x0(model.params().begin(), model.params().end());
    try {
      LbfgsOptions opts;
      opts.max_iters = schedule.lbfgs_iters;
      const auto out = lbfgs_minimize(objective, x0, opts);
      std::copy(out.x.begin(), out.x.end(), model.params().begin());
      for (std::size_t i = 0; i < out.history.size(); ++i) {
        LossValue v;
        v.total = out.history[i];
        for (auto it = evals.rbegin(); it != evals.rend(); ++it) {
          if (it->f == out.history[i]) {
            v = it->value;
            break;
          }
        }
        res.history.push_back({"lbfgs", i, v, w});
      }
      if (out.line_search_failed) {
        res.diagnostic = out.diagnostic;
        spdlog::info("{} stage: {}", to_string(schedule.stage), out.diagnostic);
      }
    } catch (const Error& e) {
      std::copy(x0.begin(), x0.end(), model.params().begin());
      abort_with(e.what());
    }
  }
  model.stage = std::string(to_string(schedule.stage));
  res.weights = w;
  res.model = std::move(model);
  return res;
}

nn::Mlp initial_model(const PipelineConfig& p, const SettlerConfig& config, std::uint64_t seed) {
  return nn::make_surrogate(config, seed, p.variant == Variant::pinn, p.hidden_width, p.hidden_layers,
                            p.output_mapping);
}

StageResult pretrain_member(const PipelineConfig& p, const StageData& sim, const SettlerConfig& config,
                            std::uint64_t seed) {
  TrainSchedule s = p.pretrain;
  s.stage = Stage::pretrain;
  if (p.variant == Variant::vnn) s.n_out = 4;
  return train_stage(initial_model(p, config, seed), s, sim, config, LossWeights{}, p.variant == Variant::pinn);
}

StageResult finetune_member(const PipelineConfig& p, std::optional<nn::Mlp> start,
                            const std::array<double, kTermCount>& pre_terms, const LossWeights& pre_weights,
                            const StageData& experiment, const SettlerConfig& config, std::uint64_t seed) {
  TrainSchedule s = p.finetune;
  s.stage = Stage::finetune;
  s.n_out = 4;
  nn::Mlp model = start ? std::move(*start) : initial_model(p, config, seed);
  LossWeights w = start ? pre_weights : LossWeights{};
  w.lambda_z = 0.0;
  return train_stage(std::move(model), s, experiment, config, w, p.variant == Variant::pinn,
                     start ? pre_terms : std::array<double, kTermCount>{1.0, 1.0, 1.0, 1.0, 1.0});
}

std::vector<MemberResult> train_ensemble(std::size_t n_members, const PipelineConfig& p, const StageData& sim,
                                         const StageData& experiment, const SettlerConfig& config,
                                         std::uint64_t base_seed) {
  if (n_members == 0) fail(ErrorCategory::config, "ensemble needs at least one member");
  std::vector<MemberResult> members(n_members);
  parallel_for(n_members, [&](std::size_t i) {
    MemberResult& m = members[i];
    m.index = i;
    m.seed = base_seed + i;
    try {
      std::optional<nn::Mlp> start;
      std::array<double, kTermCount> terms{1.0, 1.0, 1.0, 1.0, 1.0};
      LossWeights weights;
      if (p.pipeline == Pipeline::two_stage) {
        m.pretrain = pretrain_member(p, sim, config, m.seed);
        if (m.pretrain->aborted) fail(ErrorCategory::divergence, m.pretrain->diagnostic);
        start = m.pretrain->model;
        terms = m.pretrain->term_weights;
        weights = m.pretrain->weights;
      }
      m.finetune = finetune_member(p, start, terms, weights, experiment, config, m.seed);
      if (m.finetune->aborted) fail(ErrorCategory::divergence, m.finetune->diagnostic);
      m.model = m.finetune->model;
      m.ok = true;
    } catch (const Error& e) {
      m.error = e.what();
      spdlog::warn("ensemble member {} failed: {}", i, e.what());
    }
  });
  std::size_t ok = 0;
  for (const auto& m : members) ok += m.ok ? 1 : 0;
  if (5 * ok < 4 * n_members) {
    std::ostringstream msg;
    msg << "only " << ok << " of " << n_members << " ensemble members trained successfully";
    fail(ErrorCategory::divergence, msg.str());
  }
  return members;
}

nlohmann::json stage_metadata(const StageResult& stage, Variant variant) {
  nlohmann::json j;
  j["variant"] = to_string(variant);
  j["weights"] = {{"lambda_1", stage.weights.lambda_1},
                  {"lambda_2", stage.weights.lambda_2},
                  {"lambda_g", stage.weights.lambda_g},
                  {"lambda_z", stage.weights.lambda_z}};
  j["term_weights"] = stage.term_weights;
  j["skipped_steps"] = stage.skipped_steps;
  if (!stage.history.empty()) j["final_loss"] = stage.history.back().loss.total;
  return j;
}

LossWeights weights_from_metadata(const nlohmann::json& meta) {
  LossWeights w;
  if (!meta.contains("weights")) return w;
  const auto& j = meta.at("weights");
  w.lambda_1 = j.value("lambda_1", 1.0);
  w.lambda_2 = j.value("lambda_2", 1.0);
  w.lambda_g = j.value("lambda_g", 1.0);
  w.lambda_z = j.value("lambda_z", 1.0);
  w.validate();
  return w;
}

std::array<double, kTermCount> term_weights_from_metadata(const nlohmann::json& meta) {
  std::array<double, kTermCount> t{1.0, 1.0, 1.0, 1.0, 1.0};
  if (meta.contains("term_weights")) t = meta.at("term_weights").get<std::array<double, kTermCount>>();
  return t;
}

}  // namespace settler::train
