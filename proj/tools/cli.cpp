#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "settler/core/config.hpp"
#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"
#include "settler/core/parallel.hpp"
#include "settler/estimate/filter.hpp"
#include "settler/estimate/outlet_dpz.hpp"
#include "settler/io/csv.hpp"
#include "settler/io/manifest.hpp"
#include "settler/io/metrics.hpp"
#include "settler/io/plot.hpp"
#include "settler/io/preprocess.hpp"
#include "settler/io/trajectory_io.hpp"
#include "settler/mech/dataset.hpp"
#include "settler/mech/lhs.hpp"
#include "settler/nn/kernels.hpp"
#include "settler/nn/model_io.hpp"
#include "settler/train/trainer.hpp"

#ifndef SETTLER_VERSION
#define SETTLER_VERSION "0.0.0"
#endif

namespace settler::cli {

namespace fs = std::filesystem;

namespace {

// Options whose values name existing inputs; recorded as absolute paths.
const std::set<std::string> kInputFlags{"--config", "--data",  "--init",  "--models", "--trajectory", "--schedule",
                                        "--pred",   "--truth", "--run",   "--train",  "--predict",    "--model",
                                        "--in"};

std::vector<std::string> absolutize_inputs(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  auto fix = [](const std::string& v) {
    std::error_code ec;
    if (!v.empty() && fs::exists(v, ec)) return fs::absolute(v).lexically_normal().string();
    return v;
  };
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    const auto eq = a.find('=');
    if (a.rfind("--", 0) == 0 && eq != std::string::npos && kInputFlags.count(a.substr(0, eq))) {
      out.push_back(a.substr(0, eq + 1) + fix(a.substr(eq + 1)));
    } else if (kInputFlags.count(a) && i + 1 < args.size()) {
      out.push_back(a);
      out.push_back(fix(args[++i]));
    } else {
      out.push_back(a);
    }
  }
  return out;
}

std::string member_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "member_%03zu%s", i, nn::kModelExtension);
  return buf;
}

Interval parse_box(const std::string& text, const Interval& fallback, const char* what) {
  if (text.empty()) return fallback;
  const auto comma = text.find(',');
  if (comma == std::string::npos) fail(ErrorCategory::config, std::string(what) + " must be 'lo,hi'");
  try {
    Interval box{std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
    if (!(box.lb < box.ub)) fail(ErrorCategory::config, std::string(what) + ": lo must be below hi");
    return box;
  } catch (const std::logic_error&) {
    fail(ErrorCategory::config, std::string(what) + " must be 'lo,hi' in metres");
  }
}

struct Loaded {
  std::vector<nn::ModelFile> files;
  std::vector<const nn::Mlp*> ptrs;
};

Loaded load_members(const fs::path& dir) {
  Loaded l;
  for (const auto& p : nn::list_models(dir)) l.files.push_back(nn::load_model(p));
  if (l.files.empty()) fail(ErrorCategory::io, "no " + std::string(nn::kModelExtension) + " models in " + dir.string());
  for (const auto& f : l.files) l.ptrs.push_back(&f.model);
  return l;
}

mech::TrajectoryDataset limit_steps(mech::TrajectoryDataset traj, std::size_t steps) {
  if (steps > 0 && traj.points.size() > steps) traj.points.resize(steps);
  if (traj.points.empty()) fail(ErrorCategory::parse, "trajectory has no rows");
  return traj;
}

double truth_or_nan(const mech::TrajectoryPoint& p, bool heavy) {
  if (!p.truth) return std::nan("");
  return heavy ? p.truth->h_hp : p.truth->h_dp;
}

bool has_truth(const mech::TrajectoryDataset& traj) {
  return std::any_of(traj.points.begin(), traj.points.end(), [](const auto& p) { return p.truth.has_value(); });
}

fs::path metrics_path(const fs::path& out) {
  fs::path p = out;
  p.replace_extension(".metrics.json");
  return p;
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

void write_history(const fs::path& path, const std::vector<std::pair<std::size_t, const train::StageResult*>>& runs) {
  io::CsvTable t;
  t.header = {"member", "adam", "epoch", "total", "data_meas", "data_internal", "physics_ode", "physics_alg", "init",
              "lambda_1", "lambda_2", "lambda_g", "lambda_z"};
  for (const auto& [member, stage] : runs) {
    if (stage == nullptr) continue;
    for (const auto& e : stage->history) {
      t.rows.push_back({static_cast<double>(member), e.phase == "adam" ? 1.0 : 0.0, static_cast<double>(e.epoch),
                        e.loss.total, e.loss.terms[0], e.loss.terms[1], e.loss.terms[2], e.loss.terms[3],
                        e.loss.terms[4], e.weights.lambda_1, e.weights.lambda_2, e.weights.lambda_g,
                        e.weights.lambda_z});
    }
  }
  io::write_csv(path, t);
}

void require_survivors(std::size_t ok, std::size_t n) {
  if (5 * ok < 4 * n) {
    fail(ErrorCategory::divergence,
         "only " + std::to_string(ok) + " of " + std::to_string(n) + " ensemble members trained successfully");
  }
}

// Shared state of one invocation.
struct Run {
  ConfigFile file;
  SettlerConfig settler;
  std::vector<fs::path> outputs;
  nlohmann::json seeds = nlohmann::json::object();
  std::ostream* out = nullptr;
};

// ---- subcommands ----

void cmd_generate_data(Run& r, std::size_t segments, std::uint64_t seed, const fs::path& dir) {
  const auto spec = mech::submodel_from_config(r.file);
  const auto data = mech::generate_pretrain_dataset(segments, r.settler, spec, seed);
  fs::create_directories(dir);
  const fs::path csv = dir / "segments.csv";
  io::write_csv(csv, io::segment_table(data));
  r.outputs.push_back(csv);
  r.seeds["data"] = seed;
  *r.out << "wrote " << data.segments.size() << " segments (" << data.resampled << " redrawn) to " << csv.string()
         << "\n";
}

void cmd_make_twin(Run& r, const std::string& schedule, double noise_h, double noise_q, bool detections,
                   std::uint64_t seed, std::size_t duration, const fs::path& out) {
  std::vector<mech::ScheduleStep> steps;
  const bool named = schedule.size() >= 2 && (schedule[0] == 'T' || schedule[0] == 't') &&
                     schedule.find_first_not_of("0123456789", 1) == std::string::npos && !fs::exists(schedule);
  if (named) {
    steps = mech::campaign_schedule(std::stoi(schedule.substr(1)));
  } else {
    steps = io::read_schedule(schedule);
  }
  std::vector<double> q = mech::expand_schedule(steps);
  if (duration > 0 && q.size() > duration) q.resize(duration);
  const auto spec = mech::submodel_from_config(r.file);
  const auto valve = mech::valve_from_config(r.file);
  const SettlerState start(r.file.get("twin.h_hp0", 0.08), r.file.get("twin.h_dp0", 0.04));
  const auto settle_s = static_cast<std::size_t>(r.file.get_int("twin.settle_s", 3000));
  const SettlerState initial = mech::settle(start, q.front(), valve, spec, r.settler, settle_s);
  mech::DetectionModel det;
  det.enabled = detections;
  det.wedge = r.file.get("twin.wedge", det.wedge);
  const auto traj = mech::simulate_trajectory(initial, q, valve, spec, r.settler, {noise_h, noise_q, seed}, det);
  if (traj.truncated) fail(ErrorCategory::divergence, "twin trajectory diverged: " + traj.diagnostic);
  io::write_trajectory(out, traj);
  r.outputs.push_back(out);
  r.seeds["noise"] = seed;
  *r.out << "wrote " << traj.points.size() << " samples to " << out.string() << "\n";
}

fs::path segments_csv(const fs::path& data) { return fs::is_directory(data) ? data / "segments.csv" : data; }

void cmd_pretrain(Run& r, const fs::path& data, std::size_t members, std::uint64_t seed, const fs::path& dir,
                  const std::string& variant) {
  train::PipelineConfig p = train::PipelineConfig::from(r.file);
  if (!variant.empty()) p.variant = train::variant_from_string(variant);
  const io::CsvTable table = io::read_csv(segments_csv(data));
  const auto rows = io::sample_rows_from_table(table);
  std::set<double> ids;
  if (auto c = table.find("segment")) {
    for (const auto& row : table.rows) ids.insert(row[*c]);
  }
  const std::size_t segments = ids.empty() ? rows.size() / (mech::kSegmentSteps + 1) : ids.size();
  std::size_t n_phys = static_cast<std::size_t>(r.file.get_int("collocation.n_physics", 0));
  std::size_t n_init = static_cast<std::size_t>(r.file.get_int("collocation.n_init", 0));
  if (n_phys == 0) n_phys = 10 * segments;
  if (n_init == 0) n_init = segments;
  const std::uint64_t coll_seed = mech::derive_seed(seed, 0xC0110C);
  const auto coll = train::sample_collocation(n_phys, n_init, r.settler, coll_seed);
  r.seeds["members"] = seed;
  r.seeds["collocation"] = coll_seed;

  std::vector<std::optional<train::StageResult>> results(members);
  parallel_for(members, [&](std::size_t i) {
    try {
      results[i] = train::pretrain_member(p, {rows, &coll}, r.settler, seed + i);
    } catch (const Error& e) {
      spdlog::warn("pretrain member {} failed: {}", i, e.what());
    }
  });
  fs::create_directories(dir);
  std::size_t ok = 0;
  std::vector<std::pair<std::size_t, const train::StageResult*>> hist;
  for (std::size_t i = 0; i < members; ++i) {
    if (!results[i] || results[i]->aborted) continue;
    ++ok;
    auto meta = train::stage_metadata(*results[i], p.variant);
    meta["member"] = i;
    meta["pipeline"] = "two_stage";
    const fs::path path = dir / member_file(i);
    nn::save_model(path, results[i]->model, meta);
    r.outputs.push_back(path);
    hist.emplace_back(i, &*results[i]);
  }
  require_survivors(ok, members);
  const fs::path h = dir / "pretrain_history.csv";
  write_history(h, hist);
  r.outputs.push_back(h);
  *r.out << "pretrained " << ok << " of " << members << " members into " << dir.string() << "\n";
}

void cmd_finetune(Run& r, const fs::path& data, const std::string& init, std::size_t members, std::uint64_t seed,
                  const fs::path& dir, const std::string& variant) {
  train::PipelineConfig p = train::PipelineConfig::from(r.file);
  if (!variant.empty()) p.variant = train::variant_from_string(variant);
  const auto traj = io::read_trajectory(data);
  const auto rows = mech::trajectory_rows(traj);
  const auto n_phys = static_cast<std::size_t>(r.file.get_int("collocation.finetune_physics", 2000));
  const auto n_init = static_cast<std::size_t>(r.file.get_int("collocation.finetune_init", 200));
  const std::uint64_t coll_seed = mech::derive_seed(seed, 0xF17E);
  const auto coll = train::sample_collocation(n_phys, n_init, r.settler, coll_seed);
  r.seeds["members"] = seed;
  r.seeds["collocation"] = coll_seed;

  std::vector<nn::ModelFile> starts;
  if (!init.empty()) {
    for (const auto& path : nn::list_models(init)) starts.push_back(nn::load_model(path));
    if (starts.empty()) fail(ErrorCategory::io, "no pretrained models in " + init);
    members = starts.size();
    const std::string v = starts.front().metadata.value("variant", std::string(train::to_string(p.variant)));
    p.variant = train::variant_from_string(v);
  }
  if (members == 0) fail(ErrorCategory::config, "ensemble needs at least one member");

  std::vector<std::optional<train::StageResult>> results(members);
  parallel_for(members, [&](std::size_t i) {
    try {
      if (starts.empty()) {
        results[i] = train::finetune_member(p, std::nullopt, {1.0, 1.0, 1.0, 1.0, 1.0}, {}, {rows, &coll},
                                            r.settler, seed + i);
      } else {
        const auto& s = starts[i];
        results[i] = train::finetune_member(p, s.model, train::term_weights_from_metadata(s.metadata),
                                            train::weights_from_metadata(s.metadata), {rows, &coll}, r.settler,
                                            s.model.seed);
      }
    } catch (const Error& e) {
      spdlog::warn("finetune member {} failed: {}", i, e.what());
    }
  });
  fs::create_directories(dir);
  std::size_t ok = 0;
  std::vector<std::pair<std::size_t, const train::StageResult*>> hist;
  for (std::size_t i = 0; i < members; ++i) {
    if (!results[i] || results[i]->aborted) continue;
    ++ok;
    auto meta = train::stage_metadata(*results[i], p.variant);
    meta["member"] = i;
    meta["pipeline"] = starts.empty() ? "finetune_only" : "two_stage";
    const fs::path path = dir / member_file(i);
    nn::save_model(path, results[i]->model, meta);
    r.outputs.push_back(path);
    hist.emplace_back(i, &*results[i]);
  }
  require_survivors(ok, members);
  const fs::path h = dir / "finetune_history.csv";
  write_history(h, hist);
  r.outputs.push_back(h);
  *r.out << "fine-tuned " << ok << " of " << members << " members into " << dir.string() << "\n";
}

void write_prediction(Run& r, const fs::path& out, const io::CsvTable& table, const mech::TrajectoryDataset& traj,
                      double threshold) {
  io::write_csv(out, table);
  r.outputs.push_back(out);
  if (has_truth(traj)) {
    const auto report = io::evaluate_tables(table, io::trajectory_table(traj), threshold);
    const fs::path m = metrics_path(out);
    write_json(m, report.to_json());
    r.outputs.push_back(m);
    if (report.mean) {
      for (const auto& v : report.mean->variables) {
        *r.out << "ensemble mean " << v.name << ": rmse " << v.rmse << " m, max " << v.max_abs << " m\n";
      }
    }
  }
}

void cmd_simulate(Run& r, const fs::path& models, const fs::path& trajectory, const fs::path& out, std::size_t steps,
                  const std::string& from, double threshold) {
  const auto loaded = load_members(models);
  const auto traj = limit_steps(io::read_trajectory(trajectory), steps);
  const auto& p0 = traj.points.front();
  SettlerState x0(p0.h_hp, p0.h_dp);
  if (from == "truth") {
    if (!p0.truth) fail(ErrorCategory::config, "--from truth needs a trajectory with truth columns");
    x0 = SettlerState(p0.truth->h_hp, p0.truth->h_dp);
  } else if (from != "measured") {
    fail(ErrorCategory::config, "--from must be measured or truth");
  }
  std::vector<double> q;
  for (std::size_t k = 0; k + 1 < traj.points.size(); ++k) q.push_back(traj.points[k].q_in);
  const auto roll = estimate::chain_forward(loaded.ptrs, x0, q, r.settler);
  const double hs = r.settler.scaling.h_scale;

  io::CsvTable t;
  t.header = {"member", "tau_s", "h_hp_m", "h_dp_m", "true_h_hp_m", "true_h_dp_m"};
  auto emit = [&](int member, const std::vector<estimate::Vec2>& xs) {
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto& p = traj.points[k];
      t.rows.push_back({static_cast<double>(member), p.tau, xs[k](0) * hs, xs[k](1) * hs, truth_or_nan(p, true),
                        truth_or_nan(p, false)});
    }
  };
  for (std::size_t i = 0; i < roll.members.size(); ++i) emit(static_cast<int>(i), roll.members[i]);
  emit(-1, roll.mean);
  write_prediction(r, out, t, traj, threshold);
}

void cmd_estimate(Run& r, const fs::path& models, const fs::path& trajectory, const fs::path& out, std::size_t steps,
                  std::size_t search, std::uint64_t seed, const std::string& hp_box, const std::string& dp_box,
                  double threshold) {
  const auto loaded = load_members(models);
  const auto traj = limit_steps(io::read_trajectory(trajectory), steps);
  const auto cfg = estimate::FilterConfig::from(r.file);
  std::vector<estimate::FilterInput> inputs;
  for (const auto& p : traj.points) inputs.push_back({p.tau, p.q_in, FlowMeasurement(p.q_bot, p.q_top)});
  const auto& p0 = traj.points.front();
  const Interval hp = parse_box(hp_box, r.settler.bounds.h_hp.extrapolation, "--hp-box");
  const Interval dp = parse_box(dp_box, r.settler.bounds.h_dp.extrapolation, "--dp-box");
  const SettlerState x0 = estimate::initial_state_search(loaded.ptrs, FlowMeasurement(p0.q_bot, p0.q_top), p0.q_in,
                                                         search, seed, hp, dp);
  r.seeds["search"] = seed;
  *r.out << "initial state: h_hp " << x0.h_hp << " m, h_dp " << x0.h_dp << " m\n";
  const std::vector<SettlerState> initial(loaded.ptrs.size(), x0);
  const auto run = estimate::run_filter(loaded.ptrs, inputs, initial, cfg, r.settler);
  const double hs = r.settler.scaling.h_scale;
  const double nan = std::nan("");

  io::CsvTable t;
  t.header = {"member", "tau_s",       "h_hp_m",      "h_dp_m", "var_h_hp_m2", "var_h_dp_m2",
              "update_skipped", "true_h_hp_m", "true_h_dp_m"};
  for (std::size_t i = 0; i < run.members.size(); ++i) {
    const auto& steps_i = run.members[i].steps;
    for (std::size_t k = 0; k < steps_i.size(); ++k) {
      const auto& s = steps_i[k];
      const auto& p = traj.points[k];
      t.rows.push_back({static_cast<double>(i), s.tau, s.x_post(0) * hs, s.x_post(1) * hs, s.P(0, 0) * hs * hs,
                        s.P(1, 1) * hs * hs, s.update_skipped ? 1.0 : 0.0, truth_or_nan(p, true),
                        truth_or_nan(p, false)});
    }
  }
  for (std::size_t k = 0; k < run.mean.size(); ++k) {
    const auto& p = traj.points[k];
    t.rows.push_back({-1.0, run.tau[k], run.mean[k](0) * hs, run.mean[k](1) * hs, nan, nan, nan,
                      truth_or_nan(p, true), truth_or_nan(p, false)});
  }
  write_prediction(r, out, t, traj, threshold);
}

void cmd_outlet_train(Run& r, const fs::path& train_csv, const fs::path& out, std::uint64_t seed,
                      std::size_t max_epochs, std::size_t patience) {
  const auto t = io::read_csv(train_csv);
  const auto avg = t.column("avg_h_dp_m");
  const auto outlet = t.column("outlet_h_dp_m");
  estimate::OutletDpzOptions opts;
  opts.seed = seed;
  opts.max_epochs = max_epochs;
  opts.patience = patience;
  const auto res = estimate::outlet_dpz_train(avg, outlet, opts);
  nlohmann::json meta{{"epochs_run", res.epochs_run},
                      {"best_epoch", res.best_epoch},
                      {"best_validation_rmse_m", res.best_validation_rmse},
                      {"early_stopping", res.early_stopping}};
  nn::save_model(out, res.model, meta);
  r.outputs.push_back(out);
  r.seeds["split"] = seed;
  *r.out << "outlet-dpz: " << res.epochs_run << " epochs, best validation rmse " << res.best_validation_rmse
         << " m at epoch " << res.best_epoch << "\n";
}

void cmd_outlet_predict(Run& r, const fs::path& input, const fs::path& model, const fs::path& out) {
  const auto t = io::read_csv(input);
  const auto avg = t.column("avg_h_dp_m");
  const auto m = nn::load_model(model);
  const auto pred = estimate::outlet_dpz_predict(m.model, avg);
  io::CsvTable o;
  o.header = {"avg_h_dp_m", "outlet_h_dp_m", "extrapolated"};
  for (std::size_t i = 0; i < avg.size(); ++i) o.rows.push_back({avg[i], pred.h_dp[i], pred.extrapolated[i] ? 1.0 : 0.0});
  io::write_csv(out, o);
  r.outputs.push_back(out);
}

void cmd_evaluate(Run& r, const fs::path& pred, const fs::path& truth, const fs::path& out, double threshold) {
  const auto report = io::evaluate_tables(io::read_csv(pred), io::read_csv(truth), threshold);
  write_json(out, report.to_json());
  r.outputs.push_back(out);
  if (report.mean) {
    for (const auto& v : report.mean->variables) *r.out << v.name << " rmse " << v.rmse << "\n";
  }
}

void cmd_preprocess(Run& r, const fs::path& in, const fs::path& out, double max_gap) {
  const auto res = io::preprocess(io::read_csv(in), {max_gap});
  io::write_csv(out, res.table);
  r.outputs.push_back(out);
  *r.out << "preprocessed " << res.table.rows.size() << " points, " << res.flagged_points << " flagged, "
         << res.dropped.size() << " channels dropped\n";
}

void cmd_plot(Run& r, const fs::path& run_dir, const fs::path& out) {
  const auto files = io::plot_run(run_dir, out);
  r.outputs.insert(r.outputs.end(), files.begin(), files.end());
  *r.out << "wrote " << files.size() << " plot files to " << out.string() << "\n";
}

int cmd_rerun(const fs::path& manifest_path, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const io::Manifest m = io::read_manifest(manifest_path);
  fs::path dir = out_dir.empty() ? fs::temp_directory_path() / ("settler-rerun-" + m.config_sha256.substr(0, 12))
                                 : fs::path(out_dir);
  fs::create_directories(dir);
  const fs::path new_out = m.out_is_dir ? dir : dir / fs::path(m.out_arg).filename();

  std::vector<std::string> args;
  for (std::size_t i = 0; i < m.argv.size(); ++i) {
    const std::string& a = m.argv[i];
    if (a == "--out" || a == "--config" || a == "--kernels" || a == "--threads") {
      ++i;
      continue;
    }
    if (a.rfind("--out=", 0) == 0 || a.rfind("--config=", 0) == 0 || a.rfind("--kernels=", 0) == 0 ||
        a.rfind("--threads=", 0) == 0) {
      continue;
    }
    args.push_back(a);
  }
  args.insert(args.end(), {"--out", new_out.string(), "--kernels", m.isa, "--threads", std::to_string(m.threads)});
  if (!m.config_text.empty()) {
    const fs::path cfg = dir / ".rerun-config.ini";
    write_file_atomic(cfg, m.config_text);
    args.insert(args.end(), {"--config", cfg.string()});
  }
  const int code = run_cli(args, out, err);
  if (code != 0) return code;

  std::size_t mismatches = 0;
  for (const auto& rec : m.outputs) {
    const fs::path p = dir / rec.path;
    std::string h;
    std::error_code ec;
    if (fs::exists(p, ec)) h = io::file_sha256(p);
    const bool same = h == rec.sha256;
    mismatches += same ? 0 : 1;
    out << (same ? "match    " : "MISMATCH ") << rec.path << "\n";
  }
  if (mismatches > 0) {
    fail(ErrorCategory::reproducibility, std::to_string(mismatches) + " of " + std::to_string(m.outputs.size()) +
                                             " outputs differ from the manifest");
  }
  out << "all " << m.outputs.size() << " outputs reproduced bit-identically\n";
  return 0;
}

void setup_logging(const std::string& level) {
  static bool once = [] {
    auto logger = spdlog::stderr_color_mt("settler");
    spdlog::set_default_logger(logger);
    return true;
  }();
  (void)once;
  const auto lvl = spdlog::level::from_str(level);
  if (lvl == spdlog::level::off && level != "off") fail(ErrorCategory::config, "unknown --log-level " + level);
  spdlog::set_level(lvl);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Gravity settler surrogate: data generation, PINN training, rollout and state estimation.\n"
               "Environment: SETTLER_CONFIG (config path), SETTLER_THREADS (worker threads),\n"
               "SETTLER_KERNELS (scalar | avx2 | auto).\n"
               "Exit codes: 0 ok, 2 config, 3 domain, 4 singularity, 5 divergence, 6 parse, 7 io,\n"
               "8 numeric, 9 reproducibility mismatch, 1 internal.",
               "settler"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", SETTLER_VERSION);
  std::string config_path, kernels, log_level = "warn";
  std::size_t threads = 0;
  app.add_option("--config", config_path, "INI configuration file (default $SETTLER_CONFIG, then built-ins)");
  app.add_option("--threads", threads, "worker threads (default $SETTLER_THREADS or all cores)");
  app.add_option("--kernels", kernels, "dense kernels: scalar | avx2 | auto (default $SETTLER_KERNELS, then auto)")->check(CLI::IsMember({"scalar", "avx2", "auto"}));
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error | off");

  std::string out_path;
  std::uint64_t seed = 1;

  auto* gen = app.add_subcommand("generate-data", "simulate LHS pretraining segments");
  std::size_t segments = 1000;
  gen->add_option("--segments", segments, "number of 1 s segments");
  gen->add_option("--seed", seed, "LHS seed");
  gen->add_option("--out", out_path, "output directory")->required();

  auto* twin = app.add_subcommand("make-twin", "synthetic experiment-shaped trajectory");
  std::string schedule;
  double noise_h = 0.0, noise_q = 0.0;
  bool detections = false;
  std::size_t duration = 0;
  twin->add_option("--schedule", schedule, "T1..T4 or a CSV with hold_s,q_in_m3s")->required();
  twin->add_option("--noise-h", noise_h, "height noise sigma [m]");
  twin->add_option("--noise-q", noise_q, "flow noise sigma [m^3/s]");
  twin->add_flag("--detections", detections, "emit the eight camera-window heights");
  twin->add_option("--duration", duration, "truncate to this many seconds (0 = whole schedule)");
  twin->add_option("--seed", seed, "noise seed");
  twin->add_option("--out", out_path, "output trajectory CSV")->required();

  std::string data, init, variant, models, trajectory;
  std::size_t members = 40;

  auto* pre = app.add_subcommand("pretrain", "pretrain an ensemble on simulated segments");
  pre->add_option("--data", data, "directory from generate-data or its segments.csv")->required();
  pre->add_option("--members", members, "ensemble size");
  pre->add_option("--seed", seed, "seed of member 0; member i uses seed + i");
  pre->add_option("--variant", variant, "pinn | vnn (default from config)");
  pre->add_option("--out", out_path, "model directory")->required();

  auto* fine = app.add_subcommand("finetune", "fine-tune on an experiment-shaped trajectory");
  fine->add_option("--data", data, "trajectory CSV")->required();
  fine->add_option("--init", init, "pretrained model directory (omit for finetune-only)");
  fine->add_option("--members", members, "ensemble size without --init");
  fine->add_option("--seed", seed, "seed of member 0 without --init");
  fine->add_option("--variant", variant, "pinn | vnn without --init");
  fine->add_option("--out", out_path, "model directory")->required();

  std::size_t steps = 0;
  double threshold = 0.005;
  std::string from = "measured";
  auto* sim = app.add_subcommand("simulate", "open-loop chained rollout of an ensemble");
  sim->add_option("--models", models, "model directory")->required();
  sim->add_option("--trajectory", trajectory, "trajectory CSV (q_in schedule, initial heights)")->required();
  sim->add_option("--steps", steps, "use only the first N samples (0 = all)");
  sim->add_option("--from", from, "initial state: measured | truth");
  sim->add_option("--threshold", threshold, "convergence threshold for the metrics [m]");
  sim->add_option("--out", out_path, "long CSV, member -1 is the ensemble mean")->required();

  std::size_t search = 100;
  std::string hp_box, dp_box;
  auto* est = app.add_subcommand("estimate", "ensemble EKF from outlet flow measurements");
  est->add_option("--models", models, "model directory")->required();
  est->add_option("--trajectory", trajectory, "trajectory CSV with q_in and outlet flows")->required();
  est->add_option("--steps", steps, "use only the first N samples (0 = all)");
  est->add_option("--search", search, "initial-state candidates");
  est->add_option("--seed", seed, "candidate sampling seed");
  est->add_option("--hp-box", hp_box, "initial h_hp search box 'lo,hi' [m]");
  est->add_option("--dp-box", dp_box, "initial h_dp search box 'lo,hi' [m]");
  est->add_option("--threshold", threshold, "convergence threshold for the metrics [m]");
  est->add_option("--out", out_path, "long CSV, member -1 is the ensemble mean")->required();

  std::string train_csv, predict_csv, model_path;
  std::size_t max_epochs = 1000, patience = 30;
  auto* odpz = app.add_subcommand("outlet-dpz", "average-to-outlet DPZ height network");
  auto* o_train = odpz->add_option("--train", train_csv, "CSV with avg_h_dp_m,outlet_h_dp_m");
  auto* o_pred = odpz->add_option("--predict", predict_csv, "CSV with avg_h_dp_m");
  o_train->excludes(o_pred);
  odpz->add_option("--model", model_path, "trained model for --predict");
  odpz->add_option("--seed", seed, "validation split and initialization seed");
  odpz->add_option("--max-epochs", max_epochs, "epoch limit");
  odpz->add_option("--patience", patience, "early-stopping patience");
  odpz->add_option("--out", out_path, "model (.snn) for --train, CSV for --predict")->required();

  std::string pred, truth;
  auto* eval = app.add_subcommand("evaluate", "metrics report of a prediction against truth");
  eval->add_option("--pred", pred, "long prediction CSV")->required();
  eval->add_option("--truth", truth, "trajectory CSV")->required();
  eval->add_option("--threshold", threshold, "convergence threshold [m]");
  eval->add_option("--out", out_path, "JSON report")->required();

  std::string run_dir;
  auto* plot = app.add_subcommand("plot", "per-figure CSV and SVG from prediction CSVs");
  plot->add_option("--run", run_dir, "directory with prediction CSVs")->required();
  plot->add_option("--out", out_path, "output directory")->required();

  std::string in_path;
  double max_gap = 2.0;
  auto* prep = app.add_subcommand("preprocess", "resample a raw trajectory onto a 1 s grid");
  prep->add_option("--in", in_path, "raw CSV with tau_s and channels")->required();
  prep->add_option("--max-gap", max_gap, "flag interpolation across gaps longer than this [s]");
  prep->add_option("--out", out_path, "resampled CSV")->required();

  std::string manifest, out_dir;
  auto* rerun = app.add_subcommand("rerun", "repeat a run from its manifest and compare output hashes");
  rerun->add_option("--manifest", manifest, "manifest.json of the original run")->required();
  rerun->add_option("--out-dir", out_dir, "where to write the repeated outputs");

  auto* defcfg = app.add_subcommand("default-config", "print the default configuration");
  defcfg->add_option("--out", out_path, "write to a file instead of stdout");

  std::vector<const char*> argv{"settler"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : exit_code(ErrorCategory::config);
  }

  try {
    setup_logging(log_level);
    if (threads > 0) setenv("SETTLER_THREADS", std::to_string(threads).c_str(), 1);
    if (kernels == "scalar") nn::kernels::set_isa(nn::kernels::Isa::scalar);
    if (kernels == "avx2") nn::kernels::set_isa(nn::kernels::Isa::avx2);
    if (kernels == "auto") {
      nn::kernels::set_isa(nn::kernels::avx2_supported() ? nn::kernels::Isa::avx2 : nn::kernels::Isa::scalar);
    }

    if (defcfg->parsed()) {
      if (out_path.empty()) {
        out << default_config_text();
      } else {
        write_file_atomic(out_path, default_config_text());
      }
      return 0;
    }
    if (rerun->parsed()) return cmd_rerun(manifest, out_dir, out, err);

    Run r;
    r.file = resolve_config(config_path);
    r.settler = settler_config_from(r.file);
    r.out = &out;
    bool out_is_dir = false;
    if (gen->parsed()) {
      cmd_generate_data(r, segments, seed, out_path);
      out_is_dir = true;
    } else if (twin->parsed()) {
      cmd_make_twin(r, schedule, noise_h, noise_q, detections, seed, duration, out_path);
    } else if (pre->parsed()) {
      cmd_pretrain(r, data, members, seed, out_path, variant);
      out_is_dir = true;
    } else if (fine->parsed()) {
      cmd_finetune(r, data, init, members, seed, out_path, variant);
      out_is_dir = true;
    } else if (sim->parsed()) {
      cmd_simulate(r, models, trajectory, out_path, steps, from, threshold);
    } else if (est->parsed()) {
      cmd_estimate(r, models, trajectory, out_path, steps, search, seed, hp_box, dp_box, threshold);
    } else if (odpz->parsed()) {
      if (!train_csv.empty()) {
        cmd_outlet_train(r, train_csv, out_path, seed, max_epochs, patience);
      } else if (!predict_csv.empty()) {
        if (model_path.empty()) fail(ErrorCategory::config, "outlet-dpz --predict needs --model");
        cmd_outlet_predict(r, predict_csv, model_path, out_path);
      } else {
        fail(ErrorCategory::config, "outlet-dpz needs --train or --predict");
      }
    } else if (eval->parsed()) {
      cmd_evaluate(r, pred, truth, out_path, threshold);
    } else if (plot->parsed()) {
      cmd_plot(r, run_dir, out_path);
      out_is_dir = true;
    } else if (prep->parsed()) {
      cmd_preprocess(r, in_path, out_path, max_gap);
    }

    io::Manifest m;
    m.version = SETTLER_VERSION;
    m.argv = absolutize_inputs(args);
    m.out_arg = fs::absolute(out_path).lexically_normal().string();
    m.out_is_dir = out_is_dir;
    m.config_text = r.file.text();
    m.config_sha256 = sha256_hex(m.config_text);
    m.seeds = r.seeds;
    m.isa = std::string(nn::kernels::to_string(nn::kernels::active_isa()));
    m.threads = worker_count();
    m.outputs = io::hash_outputs(m.out_base(), r.outputs);
    io::write_manifest(io::Manifest::location(m.out_arg, out_is_dir), m);
    return 0;
  } catch (const Error& e) {
    err << "settler: error [" << to_string(e.category()) << "]: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    err << "settler: error [internal]: " << e.what() << "\n";
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args) { return run_cli(args, std::cout, std::cerr); }

}  // namespace settler::cli
