#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "settler/core/config.hpp"
#include "settler/mech/dataset.hpp"
#include "settler/nn/mlp.hpp"
#include "settler/train/idw.hpp"
#include "settler/train/losses.hpp"

namespace settler::train {

enum class Stage { pretrain, finetune };
std::string_view to_string(Stage s);

struct TrainSchedule {
  Stage stage = Stage::pretrain;
  std::size_t adam_epochs = 2000;
  double adam_lr = 1e-3;
  std::size_t lbfgs_iters = 300;
  bool idw_enabled = true;
  std::size_t idw_period = 5;
  std::size_t n_out = 6;

  static TrainSchedule pretrain_defaults();
  static TrainSchedule finetune_defaults();
  void validate() const;
};

struct EpochRecord {
  std::string phase;  // "adam" or "lbfgs"
  std::size_t epoch = 0;
  LossValue loss;
  LossWeights weights;
};

struct StageResult {
  nn::Mlp model;
  std::vector<EpochRecord> history;
  LossWeights weights;                       // values in force at the end of the stage
  std::array<double, kTermCount> term_weights{1.0, 1.0, 1.0, 1.0, 1.0};
  std::size_t skipped_steps = 0;
  bool aborted = false;
  std::string diagnostic;
};

struct StageData {
  std::span<const mech::SampleRow> rows;
  const CollocationSet* collocation = nullptr;
};

/// Adam for adam_epochs (IDW every idw_period epochs when enabled), then
/// L-BFGS with the weights frozen. `physics` false trains the purely
/// data-driven variant (lambda_2 = 0, no collocation residuals).
StageResult train_stage(nn::Mlp model, const TrainSchedule& schedule, const StageData& data,
                        const SettlerConfig& config, const LossWeights& initial_weights, bool physics = true,
                        const std::array<double, kTermCount>& initial_term_weights = {1.0, 1.0, 1.0, 1.0, 1.0});

enum class Variant { pinn, vnn };
enum class Pipeline { two_stage, finetune_only };
std::string_view to_string(Variant v);
std::string_view to_string(Pipeline p);
Variant variant_from_string(std::string_view s);
Pipeline pipeline_from_string(std::string_view s);

struct PipelineConfig {
  Variant variant = Variant::pinn;
  Pipeline pipeline = Pipeline::two_stage;
  TrainSchedule pretrain = TrainSchedule::pretrain_defaults();
  TrainSchedule finetune = TrainSchedule::finetune_defaults();
  std::size_t hidden_width = 32;
  std::size_t hidden_layers = 2;
  nn::OutputMapping output_mapping = nn::OutputMapping::residual;

  static PipelineConfig from(const ConfigFile& file);
};

struct MemberResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  nn::Mlp model;
  std::optional<StageResult> pretrain;
  std::optional<StageResult> finetune;
};

/// Initial network of one member: the surrogate shape for the variant.
nn::Mlp initial_model(const PipelineConfig& pipeline, const SettlerConfig& config, std::uint64_t seed);

/// Pretraining only (both variants).
StageResult pretrain_member(const PipelineConfig& pipeline, const StageData& sim, const SettlerConfig& config,
                            std::uint64_t seed);

/// Fine-tuning from `start` (pretrained) or a fresh network when `start` is
/// empty. Weights come from the pretraining stage with lambda_z = 0.
StageResult finetune_member(const PipelineConfig& pipeline, std::optional<nn::Mlp> start,
                            const std::array<double, kTermCount>& pretrain_term_weights,
                            const LossWeights& pretrain_weights, const StageData& experiment,
                            const SettlerConfig& config, std::uint64_t seed);

/// Members differ only in their seed (base_seed + index) and train
/// concurrently. Fails with a divergence error when fewer than 80 % survive.
std::vector<MemberResult> train_ensemble(std::size_t n_members, const PipelineConfig& pipeline, const StageData& sim,
                                         const StageData& experiment, const SettlerConfig& config,
                                         std::uint64_t base_seed);

/// JSON-friendly metadata stored next to a trained network.
nlohmann::json stage_metadata(const StageResult& stage, Variant variant);
LossWeights weights_from_metadata(const nlohmann::json& meta);
std::array<double, kTermCount> term_weights_from_metadata(const nlohmann::json& meta);

}  // namespace settler::train
