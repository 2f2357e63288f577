#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "settler/nn/mlp.hpp"

namespace settler::estimate {

struct OutletDpzOptions {
  std::size_t max_epochs = 1000;
  std::size_t patience = 30;
  double lr = 1e-3;
  std::size_t batch_size = 16;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct OutletDpzResult {
  nn::Mlp model;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation_rmse = 0.0;  // metres
  bool early_stopping = true;         // false when the validation set is shorter than the patience window
  std::vector<double> train_rmse;     // metres, per epoch
  std::vector<double> validation_rmse;
};

/// Regression avg DPZ height -> outlet DPZ height (metres), dims [1, 16, 8, 1],
/// tanh hidden, identity head. Mini-batch Adam with early stopping on a
/// seeded random validation split; the best-validation parameters are kept.
/// Needs at least 50 pairs.
OutletDpzResult outlet_dpz_train(std::span<const double> avg_h_dp, std::span<const double> outlet_h_dp,
                                 const OutletDpzOptions& options = {});

struct OutletDpzPrediction {
  std::vector<double> h_dp;
  std::vector<bool> extrapolated;  // input outside the training range
};

OutletDpzPrediction outlet_dpz_predict(const nn::Mlp& model, std::span<const double> avg_h_dp);

}  // namespace settler::estimate
