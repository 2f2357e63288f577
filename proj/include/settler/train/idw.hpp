#pragma once

#include <array>
#include <span>
#include <vector>

#include "settler/train/losses.hpp"

namespace settler::train {

struct IdwOptions {
  double smoothing = 0.5;  // weight of the previous value
  double min_weight = 1e-3;
  double max_weight = 1e6;
};

/// Population standard deviation of a gradient vector's entries.
double gradient_std(std::span<const double> grad);

/// Inverse-ratio update: target_i = max_k std_k / std_i, blended as
/// smoothing * previous_i + (1 - smoothing) * target_i and clamped.
/// Terms with std_i == 0 keep their previous weight.
std::vector<double> idw_update(std::span<const double> stds, std::span<const double> previous,
                               const IdwOptions& options = {});

/// Maps per-term IDW weights onto the composite-loss weights, normalising by
/// the initial-condition weight so that term keeps weight 1:
///   lambda_1 = w_meas, lambda_z = w_int / w_meas,
///   lambda_2 = w_ode,  lambda_g = w_alg / w_ode.
LossWeights weights_from_terms(const std::array<double, kTermCount>& term_weights);

}  // namespace settler::train
