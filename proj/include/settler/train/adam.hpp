#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace settler::train {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
  std::size_t skipped = 0;  // steps rejected for non-finite gradients
};

/// One bias-corrected Adam update. A gradient with any non-finite entry
/// leaves parameters and moments untouched and bumps `skipped`; returns
/// whether the step was applied.
bool adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, const AdamOptions& options);

}  // namespace settler::train
