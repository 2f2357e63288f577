#include "settler/train/idw.hpp"

#include <algorithm>
#include <cmath>

#include "settler/core/error.hpp"

namespace settler::train {

double gradient_std(std::span<const double> grad) {
  if (grad.empty()) return 0.0;
  double mean = 0.0;
  for (double g : grad) mean += g;
  mean /= static_cast<double>(grad.size());
  double var = 0.0;
  for (double g : grad) var += (g - mean) * (g - mean);
  return std::sqrt(var / static_cast<double>(grad.size()));
}

std::vector<double> idw_update(std::span<const double> stds, std::span<const double> previous,
                               const IdwOptions& o) {
  if (stds.size() != previous.size()) fail(ErrorCategory::config, "idw: stds and previous weights differ in size");
  if (o.smoothing < 0.0 || o.smoothing >= 1.0 || !(o.min_weight > 0.0) || o.min_weight > o.max_weight) {
    fail(ErrorCategory::config, "idw: smoothing must be in [0, 1) and 0 < min_weight <= max_weight");
  }
  double max_std = 0.0;
  for (double s : stds) {
    if (std::isfinite(s)) max_std = std::max(max_std, s);
  }
  std::vector<double> w(previous.begin(), previous.end());
  for (std::size_t i = 0; i < stds.size(); ++i) {
    if (!(stds[i] > 0.0) || !std::isfinite(stds[i])) continue;
    const double target = max_std / stds[i];
    w[i] = std::clamp(o.smoothing * previous[i] + (1.0 - o.smoothing) * target, o.min_weight, o.max_weight);
  }
  return w;
}

LossWeights weights_from_terms(const std::array<double, kTermCount>& tw) {
  const double base = tw[init_cond];
  LossWeights w;
  w.lambda_1 = tw[data_meas] / base;
  w.lambda_z = tw[data_internal] / tw[data_meas];
  w.lambda_2 = tw[physics_ode] / base;
  w.lambda_g = tw[physics_alg] / tw[physics_ode];
  w.validate();
  return w;
}

}  // namespace settler::train
