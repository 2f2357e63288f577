#include "settler/train/adam.hpp"

#include <cmath>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"

namespace settler::train {

bool adam_step(std::span<double> params, std::span<const double> grad, AdamState& s, const AdamOptions& o) {
  if (params.size() != grad.size()) fail(ErrorCategory::config, "adam: gradient size does not match parameters");
  for (double g : grad) {
    if (!std::isfinite(g)) {
      ++s.skipped;
      spdlog::warn("adam: non-finite gradient, step skipped ({} so far)", s.skipped);
      return false;
    }
  }
  if (s.m.size() != params.size()) {
    s.m.assign(params.size(), 0.0);
    s.v.assign(params.size(), 0.0);
  }
  ++s.step;
  const double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m[i] = o.beta1 * s.m[i] + (1.0 - o.beta1) * grad[i];
    s.v[i] = o.beta2 * s.v[i] + (1.0 - o.beta2) * grad[i] * grad[i];
    params[i] -= o.lr * (s.m[i] / c1) / (std::sqrt(s.v[i] / c2) + o.eps);
  }
  return true;
}

}  // namespace settler::train
