#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace settler::train {

struct LbfgsOptions {
  std::size_t max_iters = 300;
  std::size_t history = 10;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 25;
  double grad_tol = 1e-9;
};

/// f(x) with gradient written into `grad`.
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct LbfgsResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t iterations = 0;
  std::size_t evaluations = 0;
  std::vector<double> history;  // f after each accepted iterate, starting with f(x0)
  bool line_search_failed = false;
  std::string diagnostic;
};

/// Two-loop L-BFGS with a strong Wolfe line search. Returns the best point
/// seen, never a worse iterate than x0.
LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsOptions& options = {});

}  // namespace settler::train
