#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "settler/core/types.hpp"
#include "settler/nn/mlp.hpp"

namespace settler::test {

/// Scratch directory unique to the test binary, emptied on creation.
inline std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("settler-test-" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Surrogate-shaped network that is affine in the physical inputs:
/// y_k = sum_j a[k][j] * x_j + c[k] (scaled outputs h_hp, h_dp, q_bot, q_top).
inline nn::Mlp affine_surrogate(const SettlerConfig& cfg, const std::array<std::array<double, 4>, 4>& a,
                                const std::array<double, 4>& c) {
  nn::Mlp m({4, 4}, nn::Activation::identity, nn::Activation::identity);
  const auto& b = cfg.bounds;
  m.set_input_bounds({Interval{0.0, 1.0}, b.h_hp.extrapolation, b.h_dp.extrapolation, b.q_in.extrapolation});
  m.set_outputs({{"h_hp", nn::OutputRole::height, 0.0, 1.0},
                 {"h_dp", nn::OutputRole::height, 0.0, 1.0},
                 {"q_bot", nn::OutputRole::outlet_flow, 0.0, 1.0},
                 {"q_top", nn::OutputRole::outlet_flow, 0.0, 1.0}});
  m.scaling = cfg.scaling;
  auto p = m.params();
  const auto& in = m.input_bounds();
  for (std::size_t k = 0; k < 4; ++k) {
    double bias = c[k];
    for (std::size_t j = 0; j < 4; ++j) {
      const double half = 0.5 * in[j].width();
      p[m.weight_offset(0) + k * 4 + j] = a[k][j] * half;
      bias += a[k][j] * in[j].mid();
    }
    p[m.bias_offset(0) + k] = bias;
  }
  return m;
}

/// Xavier network whose parameters are redrawn with magnitudes in [1e-3, 1]
/// and random signs.
inline nn::Mlp random_model(std::vector<std::size_t> dims, std::uint64_t seed,
                            nn::Activation head = nn::Activation::sigmoid) {
  nn::Mlp m = nn::xavier_init(dims, seed, nn::Activation::tanh, head);
  std::mt19937_64 rng(seed * 7919 + 1);
  std::uniform_real_distribution<double> mag(1e-3, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (double& w : m.params()) w = (sign(rng) ? 1.0 : -1.0) * mag(rng);
  std::vector<Interval> bounds;
  std::uniform_real_distribution<double> lo(-2.0, 0.0), width(0.5, 3.0);
  for (std::size_t i = 0; i < m.n_in(); ++i) {
    const double l = lo(rng);
    bounds.push_back({l, l + width(rng)});
  }
  m.set_input_bounds(bounds);
  return m;
}

}  // namespace settler::test
