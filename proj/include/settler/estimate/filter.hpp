#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "settler/core/config.hpp"
#include "settler/core/types.hpp"
#include "settler/nn/mlp.hpp"

namespace settler::estimate {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

/// The filter works in the surrogate's scaled units: x = (h_hp, h_dp) / h_scale,
/// y = (q_bot, q_top) / q_scale.
struct FilterConfig {
  Mat2 P0 = Vec2(1e-4, 1e-4).asDiagonal();
  Mat2 R = Vec2(2.5e-7, 2.5e-7).asDiagonal();
  double w_attenuation = 100.0;
  double max_condition = 1e12;
  bool clip_to_bounds = true;

  static FilterConfig from(const ConfigFile& file);
  void validate() const;
};

struct FilterState {
  Vec2 x = Vec2::Zero();
  Mat2 P = Mat2::Zero();
  Mat2 W = Mat2::Zero();
  Mat2 R = Mat2::Zero();
  Mat2 K = Mat2::Zero();
};

/// Scaled-unit box the estimate is softly clipped to (extrapolation bounds).
struct StateBox {
  Interval h_hp;
  Interval h_dp;

  static StateBox extrapolation(const SettlerConfig& config);
  Vec2 clip(const Vec2& x, bool* clipped = nullptr) const;
};

/// Surrogate evaluated as transition (t = 1) or measurement (t = 0) model.
Vec2 transition(const nn::Mlp& model, const Vec2& x, double q_in);
/// dx_next/dx in scaled units.
Mat2 transition_jacobian(const nn::Mlp& model, const Vec2& x, double q_in);
Vec2 measurement(const nn::Mlp& model, const Vec2& x, double q_in);
Mat2 measurement_jacobian(const nn::Mlp& model, const Vec2& x, double q_in);

/// x <- f(x, u), P <- F P F^T + W. Numeric error for a non-finite Jacobian.
FilterState predict(const FilterState& state, const nn::Mlp& model, double q_in, const Mat2& W);

/// Sample covariance (n - 1) of the members' transition predictions from
/// the shared state, divided by `attenuation`. Config error for fewer than
/// two members.
Mat2 adaptive_W(std::span<const nn::Mlp* const> members, const Vec2& mean_state, double q_in, double attenuation);

/// (I - K H) P (I - K H)^T + K R K^T, symmetrised.
Mat2 joseph_update(const Mat2& P, const Mat2& K, const Mat2& H, const Mat2& R);

/// Largest over smallest absolute eigenvalue of a symmetric 2x2 matrix.
double condition_number(const Mat2& S);

struct UpdateResult {
  FilterState state;
  Vec2 y_pred = Vec2::Zero();
  bool skipped = false;
};

/// Measurement update with the surrogate at t = 0. Skipped (prediction
/// kept) when the innovation covariance is ill-conditioned.
UpdateResult update(const FilterState& predicted, const nn::Mlp& model, double q_in, const Vec2& y,
                    double max_condition = 1e12);

/// Uniform candidates in `box` (metres); returns the candidate whose
/// predicted t = 0 outflows (mean over `members`) best match y0 (m^3/s).
SettlerState initial_state_search(std::span<const nn::Mlp* const> members, const FlowMeasurement& y0, double q_in0,
                                  std::size_t n_samples, std::uint64_t seed, const Interval& h_hp_box,
                                  const Interval& h_dp_box);

/// One control/measurement sample at 1 s resolution, physical units.
struct FilterInput {
  double tau = 0.0;
  double q_in = 0.0;
  FlowMeasurement y;
};

struct StepRecord {
  double tau = 0.0;
  Vec2 x_prior = Vec2::Zero();
  Vec2 x_post = Vec2::Zero();
  Mat2 P = Mat2::Zero();
  Mat2 W = Mat2::Zero();
  Mat2 K = Mat2::Zero();
  Vec2 y_pred = Vec2::Zero();
  Vec2 y_meas = Vec2::Zero();
  double u = 0.0;
  bool update_skipped = false;
  bool clipped = false;
};

struct EstimationRun {
  std::vector<StepRecord> steps;
  bool failed = false;
  std::size_t failed_at = 0;
  std::string error;
};

struct EnsembleRun {
  std::vector<EstimationRun> members;
  std::vector<double> tau;
  std::vector<Vec2> mean;               // scaled units, over active members
  std::vector<std::size_t> active;      // members contributing at each step
};

/// Per-member filtering with a shared adaptive W from the ensemble-mean
/// estimate. `initial` holds one starting state per member (metres).
/// With one member `external_W` is used instead of the adaptive estimate.
EnsembleRun run_filter(std::span<const nn::Mlp* const> members, std::span<const FilterInput> inputs,
                       std::span<const SettlerState> initial, const FilterConfig& config, const SettlerConfig& settler,
                       const Mat2& external_W = Mat2::Zero());

struct Rollout {
  std::vector<std::vector<Vec2>> members;  // scaled units
  std::vector<Vec2> mean;
  std::vector<std::size_t> clipped_steps;  // per member
};

/// Open-loop chaining: x_{k+1} = f(x_k, u_k) from `initial` (metres), one
/// state per schedule entry plus the final one. States leaving the
/// extrapolation box are clipped and counted.
Rollout chain_forward(std::span<const nn::Mlp* const> members, const SettlerState& initial,
                      std::span<const double> q_in_schedule, const SettlerConfig& settler);

}  // namespace settler::estimate
