#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "settler/core/types.hpp"
#include "settler/mech/dataset.hpp"
#include "settler/nn/ad.hpp"
#include "settler/nn/mlp.hpp"

namespace settler::train {

/// Weights of the composite loss; the initial-condition term has weight 1.
struct LossWeights {
  double lambda_1 = 1.0;  // data
  double lambda_2 = 1.0;  // physics
  double lambda_g = 1.0;  // algebraic residual inside the physics term
  double lambda_z = 1.0;  // internal flows inside the data term

  void validate() const;
};

/// Collocation inputs in physical units. Physics points are (t, h_hp0,
/// h_dp0, q_in); init points are (h_hp0, h_dp0, q_in) evaluated at t = 0.
struct CollocationSet {
  std::vector<std::array<double, 4>> physics;
  std::vector<std::array<double, 3>> init;
};

/// LHS over the extrapolation box, t uniform in [0, 1].
CollocationSet sample_collocation(std::size_t n_physics, std::size_t n_init, const SettlerConfig& config,
                                  std::uint64_t seed);

/// Unweighted loss pieces, in the order used by the IDW balancing.
enum Term : std::size_t { data_meas = 0, data_internal, physics_ode, physics_alg, init_cond, kTermCount };

struct LossValue {
  std::array<double, kTermCount> terms{};
  double data = 0.0;     // data_meas + lambda_z * data_internal
  double physics = 0.0;  // lambda_g * physics_alg + physics_ode
  double init = 0.0;
  double total = 0.0;    // lambda_1 * data + lambda_2 * physics + init
};

LossValue combine(const std::array<double, kTermCount>& terms, const LossWeights& w);

struct LossProblem {
  const nn::Mlp* model = nullptr;
  std::span<const mech::SampleRow> rows;
  const CollocationSet* collocation = nullptr;
  std::size_t n_out = 6;
  bool physics = true;  // false for the purely data-driven variant
  const SettlerConfig* config = nullptr;
};

/// Data term pieces. Sums of squared scaled errors over (h_hp, h_dp, q_bot,
/// q_top) and (q_c, q_s), each divided by n_out * |rows|. Internal targets
/// are required (and read) only when n_out == 6.
std::array<double, 2> loss_data_terms(const nn::Mlp& model, std::span<const mech::SampleRow> rows, std::size_t n_out,
                                      const SettlerConfig& config);
double loss_data(const nn::Mlp& model, std::span<const mech::SampleRow> rows, std::size_t n_out, double lambda_z,
                 const SettlerConfig& config);

/// Per-point physics residuals in scaled units for one network evaluation:
/// algebraic residual and the two height-rate residuals. Exposed generically
/// so the exact expression is shared with the gradient code.
struct PhysicsResidual {
  nn::ad::Var alg, ode_hp, ode_dp;
};
PhysicsResidual physics_residual(const std::array<nn::ad::Var, 6>& out, const nn::ad::Var& dhp_dt,
                                 const nn::ad::Var& ddp_dt, double q_in, const SettlerConfig& config);

/// (physics_ode, physics_alg): sums of squared residuals divided by 3 |points|.
std::array<double, 2> loss_physics_terms(const nn::Mlp& model, const CollocationSet& set, const SettlerConfig& config);
double loss_physics(const nn::Mlp& model, const CollocationSet& set, double lambda_g, const SettlerConfig& config);

/// Sum over points of both squared scaled height errors at t = 0, over 2 |points|.
double loss_init(const nn::Mlp& model, const CollocationSet& set, const SettlerConfig& config);

/// Loss value with optional gradients. `total_grad` (size param_count) gets
/// the gradient of the weighted total; `term_grads` the gradient of each
/// unweighted term. Either may be empty.
LossValue evaluate_loss(const LossProblem& problem, const LossWeights& weights, std::span<double> total_grad,
                        std::span<std::vector<double>> term_grads = {});

}  // namespace settler::train
