#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "settler/core/types.hpp"

namespace settler::nn {

enum class Activation { tanh, sigmoid, identity };

std::string_view to_string(Activation a);
/// Throws a parse error for unknown names.
Activation activation_from_string(std::string_view name);

enum class OutputRole { height, outlet_flow, internal_flow, generic };

std::string_view to_string(OutputRole r);
OutputRole output_role_from_string(std::string_view name);

/// Output k is offset + span * head(z_k).
struct OutputChannel {
  std::string name;
  OutputRole role = OutputRole::generic;
  double offset = 0.0;
  double span = 1.0;
  /// When >= 0, skip_gain * x[skip_input] is added to the mapped output.
  int skip_input = -1;
  double skip_gain = 0.0;
};

/// Per-sample intermediates of one forward pass, optionally with a tangent.
struct Trace {
  std::vector<std::vector<double>> a;     // a[0] = normalized input, a[L] = mapped output
  std::vector<std::vector<double>> z;     // pre-activations, z[l] feeds a[l + 1]
  std::vector<std::vector<double>> adot;  // tangents of a (empty without tangent)
  std::vector<std::vector<double>> zdot;
  bool has_tangent = false;

  std::span<const double> output() const { return a.back(); }
  std::span<const double> output_tangent() const { return adot.back(); }
};

/// Dense feed-forward network. Parameters are stored flat, layer by layer,
/// each layer as a row-major (out x in) weight block followed by its bias.
/// Inputs are physical values; the stored bounds map them onto [-1, 1].
class Mlp {
 public:
  Mlp() = default;
  /// Zero parameters, inputs bounded by [-1, 1], unit output channels.
  Mlp(std::vector<std::size_t> dims, Activation hidden, Activation head);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t n_in() const { return dims_.front(); }
  std::size_t n_out() const { return dims_.back(); }
  std::size_t layer_count() const { return dims_.size() - 1; }
  std::size_t param_count() const { return params_.size(); }
  Activation hidden() const { return hidden_; }
  Activation head() const { return head_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }
  std::size_t bias_offset(std::size_t layer) const { return offsets_[layer] + dims_[layer] * dims_[layer + 1]; }

  const std::vector<Interval>& input_bounds() const { return input_bounds_; }
  void set_input_bounds(std::vector<Interval> bounds);
  const std::vector<OutputChannel>& outputs() const { return outputs_; }
  void set_outputs(std::vector<OutputChannel> outputs);

  std::uint64_t seed = 0;
  std::string stage = "init";
  ScalingConstants scaling;

  /// Throws on inconsistent shapes, bad bounds or non-finite parameters.
  void validate() const;

  /// Mapped outputs. Rejects non-finite inputs with a numeric error.
  void forward(std::span<const double> x, std::span<double> y) const;
  std::vector<double> forward(std::span<const double> x) const;
  /// Head activations before the output map.
  std::vector<double> forward_raw(std::span<const double> x) const;

  /// Forward pass recording intermediates; `dx` (physical units, may be
  /// empty) seeds a forward-mode tangent.
  void forward_trace(std::span<const double> x, std::span<const double> dx, Trace& trace) const;

  /// Directional derivative of the outputs along `dx`.
  std::vector<double> jvp(std::span<const double> x, std::span<const double> dx) const;
  /// d(output)/d(input 0), input 0 being time in seconds.
  std::vector<double> jvp_time(std::span<const double> x) const;
  /// Row-major (rows x cols) Jacobian, one tangent pass per column.
  std::vector<double> input_jacobian(std::span<const double> x, std::span<const std::size_t> rows,
                                     std::span<const std::size_t> cols) const;
  /// w^T J for an output cotangent w.
  std::vector<double> input_vjp(std::span<const double> x, std::span<const double> w) const;

  /// Reverse sweep through `trace`. `y_bar` is the cotangent of the outputs,
  /// `ydot_bar` (needs a traced tangent, may be empty) that of the output
  /// tangents. Accumulates into `grad` (size param_count, may be empty) and
  /// `x_bar` (physical inputs, may be empty).
  void backward(const Trace& trace, std::span<const double> y_bar, std::span<const double> ydot_bar,
                std::span<double> grad, std::span<double> x_bar = {}) const;

 private:
  void check_input(std::span<const double> x) const;

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  Activation hidden_ = Activation::tanh;
  Activation head_ = Activation::sigmoid;
  std::vector<double> params_;
  std::vector<Interval> input_bounds_;
  std::vector<OutputChannel> outputs_;
};

/// Weights ~ Normal(0, 2 / (fan_in + fan_out)), biases zero.
/// Throws a config error for fewer than two dims or a zero entry.
Mlp xavier_init(std::vector<std::size_t> dims, std::uint64_t seed, Activation hidden = Activation::tanh,
                Activation head = Activation::sigmoid);

namespace io_index {
inline constexpr std::size_t t = 0;
inline constexpr std::size_t h_hp0 = 1;
inline constexpr std::size_t h_dp0 = 2;
inline constexpr std::size_t q_in = 3;

inline constexpr std::size_t h_hp = 0;
inline constexpr std::size_t h_dp = 1;
inline constexpr std::size_t q_bot = 2;
inline constexpr std::size_t q_top = 3;
inline constexpr std::size_t q_c = 4;
inline constexpr std::size_t q_s = 5;
}  // namespace io_index

inline constexpr double kOutputMargin = 0.25;  // fraction of the range added on each side
inline constexpr double kResidualStep = 0.004;  // largest height change [m] the residual head can express

/// unit: the sigmoid value is the scaled quantity itself (heights over h_scale,
/// flows over q_scale). bounded: the sigmoid spans each channel's
/// extrapolation range widened by kOutputMargin. residual: flows as in
/// bounded, heights are h0 plus a sigmoid increment within +-kResidualStep.
enum class OutputMapping { unit, bounded, residual };
std::string_view to_string(OutputMapping m);
OutputMapping output_mapping_from_string(std::string_view name);

/// Surrogate with inputs (t [s], h_hp0 [m], h_dp0 [m], q_in [m^3/s]) and
/// outputs (h_hp, h_dp, q_bot, q_top[, q_c, q_s]) in scaled units. With
/// `internal_flows` false the network has four outputs.
Mlp make_surrogate(const SettlerConfig& config, std::uint64_t seed, bool internal_flows = true,
                   std::size_t hidden_width = 32, std::size_t hidden_layers = 2,
                   OutputMapping mapping = OutputMapping::bounded);

}  // namespace settler::nn
