#include "cli.hpp"

namespace settler::cli {

std::string_view default_config_text() {
  return R"(; settler configuration. Every key is optional; missing keys take the
; values shown here. Lengths in m, flows in m^3/s, times in s.

[geometry]
length = 1.0
radius = 0.1

[properties]
rho_heavy = 996.0
rho_light = 825.0
eta_heavy = 0.00082
gamma = 0.0082

[dispersion]
eps_in = 0.5
eps_dp = 0.9
d32_in = 0.0005
sigma_selfsimilar = 0.32
n_swarm = 2.0

[scaling]
h_scale = 0.2
q_scale = 0.001

[bounds]
h_hp_interp_lb = 0.071
h_hp_interp_ub = 0.091
h_hp_extrap_lb = 0.067
h_hp_extrap_ub = 0.100
h_dp_interp_lb = 0.023
h_dp_interp_ub = 0.059
h_dp_extrap_lb = 0.019
h_dp_extrap_ub = 0.069
q_in_interp_lb = 0.000245
q_in_interp_ub = 0.000563
q_in_extrap_lb = 0.000175
q_in_extrap_ub = 0.000644
q_top_interp_lb = 0.000105
q_top_interp_ub = 0.000286
q_top_extrap_lb = 0.000069
q_top_extrap_ub = 0.000321
q_bot_interp_lb = 0.000117
q_bot_interp_ub = 0.000295
q_bot_extrap_lb = 0.000083
q_bot_extrap_ub = 0.000356

[submodel]
; constant | affine | saturating
variant = saturating
k_s = 0.015486037764384312
sed_exponent = 3.0
k_c = 0.011136504319436817
h_half = 0.4

[valve]
feed_fraction = 0.5
gain = 0.004
h_ref = 0.0851

[twin]
; start of the settling run that fixes the twin's initial steady state
h_hp0 = 0.08
h_dp0 = 0.04
settle_s = 3000
wedge = 0.6

[network]
hidden_width = 32
hidden_layers = 2
; residual | bounded | unit
output_mapping = residual

[training]
; pinn | vnn
variant = pinn

[collocation]
; pretraining; 0 means ten physics points and one initial-condition point per segment
n_physics = 0
n_init = 0
; fine-tuning
finetune_physics = 2000
finetune_init = 200

[pretrain]
adam_epochs = 2000
adam_lr = 0.001
lbfgs_iters = 300
idw_enabled = true
idw_period = 5

[finetune]
adam_epochs = 1000
adam_lr = 0.0001
lbfgs_iters = 200
idw_enabled = false
idw_period = 5

[filter]
p0_hp = 0.0001
p0_dp = 0.0001
r_sensor = 2.5e-7
w_attenuation = 100
max_condition = 1e12
clip_to_bounds = true
)";
}

}  // namespace settler::cli
