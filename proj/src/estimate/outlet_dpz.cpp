#include "settler/estimate/outlet_dpz.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <limits>
#include <random>

#include <spdlog/spdlog.h>

#include "settler/core/error.hpp"
#include "settler/train/adam.hpp"

namespace settler::estimate {

namespace {

constexpr std::size_t kMinPairs = 50;

Interval padded_range(std::span<const double> v) {
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  Interval r{*lo, *hi};
  if (r.width() < 1e-9) r = {r.lb - 1e-3, r.ub + 1e-3};
  return r;
}

double rmse(const nn::Mlp& m, std::span<const double> x, std::span<const double> y,
            std::span<const std::size_t> idx) {
  if (idx.empty()) return 0.0;
  double s = 0.0;
  std::array<double, 1> in{};
  std::array<double, 1> out{};
  for (auto i : idx) {
    in[0] = x[i];
    m.forward(in, out);
    s += (out[0] - y[i]) * (out[0] - y[i]);
  }
  return std::sqrt(s / static_cast<double>(idx.size()));
}

}  // namespace

OutletDpzResult outlet_dpz_train(std::span<const double> x, std::span<const double> y, const OutletDpzOptions& o) {
  if (x.size() != y.size()) fail(ErrorCategory::config, "outlet-DPZ series differ in length");
  if (x.size() < kMinPairs) fail(ErrorCategory::config, "outlet-DPZ training needs at least 50 pairs");
  if (o.max_epochs == 0 || o.batch_size == 0) fail(ErrorCategory::config, "outlet-DPZ epochs and batch size must be >= 1");
  if (!(o.validation_fraction > 0.0 && o.validation_fraction < 1.0)) {
    fail(ErrorCategory::config, "outlet-DPZ validation fraction must be in (0, 1)");
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) fail(ErrorCategory::numeric, "non-finite outlet-DPZ sample");
  }

  std::mt19937_64 rng(o.seed);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::round(o.validation_fraction * x.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

  OutletDpzResult res;
  res.early_stopping = val.size() >= o.patience;
  if (!res.early_stopping) {
    spdlog::warn("outlet-DPZ: {} validation points is fewer than the patience window; early stopping disabled",
                 val.size());
  }

  nn::Mlp m = nn::xavier_init({1, 16, 8, 1}, o.seed, nn::Activation::tanh, nn::Activation::identity);
  std::vector<double> xt, yt;
  for (auto i : train) {
    xt.push_back(x[i]);
    yt.push_back(y[i]);
  }
  m.set_input_bounds({padded_range(xt)});
  const Interval yr = padded_range(yt);
  m.set_outputs({{"h_dp_outlet", nn::OutputRole::height, yr.mid(), 0.5 * yr.width()}});
  m.stage = "outlet_dpz";
  m.seed = o.seed;

  train::AdamState adam;
  const train::AdamOptions adam_opts{o.lr};
  std::vector<double> grad(m.param_count());
  nn::Trace tr;
  std::array<double, 1> in{};
  std::array<double, 1> ybar{};
  const double span = 0.5 * yr.width();

  std::vector<double> best_params(m.params().begin(), m.params().end());
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 0; epoch < o.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t start = 0; start < train.size(); start += o.batch_size) {
      const std::size_t end = std::min(train.size(), start + o.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      const double norm = static_cast<double>(end - start);
      for (std::size_t b = start; b < end; ++b) {
        in[0] = x[train[b]];
        m.forward_trace(in, {}, tr);
        // Loss on the normalised target so the scale of heights does not set the step size.
        const double e = (tr.output()[0] - y[train[b]]) / span;
        ybar[0] = 2.0 * e / (span * norm);
        m.backward(tr, ybar, {}, grad);
      }
      train::adam_step(m.params(), grad, adam, adam_opts);
    }
    res.epochs_run = epoch + 1;
    res.train_rmse.push_back(rmse(m, x, y, train));
    const double v = rmse(m, x, y, val);
    res.validation_rmse.push_back(v);
    if (v < best) {
      best = v;
      res.best_epoch = epoch;
      std::copy(m.params().begin(), m.params().end(), best_params.begin());
      since_best = 0;
    } else if (res.early_stopping && ++since_best >= o.patience) {
      break;
    }
  }
  std::copy(best_params.begin(), best_params.end(), m.params().begin());
  res.best_validation_rmse = best;
  res.model = std::move(m);
  return res;
}

OutletDpzPrediction outlet_dpz_predict(const nn::Mlp& model, std::span<const double> avg) {
  if (model.n_in() != 1 || model.n_out() != 1) fail(ErrorCategory::config, "outlet-DPZ model must be 1 -> 1");
  OutletDpzPrediction p;
  p.h_dp.reserve(avg.size());
  const Interval& range = model.input_bounds().front();
  std::array<double, 1> in{};
  std::array<double, 1> out{};
  for (double v : avg) {
    in[0] = v;
    model.forward(in, out);
    p.h_dp.push_back(out[0]);
    p.extrapolated.push_back(!range.contains(v));
  }
  return p;
}

}  // namespace settler::estimate
