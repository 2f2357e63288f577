#include "settler/nn/ad.hpp"

#include <cmath>

#include "settler/core/error.hpp"

namespace settler::nn::ad {

Var Tape::variable(double value) {
  nodes_.push_back({kNone, kNone, 0.0, 0.0});
  return Var(value, this, nodes_.size() - 1);
}

Var Tape::record(double value, const Var& a, double da, const Var& b, double db) {
  if ((!a.is_constant() && a.tape() != this) || (!b.is_constant() && b.tape() != this)) {
    fail(ErrorCategory::numeric, "ad: mixing variables from different tapes");
  }
  nodes_.push_back({a.is_constant() ? kNone : a.index(), b.is_constant() ? kNone : b.index(), da, db});
  return Var(value, this, nodes_.size() - 1);
}

std::vector<double> Tape::gradient(const Var& output) const {
  std::vector<double> adj(nodes_.size(), 0.0);
  if (output.is_constant()) return adj;
  adj[output.index()] = 1.0;
  for (std::size_t i = output.index() + 1; i-- > 0;) {
    const double g = adj[i];
    if (g == 0.0) continue;
    const Node& n = nodes_[i];
    if (n.a != kNone) adj[n.a] += g * n.da;
    if (n.b != kNone) adj[n.b] += g * n.db;
  }
  return adj;
}

namespace {

Tape* common_tape(const Var& a, const Var& b) { return a.tape() ? a.tape() : b.tape(); }

}  // namespace

Var operator+(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() + b.value();
  return t ? t->record(v, a, 1.0, b, 1.0) : Var(v);
}

Var operator-(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() - b.value();
  return t ? t->record(v, a, 1.0, b, -1.0) : Var(v);
}

Var operator*(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const double v = a.value() * b.value();
  return t ? t->record(v, a, b.value(), b, a.value()) : Var(v);
}

Var operator/(const Var& a, const Var& b) {
  if (b.value() == 0.0) fail(ErrorCategory::singularity, "ad: division by zero");
  Tape* t = common_tape(a, b);
  const double v = a.value() / b.value();
  return t ? t->record(v, a, 1.0 / b.value(), b, -v / b.value()) : Var(v);
}

Var operator-(const Var& a) { return apply(UnaryOp::neg, a); }

Var apply(UnaryOp op, const Var& x) {
  const double u = x.value();
  double v = 0.0;
  double d = 0.0;
  switch (op) {
    case UnaryOp::neg:
      v = -u;
      d = -1.0;
      break;
    case UnaryOp::square:
      v = u * u;
      d = 2.0 * u;
      break;
    case UnaryOp::sqrt:
      if (!(u > 0.0)) fail(ErrorCategory::domain, "ad: sqrt needs a positive argument");
      v = std::sqrt(u);
      d = 0.5 / v;
      break;
    case UnaryOp::exp:
      v = std::exp(u);
      d = v;
      break;
    case UnaryOp::log:
      if (!(u > 0.0)) fail(ErrorCategory::domain, "ad: log needs a positive argument");
      v = std::log(u);
      d = 1.0 / u;
      break;
    case UnaryOp::tanh:
      v = std::tanh(u);
      d = 1.0 - v * v;
      break;
    case UnaryOp::sigmoid:
      v = 1.0 / (1.0 + std::exp(-u));
      d = v * (1.0 - v);
      break;
    case UnaryOp::abs:
      fail(ErrorCategory::numeric, "ad: abs is not a supported primitive");
    case UnaryOp::floor:
      fail(ErrorCategory::numeric, "ad: floor is not a supported primitive");
  }
  return x.tape() ? x.tape()->record(v, x, d) : Var(v);
}

Var fmax(const Var& a, const Var& b) {
  Tape* t = common_tape(a, b);
  const bool take_a = a.value() >= b.value();
  const double v = take_a ? a.value() : b.value();
  return t ? t->record(v, a, take_a ? 1.0 : 0.0, b, take_a ? 0.0 : 1.0) : Var(v);
}

}  // namespace settler::nn::ad
