#pragma once

#include <cstddef>
#include <vector>

namespace settler::nn::ad {

class Tape;

/// Scalar reverse-mode variable. A Var without a tape is a constant.
class Var {
 public:
  Var(double constant = 0.0) : value_(constant) {}  // NOLINT(google-explicit-constructor)

  double value() const { return value_; }
  bool is_constant() const { return tape_ == nullptr; }
  Tape* tape() const { return tape_; }
  std::size_t index() const { return index_; }

 private:
  friend class Tape;
  Var(double value, Tape* tape, std::size_t index) : value_(value), tape_(tape), index_(index) {}

  double value_ = 0.0;
  Tape* tape_ = nullptr;
  std::size_t index_ = 0;
};

/// Wengert list with at most two parents per node.
class Tape {
 public:
  Var variable(double value);
  /// Node with local partials; pass a constant Var for an absent parent.
  Var record(double value, const Var& a, double da, const Var& b = Var(), double db = 0.0);

  /// Adjoints of every node with respect to `output`.
  std::vector<double> gradient(const Var& output) const;

  void clear() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  struct Node {
    std::size_t a, b;
    double da, db;
  };
  std::vector<Node> nodes_;
};

enum class UnaryOp { neg, square, sqrt, exp, log, tanh, sigmoid, abs, floor };

/// Throws a numeric error for primitives without a usable derivative
/// (abs, floor) and a domain error for sqrt/log outside their domain.
Var apply(UnaryOp op, const Var& x);

Var operator+(const Var& a, const Var& b);
Var operator-(const Var& a, const Var& b);
Var operator*(const Var& a, const Var& b);
Var operator/(const Var& a, const Var& b);
Var operator-(const Var& a);
inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline Var square(const Var& x) { return apply(UnaryOp::square, x); }
inline Var sqrt(const Var& x) { return apply(UnaryOp::sqrt, x); }
inline Var exp(const Var& x) { return apply(UnaryOp::exp, x); }
inline Var log(const Var& x) { return apply(UnaryOp::log, x); }
inline Var tanh(const Var& x) { return apply(UnaryOp::tanh, x); }
inline Var sigmoid(const Var& x) { return apply(UnaryOp::sigmoid, x); }
/// max(a, b); the derivative follows the larger argument (a on ties).
Var fmax(const Var& a, const Var& b);

}  // namespace settler::nn::ad
