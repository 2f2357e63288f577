#include "settler/train/lbfgs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "settler/core/error.hpp"

namespace settler::train {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double inf_norm(const std::vector<double>& a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct Point {
  double alpha = 0.0;
  double f = 0.0;
  double d = 0.0;  // directional derivative
  std::vector<double> x;
  std::vector<double> g;
};

// Minimiser of the cubic interpolating (a, fa, da) and (b, fb, db), kept
// inside the safeguarded interior of [a, b]; bisection as fallback.
double cubic_step(const Point& a, const Point& b) {
  const double lo = std::min(a.alpha, b.alpha);
  const double hi = std::max(a.alpha, b.alpha);
  const double d1 = a.d + b.d - 3.0 * (a.f - b.f) / (a.alpha - b.alpha);
  const double disc = d1 * d1 - a.d * b.d;
  double t = 0.5 * (lo + hi);
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b.alpha - a.alpha);
    const double c = b.alpha - (b.alpha - a.alpha) * (b.d + d2 - d1) / (b.d - a.d + 2.0 * d2);
    if (std::isfinite(c)) t = c;
  }
  const double margin = 0.1 * (hi - lo);
  if (t < lo + margin || t > hi - margin) t = 0.5 * (lo + hi);
  return t;
}

class LineSearch {
 public:
  LineSearch(const Objective& f, const LbfgsOptions& o, const std::vector<double>& x, const std::vector<double>& p,
             double f0, double d0)
      : f_(f), o_(o), x_(x), p_(p), f0_(f0), d0_(d0) {}

  Point eval(double alpha) {
    Point pt;
    pt.alpha = alpha;
    pt.x.resize(x_.size());
    for (std::size_t i = 0; i < x_.size(); ++i) pt.x[i] = x_[i] + alpha * p_[i];
    pt.g.assign(x_.size(), 0.0);
    pt.f = f_(pt.x, pt.g);
    pt.d = dot(pt.g, p_);
    ++evaluations;
    if (!std::isfinite(pt.f) || !std::isfinite(pt.d)) {
      pt.f = std::numeric_limits<double>::infinity();
      pt.d = std::numeric_limits<double>::infinity();
    }
    if (pt.f < best.f || best.x.empty()) best = pt;
    return pt;
  }

  bool armijo(const Point& pt) const { return pt.f <= f0_ + o_.c1 * pt.alpha * d0_; }
  bool curvature(const Point& pt) const { return std::abs(pt.d) <= -o_.c2 * d0_; }

  /// Returns true with `out` set on success.
  bool run(double alpha1, Point& out) {
    Point prev;
    prev.alpha = 0.0;
    prev.f = f0_;
    prev.d = d0_;
    double alpha = alpha1;
    for (std::size_t i = 0; i < o_.max_line_search; ++i) {
      Point cur = eval(alpha);
      if (!armijo(cur) || (i > 0 && cur.f >= prev.f)) return zoom(prev, cur, i + 1, out);
      if (curvature(cur)) {
        out = std::move(cur);
        return true;
      }
      if (cur.d >= 0.0) return zoom(cur, prev, i + 1, out);
      prev = std::move(cur);
      alpha *= 2.0;
    }
    return false;
  }

  std::size_t evaluations = 0;
  Point best;

 private:
  bool zoom(Point lo, Point hi, std::size_t used, Point& out) {
    for (std::size_t i = used; i < o_.max_line_search; ++i) {
      const double a = (std::isfinite(hi.f) && std::isfinite(hi.d)) ? cubic_step(lo, hi) : 0.5 * (lo.alpha + hi.alpha);
      Point cur = eval(a);
      if (!armijo(cur) || cur.f >= lo.f) {
        hi = std::move(cur);
      } else {
        if (curvature(cur)) {
          out = std::move(cur);
          return true;
        }
        if (cur.d * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
        lo = std::move(cur);
      }
      if (std::abs(hi.alpha - lo.alpha) < 1e-16) break;
    }
    return false;
  }

  const Objective& f_;
  const LbfgsOptions& o_;
  const std::vector<double>& x_;
  const std::vector<double>& p_;
  double f0_;
  double d0_;
};

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::vector<double> x0, const LbfgsOptions& o) {
  if (o.history == 0) fail(ErrorCategory::config, "lbfgs: history must be >= 1");
  LbfgsResult res;
  std::vector<double> x = std::move(x0);
  std::vector<double> g(x.size(), 0.0);
  double f = objective(x, g);
  res.evaluations = 1;
  if (!std::isfinite(f)) fail(ErrorCategory::numeric, "lbfgs: non-finite objective at the starting point");
  res.history.push_back(f);

  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> p(x.size()), q(x.size());
  std::vector<double> alpha_buf(o.history);

  for (std::size_t it = 0; it < o.max_iters; ++it) {
    if (inf_norm(g) < o.grad_tol) {
      res.diagnostic = "gradient norm below tolerance";
      break;
    }
    q = g;
    const std::size_t k = s_hist.size();
    for (std::size_t j = k; j-- > 0;) {
      alpha_buf[j] = rho_hist[j] * dot(s_hist[j], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha_buf[j] * y_hist[j][i];
    }
    double gamma = 1.0;
    if (k > 0) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (auto& v : q) v *= gamma;
    for (std::size_t j = 0; j < k; ++j) {
      const double beta = rho_hist[j] * dot(y_hist[j], q);
      for (std::size_t i = 0; i < q.size(); ++i) q[i] += s_hist[j][i] * (alpha_buf[j] - beta);
    }
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = -q[i];
    double d0 = dot(g, p);
    if (!(d0 < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t i = 0; i < p.size(); ++i) p[i] = -g[i];
      d0 = dot(g, p);
    }
    const double alpha1 = k == 0 ? std::min(1.0, 1.0 / std::max(inf_norm(g), 1e-300)) : 1.0;

    LineSearch ls(objective, o, x, p, f, d0);
    Point next;
    const bool ok = ls.run(alpha1, next);
    res.evaluations += ls.evaluations;
    if (!ok) {
      res.line_search_failed = true;
      res.diagnostic = "line search failed to satisfy the strong Wolfe conditions";
      if (!ls.best.x.empty() && ls.best.f < f) {
        x = ls.best.x;
        g = ls.best.g;
        f = ls.best.f;
        res.history.push_back(f);
        ++res.iterations;
      }
      break;
    }
    std::vector<double> s(x.size()), y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      s[i] = next.x[i] - x[i];
      y[i] = next.g[i] - g[i];
    }
    const double sy = dot(s, y);
    if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
      if (s_hist.size() == o.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    x = std::move(next.x);
    g = std::move(next.g);
    f = next.f;
    res.history.push_back(f);
    ++res.iterations;
  }
  res.x = std::move(x);
  res.f = f;
  return res;
}

}  // namespace settler::train
