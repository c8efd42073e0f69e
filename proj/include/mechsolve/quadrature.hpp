#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <vector>

#include "mechsolve/errors.hpp"

namespace mechsolve {

struct QuadratureConfig {
  double abs_tol = 1e-9;
  int max_subdivisions = 60;  // recursion depth cap
};

namespace detail {

inline double simpson(double h, double fa, double fm, double fb) {
  return (fa + 4.0 * fm + fb) * (h / 6.0);
}

template <typename F>
double adaptive_simpson(const F& fn, double a, double m, double b, double fa,
                        double fm, double fb, double whole, double tol,
                        int depth, const QuadratureConfig& cfg) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = fn(lm);
  const double frm = fn(rm);
  const double left = simpson(m - a, fa, flm, fm);
  const double right = simpson(b - m, fm, frm, fb);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol) {
    return left + right + err / 15.0;
  }
  if (depth >= cfg.max_subdivisions) {
    throw NonconvergentError("adaptive Simpson: subdivision budget exhausted");
  }
  return adaptive_simpson(fn, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth + 1, cfg) +
         adaptive_simpson(fn, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth + 1, cfg);
}

}  // namespace detail

/// Adaptive-Simpson estimate of \int_a^b fn with absolute error <= cfg.abs_tol.
/// Returns 0 exactly when a == b.
template <typename F>
double integrate(const F& fn, double a, double b,
                 const QuadratureConfig& cfg = QuadratureConfig{}) {
  if (!(cfg.abs_tol > 0.0) || cfg.max_subdivisions < 1) {
    throw std::invalid_argument("QuadratureConfig: abs_tol > 0 and max_subdivisions >= 1");
  }
  if (a == b) return 0.0;
  if (b < a) throw OutOfRangeError("integrate: upper limit below lower limit");
  const double m = 0.5 * (a + b);
  const double fa = fn(a);
  const double fm = fn(m);
  const double fb = fn(b);
  const double whole = detail::simpson(b - a, fa, fm, fb);
  return detail::adaptive_simpson(fn, a, m, b, fa, fm, fb, whole, cfg.abs_tol, 0, cfg);
}

/// Integrates with the domain pre-split at the given interior kink points.
/// Kinks outside (a,b) are ignored; adaptive Simpson then only ever sees
/// smooth pieces.
template <typename F>
double integrate_split(const F& fn, double a, double b,
                       std::initializer_list<double> kinks,
                       const QuadratureConfig& cfg = QuadratureConfig{}) {
  if (a == b) return 0.0;
  if (b < a) throw OutOfRangeError("integrate: upper limit below lower limit");
  std::vector<double> pts{a};
  for (double k : kinks) {
    if (k > a && k < b) pts.push_back(k);
  }
  pts.push_back(b);
  std::sort(pts.begin(), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (pts[i + 1] > pts[i]) total += integrate(fn, pts[i], pts[i + 1], cfg);
  }
  return total;
}

}  // namespace mechsolve
