#pragma once

#include <cmath>
#include <limits>

#include "exitlim/errors.hpp"

namespace exitlim {

// log(e^a + e^b) without overflow.
inline double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// 7-point Gauss-Legendre rule on [a, b]; effectively exact for the short,
// smooth panels it is used on.
template <class F>
double gauss7(F&& f, double a, double b) {
  static const double xs[7] = {0.0,
                               -0.4058451513773971669066064,
                               0.4058451513773971669066064,
                               -0.7415311855993944398638648,
                               0.7415311855993944398638648,
                               -0.9491079123427585245261897,
                               0.9491079123427585245261897};
  static const double ws[7] = {0.4179591836734693877551020,
                               0.3818300505051189449503698,
                               0.3818300505051189449503698,
                               0.2797053914892766679014678,
                               0.2797053914892766679014678,
                               0.1294849661688696932706114,
                               0.1294849661688696932706114};
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 7; ++i) acc += ws[i] * f(mid + half * xs[i]);
  return half * acc;
}

// Trapezoid sums with interval doubling; convergence is judged on the
// Richardson-extrapolated ladder, whose value is returned.
template <class F>
double adaptive_trapezoid(F&& f, double a, double b, double rel_tol) {
  if (a == b) return 0.0;
  std::size_t n = 16;
  const double h0 = (b - a) / static_cast<double>(n);
  double sum = 0.5 * (f(a) + f(b));
  for (std::size_t i = 1; i < n; ++i) sum += f(a + h0 * static_cast<double>(i));
  double prev_t = sum * h0;
  double prev_r = prev_t;
  for (int level = 0; level < 22; ++level) {
    const double h = (b - a) / static_cast<double>(2 * n);
    double mids = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      mids += f(a + h * static_cast<double>(2 * i + 1));
    const double cur_t = 0.5 * prev_t + h * mids;
    const double cur_r = (4.0 * cur_t - prev_t) / 3.0;
    n *= 2;
    const double scale = std::max(std::abs(cur_r), 1e-300);
    if (level >= 2 && std::abs(cur_r - prev_r) <= rel_tol * scale) return cur_r;
    prev_t = cur_t;
    prev_r = cur_r;
  }
  throw NumericalError("adaptive quadrature did not converge");
}

}  // namespace exitlim
