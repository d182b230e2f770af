#pragma once

// First-order dual numbers for forward-mode differentiation. One derivative
// slot: to get a Jacobian column, seed the matching input variable with
// derivative 1 and evaluate the expression once.

#include <cmath>

#include "exitlim/errors.hpp"

namespace exitlim {

struct Dual {
  double val = 0.0;
  double der = 0.0;

  Dual() = default;
  Dual(double v, double d = 0.0) : val(v), der(d) {}
};

inline Dual operator-(const Dual& a) { return {-a.val, -a.der}; }
inline Dual operator+(const Dual& a, const Dual& b) {
  return {a.val + b.val, a.der + b.der};
}
inline Dual operator-(const Dual& a, const Dual& b) {
  return {a.val - b.val, a.der - b.der};
}
inline Dual operator*(const Dual& a, const Dual& b) {
  return {a.val * b.val, a.der * b.val + a.val * b.der};
}

inline Dual operator/(const Dual& a, const Dual& b) {
  if (b.val == 0.0) throw DomainError("division by zero");
  return {a.val / b.val, (a.der * b.val - a.val * b.der) / (b.val * b.val)};
}

inline Dual sin(const Dual& a) {
  return {std::sin(a.val), std::cos(a.val) * a.der};
}
inline Dual cos(const Dual& a) {
  return {std::cos(a.val), -std::sin(a.val) * a.der};
}
inline Dual exp(const Dual& a) {
  const double e = std::exp(a.val);
  return {e, e * a.der};
}
inline Dual tanh(const Dual& a) {
  const double t = std::tanh(a.val);
  return {t, (1.0 - t * t) * a.der};
}

inline Dual log(const Dual& a) {
  if (a.val <= 0.0) throw DomainError("log of non-positive value");
  return {std::log(a.val), a.der / a.val};
}

inline Dual sqrt(const Dual& a) {
  if (a.val < 0.0) throw DomainError("sqrt of negative value");
  if (a.val == 0.0)
    throw DomainError("sqrt is not differentiable at 0");
  const double s = std::sqrt(a.val);
  return {s, a.der / (2.0 * s)};
}

inline Dual abs(const Dual& a) {
  if (a.val == 0.0) throw DomainError("abs is not differentiable at 0");
  return a.val > 0.0 ? a : -a;
}

// a^b. Integer constant exponents work for any base; otherwise the base must
// be positive.
inline Dual pow(const Dual& a, const Dual& b) {
  if (b.der == 0.0 && b.val == std::floor(b.val) && std::abs(b.val) < 1e9) {
    const double n = b.val;
    if (a.val == 0.0) {
      if (n == 0.0) return {1.0, 0.0};
      if (n == 1.0) return {0.0, a.der};
      if (n > 1.0) return {0.0, 0.0};
      throw DomainError("0 raised to a negative power");
    }
    const double v = std::pow(a.val, n);
    return {v, n * std::pow(a.val, n - 1.0) * a.der};
  }
  if (a.val <= 0.0)
    throw DomainError("non-positive base with non-integer exponent");
  const double v = std::pow(a.val, b.val);
  return {v, v * (b.der * std::log(a.val) + b.val * a.der / a.val)};
}

}  // namespace exitlim
