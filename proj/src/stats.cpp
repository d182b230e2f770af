#include "exitlim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "exitlim/errors.hpp"

namespace exitlim {

double normal_cdf(double x) {
  // Zelen-Severo coefficients (Abramowitz-Stegun 26.2.17).
  constexpr double p = 0.2316419;
  constexpr double b1 = 0.319381530;
  constexpr double b2 = -0.356563782;
  constexpr double b3 = 1.781477937;
  constexpr double b4 = -1.821255978;
  constexpr double b5 = 1.330274429;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;

  const double a = std::abs(x);
  const double t = 1.0 / (1.0 + p * a);
  const double poly = t * (b1 + t * (b2 + t * (b3 + t * (b4 + t * b5))));
  const double tail = inv_sqrt_2pi * std::exp(-0.5 * a * a) * poly;
  return x >= 0.0 ? 1.0 - tail : tail;
}

double ks_one_sample(std::span<const double> xs, double mean, double var) {
  if (xs.empty()) throw DomainError("KS statistic of an empty sample");
  if (var < 0.0) throw DomainError("negative variance");
  const double n = static_cast<double>(xs.size());

  if (var == 0.0) {
    // Reference is the step CDF of a point mass at `mean`; the sup is set by
    // the sample mass strictly below and strictly above it.
    std::size_t below = 0, above = 0;
    for (double v : xs) {
      if (v < mean) ++below;
      if (v > mean) ++above;
    }
    return std::max(static_cast<double>(below), static_cast<double>(above)) / n;
  }

  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  const double sd = std::sqrt(var);
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = normal_cdf((sorted[i] - mean) / sd);
    const double lo = static_cast<double>(i) / n;
    const double hi = static_cast<double>(i + 1) / n;
    d = std::max(d, std::max(f - lo, hi - f));
  }
  return std::min(d, 1.0);
}

double ks_two_sample(std::span<const double> xs, std::span<const double> ys) {
  if (xs.empty() || ys.empty()) throw DomainError("KS statistic of an empty sample");
  std::vector<double> a(xs.begin(), xs.end());
  std::vector<double> b(ys.begin(), ys.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return std::min(d, 1.0);
}

SampleSummary summarize(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("summary of an empty sample");
  SampleSummary s;
  s.n = xs.size();
  double sum = 0.0;
  s.min = xs[0];
  s.max = xs[0];
  for (double v : xs) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  const double n = static_cast<double>(s.n);
  s.mean = sum / n;
  if (s.n < 2) return s;

  double ss = 0.0;
  for (double v : xs) ss += (v - s.mean) * (v - s.mean);
  const double var = ss / (n - 1.0);
  s.variance = var;
  const double se = std::sqrt(var / n);
  s.se_mean = se;
  constexpr double z975 = 1.9599639845400545;
  s.ci_mean_lo = s.mean - z975 * se;
  s.ci_mean_hi = s.mean + z975 * se;

  // Chi-square quantiles via the Wilson-Hilferty cube approximation.
  const double k = n - 1.0;
  const double c = 2.0 / (9.0 * k);
  const double chi_hi = k * std::pow(1.0 - c + z975 * std::sqrt(c), 3.0);
  const double chi_lo = k * std::pow(1.0 - c - z975 * std::sqrt(c), 3.0);
  s.ci_var_lo = k * var / chi_hi;
  s.ci_var_hi = k * var / (chi_lo > 0.0 ? chi_lo : k * 1e-12);
  return s;
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw DomainError("correlation needs paired samples");
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    sx += xs[i];
    sy += ys[i];
    ++n;
  }
  if (n < 2) throw DomainError("correlation needs at least two finite pairs");
  const double mx = sx / static_cast<double>(n);
  const double my = sy / static_cast<double>(n);
  double cxy = 0.0, cxx = 0.0, cyy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) continue;
    cxy += (xs[i] - mx) * (ys[i] - my);
    cxx += (xs[i] - mx) * (xs[i] - mx);
    cyy += (ys[i] - my) * (ys[i] - my);
  }
  if (cxx == 0.0 || cyy == 0.0) throw DomainError("correlation of a constant sample");
  return cxy / std::sqrt(cxx * cyy);
}

}  // namespace exitlim
