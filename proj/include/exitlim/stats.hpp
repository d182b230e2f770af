#pragma once

// Empirical-distribution helpers: one- and two-sample Kolmogorov-Smirnov
// statistics against/between ECDFs, and moment summaries with normal-theory
// confidence intervals. No p-values: callers compare D against their own
// thresholds, where the sample size is known.

#include <optional>
#include <span>

namespace exitlim {

// Standard normal CDF via the Zelen-Severo rational approximation
// (Abramowitz-Stegun 26.2.17), |error| < 7.5e-8. Fixed coefficients so every
// build produces identical accept/reject decisions.
double normal_cdf(double x);

// D = sup_x |F_n(x) - F(x)| against N(mean, var). var = 0 compares against
// the step CDF of a point mass at `mean`.
double ks_one_sample(std::span<const double> xs, double mean, double var);

// Sup-norm distance between two ECDFs (merge scan; symmetric in arguments).
double ks_two_sample(std::span<const double> xs, std::span<const double> ys);

struct SampleSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  // Present when n >= 2.
  std::optional<double> variance;  // unbiased
  std::optional<double> se_mean;
  std::optional<double> ci_mean_lo, ci_mean_hi;      // 95%, normal theory
  std::optional<double> ci_var_lo, ci_var_hi;        // 95%, chi-square theory
};

SampleSummary summarize(std::span<const double> xs);

// Sample Pearson correlation; pairs with a non-finite entry are skipped.
double pearson(std::span<const double> xs, std::span<const double> ys);

}  // namespace exitlim
