#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "exitlim/errors.hpp"
#include "exitlim/rng.hpp"
#include "exitlim/stats.hpp"

using namespace exitlim;

namespace {

// Test-only quantile oracle: bisection on the library CDF itself, so the
// quantile-grid construction is exact w.r.t. the CDF under test.
double normal_quantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal cdf reference values") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-7));
  CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-6));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-7));
  CHECK(normal_cdf(-3.0) == doctest::Approx(0.0013498980316300933).epsilon(1e-4));
  CHECK(std::abs(normal_cdf(3.0) - 0.9986501019683699) <= 1e-7);
  CHECK(normal_cdf(-1.0) + normal_cdf(1.0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-sample KS: point sample against N(0,1)") {
  const std::vector<double> zeros(100, 0.0);
  CHECK(ks_one_sample(zeros, 0.0, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("one-sample KS on the quantile grid") {
  const std::size_t n = 1000;
  std::vector<double> xs(n);
  for (std::size_t i = 0; i < n; ++i)
    xs[i] = normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n));
  CHECK(ks_one_sample(xs, 0.0, 1.0) <= 0.5 / static_cast<double>(n) + 1e-6);
}

TEST_CASE("one-sample KS edge cases") {
  const std::vector<double> empty;
  CHECK_THROWS_AS(ks_one_sample(empty, 0.0, 1.0), DomainError);
  // var = 0: degenerate reference law.
  const std::vector<double> at_mean(10, 2.0);
  CHECK(ks_one_sample(at_mean, 2.0, 0.0) == doctest::Approx(0.0));
  const std::vector<double> off_mean(10, 3.0);
  CHECK(ks_one_sample(off_mean, 2.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("one-sample KS is affine invariant") {
  std::vector<double> xs(400);
  fill_normals(99, 0, kDomainLimit, xs);
  const double d0 = ks_one_sample(xs, 0.25, 2.0);
  std::vector<double> ys(xs.size());
  const double a = 3.5, b = -1.25;
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = a * xs[i] + b;
  const double d1 = ks_one_sample(ys, a * 0.25 + b, a * a * 2.0);
  CHECK(std::abs(d0 - d1) <= 1e-12);
}

TEST_CASE("two-sample KS examples") {
  const std::vector<double> xs{1.0, 3.0};
  const std::vector<double> ys{2.0, 4.0};
  CHECK(ks_two_sample(xs, ys) == doctest::Approx(0.5));
  CHECK(ks_two_sample(xs, xs) == doctest::Approx(0.0));
  const std::vector<double> lo{0.1, 0.5, 0.9};
  const std::vector<double> hi{2.1, 2.5, 2.9};
  CHECK(ks_two_sample(lo, hi) == doctest::Approx(1.0));
  const std::vector<double> empty;
  CHECK_THROWS_AS(ks_two_sample(empty, xs), DomainError);
}

TEST_CASE("two-sample KS is symmetric and bounded") {
  std::vector<double> xs(257), ys(123);
  fill_normals(5, 1, kDomainLimit, xs);
  fill_normals(6, 2, kDomainLimit, ys);
  for (auto& v : ys) v = 0.3 * v + 0.2;
  const double d = ks_two_sample(xs, ys);
  CHECK(d == ks_two_sample(ys, xs));
  CHECK(d >= 0.0);
  CHECK(d <= 1.0);
}

TEST_CASE("summary examples") {
  const std::vector<double> xs{1.0, 2.0, 3.0};
  const SampleSummary s = summarize(xs);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(*s.variance == doctest::Approx(1.0));
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);
  CHECK(*s.ci_mean_lo <= s.mean);
  CHECK(*s.ci_mean_hi >= s.mean);
  CHECK(*s.ci_var_lo <= *s.variance);
  CHECK(*s.ci_var_hi >= *s.variance);

  const SampleSummary single = summarize(std::vector<double>{5.0});
  CHECK(single.mean == doctest::Approx(5.0));
  CHECK_FALSE(single.variance.has_value());

  const std::vector<double> empty;
  CHECK_THROWS_AS(summarize(empty), DomainError);
}

TEST_CASE("summary is permutation invariant") {
  std::vector<double> xs(101);
  fill_normals(17, 3, kDomainLimit, xs);
  std::vector<double> ys = xs;
  std::sort(ys.begin(), ys.end());
  const SampleSummary a = summarize(xs);
  const SampleSummary c = summarize(ys);
  CHECK(a.mean == doctest::Approx(c.mean).epsilon(1e-12));
  CHECK(*a.variance == doctest::Approx(*c.variance).epsilon(1e-12));
}

TEST_CASE("variance CI coverage on N(0, 3/8)") {
  const double target = 0.375;
  const double sd = std::sqrt(target);
  int covered = 0;
  std::vector<double> xs(100000);
  for (int rep = 0; rep < 50; ++rep) {
    fill_normals(1000 + static_cast<std::uint64_t>(rep), 0, kDomainLimit, xs);
    std::vector<double> scaled(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) scaled[i] = sd * xs[i];
    const SampleSummary s = summarize(scaled);
    if (*s.ci_var_lo <= target && target <= *s.ci_var_hi) ++covered;
  }
  CHECK(covered >= 45);  // >= 90% of 50 repetitions
}

TEST_CASE("pearson correlation") {
  std::vector<double> xs(500), noise(500);
  fill_normals(21, 0, kDomainLimit, xs);
  fill_normals(22, 0, kDomainLimit, noise);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = 2.0 * xs[i] + 1e-3 * noise[i];
  CHECK(pearson(xs, ys) > 0.999);
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = -xs[i];
  CHECK(pearson(xs, ys) == doctest::Approx(-1.0).epsilon(1e-12));
}
