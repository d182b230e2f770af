#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "exitlim/conditioned1d.hpp"
#include "exitlim/flow.hpp"
#include "exitlim/limit_law.hpp"
#include "exitlim/stats.hpp"

using namespace exitlim;

namespace {

OneDProblem const_drift_problem() {  // b = -1, sigma = 1 on [0, 1]
  return OneDProblem(parse_expression("-1"), parse_expression("1"), 0.0, 1.0, 0.5);
}

OneDProblem linear_drift_problem() {  // b = -x on [0.5, 2]
  return OneDProblem(parse_expression("-x1"), parse_expression("1"), 0.5, 2.0, 1.0);
}

// Closed form for b = -1, sigma = 1, a1 = 0.
double const_drift_b_eps(double eps, double x) {
  return -1.0 + 2.0 / (1.0 - std::exp(-2.0 * x / (eps * eps)));
}

}  // namespace

TEST_CASE("hypothesis violations are rejected") {
  CHECK_THROWS_AS(OneDProblem(parse_expression("x1"), parse_expression("1"), 0.5, 2.0, 1.0),
                  HypothesisError);
  CHECK_THROWS_AS(OneDProblem(parse_expression("-x1"), parse_expression("x1 - 1"), 0.5, 2.0, 1.0),
                  HypothesisError);  // sigma vanishes at x = 1
  CHECK_THROWS_AS(OneDProblem(parse_expression("-1"), parse_expression("1"), 0.0, 1.0, 0.0),
                  ConfigError);  // x0 not inside
}

TEST_CASE("action integral closed forms") {
  const OneDProblem p1 = const_drift_problem();
  CHECK(action_integral(p1, 0.0) == 0.0);
  CHECK(action_integral(p1, 0.7) == doctest::Approx(-1.4).epsilon(1e-10));
  const OneDProblem p2 = linear_drift_problem();
  CHECK(action_integral(p2, 1.3) == doctest::Approx(-(1.3 * 1.3 - 0.25)).epsilon(1e-10));
  CHECK_THROWS_AS(action_integral(p2, 0.4), DomainError);
}

TEST_CASE("conditioned drift matches the constant-drift closed form") {
  const OneDProblem p = const_drift_problem();
  const double got = conditioned_drift(p, 0.3, 0.5);
  const double want = const_drift_b_eps(0.3, 0.5);
  CHECK(got == doctest::Approx(want).epsilon(1e-10));
  // Further points and epsilons
  CHECK(conditioned_drift(p, 0.5, 0.25) ==
        doctest::Approx(const_drift_b_eps(0.5, 0.25)).epsilon(1e-10));
  CHECK(conditioned_drift(p, 1.0, 0.9) ==
        doctest::Approx(const_drift_b_eps(1.0, 0.9)).epsilon(1e-10));
}

TEST_CASE("conditioned drift limits") {
  const OneDProblem p = const_drift_problem();
  // eps -> 0 at fixed x: b_eps -> -b = +1.
  CHECK(conditioned_drift(p, 0.05, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
  // x down to a1: b_eps ~ b + eps^2 sigma^2/(x - a1).
  const double eps = 0.3;
  const double x = 1e-6;
  const double expected = -1.0 + eps * eps / x;
  CHECK(conditioned_drift(p, eps, x) == doctest::Approx(expected).epsilon(0.01));
  CHECK(conditioned_drift(p, eps, 1e-9) > 1e7);

  CHECK_THROWS_AS(conditioned_drift(p, 0.3, 0.0), DomainError);
  CHECK_THROWS_AS(conditioned_drift(p, 0.3, -0.1), DomainError);
  CHECK_THROWS_AS(conditioned_drift(p, 0.0, 0.5), DomainError);
  CHECK_THROWS_AS(conditioned_drift(p, -1.0, 0.5), DomainError);
}

TEST_CASE("drift cache agrees with the direct evaluation") {
  const OneDProblem p = linear_drift_problem();
  for (double eps : {1.0, 0.3, 0.05}) {
    const ConditionedDrift cache(p, eps, p.a2);
    for (double x : {0.50001, 0.6, 0.9, 1.0, 1.37, 1.9999, 2.0}) {
      const double direct = conditioned_drift(p, eps, x);
      CHECK(cache.drift(x) == doctest::Approx(direct).epsilon(1e-6));
    }
  }
}

TEST_CASE("correction term is positive: b_eps > b on the grid") {
  const OneDProblem p = linear_drift_problem();
  const ConditionedDrift cache(p, 0.2, p.a2);
  for (int i = 1; i <= 200; ++i) {
    const double x = p.a1 + (p.a2 - p.a1) * static_cast<double>(i) / 200.0;
    CHECK(cache.drift(x) > p.b_at(x));
  }
}

TEST_CASE("log int h_eps: monotone, finite down to eps = 1e-3") {
  const OneDProblem p = linear_drift_problem();
  const ConditionedDrift cache(p, 1e-3, p.a2);
  double prev = cache.log_int_h(p.a1 + 1e-9);
  CHECK(std::isfinite(prev));
  for (double x : {0.6, 0.9, 1.2, 1.5, 1.8, 2.0}) {
    const double cur = cache.log_int_h(x);
    CHECK(std::isfinite(cur));
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("exit probability u_eps: boundary values and monotonicity") {
  const OneDProblem p = linear_drift_problem();
  const double eps = 0.6;
  const ConditionedDrift cache(p, eps, p.a2);
  const double log_total = cache.log_int_h(p.a2);
  CHECK(std::exp(cache.log_int_h(p.a1) - log_total) == 0.0);
  CHECK(std::exp(cache.log_int_h(p.a2) - log_total) == doctest::Approx(1.0));
  double prev = 0.0;
  for (int i = 1; i <= 50; ++i) {
    const double x = p.a1 + (p.a2 - p.a1) * static_cast<double>(i) / 50.0;
    const double u = std::exp(cache.log_int_h(x) - log_total);
    CHECK(u >= prev);
    prev = u;
  }
}

TEST_CASE("laplace defect: constant drift is exponentially flat") {
  const OneDProblem p = const_drift_problem();
  const LaplaceDefect d = laplace_defect(p, 0.2, 0.1);
  // Closed form: sup at x = x0 - delta, value 2 e^{-2x/eps^2}/(1 - e^{-2x/eps^2}).
  const double x = 0.4;
  const double bound = 2.0 * std::exp(-2.0 * x / 0.04) / (1.0 - std::exp(-2.0 * x / 0.04));
  CHECK(d.sup <= bound + 1e-10);
  CHECK(d.sup <= 1e-6);
  CHECK_THROWS_AS(laplace_defect(p, 0.0, 0.1), DomainError);
  CHECK_THROWS_AS(laplace_defect(p, 0.2, 0.6), DomainError);  // x0 - delta <= a1
}

TEST_CASE("laplace defect ratio stays bounded for b = -x") {
  const OneDProblem p = linear_drift_problem();
  const double delta = default_defect_delta(p);
  CHECK(delta == doctest::Approx(0.15));
  double prev_ratio = 0.0;
  int rung = 0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const LaplaceDefect d = laplace_defect(p, eps, delta);
    CHECK(std::isfinite(d.ratio));
    // d/eps^2 should sit near 1/(x0 - delta) for this drift.
    CHECK(d.ratio == doctest::Approx(1.0 / (p.x0 - delta)).epsilon(0.3));
    if (rung > 0) CHECK(d.ratio <= 1.5 * prev_ratio);
    prev_ratio = d.ratio;
    ++rung;
  }
}

TEST_CASE("limit variance closed forms") {
  const OneDProblem p1 =
      OneDProblem(parse_expression("-1"), parse_expression("1"), -0.5, 1.0, 0.0);
  CHECK(limit_variance(p1) == doctest::Approx(1.0).epsilon(1e-9));
  const OneDProblem p2 = linear_drift_problem();
  CHECK(limit_variance(p2) == doctest::Approx(3.0 / 8.0).epsilon(1e-9));
  // Degenerate diffusion: zero variance.
  CHECK(limit_variance(parse_expression("-1"), parse_expression("0"), 0.0, 1.0) == 0.0);
}

TEST_CASE("deterministic time closed forms") {
  const OneDProblem p1 =
      OneDProblem(parse_expression("-1"), parse_expression("1"), -0.5, 1.0, 0.0);
  CHECK(deterministic_time(p1) == doctest::Approx(1.0).epsilon(1e-10));
  const OneDProblem p2 = linear_drift_problem();
  CHECK(deterministic_time(p2) == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  const OneDProblem degenerate =
      OneDProblem(parse_expression("-1"), parse_expression("1"), 0.0, 1.0, 1.0);
  CHECK(deterministic_time(degenerate) == 0.0);
}

TEST_CASE("rejection sampler: feasibility guard and acceptance accounting") {
  const OneDProblem p = linear_drift_problem();
  CHECK_THROWS_AS(simulate_conditioned(p, 0.05, 10, 1, 2.5e-4, ConditioningMethod::kRejection),
                  HypothesisError);
  const ConditionedRun run =
      simulate_conditioned(p, 1.0, 100, 12, 1e-3, ConditioningMethod::kRejection);
  CHECK(run.tau.size() == 100);
  CHECK(run.n_trials >= 100);
  CHECK(run.acceptance_rate > 0.0);
  CHECK(run.acceptance_rate < 1.0);
  for (double t : run.tau) CHECK(t > 0.0);
}

TEST_CASE("h-transform and rejection sample the same law (coarse check)") {
  const OneDProblem p = linear_drift_problem();
  const double eps = 1.0;
  const double h = 1e-3;
  const ConditionedRun ht =
      simulate_conditioned(p, eps, 400, 101, h, ConditioningMethod::kHTransform);
  const ConditionedRun rej =
      simulate_conditioned(p, eps, 400, 202, h, ConditioningMethod::kRejection);
  CHECK(ks_two_sample(ht.tau, rej.tau) <= 0.12);
}

TEST_CASE("h-transform run is deterministic per seed") {
  const OneDProblem p = linear_drift_problem();
  const ConditionedRun a =
      simulate_conditioned(p, 0.3, 50, 5, 1e-3, ConditioningMethod::kHTransform);
  const ConditionedRun b =
      simulate_conditioned(p, 0.3, 50, 5, 1e-3, ConditioningMethod::kHTransform, 3);
  CHECK(a.tau == b.tau);
}

TEST_CASE("limit law of the reversed flow matches the conditioned variance") {
  const OneDProblem p = linear_drift_problem();

  ProblemSpec spec;
  spec.dim = 1;
  spec.b = VectorField(1, {parse_expression("-(" + p.b.str() + ")")});
  spec.sigma = MatrixField(1, {p.sigma});
  spec.psi = VectorField(1, {parse_expression("0")});
  spec.alpha1 = 10.0;
  spec.init.alpha2 = 10.0;
  spec.init.x0 = Eigen::VectorXd::Constant(1, p.x0);
  spec.surface = Surface(parse_expression("x1 - 2"));
  spec.bbox_lo = Eigen::VectorXd::Constant(1, 0.4);
  spec.bbox_hi = Eigen::VectorXd::Constant(1, 2.5);
  spec.t_max = 1.0;
  spec.validate();

  const Trajectory traj = integrate_flow(spec.b, spec.init.x0, 2e-4, spec.t_max);
  const FlowResult flow = first_hit(traj, spec.surface, spec.b);
  const Linearization lin = linearize(traj, spec.b);
  const LimitLaw law = compute_limit_law(spec, traj, flow, lin);

  CHECK(flow.T == doctest::Approx(deterministic_time(p)).epsilon(1e-8));
  CHECK(law.time_var == doctest::Approx(limit_variance(p)).epsilon(1e-6));
}
