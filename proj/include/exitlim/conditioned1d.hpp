#pragma once

// 1-d diffusions with drift b < 0 on [a1, a2], conditioned on the rare exit
// through a2. The conditioned process is an ordinary diffusion with the same
// noise and drift b_eps = b + eps^2 sigma^2 h_eps / int h_eps, where
// h_eps = exp(-Phi/eps^2) and Phi is the action integral 2 int b/sigma^2.
// All h_eps arithmetic runs in log space: the exponents reach thousands for
// small eps and naive evaluation overflows.

#include <cstdint>
#include <vector>

#include "exitlim/expression.hpp"

namespace exitlim {

struct OneDProblem {
  Expression b, sigma;
  double a1 = 0.0, a2 = 1.0, x0 = 0.5;

  // Checks a1 < x0 <= a2 and that b < 0, sigma != 0 hold on a 10^4-point
  // grid over [a1, a2]; throws HypothesisError otherwise.
  OneDProblem(Expression b_expr, Expression sigma_expr, double a1_, double a2_, double x0_);

  double b_at(double x) const;
  double sigma_at(double x) const;

  // Verifies b < 0 and sigma != 0 on a grid over [lo, hi].
  void check_region(double lo, double hi, int grid = 2001) const;
};

// Phi(x) = 2 int_{a1}^x b/sigma^2 dy, strictly decreasing; adaptive
// trapezoid refinement, relative error <= 1e-10.
double action_integral(const OneDProblem& prob, double x);

// b_eps(x) = b(x) + eps^2 sigma^2(x) h_eps(x) / int_{a1}^x h_eps. Evaluated
// through the max-shifted integral J(x) = int exp((Phi(x)-Phi(y))/eps^2) dy,
// whose integrand lies in (0, 1]; no overflow for any eps >= 1e-3.
double conditioned_drift(const OneDProblem& prob, double eps, double x);

// log int_{a1}^x h_eps(y) dy (max-shifted; -inf at x = a1).
double log_int_h(const OneDProblem& prob, double eps, double x);

struct LaplaceDefect {
  double sup = 0.0;    // sup |b_eps + b| over [x0-delta, a2+delta]
  double ratio = 0.0;  // sup / eps^2
  double delta = 0.0;
};

// sup over a 2000-point grid; requires b < 0, sigma != 0 on the widened
// interval and x0 - delta > a1.
LaplaceDefect laplace_defect(const OneDProblem& prob, double eps, double delta);
double default_defect_delta(const OneDProblem& prob);

// -int_{x0}^{a2} sigma^2/b^3 dy (positive; relative error <= 1e-10).
double limit_variance(const OneDProblem& prob);
// Expression-level form; also covers degenerate fields (sigma identically 0
// gives 0) that OneDProblem's invariants exclude.
double limit_variance(const Expression& b, const Expression& sigma, double x0, double a2);

// T(x0) = -int_{x0}^{a2} 1/b dx, the travel time of dx/dt = -b from x0 to a2.
double deterministic_time(const OneDProblem& prob);

// Cached evaluator of b_eps for samplers: Phi and log int h_eps are
// tabulated once on a fine grid over [a1, x_hi], then each call costs a
// handful of field evaluations. Read-only after construction.
class ConditionedDrift {
 public:
  ConditionedDrift(const OneDProblem& prob, double eps, double x_hi, int grid_n = 20000);

  double eps() const { return eps_; }
  double drift(double x) const;      // b_eps(x), x in (a1, x_hi]
  double action(double x) const;     // Phi(x)
  double log_int_h(double x) const;  // log int_{a1}^x h_eps

 private:
  const OneDProblem& prob_;
  double eps_;
  double a1_, x_hi_, dx_;
  std::vector<double> phi_;   // Phi at nodes
  std::vector<double> logi_;  // log int h_eps at nodes
};

enum class ConditioningMethod { kHTransform, kRejection };

struct ConditionedRun {
  std::vector<double> tau;        // exit times of the kept paths, in order
  std::size_t n_trials = 0;       // rejection: trials consumed; h-transform: n
  double acceptance_rate = 1.0;   // rejection only
  std::size_t clamp_events = 0;   // h-transform: states pushed back above a1
  std::size_t clip_events = 0;    // h-transform: drift displacements clipped
};

// Samples n conditioned exit times. kHTransform simulates the exact
// conditioned drift b_eps (state clamped to a1 + 1e-9 against the
// singularity); kRejection simulates the original SDE and keeps a path only
// when it exits at a2. Deterministic per (master_seed, n, h_sde).
ConditionedRun simulate_conditioned(const OneDProblem& prob, double eps, std::size_t n,
                                    std::uint64_t master_seed, double h_sde,
                                    ConditioningMethod method, int jobs = 1);

}  // namespace exitlim
