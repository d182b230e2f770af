#include "exitlim/conditioned1d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "exitlim/parallel.hpp"
#include "exitlim/quadrature.hpp"
#include "exitlim/rng.hpp"

namespace exitlim {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Exponent beyond which the left tail of int h_eps is dropped: contributions
// below e^-120 of the max are far under every tolerance used here.
constexpr double kTailExponent = 120.0;

// log of int_{x0}^{x1} e^{f(y)} dy for f linear between (f0, f1) over a cell
// of width `len` (exact for linear exponents; the grids keep the curvature
// per cell tiny).
double log_cell_integral(double f0, double f1, double len) {
  if (len <= 0.0) return kNegInf;
  const double df = f1 - f0;
  if (std::abs(df) < 1e-12) return f0 + std::log(len) + std::log1p(0.5 * df);
  if (df > 0.0) return f1 + std::log(len * -std::expm1(-df) / df);
  return f0 + std::log(len * std::expm1(df) / df);
}

}  // namespace

OneDProblem::OneDProblem(Expression b_expr, Expression sigma_expr, double a1_, double a2_,
                         double x0_)
    : b(std::move(b_expr)), sigma(std::move(sigma_expr)), a1(a1_), a2(a2_), x0(x0_) {
  if (b.num_vars() > 1 || sigma.num_vars() > 1)
    throw ConfigError("1-d problem expressions may only use x1");
  if (!(a1 < a2)) throw ConfigError("need a1 < a2");
  if (!(a1 < x0 && x0 <= a2)) throw ConfigError("need x0 in (a1, a2]");
  check_region(a1, a2, 10001);
}

double OneDProblem::b_at(double x) const { return b.value({&x, 1}); }
double OneDProblem::sigma_at(double x) const { return sigma.value({&x, 1}); }

void OneDProblem::check_region(double lo, double hi, int grid) const {
  double prev_sigma = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    if (!(b_at(x) < 0.0))
      throw HypothesisError("b(x) >= 0 at x = " + std::to_string(x) +
                            "; the drift must be negative on the interval");
    const double s = sigma_at(x);
    // A sign change between grid points pins a zero of sigma as well.
    if (s == 0.0 || (i > 0 && prev_sigma * s < 0.0))
      throw HypothesisError("sigma vanishes near x = " + std::to_string(x));
    prev_sigma = s;
  }
}

double action_integral(const OneDProblem& prob, double x) {
  if (x < prob.a1) throw DomainError("action integral requested left of a1");
  if (x > prob.a2) prob.check_region(prob.a2, x);
  auto f = [&](double y) {
    const double s = prob.sigma_at(y);
    return 2.0 * prob.b_at(y) / (s * s);
  };
  return adaptive_trapezoid(f, prob.a1, x, 1e-12);
}

namespace {

// Phi(x) - Phi(y) for y <= x, computed directly over [y, x].
double action_gap(const OneDProblem& prob, double y, double x) {
  auto f = [&](double u) {
    const double s = prob.sigma_at(u);
    return -2.0 * prob.b_at(u) / (s * s);
  };
  return adaptive_trapezoid(f, y, x, 1e-12);
}

// J(x) = int_{a1}^x exp(-(Phi(y)-Phi(x))/eps^2) dy with the left tail cut at
// exponent kTailExponent. Interval-doubling trapezoid; the exponent at new
// midpoints is accumulated from the neighbouring known node with a short
// Gauss panel, so no nested full-range quadrature is needed.
double shifted_integral(const OneDProblem& prob, double eps, double x) {
  const double eps2 = eps * eps;
  const double cut = kTailExponent * eps2;

  double y_lo = prob.a1;
  double d_lo = action_gap(prob, prob.a1, x);  // Phi(a1) - Phi(x) >= 0
  if (d_lo > cut) {
    double lo = prob.a1, hi = x;
    for (int it = 0; it < 80 && (hi - lo) > 1e-15 * (x - prob.a1); ++it) {
      const double mid = 0.5 * (lo + hi);
      if (action_gap(prob, mid, x) > cut)
        lo = mid;
      else
        hi = mid;
    }
    y_lo = hi;
    d_lo = action_gap(prob, y_lo, x);
  }
  if (y_lo >= x) return 0.0;

  auto dphi = [&](double u) {
    const double s = prob.sigma_at(u);
    return -2.0 * prob.b_at(u) / (s * s);
  };

  std::vector<double> ys = {y_lo, x};
  std::vector<double> gap = {d_lo, 0.0};  // Phi(y)-Phi(x) at the nodes
  auto trap = [&]() {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i)
      acc += 0.5 * (ys[i + 1] - ys[i]) *
             (std::exp(-gap[i] / eps2) + std::exp(-gap[i + 1] / eps2));
    return acc;
  };

  double prev_t = trap();
  double prev_r = prev_t;
  for (int level = 0; level < 18; ++level) {
    std::vector<double> nys, ngap;
    nys.reserve(2 * ys.size());
    ngap.reserve(2 * ys.size());
    for (std::size_t i = 0; i + 1 < ys.size(); ++i) {
      const double mid = 0.5 * (ys[i] + ys[i + 1]);
      nys.push_back(ys[i]);
      ngap.push_back(gap[i]);
      nys.push_back(mid);
      ngap.push_back(gap[i + 1] + gauss7(dphi, mid, ys[i + 1]));
    }
    nys.push_back(ys.back());
    ngap.push_back(gap.back());
    ys.swap(nys);
    gap.swap(ngap);
    const double cur_t = trap();
    const double cur_r = (4.0 * cur_t - prev_t) / 3.0;
    if (level >= 4 && std::abs(cur_r - prev_r) <= 1e-12 * std::max(std::abs(cur_r), 1e-300))
      return cur_r;
    prev_t = cur_t;
    prev_r = cur_r;
  }
  throw NumericalError("shifted h_eps integral did not converge");
}

}  // namespace

double conditioned_drift(const OneDProblem& prob, double eps, double x) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(x > prob.a1)) throw DomainError("conditioned drift needs x > a1");
  if (x > prob.a2) prob.check_region(prob.a2, x);
  const double j = shifted_integral(prob, eps, x);
  const double s = prob.sigma_at(x);
  return prob.b_at(x) + eps * eps * s * s / j;
}

double log_int_h(const OneDProblem& prob, double eps, double x) {
  if (x <= prob.a1) return kNegInf;
  return -action_integral(prob, x) / (eps * eps) + std::log(shifted_integral(prob, eps, x));
}

double default_defect_delta(const OneDProblem& prob) {
  const double margin = 1e-3 * (prob.a2 - prob.a1);
  return std::min(0.1 * (prob.a2 - prob.a1), prob.x0 - prob.a1 - margin);
}

LaplaceDefect laplace_defect(const OneDProblem& prob, double eps, double delta) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(delta >= 0.0)) throw DomainError("delta must be non-negative");
  const double lo = prob.x0 - delta;
  const double hi = prob.a2 + delta;
  if (!(lo > prob.a1))
    throw DomainError("delta too large: x0 - delta must stay right of a1");
  prob.check_region(lo, hi);

  ConditionedDrift cache(prob, eps, hi);
  LaplaceDefect res;
  res.delta = delta;
  const int grid = 2000;
  for (int i = 0; i < grid; ++i) {
    const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    res.sup = std::max(res.sup, std::abs(cache.drift(x) + prob.b_at(x)));
  }
  res.ratio = res.sup / (eps * eps);
  return res;
}

double limit_variance(const Expression& b, const Expression& sigma, double x0, double a2) {
  auto f = [&](double y) {
    const double bb = b.value({&y, 1});
    const double s = sigma.value({&y, 1});
    return s * s / (bb * bb * bb);
  };
  return -adaptive_trapezoid(f, x0, a2, 1e-12);
}

double limit_variance(const OneDProblem& prob) {
  return limit_variance(prob.b, prob.sigma, prob.x0, prob.a2);
}

double deterministic_time(const OneDProblem& prob) {
  auto f = [&](double y) { return 1.0 / prob.b_at(y); };
  return -adaptive_trapezoid(f, prob.x0, prob.a2, 1e-12);
}

ConditionedDrift::ConditionedDrift(const OneDProblem& prob, double eps, double x_hi,
                                   int grid_n)
    : prob_(prob), eps_(eps), a1_(prob.a1), x_hi_(x_hi) {
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  if (!(x_hi > prob.a1)) throw DomainError("x_hi must exceed a1");
  if (x_hi > prob.a2) prob.check_region(prob.a2, x_hi);
  if (grid_n < 16) throw ConfigError("drift cache grid too coarse");

  dx_ = (x_hi_ - a1_) / static_cast<double>(grid_n);
  phi_.resize(static_cast<std::size_t>(grid_n) + 1);
  logi_.resize(static_cast<std::size_t>(grid_n) + 1);
  auto dphi = [&](double u) {
    const double s = prob_.sigma_at(u);
    return 2.0 * prob_.b_at(u) / (s * s);
  };
  const double eps2 = eps_ * eps_;
  phi_[0] = 0.0;
  logi_[0] = kNegInf;
  for (int i = 0; i < grid_n; ++i) {
    const double xl = a1_ + dx_ * static_cast<double>(i);
    const double xr = xl + dx_;
    phi_[static_cast<std::size_t>(i) + 1] =
        phi_[static_cast<std::size_t>(i)] + gauss7(dphi, xl, xr);
    const double cell = log_cell_integral(-phi_[static_cast<std::size_t>(i)] / eps2,
                                          -phi_[static_cast<std::size_t>(i) + 1] / eps2, dx_);
    logi_[static_cast<std::size_t>(i) + 1] =
        logaddexp(logi_[static_cast<std::size_t>(i)], cell);
  }
}

double ConditionedDrift::action(double x) const {
  std::size_t j = x <= a1_ ? 0 : static_cast<std::size_t>((x - a1_) / dx_);
  if (j >= phi_.size() - 1) j = phi_.size() - 2;
  const double xj = a1_ + dx_ * static_cast<double>(j);
  auto dphi = [&](double u) {
    const double s = prob_.sigma_at(u);
    return 2.0 * prob_.b_at(u) / (s * s);
  };
  return phi_[j] + gauss7(dphi, xj, x);
}

double ConditionedDrift::log_int_h(double x) const {
  if (x <= a1_) return kNegInf;
  std::size_t j = static_cast<std::size_t>((x - a1_) / dx_);
  if (j >= phi_.size() - 1) j = phi_.size() - 2;
  const double xj = a1_ + dx_ * static_cast<double>(j);
  const double eps2 = eps_ * eps_;
  const double fx = -action(x) / eps2;
  const double cell = log_cell_integral(-phi_[j] / eps2, fx, x - xj);
  return logaddexp(logi_[j], cell);
}

double ConditionedDrift::drift(double x) const {
  if (!(x > a1_)) throw DomainError("conditioned drift needs x > a1");
  if (x > x_hi_ + dx_) throw DomainError("x beyond the drift cache range");
  const double eps2 = eps_ * eps_;
  const double fx = -action(x) / eps2;
  const double li = log_int_h(x);
  const double s = prob_.sigma_at(x);
  return prob_.b_at(x) + eps2 * s * s * std::exp(fx - li);
}

ConditionedRun simulate_conditioned(const OneDProblem& prob, double eps, std::size_t n,
                                    std::uint64_t master_seed, double h_sde,
                                    ConditioningMethod method, int jobs) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(h_sde > 0.0)) throw ConfigError("h_sde must be positive");

  const double t0 = deterministic_time(prob);
  const double t_cap = 200.0 * std::max(t0, 1.0);
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(t_cap / h_sde));
  const double sqrt_h = std::sqrt(h_sde);

  ConditionedRun run;
  run.tau.resize(n);

  if (method == ConditioningMethod::kHTransform) {
    const ConditionedDrift cache(prob, eps, prob.a2);
    const double wall = prob.a1 + 1e-9;
    const double step_cap = 0.1 * (prob.a2 - prob.a1);
    std::vector<std::size_t> clamps(n, 0), clips(n, 0);
    parallel_for(n, jobs, [&](std::size_t i) {
      const std::uint64_t seed = split_seed(master_seed, i);
      double x = prob.x0;
      double n0 = 0.0, n1 = 0.0;
      for (std::size_t k = 0; k < max_steps; ++k) {
        if (x < wall) {
          x = wall;
          ++clamps[i];
        }
        double move = cache.drift(x) * h_sde;
        if (std::abs(move) > step_cap) {
          move = std::copysign(step_cap, move);
          ++clips[i];
        }
        normal_pair(seed, k, 0, kDomainStep, n0, n1);
        const double x_next = x + move + eps * prob.sigma_at(x) * sqrt_h * n0;
        if (x_next >= prob.a2) {
          const double theta = (prob.a2 - x) / (x_next - x);
          run.tau[i] = (static_cast<double>(k) + theta) * h_sde;
          return;
        }
        x = x_next;
      }
      throw NumericalError("conditioned path failed to reach a2 within the safety cap");
    });
    run.n_trials = n;
    for (std::size_t i = 0; i < n; ++i) {
      run.clamp_events += clamps[i];
      run.clip_events += clips[i];
    }
    return run;
  }

  // Rejection: simulate the original SDE until it exits [a1, a2] and keep
  // the exit time only when the exit happened at a2. Feasibility is checked
  // up front from u_eps(x0) = int_{a1}^{x0} h_eps / int_{a1}^{a2} h_eps.
  {
    const ConditionedDrift cache(prob, eps, prob.a2);
    const double log_accept = cache.log_int_h(prob.x0) - cache.log_int_h(prob.a2);
    if (log_accept < std::log(1e-6))
      throw HypothesisError(
          "rejection sampling infeasible: estimated acceptance probability " +
          std::to_string(std::exp(log_accept)) + " is below 1e-6");
    run.acceptance_rate = std::exp(log_accept);
  }

  std::size_t kept = 0;
  std::uint64_t trial = 0;
  double n0 = 0.0, n1 = 0.0;
  while (kept < n) {
    const std::uint64_t seed = split_seed(master_seed, trial);
    ++trial;
    double x = prob.x0;
    for (std::size_t k = 0; k < max_steps; ++k) {
      normal_pair(seed, k, 0, kDomainStep, n0, n1);
      const double x_next =
          x + prob.b_at(x) * h_sde + eps * prob.sigma_at(x) * sqrt_h * n0;
      if (x_next >= prob.a2) {
        const double theta = (prob.a2 - x) / (x_next - x);
        run.tau[kept++] = (static_cast<double>(k) + theta) * h_sde;
        break;
      }
      if (x_next <= prob.a1) break;  // exited at a1: discard the trial
      x = x_next;
    }
  }
  run.n_trials = trial;
  run.acceptance_rate = static_cast<double>(n) / static_cast<double>(trial);
  return run;
}

}  // namespace exitlim
