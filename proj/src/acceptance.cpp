#include "exitlim/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "exitlim/conditioned1d.hpp"
#include "exitlim/monte_carlo.hpp"
#include "exitlim/rng.hpp"
#include "exitlim/stats.hpp"

namespace exitlim::acceptance {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Check check_le(const std::string& label, double measured, double hi) {
  return {label, measured, -kInf, hi, measured <= hi};
}
Check check_ge(const std::string& label, double measured, double lo) {
  return {label, measured, lo, kInf, measured >= lo};
}
Check check_in(const std::string& label, double measured, double lo, double hi) {
  return {label, measured, lo, hi, lo <= measured && measured <= hi};
}

ProblemSpec base_field_spec() {
  ProblemSpec spec;
  spec.dim = 2;
  spec.b = VectorField(2, {parse_expression("1"), parse_expression("0")});
  spec.sigma = MatrixField(2, {parse_expression("1"), parse_expression("0"),
                               parse_expression("0"), parse_expression("1")});
  spec.psi = VectorField(2, {parse_expression("0"), parse_expression("0")});
  spec.alpha1 = 10.0;
  spec.init.alpha2 = 10.0;
  spec.init.x0 = Eigen::Vector2d(0.0, 0.0);
  spec.surface = Surface(parse_expression("x1 - 1"));
  spec.bbox_lo = Eigen::Vector2d(-2.0, -4.0);
  spec.bbox_hi = Eigen::Vector2d(8.0, 4.0);
  spec.t_max = 1.5;
  return spec;
}

OneDProblem linear_one_d() {
  return OneDProblem(parse_expression("-x1"), parse_expression("1"), 0.5, 2.0, 1.0);
}

struct Analysis {
  Trajectory traj;
  FlowResult flow;
  Linearization lin;
  LimitLaw law;
};

Analysis analyze(const ProblemSpec& spec, double h_ode = 1e-3) {
  Analysis a;
  a.traj = integrate_flow(spec.b, spec.init.x0, h_ode, spec.t_max,
                          Box{spec.bbox_lo, spec.bbox_hi});
  a.flow = first_hit(a.traj, spec.surface, spec.b);
  a.lin = linearize(a.traj, spec.b);
  a.law = compute_limit_law(spec, a.traj, a.flow, a.lin);
  return a;
}

// quick mode scales sample counts down and relaxes only thresholds that are
// sampling-noise limited (KS distances), by sqrt(n_full/n_quick).
std::size_t pick_n(std::size_t full, const Options& opt, std::size_t quick) {
  return opt.quick ? quick : full;
}
double ks_tol(double full_tol, std::size_t n_full, std::size_t n, const Options& opt) {
  if (!opt.quick) return full_tol;
  return full_tol * std::sqrt(static_cast<double>(n_full) / static_cast<double>(n));
}

// 1. Constant-field exit law: u and the tangent exit coordinate against
// N(0,1); the time correction against the drift-direction deviation at T.
CriterionResult criterion1(const Options& opt) {
  CriterionResult r{1, "constant-field exit law", false, {}, 0.0};
  const ProblemSpec spec = base_field_spec();
  const Analysis a = analyze(spec);
  const double eps = 0.05;
  const std::size_t n = pick_n(20000, opt, 2000);
  const McParams params{eps, n, 0xACC001, eps * eps / 10.0, 3.0 * a.flow.T, opt.jobs};
  const ExitEnsemble e = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);

  std::vector<double> tangent(static_cast<std::size_t>(e.pim_w.rows()));
  for (Eigen::Index i = 0; i < e.pim_w.rows(); ++i)
    tangent[static_cast<std::size_t>(i)] = e.pim_w(i, 0);
  std::vector<double> neg_pib(e.pib_w.size());
  for (std::size_t i = 0; i < e.pib_w.size(); ++i) neg_pib[i] = -e.pib_w[i];

  r.checks.push_back(check_le("ks(u | N(0,1))", ks_one_sample(e.u, 0.0, 1.0),
                              ks_tol(0.03, 20000, n, opt)));
  r.checks.push_back(check_le("ks(tangent | N(0,1))", ks_one_sample(tangent, 0.0, 1.0),
                              ks_tol(0.03, 20000, n, opt)));
  r.checks.push_back(check_ge("corr(u, -pib_w)", pearson(e.u, neg_pib), 0.99));
  return r;
}

// 2. Deterministic-perturbation scaling: mean of eps^-1/2 (tau - 1).
CriterionResult criterion2(const Options& opt) {
  CriterionResult r{2, "deterministic-perturbation scaling", false, {}, 0.0};
  ProblemSpec spec = base_field_spec();
  spec.psi = VectorField(2, {parse_expression("0.5"), parse_expression("0")});
  spec.alpha1 = 0.5;
  const Analysis a = analyze(spec);
  const double eps = 0.01;
  const std::size_t n = pick_n(5000, opt, 500);
  const McParams params{eps, n, 0xACC002, eps * eps / 10.0, 3.0 * a.flow.T, opt.jobs};
  const ExitEnsemble e = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
  r.checks.push_back(check_in("mean(u)", summarize(e.u).mean, -0.52, -0.48));
  return r;
}

// 3. Initial-condition scaling: tangent exit mean and time mean.
CriterionResult criterion3(const Options& opt) {
  CriterionResult r{3, "initial-condition scaling", false, {}, 0.0};
  ProblemSpec spec = base_field_spec();
  spec.init.kind = InitialLaw::Kind::kPointMass;
  spec.init.xi_value = Eigen::Vector2d(0.0, 1.0);
  spec.init.alpha2 = 0.5;
  const Analysis a = analyze(spec);
  const double eps = 0.01;
  const std::size_t n = pick_n(5000, opt, 500);
  const McParams params{eps, n, 0xACC003, eps * eps / 10.0, 3.0 * a.flow.T, opt.jobs};
  const ExitEnsemble e = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
  double tangent_mean = 0.0;
  for (Eigen::Index i = 0; i < e.pim_w.rows(); ++i) tangent_mean += e.pim_w(i, 0);
  tangent_mean /= static_cast<double>(e.pim_w.rows());
  r.checks.push_back(check_in("mean(tangent)", tangent_mean, 0.98, 1.02));
  r.checks.push_back(check_in("mean(u)", summarize(e.u).mean, -0.02, 0.02));
  return r;
}

// 4. h-transform exactness against the rejection oracle at eps = 1.
CriterionResult criterion4(const Options& opt) {
  CriterionResult r{4, "h-transform vs rejection sampling", false, {}, 0.0};
  const OneDProblem prob = linear_one_d();
  const double eps = 1.0;
  const double h = 2.5e-4;
  const std::size_t n = pick_n(2000, opt, 400);
  const ConditionedRun ht =
      simulate_conditioned(prob, eps, n, 0xACC104, h, ConditioningMethod::kHTransform, opt.jobs);
  const ConditionedRun rej =
      simulate_conditioned(prob, eps, n, 0xACC204, h, ConditioningMethod::kRejection, opt.jobs);
  r.checks.push_back(check_le("ks2(htransform, rejection)", ks_two_sample(ht.tau, rej.tau),
                              ks_tol(0.05, 2000, n, opt)));
  return r;
}

// 5. Conditioned Gaussian limit: variance 3/8 and KS against N(0, 3/8).
CriterionResult criterion5(const Options& opt) {
  CriterionResult r{5, "conditioned Gaussian exit-time limit", false, {}, 0.0};
  const OneDProblem prob = linear_one_d();
  const double eps = 0.05;
  const std::size_t n = pick_n(20000, opt, 2000);
  const double t0 = deterministic_time(prob);       // log 2
  const double var0 = limit_variance(prob);         // 3/8
  const ConditionedRun ht = simulate_conditioned(prob, eps, n, 0xACC105, eps * eps / 10.0,
                                                 ConditioningMethod::kHTransform, opt.jobs);
  std::vector<double> u(ht.tau.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (ht.tau[i] - t0) / eps;
  const SampleSummary s = summarize(u);
  r.checks.push_back(check_in("var(u)", *s.variance, 0.9 * var0, 1.1 * var0));
  r.checks.push_back(
      check_le("ks(u | N(0, 3/8))", ks_one_sample(u, 0.0, var0), ks_tol(0.04, 20000, n, opt)));
  return r;
}

// 6. Laplace defect boundedness across the eps ladder.
CriterionResult criterion6(const Options& opt) {
  (void)opt;
  CriterionResult r{6, "Laplace defect ladder", false, {}, 0.0};
  const OneDProblem prob = linear_one_d();
  const double delta = default_defect_delta(prob);
  double prev_ratio = 0.0;
  int rung = 0;
  for (double eps : {0.2, 0.1, 0.05}) {
    const LaplaceDefect d = laplace_defect(prob, eps, delta);
    char label[64];
    std::snprintf(label, sizeof label, "defect/eps^2 @ eps=%.2f", eps);
    r.checks.push_back(check_le(label, d.ratio, 1e6));  // finite and tame
    if (rung > 0) {
      std::snprintf(label, sizeof label, "rung ratio @ eps=%.2f", eps);
      r.checks.push_back(check_le(label, d.ratio / prev_ratio, 1.5));
    }
    prev_ratio = d.ratio;
    ++rung;
  }
  return r;
}

// 7. Deterministic unit oracles.
CriterionResult criterion7(const Options& opt) {
  (void)opt;
  CriterionResult r{7, "deterministic oracles", false, {}, 0.0};

  {  // Phi vs the matrix exponential of the rotation field
    const VectorField f(2, {parse_expression("x2"), parse_expression("-x1")});
    const Trajectory traj = integrate_flow(f, Eigen::Vector2d(1.0, 0.0), 1e-3, 2.0);
    const Linearization lin = linearize(traj, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); i += 50) {
      Eigen::Matrix2d want;
      want << std::cos(traj.t[i]), std::sin(traj.t[i]), -std::sin(traj.t[i]),
          std::cos(traj.t[i]);
      worst = std::max(worst, (lin.phi[i] - want).norm());
    }
    r.checks.push_back(check_le("|Phi - exp(At)|", worst, 1e-8));
  }

  {  // 1-d Phi identity b(S^t x0)/b(x0)
    const VectorField f(1, {parse_expression("x1")});
    const Trajectory traj = integrate_flow(f, Eigen::VectorXd::Constant(1, 1.0), 1e-3, 1.0);
    const Linearization lin = linearize(traj, f);
    double worst = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); i += 13) {
      const double want = f.eval(traj.x[i])(0) / f.eval(traj.x0())(0);
      worst = std::max(worst, std::abs(lin.phi[i](0, 0) - want));
    }
    r.checks.push_back(check_le("|Phi - b(S^t)/b(x0)| (1-d)", worst, 1e-8));
  }

  {  // dual-number Jacobian vs central differences
    const VectorField g(2, {parse_expression("exp(x1)*x2"), parse_expression("x1^2")});
    double worst = 0.0;
    for (int rep = 0; rep < 25; ++rep) {
      const auto w = philox4x32(0xACC107, static_cast<std::uint32_t>(rep), 0, 0, 3);
      const double x1 =
          0.2 + unit_halfopen((static_cast<std::uint64_t>(w[0]) << 32) | w[1]);
      const double x2 =
          0.2 + unit_halfopen((static_cast<std::uint64_t>(w[2]) << 32) | w[3]);
      const Eigen::MatrixXd jac = g.jacobian(Eigen::Vector2d(x1, x2));
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
          std::vector<double> p{x1, x2};
          const double h = 1e-5;
          p[static_cast<std::size_t>(j)] += h;
          const double up = g.component(i).value(p);
          p[static_cast<std::size_t>(j)] -= 2.0 * h;
          const double dn = g.component(i).value(p);
          worst = std::max(worst, std::abs(jac(i, j) - (up - dn) / (2.0 * h)));
        }
    }
    r.checks.push_back(check_le("|dual J - central diff|", worst, 1e-6));
  }

  {  // conditioned drift against the constant-drift closed form
    const OneDProblem prob(parse_expression("-1"), parse_expression("1"), 0.0, 1.0, 0.5);
    const double eps = 0.3;
    const double got = conditioned_drift(prob, eps, 0.5);
    const double want = -1.0 + 2.0 / (1.0 - std::exp(-2.0 * 0.5 / (eps * eps)));
    r.checks.push_back(check_le("|b_eps - closed form|", std::abs(got - want), 1e-10));
  }

  {  // limit_variance quadrature vs closed forms
    const OneDProblem flat(parse_expression("-1"), parse_expression("1"), -0.5, 1.0, 0.0);
    const double e1 = std::abs(limit_variance(flat) - 1.0);
    const double e2 = std::abs(limit_variance(linear_one_d()) - 3.0 / 8.0);
    r.checks.push_back(check_le("|limit_variance - closed form|", std::max(e1, e2), 1e-9));
  }

  {  // limit law of the reversed flow vs the conditioned-variance quadrature
    const OneDProblem prob = linear_one_d();
    ProblemSpec spec;
    spec.dim = 1;
    spec.b = VectorField(1, {parse_expression("-(" + prob.b.str() + ")")});
    spec.sigma = MatrixField(1, {prob.sigma});
    spec.psi = VectorField(1, {parse_expression("0")});
    spec.alpha1 = 10.0;
    spec.init.alpha2 = 10.0;
    spec.init.x0 = Eigen::VectorXd::Constant(1, prob.x0);
    spec.surface = Surface(parse_expression("x1 - 2"));
    spec.bbox_lo = Eigen::VectorXd::Constant(1, 0.4);
    spec.bbox_hi = Eigen::VectorXd::Constant(1, 2.5);
    spec.t_max = 0.75;  // covers T = log 2 with margin, inside the box
    const Analysis a = analyze(spec, 2e-4);
    r.checks.push_back(check_le("|time_var - limit_variance|",
                                std::abs(a.law.time_var - limit_variance(prob)), 1e-6));
  }
  return r;
}

// 8. Property bundle: projections, cocycle, determinism, KS bounds,
// weak-order sanity, zero-noise consistency.
CriterionResult criterion8(const Options& opt) {
  CriterionResult r{8, "property suites", false, {}, 0.0};

  {  // projection identity on 1000 random vectors
    const Projections proj =
        make_projections(Eigen::Vector3d(0.9, -0.2, 0.4), Eigen::Vector3d(1.0, 0.3, -0.5));
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      Eigen::Vector3d v;
      for (int j = 0; j < 3; ++j) {
        const auto w = philox4x32(0xACC108, static_cast<std::uint32_t>(rep),
                                  static_cast<std::uint32_t>(j), 0, 1);
        v(j) = 2.0 * unit_halfopen((static_cast<std::uint64_t>(w[0]) << 32) | w[1]) - 1.0;
      }
      const Eigen::Vector3d back = proj.pib(v) * proj.b_z + proj.pim_apply(v);
      worst = std::max(worst, (v - back).norm() / std::max(1.0, v.norm()));
    }
    r.checks.push_back(check_le("projection identity residual", worst, 1e-10));
  }

  {  // fundamental-matrix cocycle
    const VectorField f(2, {parse_expression("x2"), parse_expression("-sin(x1)")});
    const Trajectory traj = integrate_flow(f, Eigen::Vector2d(1.0, 0.0), 1e-3, 2.0);
    const Linearization lin = linearize(traj, f);
    double worst = 0.0;
    for (int rep = 0; rep < 6; ++rep) {
      const auto w = philox4x32(0xACC208, static_cast<std::uint32_t>(rep), 0, 0, 2);
      const std::size_t is = 1 + w[0] % (traj.t.size() / 2);
      const std::size_t it = 1 + w[1] % (traj.t.size() / 2);
      const Trajectory tail = integrate_flow(f, traj.x[is], 1e-3, traj.t[it] + 1e-9);
      const Linearization lin2 = linearize(tail, f);
      worst = std::max(worst, (lin.phi[is + it] - lin2.phi[it] * lin.phi[is]).norm());
    }
    r.checks.push_back(check_le("cocycle residual", worst, 1e-6));
  }

  const ProblemSpec spec = base_field_spec();
  const Analysis a = analyze(spec);

  {  // ensemble determinism and order independence (bitwise)
    McParams params{0.05, 500, 0xACC308, 2.5e-4, 3.0 * a.flow.T, 1};
    const ExitEnsemble e1 = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
    params.jobs = 4;
    const ExitEnsemble e2 = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
    double worst = 0.0;
    for (std::size_t i = 0; i < e1.samples.size(); ++i) {
      worst = std::max(worst, std::abs(e1.samples[i].tau - e2.samples[i].tau));
      if (e1.samples[i].status != e2.samples[i].status) worst = 1.0;
    }
    for (std::size_t i = 0; i < e1.u.size(); ++i)
      worst = std::max(worst, std::abs(e1.u[i] - e2.u[i]));
    r.checks.push_back(check_le("determinism / order independence", worst, 0.0));
  }

  {  // KS statistic bounds and symmetry on random data
    std::vector<double> xs(401), ys(577);
    fill_normals(0xACC408, 0, kDomainLimit, xs);
    fill_normals(0xACC508, 1, kDomainLimit, ys);
    const double d12 = ks_two_sample(xs, ys);
    const double d21 = ks_two_sample(ys, xs);
    const double d1 = ks_one_sample(xs, 0.0, 1.0);
    const bool ok = d12 >= 0.0 && d12 <= 1.0 && d1 >= 0.0 && d1 <= 1.0;
    r.checks.push_back(check_le("ks symmetry / range", std::abs(d12 - d21) + (ok ? 0.0 : 1.0), 0.0));
  }

  {  // weak-order sanity: halving h moves mean(u) less than the CI width
    const std::size_t n = pick_n(20000, opt, 2000);
    McParams params{0.05, n, 0xACC608, 2.5e-4, 3.0 * a.flow.T, opt.jobs};
    const ExitEnsemble coarse = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
    params.h_sde = 1.25e-4;
    const ExitEnsemble fine = run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);
    const SampleSummary sc = summarize(coarse.u);
    const double ci_width = *sc.ci_mean_hi - *sc.ci_mean_lo;
    r.checks.push_back(
        check_le("|mean_u(h) - mean_u(h/2)| / CI width",
                 std::abs(sc.mean - summarize(fine.u).mean) / ci_width, 1.0));
  }

  {  // zero-noise consistency: |tau - T| <= C h with a small reported C
    ProblemSpec quiet = spec;
    quiet.sigma = MatrixField(2, {parse_expression("0"), parse_expression("0"),
                                  parse_expression("0"), parse_expression("0")});
    const double h = 1e-3;
    const ExitSample s = simulate_path(quiet, 0.05, h, 3.0, 0xACC708);
    const double c = std::abs(s.tau - a.flow.T) / h;
    r.checks.push_back(check_le("zero-noise |tau - T| / h_sde", c, 2.0));
  }
  return r;
}

}  // namespace

CriterionResult run_criterion(int id, const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  CriterionResult r;
  switch (id) {
    case 1: r = criterion1(opt); break;
    case 2: r = criterion2(opt); break;
    case 3: r = criterion3(opt); break;
    case 4: r = criterion4(opt); break;
    case 5: r = criterion5(opt); break;
    case 6: r = criterion6(opt); break;
    case 7: r = criterion7(opt); break;
    case 8: r = criterion8(opt); break;
    default: throw ConfigError("criterion id must be 1.." + std::to_string(kNumCriteria));
  }
  r.pass = true;
  for (const auto& c : r.checks) r.pass = r.pass && c.pass;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_all(const Options& opt) {
  std::vector<CriterionResult> out;
  for (int id = 1; id <= kNumCriteria; ++id) out.push_back(run_criterion(id, opt));
  return out;
}

std::string format_line(const CriterionResult& r) {
  std::string line = r.pass ? "[PASS]" : "[FAIL]";
  line += " criterion " + std::to_string(r.id) + ": " + r.name + " |";
  for (const auto& c : r.checks) {
    char buf[160];
    if (c.lo == -kInf) {
      std::snprintf(buf, sizeof buf, " %s = %.6g (<= %.6g)%s;", c.label.c_str(), c.measured,
                    c.hi, c.pass ? "" : " FAILED");
    } else if (c.hi == kInf) {
      std::snprintf(buf, sizeof buf, " %s = %.6g (>= %.6g)%s;", c.label.c_str(), c.measured,
                    c.lo, c.pass ? "" : " FAILED");
    } else {
      std::snprintf(buf, sizeof buf, " %s = %.6g (in [%.6g, %.6g])%s;", c.label.c_str(),
                    c.measured, c.lo, c.hi, c.pass ? "" : " FAILED");
    }
    line += buf;
  }
  char t[32];
  std::snprintf(t, sizeof t, " [%.1fs]", r.seconds);
  line += t;
  return line;
}

}  // namespace exitlim::acceptance
