// exitlim CLI: analyze | simulate | conditioned | verify.
//
// Exit codes: 0 success; 1 verification failure; 2 config/parse problems;
// 3 mathematical-hypothesis failures (tangential crossing, no crossing,
// b >= 0 in the 1-d interval, box escape).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exitlim/acceptance.hpp"
#include "exitlim/conditioned1d.hpp"
#include "exitlim/monte_carlo.hpp"
#include "exitlim/problem_io.hpp"
#include "exitlim/stats.hpp"

namespace {

using exitlim::ExitStatus;
using nlohmann::json;

constexpr int kSchemaVersion = 1;

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw exitlim::ConfigError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

const char* status_name(ExitStatus s) {
  switch (s) {
    case ExitStatus::kExited: return "exited";
    case ExitStatus::kCapped: return "capped";
    case ExitStatus::kLeftBox: return "left_bbox";
  }
  return "?";
}

struct AnalysisBundle {
  exitlim::Trajectory traj;
  exitlim::FlowResult flow;
  exitlim::Linearization lin;
  exitlim::LimitLaw law;
};

AnalysisBundle run_analysis(const exitlim::ProblemSpec& spec, double h_ode) {
  AnalysisBundle a;
  a.traj = exitlim::integrate_flow(spec.b, spec.init.x0, h_ode, spec.t_max,
                                   exitlim::Box{spec.bbox_lo, spec.bbox_hi});
  a.flow = exitlim::first_hit(a.traj, spec.surface, spec.b);
  a.lin = exitlim::linearize(a.traj, spec.b);
  a.law = exitlim::compute_limit_law(spec, a.traj, a.flow, a.lin);
  return a;
}

json flow_to_json(const exitlim::ProblemSpec& spec, const AnalysisBundle& a) {
  const auto [phi_T, phi_T_inv] =
      exitlim::linearization_at(a.traj, spec.b, a.lin, a.flow.T);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["T"] = a.flow.T;
  j["z"] = vec_to_json(a.flow.z);
  j["margin"] = a.flow.margin;
  j["Phi_T"] = mat_to_json(phi_T);
  j["Phi_T_inv"] = mat_to_json(phi_T_inv);
  return j;
}

json law_to_json(const exitlim::LimitLaw& law) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["alpha"] = law.alpha;
  j["active"] = {{"xi", law.active_xi}, {"psi", law.active_psi}, {"noise", law.active_noise}};
  j["mu"] = vec_to_json(law.mu);
  j["cov"] = mat_to_json(law.cov);
  j["time_law"] = {{"mean", law.time_mean}, {"var", law.time_var}};
  j["point_law"] = {{"mean", vec_to_json(law.point_mean)},
                    {"cov", mat_to_json(law.point_cov)}};
  if (law.psd_clip > 0.0) j["psd_clip"] = law.psd_clip;
  return j;
}

void warn_if_rough(exitlim::ProblemSpec& spec) {
  const double bound =
      exitlim::sample_jacobian_bound(spec.b, spec.bbox_lo, spec.bbox_hi, 128, 0x11b5);
  if (bound > 1e6)
    std::cerr << "warning: sampled Jacobian norm reaches " << bound
              << " on the bounding box; the limit theory only needs regularity near the "
                 "orbit, but check the field definition\n";
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", eps);
  return buf;
}

int cmd_analyze(const std::string& problem, const std::string& out_dir, double h_ode) {
  exitlim::ProblemSpec spec = exitlim::load_problem_file(problem);
  warn_if_rough(spec);
  const AnalysisBundle a = run_analysis(spec, h_ode);
  std::filesystem::create_directories(out_dir);
  write_json(std::filesystem::path(out_dir) / "flow.json", flow_to_json(spec, a));
  write_json(std::filesystem::path(out_dir) / "limit_law.json", law_to_json(a.law));
  std::printf("T = %.12g\nmargin = %.6g\nalpha = %g\ntime law: mean %.12g, var %.12g\n",
              a.flow.T, a.flow.margin, a.law.alpha, a.law.time_mean, a.law.time_var);
  std::printf("wrote %s/flow.json and %s/limit_law.json\n", out_dir.c_str(), out_dir.c_str());
  return 0;
}

int cmd_simulate(const std::string& problem, const std::string& out_dir, double h_ode,
                 std::vector<double> eps_list, std::size_t n, std::uint64_t seed,
                 double h_sde_flag, double t_cap_flag, int jobs) {
  const exitlim::ProblemSpec spec = exitlim::load_problem_file(problem);
  const AnalysisBundle a = run_analysis(spec, h_ode);
  std::filesystem::create_directories(out_dir);
  const bool single = eps_list.size() == 1;

  for (double eps : eps_list) {
    exitlim::McParams params;
    params.eps = eps;
    params.n = n;
    params.master_seed = seed;
    params.h_sde = h_sde_flag > 0.0 ? h_sde_flag : eps * eps / 10.0;
    params.t_cap = t_cap_flag > 0.0 ? t_cap_flag : 3.0 * a.flow.T;
    params.jobs = jobs;
    const exitlim::ExitEnsemble e =
        exitlim::run_ensemble(spec, a.flow, a.law.proj, a.law.alpha, params);

    const std::string suffix = single ? "" : "_eps" + eps_tag(eps);
    const std::filesystem::path csv_path =
        std::filesystem::path(out_dir) / ("ensemble" + suffix + ".csv");
    std::FILE* csv = std::fopen(csv_path.c_str(), "wb");
    if (!csv) throw exitlim::ConfigError("cannot write '" + csv_path.string() + "'");
    std::fprintf(csv, "path_seed,status,tau");
    for (int i = 1; i <= spec.dim; ++i) std::fprintf(csv, ",x_exit_%d", i);
    std::fprintf(csv, ",u,pib_w");
    for (int i = 1; i < spec.dim; ++i) std::fprintf(csv, ",pim_w_%d", i);
    std::fprintf(csv, "\n");
    std::size_t row = 0;
    for (const auto& s : e.samples) {
      std::fprintf(csv, "%llu,%s", static_cast<unsigned long long>(s.path_seed),
                   status_name(s.status));
      if (s.status == ExitStatus::kExited) {
        std::fprintf(csv, ",%.17g", s.tau);
        for (int i = 0; i < spec.dim; ++i) std::fprintf(csv, ",%.17g", s.x_exit(i));
        std::fprintf(csv, ",%.17g", e.u[row]);
        if (std::isfinite(e.pib_w[row]))
          std::fprintf(csv, ",%.17g", e.pib_w[row]);
        else
          std::fprintf(csv, ",");
        for (int i = 0; i + 1 < spec.dim; ++i)
          std::fprintf(csv, ",%.17g", e.pim_w(static_cast<Eigen::Index>(row), i));
        ++row;
      } else {
        for (int i = 0; i < spec.dim + 2 + spec.dim; ++i) std::fprintf(csv, ",");
      }
      std::fprintf(csv, "\n");
    }
    std::fclose(csv);

    json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["eps"] = eps;
    summary["alpha"] = e.alpha;
    summary["n"] = params.n;
    summary["h_sde"] = params.h_sde;
    summary["t_cap"] = params.t_cap;
    summary["master_seed"] = params.master_seed;
    summary["xi_convergence"] = spec.init.convergence;
    summary["counts"] = {{"exited", e.n_exited},
                         {"capped", e.n_capped},
                         {"left_bbox", e.n_left_box}};
    summary["time_law"] = {{"mean", a.law.time_mean}, {"var", a.law.time_var}};
    if (e.n_exited > 0) {
      const exitlim::SampleSummary su = exitlim::summarize(e.u);
      summary["u"] = {{"mean", su.mean}, {"se", su.se_mean ? *su.se_mean : 0.0}};
      if (su.variance) summary["u"]["var"] = *su.variance;
      summary["ks"]["time"] =
          exitlim::ks_one_sample(e.u, a.law.time_mean, a.law.time_var);
      json kp = json::array();
      for (int c = 0; c + 1 < spec.dim; ++c) {
        std::vector<double> col(static_cast<std::size_t>(e.pim_w.rows()));
        for (Eigen::Index i = 0; i < e.pim_w.rows(); ++i)
          col[static_cast<std::size_t>(i)] = e.pim_w(i, c);
        kp.push_back(exitlim::ks_one_sample(col, a.law.point_mean(c), a.law.point_cov(c, c)));
      }
      summary["ks"]["point"] = kp;
      bool have_pib = false;
      for (double v : e.pib_w) have_pib = have_pib || std::isfinite(v);
      if (have_pib && e.n_exited >= 2) {
        std::vector<double> neg(e.pib_w.size());
        for (std::size_t i = 0; i < neg.size(); ++i) neg[i] = -e.pib_w[i];
        summary["corr_u_neg_pib_w"] = exitlim::pearson(e.u, neg);
      }
    }
    write_json(std::filesystem::path(out_dir) / ("summary" + suffix + ".json"), summary);
    std::printf("eps = %g: %zu/%zu exited; wrote %s\n", eps, e.n_exited, params.n,
                csv_path.c_str());
  }
  return 0;
}

int cmd_conditioned(const std::string& problem, const std::string& out_dir,
                    const std::string& method_name, double eps, std::size_t n,
                    std::uint64_t seed, double h_sde_flag, int jobs) {
  const exitlim::OneDProblem prob = exitlim::load_one_d_file(problem);
  const double h_sde = h_sde_flag > 0.0 ? h_sde_flag : eps * eps / 10.0;
  const exitlim::ConditioningMethod method =
      method_name == "rejection" ? exitlim::ConditioningMethod::kRejection
                                 : exitlim::ConditioningMethod::kHTransform;
  const exitlim::ConditionedRun run =
      exitlim::simulate_conditioned(prob, eps, n, seed, h_sde, method, jobs);

  const double t0 = exitlim::deterministic_time(prob);
  const double var0 = exitlim::limit_variance(prob);
  std::vector<double> u(run.tau.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = (run.tau[i] - t0) / eps;
  const exitlim::SampleSummary su = exitlim::summarize(u);

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path csv_path = std::filesystem::path(out_dir) / "tau.csv";
  std::FILE* csv = std::fopen(csv_path.c_str(), "wb");
  if (!csv) throw exitlim::ConfigError("cannot write '" + csv_path.string() + "'");
  std::fprintf(csv, "index,tau,u\n");
  for (std::size_t i = 0; i < run.tau.size(); ++i)
    std::fprintf(csv, "%zu,%.17g,%.17g\n", i, run.tau[i], u[i]);
  std::fclose(csv);

  json summary;
  summary["schema_version"] = kSchemaVersion;
  summary["method"] = method_name;
  summary["eps"] = eps;
  summary["n"] = n;
  summary["h_sde"] = h_sde;
  summary["master_seed"] = seed;
  summary["T0"] = t0;
  summary["limit_variance"] = var0;
  summary["sample_mean_u"] = su.mean;
  if (su.variance) summary["sample_var_u"] = *su.variance;
  summary["ks_vs_gaussian"] = exitlim::ks_one_sample(u, 0.0, var0);
  if (method == exitlim::ConditioningMethod::kRejection) {
    summary["acceptance_rate"] = run.acceptance_rate;
    summary["n_trials"] = run.n_trials;
  } else {
    summary["clamp_events"] = run.clamp_events;
    summary["clip_events"] = run.clip_events;
  }
  write_json(std::filesystem::path(out_dir) / "conditioned_summary.json", summary);
  std::printf("T0 = %.12g, limit variance = %.12g\n", t0, var0);
  std::printf("sample: mean(u) = %.6g, var(u) = %.6g, KS = %.6g\n", su.mean,
              su.variance ? *su.variance : 0.0, summary["ks_vs_gaussian"].get<double>());
  std::printf("wrote %s and conditioned_summary.json\n", csv_path.c_str());
  return 0;
}

int cmd_verify(const std::string& out_dir, bool quick, int jobs) {
  exitlim::acceptance::Options opt;
  opt.quick = quick;
  opt.jobs = jobs;
  std::filesystem::create_directories(out_dir);
  json report;
  report["schema_version"] = kSchemaVersion;
  report["quick"] = quick;
  report["criteria"] = json::array();
  bool all_pass = true;
  for (int id = 1; id <= exitlim::acceptance::kNumCriteria; ++id) {
    const auto r = exitlim::acceptance::run_criterion(id, opt);
    std::printf("%s\n", exitlim::acceptance::format_line(r).c_str());
    std::fflush(stdout);
    all_pass = all_pass && r.pass;
    json jr;
    jr["id"] = r.id;
    jr["name"] = r.name;
    jr["pass"] = r.pass;
    jr["seconds"] = r.seconds;
    jr["checks"] = json::array();
    for (const auto& c : r.checks) {
      json jc;
      jc["label"] = c.label;
      jc["measured"] = c.measured;
      if (std::isfinite(c.lo)) jc["lo"] = c.lo;
      if (std::isfinite(c.hi)) jc["hi"] = c.hi;
      jc["pass"] = c.pass;
      jr["checks"].push_back(jc);
    }
    report["criteria"].push_back(jr);
  }
  write_json(std::filesystem::path(out_dir) / "verify.json", report);
  std::printf("%s\n", all_pass ? "all criteria passed" : "some criteria FAILED");
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exit-time and exit-point scaling limits for small-noise diffusions"};
  app.require_subcommand(1);

  std::string problem, out_dir = ".";
  double h_ode = 1e-3;
  std::vector<double> eps_list;
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  double h_sde = 0.0;  // 0 = derive eps^2/10
  double t_cap = 0.0;  // 0 = derive 3T
  int jobs = 1;
  std::string method = "htransform";
  bool quick = false;

  CLI::App* analyze = app.add_subcommand("analyze", "deterministic hit and limit law");
  analyze->add_option("--problem", problem, "problem JSON file")->required();
  analyze->add_option("--out", out_dir, "output directory");
  analyze->add_option("--h-ode", h_ode, "flow integration step");

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo exit ensemble");
  simulate->add_option("--problem", problem, "problem JSON file")->required();
  simulate->add_option("--eps", eps_list, "noise amplitude (repeat for a ladder)")->required();
  simulate->add_option("--n", n, "number of paths");
  simulate->add_option("--seed", seed, "master seed");
  simulate->add_option("--h-sde", h_sde, "Euler-Maruyama step (default eps^2/10)");
  simulate->add_option("--t-cap", t_cap, "time cap (default 3T)");
  simulate->add_option("--jobs", jobs, "worker threads");
  simulate->add_option("--out", out_dir, "output directory");
  simulate->add_option("--h-ode", h_ode, "flow integration step");

  CLI::App* conditioned = app.add_subcommand("conditioned", "1-d conditioned exit study");
  conditioned->add_option("--problem", problem, "1-d problem JSON file")->required();
  conditioned->add_option("--method", method, "htransform or rejection")
      ->check(CLI::IsMember({"htransform", "rejection"}));
  conditioned->add_option("--eps", eps_list, "noise amplitude")->required();
  conditioned->add_option("--n", n, "number of kept paths");
  conditioned->add_option("--seed", seed, "master seed");
  conditioned->add_option("--h-sde", h_sde, "Euler-Maruyama step (default eps^2/10)");
  conditioned->add_option("--jobs", jobs, "worker threads");
  conditioned->add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand("verify", "run the acceptance criteria");
  verify->add_flag("--quick", quick, "reduced sample sizes (CI speed)");
  verify->add_option("--jobs", jobs, "worker threads");
  verify->add_option("--out", out_dir, "output directory for verify.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze) return cmd_analyze(problem, out_dir, h_ode);
    if (*simulate)
      return cmd_simulate(problem, out_dir, h_ode, eps_list, n, seed, h_sde, t_cap, jobs);
    if (*conditioned)
      return cmd_conditioned(problem, out_dir, method, eps_list.at(0), n, seed, h_sde, jobs);
    if (*verify) return cmd_verify(out_dir == "." ? "verify_out" : out_dir, quick, jobs);
  } catch (const exitlim::TangentialCrossingError& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const exitlim::HypothesisError& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const exitlim::NoHitError& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const exitlim::BoxEscapeError& e) {
    std::cerr << "hypothesis failure: " << e.what() << "\n";
    return 3;
  } catch (const exitlim::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const exitlim::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const exitlim::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
