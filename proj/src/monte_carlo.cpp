#include "exitlim/monte_carlo.hpp"

#include <cmath>
#include <limits>

#include "exitlim/parallel.hpp"
#include "exitlim/rng.hpp"

namespace exitlim {

namespace {

// Square root factor of a PSD matrix (eigenvalue form, tolerates rank
// deficiency).
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

ExitSample simulate_path(const ProblemSpec& spec, double eps, double h_sde, double t_cap,
                         std::uint64_t path_seed, std::optional<double> snapshot_time) {
  if (!(eps > 0.0)) throw ConfigError("eps must be positive");
  if (!(h_sde > 0.0)) throw ConfigError("h_sde must be positive");
  if (!(t_cap > 0.0)) throw ConfigError("t_cap must be positive");

  const int d = spec.dim;
  const double sqrt_h = std::sqrt(h_sde);
  const double eps_a1 = std::pow(eps, spec.alpha1);

  ExitSample out;
  out.path_seed = path_seed;

  // Initial condition x0 + eps^alpha2 xi.
  Eigen::VectorXd x = spec.init.x0;
  if (spec.init.kind != InitialLaw::Kind::kZero) {
    Eigen::VectorXd xi = spec.init.xi_value;
    if (spec.init.kind == InitialLaw::Kind::kGaussian) {
      Eigen::VectorXd z(d);
      fill_normals(path_seed, 0, kDomainInit, {z.data(), static_cast<std::size_t>(d)});
      xi += psd_sqrt(spec.init.xi_cov) * z;
    }
    x += std::pow(eps, spec.init.alpha2) * xi;
  }

  Eigen::VectorXd x_next(d), drift(d), noise(d), z(d), buf(d);
  Eigen::MatrixXd sig(d, d);
  std::vector<double> ext(static_cast<std::size_t>(d) + 1);  // [x..., eps] for R_eps
  ext.back() = eps;

  const std::span<const double> xs{x.data(), static_cast<std::size_t>(d)};
  double g_prev = spec.surface.value(x);
  bool crossed = false;
  bool want_snapshot = snapshot_time.has_value();
  const double snap_t = want_snapshot ? *snapshot_time : 0.0;
  if (want_snapshot && snap_t <= 0.0) {
    out.x_snapshot = x;
    out.has_snapshot = true;
    want_snapshot = false;
  }

  const std::size_t max_steps =
      static_cast<std::size_t>(std::ceil(t_cap / h_sde - 1e-12));
  for (std::size_t k = 0; k < max_steps; ++k) {
    const double t = static_cast<double>(k) * h_sde;
    const double t_next = static_cast<double>(k + 1) * h_sde;

    // drift = b + eps^alpha1 (Psi_0 + R_eps)
    spec.b.eval_into(xs, {drift.data(), static_cast<std::size_t>(d)});
    if (eps_a1 != 0.0) {
      spec.psi.eval_into(xs, {buf.data(), static_cast<std::size_t>(d)});
      drift += eps_a1 * buf;
      if (spec.psi_correction) {
        for (int i = 0; i < d; ++i) ext[static_cast<std::size_t>(i)] = x(i);
        for (int i = 0; i < d; ++i)
          drift(i) += eps_a1 * spec.psi_correction->component(i).value(ext);
      }
    }

    fill_normals(path_seed, k, kDomainStep, {z.data(), static_cast<std::size_t>(d)});
    spec.sigma.eval_into(xs, sig);
    noise.noalias() = sig * z;
    x_next = x + h_sde * drift + (eps * sqrt_h) * noise;

    const double g_next = crossed ? 0.0 : spec.surface.value(x_next);
    if (!crossed && (g_prev * g_next < 0.0 || g_next == 0.0)) {
      const double theta = g_next == 0.0 ? 1.0 : g_prev / (g_prev - g_next);
      out.status = ExitStatus::kExited;
      out.tau = t + theta * h_sde;
      out.x_exit = x + theta * (x_next - x);
      out.g_residual = std::abs(spec.surface.value(out.x_exit));
      crossed = true;
    }

    if (want_snapshot && t_next >= snap_t) {
      const double lambda = (snap_t - t) / h_sde;
      out.x_snapshot = x + lambda * (x_next - x);
      out.has_snapshot = true;
      want_snapshot = false;
    }

    if (crossed && !want_snapshot) return out;

    if (!spec.in_box(x_next)) {
      if (!crossed) {
        out.status = ExitStatus::kLeftBox;
        out.tau = t_next;
      }
      return out;
    }
    x = x_next;
    g_prev = crossed ? 0.0 : g_next;
  }
  if (!crossed) out.status = ExitStatus::kCapped;
  return out;
}

void rescale(ExitEnsemble& ensemble, const FlowResult& flow, const Projections& proj,
             double alpha) {
  const double scale = std::pow(ensemble.params.eps, -alpha);
  const int d = static_cast<int>(flow.z.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  ensemble.n_exited = ensemble.n_capped = ensemble.n_left_box = 0;
  for (const auto& s : ensemble.samples) {
    switch (s.status) {
      case ExitStatus::kExited: ++ensemble.n_exited; break;
      case ExitStatus::kCapped: ++ensemble.n_capped; break;
      case ExitStatus::kLeftBox: ++ensemble.n_left_box; break;
    }
  }

  ensemble.alpha = alpha;
  ensemble.u.clear();
  ensemble.pib_w.clear();
  ensemble.u.reserve(ensemble.n_exited);
  ensemble.pib_w.reserve(ensemble.n_exited);
  ensemble.w.resize(static_cast<Eigen::Index>(ensemble.n_exited), d);
  ensemble.pim_w.resize(static_cast<Eigen::Index>(ensemble.n_exited), d - 1);

  Eigen::Index row = 0;
  for (const auto& s : ensemble.samples) {
    if (s.status != ExitStatus::kExited) continue;
    ensemble.u.push_back(scale * (s.tau - flow.T));
    const Eigen::VectorXd w = scale * (s.x_exit - flow.z);
    ensemble.w.row(row) = w.transpose();
    ensemble.pim_w.row(row) = proj.tangent_coords(w).transpose();
    if (s.has_snapshot) {
      ensemble.pib_w.push_back(proj.pib(scale * (s.x_snapshot - flow.z)));
    } else {
      ensemble.pib_w.push_back(nan);
    }
    ++row;
  }
}

ExitEnsemble run_ensemble(const ProblemSpec& spec, const FlowResult& flow,
                          const Projections& proj, double alpha, const McParams& params) {
  if (params.n < 1) throw ConfigError("ensemble size must be >= 1");

  ExitEnsemble ensemble;
  ensemble.params = params;
  ensemble.samples.resize(params.n);
  parallel_for(params.n, params.jobs, [&](std::size_t i) {
    ensemble.samples[i] = simulate_path(spec, params.eps, params.h_sde, params.t_cap,
                                        split_seed(params.master_seed, i), flow.T);
  });
  rescale(ensemble, flow, proj, alpha);
  return ensemble;
}

}  // namespace exitlim
