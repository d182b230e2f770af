#include "exitlim/limit_law.hpp"

#include <cmath>

#include "exitlim/rng.hpp"

namespace exitlim {

Projections make_projections(const Eigen::VectorXd& b_z,
                             const Eigen::VectorXd& surface_gradient) {
  const int d = static_cast<int>(b_z.size());
  const double denom = surface_gradient.dot(b_z);
  const double scale = surface_gradient.norm() * b_z.norm();
  if (scale == 0.0 || std::abs(denom) < 1e-3 * scale)
    throw TangentialCrossingError(
        "b(z) is (numerically) tangent to the surface; the projection pair is undefined");

  Projections p;
  p.b_z = b_z;
  p.normal = surface_gradient;
  p.pib_row = surface_gradient / denom;
  p.pim = Eigen::MatrixXd::Identity(d, d) - b_z * p.pib_row.transpose();

  // Orthonormal completion of the gradient direction: columns 1..d-1 of the
  // Q factor of the d x 1 QR span the tangent plane. Each column is oriented
  // so its largest-magnitude entry is positive, which keeps tangent
  // coordinates deterministic across runs and dimensions.
  Eigen::MatrixXd n(d, 1);
  n.col(0) = surface_gradient;
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(n).householderQ();
  p.tangent = q.rightCols(d - 1);
  for (int j = 0; j < p.tangent.cols(); ++j) {
    int arg_max = 0;
    p.tangent.col(j).cwiseAbs().maxCoeff(&arg_max);
    if (p.tangent(arg_max, j) < 0.0) p.tangent.col(j) = -p.tangent.col(j);
  }
  return p;
}

namespace {

double min3(double a, double b, double c) { return std::min(a, std::min(b, c)); }

}  // namespace

LimitLaw compute_limit_law(const ProblemSpec& spec, const Trajectory& traj,
                           const FlowResult& flow, const Linearization& lin) {
  if (lin.t.size() != traj.t.size() || lin.h != traj.h)
    throw ConfigError("trajectory and linearization grids are misaligned");
  const int d = spec.dim;

  LimitLaw law;
  law.alpha = min3(spec.alpha1, spec.init.alpha2, 1.0);
  law.active_psi = (spec.alpha1 == law.alpha);
  law.active_xi = (spec.init.alpha2 == law.alpha);
  law.active_noise = (1.0 == law.alpha);

  const auto [phi_T, phi_T_inv] = linearization_at(traj, spec.b, lin, flow.T);
  const std::size_t k = flow.hit_index;
  const double h = traj.h;
  const double dt_last = flow.T - traj.t[k];

  law.mu = Eigen::VectorXd::Zero(d);
  law.cov = Eigen::MatrixXd::Zero(d, d);

  if (law.active_xi) {
    law.mu += phi_T * spec.init.xi_mean(d);
    law.cov += phi_T * spec.init.xi_covariance(d) * phi_T.transpose();
  }

  // Trapezoid quadrature on the shared ODE grid up to t_k, plus the partial
  // cell [t_k, T] evaluated at the refined hit point.
  if (law.active_psi) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd prev = lin.phi_inv[0] * spec.psi.eval(traj.x[0]);
    for (std::size_t i = 1; i <= k; ++i) {
      const Eigen::VectorXd cur = lin.phi_inv[i] * spec.psi.eval(traj.x[i]);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
    }
    const Eigen::VectorXd at_T = phi_T_inv * spec.psi.eval(flow.z);
    acc += 0.5 * dt_last * (prev + at_T);
    law.mu += phi_T * acc;
  }

  if (law.active_noise) {
    auto integrand = [&](const Eigen::MatrixXd& phi_inv, const Eigen::VectorXd& x) {
      const Eigen::MatrixXd s = spec.sigma.eval(x);
      const Eigen::MatrixXd m = phi_inv * s;
      return Eigen::MatrixXd(m * m.transpose());
    };
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd prev = integrand(lin.phi_inv[0], traj.x[0]);
    for (std::size_t i = 1; i <= k; ++i) {
      const Eigen::MatrixXd cur = integrand(lin.phi_inv[i], traj.x[i]);
      acc += 0.5 * h * (prev + cur);
      prev = cur;
    }
    const Eigen::MatrixXd at_T = integrand(phi_T_inv, flow.z);
    acc += 0.5 * dt_last * (prev + at_T);
    law.cov += phi_T * acc * phi_T.transpose();
  }

  // Rounding can leave cov slightly indefinite: symmetrize and clip.
  law.cov = 0.5 * (law.cov + law.cov.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(law.cov);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    law.psd_clip = -eig.eigenvalues().minCoeff();
    law.cov = eig.eigenvectors() *
              eig.eigenvalues().cwiseMax(0.0).asDiagonal() *
              eig.eigenvectors().transpose();
  }

  law.proj = make_projections(spec.b.eval(flow.z), spec.surface.gradient(flow.z));
  law.time_mean = -law.proj.pib(law.mu);
  law.time_var = law.proj.pib_row.dot(law.cov * law.proj.pib_row);
  const Eigen::MatrixXd tp = law.proj.tangent.transpose() * law.proj.pim;
  law.point_mean = tp * law.mu;
  law.point_cov = tp * law.cov * tp.transpose();
  return law;
}

LimitSamples sample_limit(const LimitLaw& law, std::size_t n, std::uint64_t seed) {
  const int d = static_cast<int>(law.mu.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(law.cov);
  const Eigen::MatrixXd root =
      eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

  LimitSamples out;
  out.time.resize(n);
  out.point.resize(static_cast<Eigen::Index>(n), d - 1);
  Eigen::VectorXd z(d);
  for (std::size_t i = 0; i < n; ++i) {
    fill_normals(seed, i, kDomainLimit, {z.data(), static_cast<std::size_t>(d)});
    const Eigen::VectorXd x = law.mu + root * z;
    out.time[i] = -law.proj.pib(x);
    out.point.row(static_cast<Eigen::Index>(i)) = law.proj.tangent_coords(x).transpose();
  }
  return out;
}

}  // namespace exitlim
