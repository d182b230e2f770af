#include "exitlim/flow.hpp"

#include <cmath>

namespace exitlim {

namespace {

// One RK4 step of the joint system (x, Phi, Phi^-1). The x stages do not
// depend on Phi, so the x component reproduces plain rk4_step exactly.
void joint_rk4_step(const VectorField& field, double h, Eigen::VectorXd& x,
                    Eigen::MatrixXd& phi, Eigen::MatrixXd& phi_inv) {
  const Eigen::VectorXd k1 = field.eval(x);
  const Eigen::MatrixXd j1 = field.jacobian(x);
  const Eigen::MatrixXd p1 = j1 * phi;
  const Eigen::MatrixXd q1 = -phi_inv * j1;

  const Eigen::VectorXd x2 = x + 0.5 * h * k1;
  const Eigen::VectorXd k2 = field.eval(x2);
  const Eigen::MatrixXd j2 = field.jacobian(x2);
  const Eigen::MatrixXd p2 = j2 * (phi + 0.5 * h * p1);
  const Eigen::MatrixXd q2 = -(phi_inv + 0.5 * h * q1) * j2;

  const Eigen::VectorXd x3 = x + 0.5 * h * k2;
  const Eigen::VectorXd k3 = field.eval(x3);
  const Eigen::MatrixXd j3 = field.jacobian(x3);
  const Eigen::MatrixXd p3 = j3 * (phi + 0.5 * h * p2);
  const Eigen::MatrixXd q3 = -(phi_inv + 0.5 * h * q2) * j3;

  const Eigen::VectorXd x4 = x + h * k3;
  const Eigen::VectorXd k4 = field.eval(x4);
  const Eigen::MatrixXd j4 = field.jacobian(x4);
  const Eigen::MatrixXd p4 = j4 * (phi + h * p3);
  const Eigen::MatrixXd q4 = -(phi_inv + h * q3) * j4;

  x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  phi += (h / 6.0) * (p1 + 2.0 * p2 + 2.0 * p3 + p4);
  phi_inv += (h / 6.0) * (q1 + 2.0 * q2 + 2.0 * q3 + q4);
}

}  // namespace

std::size_t Trajectory::node_before(double time) const {
  if (time <= 0.0) return 0;
  std::size_t i = static_cast<std::size_t>(time / h);
  if (i >= t.size()) i = t.size() - 1;
  // Guard against roundoff on the division.
  while (i + 1 < t.size() && t[i + 1] <= time) ++i;
  while (i > 0 && t[i] > time) --i;
  return i;
}

Eigen::VectorXd rk4_step(const VectorField& field, const Eigen::VectorXd& x, double h) {
  const Eigen::VectorXd k1 = field.eval(x);
  const Eigen::VectorXd k2 = field.eval(x + 0.5 * h * k1);
  const Eigen::VectorXd k3 = field.eval(x + 0.5 * h * k2);
  const Eigen::VectorXd k4 = field.eval(x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory integrate_flow(const VectorField& field, const Eigen::VectorXd& x0, double h_ode,
                          double t_max, const std::optional<Box>& box) {
  if (!(h_ode > 0.0)) throw ConfigError("h_ode must be positive");
  if (!(t_max >= h_ode)) throw ConfigError("t_max must be at least h_ode");

  const std::size_t steps = static_cast<std::size_t>(std::ceil(t_max / h_ode - 1e-12));
  Trajectory traj;
  traj.h = h_ode;
  traj.t.reserve(steps + 1);
  traj.x.reserve(steps + 1);
  traj.t.push_back(0.0);
  traj.x.push_back(x0);
  Eigen::VectorXd x = x0;
  for (std::size_t k = 0; k < steps; ++k) {
    x = rk4_step(field, x, h_ode);
    const double t_next = static_cast<double>(k + 1) * h_ode;
    if (box && !box->contains(x))
      throw BoxEscapeError("flow left the bounding box at t = " + std::to_string(t_next),
                           t_next);
    traj.t.push_back(t_next);
    traj.x.push_back(x);
  }
  return traj;
}

double transversality_margin(const Eigen::VectorXd& z, const Surface& surface,
                             const VectorField& field) {
  const Eigen::VectorXd grad = surface.gradient(z);
  const Eigen::VectorXd bz = field.eval(z);
  const double gn = grad.norm();
  const double bn = bz.norm();
  if (gn == 0.0) throw DomainError("surface gradient vanishes at the crossing point");
  if (bn == 0.0) throw DomainError("drift vanishes at the crossing point");
  return std::abs(grad.dot(bz)) / (gn * bn);
}

FlowResult first_hit(const Trajectory& traj, const Surface& surface, const VectorField& field,
                     double margin_tol) {
  if (traj.x.size() < 2) throw ConfigError("trajectory too short for hit detection");

  // Scale for the g-residual target: the dynamic range of g along the orbit.
  double g_scale = 1.0;
  std::vector<double> g(traj.x.size());
  for (std::size_t i = 0; i < traj.x.size(); ++i) {
    g[i] = surface.value(traj.x[i]);
    g_scale = std::max(g_scale, std::abs(g[i]));
  }
  const double g_tol = 1e-10 * g_scale;

  if (std::abs(g[0]) <= 1e-12 * g_scale)
    throw TangentialCrossingError(
        "initial point lies on the surface (g(x0) = 0); the first crossing is undefined");

  std::size_t k = traj.x.size();
  for (std::size_t i = 0; i + 1 < traj.x.size(); ++i) {
    if (g[i] * g[i + 1] < 0.0 || g[i + 1] == 0.0) {
      k = i;
      break;
    }
  }
  if (k == traj.x.size())
    throw NoHitError("the orbit does not reach the surface before t_max = " +
                     std::to_string(traj.t_end()));

  // Refine inside [t_k, t_{k+1}] by bisection on g(S^t x0); each candidate is
  // re-integrated from the bracketing node with a single partial step.
  double lo = 0.0, hi = traj.h;
  double g_lo = g[k];
  double T = traj.t[k];
  Eigen::VectorXd z = traj.x[k];
  if (g[k + 1] == 0.0) {
    T = traj.t[k + 1];
    z = traj.x[k + 1];
  } else {
    for (int iter = 0; iter < 60; ++iter) {
      const double mid = 0.5 * (lo + hi);
      const Eigen::VectorXd xm = rk4_step(field, traj.x[k], mid);
      const double gm = surface.value(xm);
      T = traj.t[k] + mid;
      z = xm;
      if (std::abs(gm) <= g_tol) break;
      if (g_lo * gm < 0.0) {
        hi = mid;
      } else {
        lo = mid;
        g_lo = gm;
      }
    }
  }
  if (std::abs(surface.value(z)) > g_tol)
    throw NumericalError("hit refinement did not reach the g-residual target");

  FlowResult res;
  res.T = T;
  res.z = z;
  res.hit_index = k;
  res.g_scale = g_scale;
  res.margin = transversality_margin(z, surface, field);
  if (res.margin < margin_tol)
    throw TangentialCrossingError(
        "the crossing is tangential (margin " + std::to_string(res.margin) +
        " < " + std::to_string(margin_tol) +
        "); the drift must not lie in the tangent plane at the hit point");
  return res;
}

Linearization linearize(const Trajectory& traj, const VectorField& field) {
  const int d = traj.dim();
  Linearization lin;
  lin.h = traj.h;
  lin.t = traj.t;
  lin.phi.reserve(traj.t.size());
  lin.phi_inv.reserve(traj.t.size());

  Eigen::VectorXd x = traj.x0();
  Eigen::MatrixXd phi = Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd phi_inv = Eigen::MatrixXd::Identity(d, d);
  lin.phi.push_back(phi);
  lin.phi_inv.push_back(phi_inv);
  for (std::size_t k = 0; k + 1 < traj.t.size(); ++k) {
    joint_rk4_step(field, traj.h, x, phi, phi_inv);
    if (phi.determinant() <= 0.0)
      throw NumericalError("fundamental matrix lost positivity of its determinant");
    lin.phi.push_back(phi);
    lin.phi_inv.push_back(phi_inv);
  }
  return lin;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearization_at(const Trajectory& traj,
                                                             const VectorField& field,
                                                             const Linearization& lin,
                                                             double time) {
  const std::size_t i = traj.node_before(time);
  const double dt = time - traj.t[i];
  Eigen::VectorXd x = traj.x[i];
  Eigen::MatrixXd phi = lin.phi[i];
  Eigen::MatrixXd phi_inv = lin.phi_inv[i];
  if (dt > 0.0) joint_rk4_step(field, dt, x, phi, phi_inv);
  return {phi, phi_inv};
}

}  // namespace exitlim
