#pragma once

// Deterministic flow machinery: fixed-step RK4 integration of dx/dt = b(x),
// first transversal crossing of the target surface, and the fundamental
// matrix Phi of the variational equation dPhi/dt = Db(S^t x0) Phi together
// with its inverse (integrated from its own ODE, not by matrix inversion).

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "exitlim/fields.hpp"

namespace exitlim {

struct Box {
  Eigen::VectorXd lo, hi;
  bool contains(const Eigen::VectorXd& p) const {
    for (int i = 0; i < p.size(); ++i)
      if (p(i) < lo(i) || p(i) > hi(i)) return false;
    return true;
  }
};

struct Trajectory {
  double h = 0.0;                   // grid step
  std::vector<double> t;            // uniform grid, t[0] = 0
  std::vector<Eigen::VectorXd> x;   // flow samples S^t x0

  int dim() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
  const Eigen::VectorXd& x0() const { return x.front(); }
  double t_end() const { return t.back(); }

  // Largest node index with t[i] <= time (clamped to the grid).
  std::size_t node_before(double time) const;
};

struct FlowResult {
  double T = 0.0;            // refined hit time, not grid-snapped
  Eigen::VectorXd z;         // hit point on the surface
  double margin = 0.0;       // |<grad g, b>| / (|grad g| |b|) at z
  std::size_t hit_index = 0; // grid node just before the crossing
  double g_scale = 1.0;      // scale used for the |g(z)| residual bound
};

struct Linearization {
  double h = 0.0;
  std::vector<double> t;                 // shared with the trajectory grid
  std::vector<Eigen::MatrixXd> phi;      // Phi(t_i), Phi(0) = I
  std::vector<Eigen::MatrixXd> phi_inv;  // integrated from d/dt Phi^-1 = -Phi^-1 A
};

// Single classical RK4 step of dx/dt = field(x).
Eigen::VectorXd rk4_step(const VectorField& field, const Eigen::VectorXd& x, double h);

// Integrates the flow on a fixed grid of step h_ode until the grid covers
// t_max. Throws BoxEscapeError (with the escape time) if a box is given and
// the state leaves it.
Trajectory integrate_flow(const VectorField& field, const Eigen::VectorXd& x0, double h_ode,
                          double t_max, const std::optional<Box>& box = std::nullopt);

// Locates the first sign change of g along the trajectory and refines the
// crossing by bisection with local re-integration. Requires g(x0) != 0 and a
// transversality margin of at least `margin_tol` at the crossing.
FlowResult first_hit(const Trajectory& traj, const Surface& surface, const VectorField& field,
                     double margin_tol = 1e-3);

// Fundamental matrix and its inverse on the trajectory grid (joint RK4 with
// the flow, so stage points line up with the trajectory's own steps).
Linearization linearize(const Trajectory& traj, const VectorField& field);

// Phi(t), Phi^-1(t) at an off-grid time via one partial joint step from the
// node below.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> linearization_at(const Trajectory& traj,
                                                             const VectorField& field,
                                                             const Linearization& lin,
                                                             double time);

// |<grad g(z), b(z)>| / (|grad g(z)| |b(z)|) in [0, 1].
double transversality_margin(const Eigen::VectorXd& z, const Surface& surface,
                             const VectorField& field);

}  // namespace exitlim
