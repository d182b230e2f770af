#pragma once

// The limiting law of the rescaled exit data: active exponent
// alpha = min(alpha1, alpha2, 1), the deterministic shift, the Gaussian
// covariance (stochastic-integral covariance via the Ito isometry plus the
// initial-condition fold), and its images under the oblique projections
// (-pi_b, pi_M) at the hit point.

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "exitlim/fields.hpp"
#include "exitlim/flow.hpp"

namespace exitlim {

// Oblique decomposition v = pi_b(v) b(z) + pi_M(v), with pi_M(v) in the
// tangent plane of the surface at z.
struct Projections {
  Eigen::VectorXd b_z;
  Eigen::VectorXd normal;   // grad g(z)
  Eigen::VectorXd pib_row;  // pi_b(v) = pib_row . v
  Eigen::MatrixXd pim;      // d x d matrix of pi_M
  Eigen::MatrixXd tangent;  // d x (d-1) orthonormal basis of the tangent plane

  double pib(const Eigen::VectorXd& v) const { return pib_row.dot(v); }
  Eigen::VectorXd pim_apply(const Eigen::VectorXd& v) const { return pim * v; }
  // Coordinates of pi_M(v) in the orthonormal tangent basis.
  Eigen::VectorXd tangent_coords(const Eigen::VectorXd& v) const {
    return tangent.transpose() * (pim * v);
  }
};

Projections make_projections(const Eigen::VectorXd& b_z, const Eigen::VectorXd& surface_gradient);

struct LimitLaw {
  double alpha = 1.0;
  bool active_xi = false;     // alpha2 attains the min
  bool active_psi = false;    // alpha1 attains the min
  bool active_noise = false;  // 1 attains the min
  Eigen::VectorXd mu;         // deterministic mean of phi_0(T)
  Eigen::MatrixXd cov;        // Gaussian covariance of phi_0(T), PSD
  Projections proj;

  double time_mean = 0.0;  // law of -pi_b phi_0(T)
  double time_var = 0.0;
  Eigen::VectorXd point_mean;  // law of pi_M phi_0(T) in tangent coordinates
  Eigen::MatrixXd point_cov;

  double psd_clip = 0.0;  // largest negative eigenvalue clipped off cov
};

LimitLaw compute_limit_law(const ProblemSpec& spec, const Trajectory& traj,
                           const FlowResult& flow, const Linearization& lin);

struct LimitSamples {
  std::vector<double> time;  // draws of -pi_b phi_0(T)
  Eigen::MatrixXd point;     // n x (d-1) tangent coordinates of pi_M phi_0(T)
};

// n i.i.d. draws from the limit law; deterministic under a fixed seed.
LimitSamples sample_limit(const LimitLaw& law, std::size_t n, std::uint64_t seed);

}  // namespace exitlim
