#pragma once

// Problem definition: expression-backed vector/matrix fields, the implicit
// target surface, the initial-condition law, and the validated ProblemSpec.
// All records are immutable after construction and safe to share.

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exitlim/expression.hpp"

namespace exitlim {

class VectorField {
 public:
  VectorField() = default;

  // `extra_vars` widens the allowed variable range beyond dim (the
  // epsilon-correction field sees the noise amplitude as slot dim+1).
  VectorField(int dim, std::vector<Expression> components, int extra_vars = 0);

  int dim() const { return dim_; }
  const Expression& component(int i) const { return comps_[static_cast<std::size_t>(i)]; }

  void eval_into(std::span<const double> x, std::span<double> out) const;
  Eigen::VectorXd eval(const Eigen::VectorXd& p) const;

  // Exact-to-roundoff derivative via forward-mode dual numbers.
  Eigen::MatrixXd jacobian(const Eigen::VectorXd& p) const;

  bool lipschitz_checked = false;

 private:
  int dim_ = 0;
  std::vector<Expression> comps_;
};

class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(int dim, std::vector<Expression> components);  // row-major d*d

  int dim() const { return dim_; }
  const Expression& component(int i, int j) const {
    return comps_[static_cast<std::size_t>(i * dim_ + j)];
  }

  void eval_into(std::span<const double> x, Eigen::MatrixXd& out) const;
  Eigen::MatrixXd eval(const Eigen::VectorXd& p) const;

 private:
  int dim_ = 0;
  std::vector<Expression> comps_;
};

// Implicit hypersurface M = {x : g(x) = 0}.
class Surface {
 public:
  Surface() = default;
  explicit Surface(Expression g) : g_(std::move(g)) {}

  const Expression& g() const { return g_; }
  double value(const Eigen::VectorXd& p) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& p) const;

 private:
  Expression g_;
};

// Law of the initial perturbation: X(0) = x0 + eps^alpha2 * xi.
struct InitialLaw {
  enum class Kind { kZero, kPointMass, kGaussian };

  Kind kind = Kind::kZero;
  Eigen::VectorXd x0;
  double alpha2 = 1.0;
  Eigen::VectorXd xi_value;  // point-mass value or Gaussian mean
  Eigen::MatrixXd xi_cov;    // Gaussian covariance
  // How xi_eps approaches xi_0; recorded for reporting only, it does not
  // change any computed law.
  std::string convergence = "distribution";

  Eigen::VectorXd xi_mean(int d) const;
  Eigen::MatrixXd xi_covariance(int d) const;
  void validate(int d) const;
};

struct ProblemSpec {
  int dim = 0;
  VectorField b;
  MatrixField sigma;
  VectorField psi;                            // Psi_0
  std::optional<VectorField> psi_correction;  // R_eps, defaults to 0
  double alpha1 = 1.0;
  InitialLaw init;
  Surface surface;
  Eigen::VectorXd bbox_lo, bbox_hi;
  double t_max = 0.0;

  void validate() const;
  bool in_box(const Eigen::VectorXd& p) const;
};

// Samples the Jacobian Frobenius norm of f over the box and marks the field
// as checked; used for the Lipschitz warning (regularity is only required
// near the orbit, so a large bound warns rather than rejects).
double sample_jacobian_bound(VectorField& f, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, int samples, std::uint64_t seed);

}  // namespace exitlim
