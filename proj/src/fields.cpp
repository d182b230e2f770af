#include "exitlim/fields.hpp"

#include <cmath>

#include "exitlim/rng.hpp"

namespace exitlim {

VectorField::VectorField(int dim, std::vector<Expression> components, int extra_vars)
    : dim_(dim), comps_(std::move(components)) {
  if (dim_ < 1) throw ConfigError("vector field dimension must be >= 1");
  if (static_cast<int>(comps_.size()) != dim_)
    throw ConfigError("vector field needs exactly " + std::to_string(dim_) +
                      " component expressions, got " + std::to_string(comps_.size()));
  for (const auto& c : comps_) {
    if (c.num_vars() > dim_ + extra_vars)
      throw ConfigError("component references variable x" + std::to_string(c.num_vars()) +
                        " beyond dimension " + std::to_string(dim_ + extra_vars));
  }
}

void VectorField::eval_into(std::span<const double> x, std::span<double> out) const {
  for (int i = 0; i < dim_; ++i)
    out[static_cast<std::size_t>(i)] = comps_[static_cast<std::size_t>(i)].value(x);
}

Eigen::VectorXd VectorField::eval(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("point dimension does not match field dimension");
  Eigen::VectorXd out(dim_);
  eval_into({p.data(), static_cast<std::size_t>(p.size())},
            {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

Eigen::MatrixXd VectorField::jacobian(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("point dimension does not match field dimension");
  Eigen::MatrixXd jac(dim_, dim_);
  const std::span<const double> x{p.data(), static_cast<std::size_t>(p.size())};
  for (int j = 0; j < dim_; ++j)
    for (int i = 0; i < dim_; ++i)
      jac(i, j) = comps_[static_cast<std::size_t>(i)].dual(x, j).der;
  return jac;
}

MatrixField::MatrixField(int dim, std::vector<Expression> components)
    : dim_(dim), comps_(std::move(components)) {
  if (dim_ < 1) throw ConfigError("matrix field dimension must be >= 1");
  if (static_cast<int>(comps_.size()) != dim_ * dim_)
    throw ConfigError("matrix field needs " + std::to_string(dim_ * dim_) +
                      " component expressions, got " + std::to_string(comps_.size()));
  for (const auto& c : comps_) {
    if (c.num_vars() > dim_)
      throw ConfigError("matrix component references variable x" +
                        std::to_string(c.num_vars()) + " beyond dimension " +
                        std::to_string(dim_));
  }
}

void MatrixField::eval_into(std::span<const double> x, Eigen::MatrixXd& out) const {
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j)
      out(i, j) = comps_[static_cast<std::size_t>(i * dim_ + j)].value(x);
}

Eigen::MatrixXd MatrixField::eval(const Eigen::VectorXd& p) const {
  if (p.size() != dim_) throw ConfigError("point dimension does not match field dimension");
  Eigen::MatrixXd out(dim_, dim_);
  eval_into({p.data(), static_cast<std::size_t>(p.size())}, out);
  return out;
}

double Surface::value(const Eigen::VectorXd& p) const {
  return g_.value({p.data(), static_cast<std::size_t>(p.size())});
}

Eigen::VectorXd Surface::gradient(const Eigen::VectorXd& p) const {
  Eigen::VectorXd grad(p.size());
  const std::span<const double> x{p.data(), static_cast<std::size_t>(p.size())};
  for (int j = 0; j < p.size(); ++j) grad(j) = g_.dual(x, j).der;
  return grad;
}

Eigen::VectorXd InitialLaw::xi_mean(int d) const {
  switch (kind) {
    case Kind::kZero: return Eigen::VectorXd::Zero(d);
    case Kind::kPointMass:
    case Kind::kGaussian: return xi_value;
  }
  return Eigen::VectorXd::Zero(d);
}

Eigen::MatrixXd InitialLaw::xi_covariance(int d) const {
  if (kind == Kind::kGaussian) return xi_cov;
  return Eigen::MatrixXd::Zero(d, d);
}

void InitialLaw::validate(int d) const {
  if (x0.size() != d) throw ConfigError("x0 has wrong dimension");
  if (!(alpha2 > 0.0)) throw ConfigError("alpha2 must be positive");
  if (kind == Kind::kZero) return;
  if (xi_value.size() != d) throw ConfigError("xi value/mean has wrong dimension");
  if (kind == Kind::kGaussian) {
    if (xi_cov.rows() != d || xi_cov.cols() != d)
      throw ConfigError("xi covariance has wrong dimension");
    if (!xi_cov.isApprox(xi_cov.transpose(), 1e-12))
      throw ConfigError("xi covariance must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xi_cov);
    if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, xi_cov.norm()))
      throw ConfigError("xi covariance must be positive semidefinite");
  }
}

bool ProblemSpec::in_box(const Eigen::VectorXd& p) const {
  for (int i = 0; i < dim; ++i)
    if (p(i) < bbox_lo(i) || p(i) > bbox_hi(i)) return false;
  return true;
}

void ProblemSpec::validate() const {
  if (dim < 1) throw ConfigError("dimension must be >= 1");
  if (b.dim() != dim) throw ConfigError("drift field dimension mismatch");
  if (sigma.dim() != dim) throw ConfigError("sigma field dimension mismatch");
  if (psi.dim() != dim) throw ConfigError("psi field dimension mismatch");
  if (psi_correction && psi_correction->dim() != dim)
    throw ConfigError("psi correction field dimension mismatch");
  if (!(alpha1 > 0.0)) throw ConfigError("alpha1 must be positive");
  init.validate(dim);
  if (surface.g().empty()) throw ConfigError("surface expression missing");
  if (surface.g().num_vars() > dim)
    throw ConfigError("surface expression references variables beyond the dimension");
  if (bbox_lo.size() != dim || bbox_hi.size() != dim)
    throw ConfigError("bounding box has wrong dimension");
  for (int i = 0; i < dim; ++i)
    if (!(bbox_lo(i) < bbox_hi(i)))
      throw ConfigError("bounding box is empty in coordinate " + std::to_string(i + 1));
  if (!in_box(init.x0)) throw ConfigError("x0 lies outside the bounding box");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");

  // Every component must evaluate across the box: probe corners (up to 2^8),
  // the center, and a handful of deterministic pseudo-random points.
  std::vector<Eigen::VectorXd> probes;
  probes.push_back(0.5 * (bbox_lo + bbox_hi));
  const int corner_dims = std::min(dim, 8);
  for (int mask = 0; mask < (1 << corner_dims); ++mask) {
    Eigen::VectorXd p = bbox_lo;
    for (int i = 0; i < corner_dims; ++i)
      if (mask & (1 << i)) p(i) = bbox_hi(i);
    probes.push_back(std::move(p));
  }
  for (int s = 0; s < 16; ++s) {
    Eigen::VectorXd p(dim);
    for (int i = 0; i < dim; ++i) {
      const auto w = philox4x32(0x9a0b5eedULL, static_cast<std::uint32_t>(s),
                                static_cast<std::uint32_t>(i), 0, 0xb0);
      p(i) = bbox_lo(i) + unit_halfopen((static_cast<std::uint64_t>(w[0]) << 32) | w[1]) *
                              (bbox_hi(i) - bbox_lo(i));
    }
    probes.push_back(std::move(p));
  }
  for (const auto& p : probes) {
    try {
      (void)b.eval(p);
      (void)sigma.eval(p);
      (void)psi.eval(p);
      (void)surface.value(p);
    } catch (const DomainError& e) {
      throw ConfigError(std::string("a field fails to evaluate inside the bounding box: ") +
                        e.what());
    }
  }
}

double sample_jacobian_bound(VectorField& f, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, int samples, std::uint64_t seed) {
  double bound = 0.0;
  const int d = f.dim();
  Eigen::VectorXd p(d);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < d; ++i) {
      const auto w = philox4x32(seed, static_cast<std::uint32_t>(s),
                                static_cast<std::uint32_t>(i), 0, 0xf1e1d);
      p(i) = lo(i) +
             unit_halfopen((static_cast<std::uint64_t>(w[0]) << 32) | w[1]) * (hi(i) - lo(i));
    }
    bound = std::max(bound, f.jacobian(p).norm());
  }
  f.lipschitz_checked = true;
  return bound;
}

}  // namespace exitlim
