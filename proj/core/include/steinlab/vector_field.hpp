#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "steinlab/shrink_fn.hpp"

namespace steinlab {

/// Shrinkage direction g(x, |u|^2) with its analytic x-divergence and the
/// partial derivative of |g|^2 with respect to |u|^2.
///
/// Known-scale estimators are X + sigma^2 g(X); unknown-scale estimators are
/// X + |U|^2 / (k + 2) g(X, |U|^2). Fields are nondimensional.
struct VectorField {
  std::string name;
  std::function<Eigen::VectorXd(const Eigen::VectorXd& x, double usq)> g;
  std::function<double(const Eigen::VectorXd& x, double usq)> div_x;
  std::function<double(const Eigen::VectorXd& x, double usq)> d_usq_norm_sq;
  bool u_dependent = false;
  // g is undefined at x = 0.
  bool singular_at_origin = false;

  Eigen::VectorXd operator()(const Eigen::VectorXd& x, double usq = 0.0) const {
    return g(x, usq);
  }
};

// g(x) = -a x / |x|^2
VectorField james_stein_field(double a);
// g(x) = -a r(|x|^2) x / |x|^2
VectorField baranchik_field(ShrinkFn r, double a = 1.0);
// g(x, s) = -(k + 2) r(|x|^2 / s) x / |x|^2, the unknown-scale Baranchik field
VectorField baranchik_unknown_field(ShrinkFn r, int k);
// g(x) = A x + b
VectorField affine_field(Eigen::MatrixXd a, Eigen::VectorXd b);
VectorField constant_field(Eigen::VectorXd c);

/// Analytic divergence in x. Throws singular_point at the origin for shrink
/// fields.
double divergence(const VectorField& field, const Eigen::VectorXd& x, double usq = 0.0);

/// Central-difference divergence; independent of the analytic formula.
double divergence_fd(const VectorField& field, const Eigen::VectorXd& x, double step,
                     double usq = 0.0);

/// Central difference of |g|^2 in |u|^2.
double usq_derivative_fd(const VectorField& field, const Eigen::VectorXd& x, double usq,
                         double step);

/// Sum of central second differences of a scalar function.
double laplacian_fd(const std::function<double(const Eigen::VectorXd&)>& h,
                    const Eigen::VectorXd& x, double step);

}  // namespace steinlab
