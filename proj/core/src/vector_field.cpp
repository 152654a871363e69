#include "steinlab/vector_field.hpp"

#include <sstream>

#include "steinlab/errors.hpp"

namespace steinlab {

namespace {

double squared_norm_checked(const Eigen::VectorXd& x) {
  const double t = x.squaredNorm();
  if (t == 0.0) throw Error(ErrorCode::singular_point, "shrink field evaluated at x = 0");
  return t;
}

}  // namespace

VectorField james_stein_field(double a) {
  VectorField f;
  std::ostringstream name;
  name << "james_stein(" << a << ")";
  f.name = name.str();
  f.singular_at_origin = true;
  f.g = [a](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
    return (-a / squared_norm_checked(x)) * x;
  };
  f.div_x = [a](const Eigen::VectorXd& x, double) {
    const double p = static_cast<double>(x.size());
    return -a * (p - 2.0) / squared_norm_checked(x);
  };
  f.d_usq_norm_sq = [](const Eigen::VectorXd&, double) { return 0.0; };
  return f;
}

VectorField baranchik_field(ShrinkFn r, double a) {
  VectorField f;
  std::ostringstream name;
  name << "baranchik(" << a << "," << r.describe() << ")";
  f.name = name.str();
  f.singular_at_origin = true;
  f.g = [a, r](const Eigen::VectorXd& x, double) -> Eigen::VectorXd {
    const double t = squared_norm_checked(x);
    return (-a * r(t) / t) * x;
  };
  // div(x r(t)/t) = (p - 2) r(t)/t + 2 r'(t)
  f.div_x = [a, r](const Eigen::VectorXd& x, double) {
    const double t = squared_norm_checked(x);
    const double p = static_cast<double>(x.size());
    return -a * ((p - 2.0) * r(t) / t + 2.0 * r.derivative(t));
  };
  f.d_usq_norm_sq = [](const Eigen::VectorXd&, double) { return 0.0; };
  return f;
}

VectorField baranchik_unknown_field(ShrinkFn r, int k) {
  if (k < 1) throw Error(ErrorCode::invalid_argument, "unknown-scale field needs k >= 1");
  VectorField f;
  std::ostringstream name;
  name << "baranchik_unknown(" << r.describe() << ",k=" << k << ")";
  f.name = name.str();
  f.singular_at_origin = true;
  f.u_dependent = true;
  const double kp2 = k + 2.0;
  f.g = [kp2, r](const Eigen::VectorXd& x, double s) -> Eigen::VectorXd {
    const double t = squared_norm_checked(x);
    return (-kp2 * r(t / s) / t) * x;
  };
  f.div_x = [kp2, r](const Eigen::VectorXd& x, double s) {
    const double t = squared_norm_checked(x);
    const double p = static_cast<double>(x.size());
    const double w = t / s;
    return -kp2 * ((p - 2.0) * r(w) / t + 2.0 * r.derivative(w) / s);
  };
  // |g|^2 = (k+2)^2 r(t/s)^2 / t
  f.d_usq_norm_sq = [kp2, r](const Eigen::VectorXd& x, double s) {
    const double t = squared_norm_checked(x);
    const double w = t / s;
    return -2.0 * kp2 * kp2 * r(w) * r.derivative(w) / (s * s);
  };
  return f;
}

VectorField affine_field(Eigen::MatrixXd a, Eigen::VectorXd b) {
  if (a.rows() != a.cols() || a.rows() != b.size()) {
    throw Error(ErrorCode::dimension_mismatch, "affine field needs square A and matching b");
  }
  VectorField f;
  f.name = "affine";
  const double trace = a.trace();
  f.g = [a = std::move(a), b = std::move(b)](const Eigen::VectorXd& x,
                                             double) -> Eigen::VectorXd {
    if (x.size() != b.size()) {
      throw Error(ErrorCode::dimension_mismatch, "affine field dimension mismatch");
    }
    return a * x + b;
  };
  f.div_x = [trace](const Eigen::VectorXd&, double) { return trace; };
  f.d_usq_norm_sq = [](const Eigen::VectorXd&, double) { return 0.0; };
  return f;
}

VectorField constant_field(Eigen::VectorXd c) {
  const auto p = c.size();
  VectorField f = affine_field(Eigen::MatrixXd::Zero(p, p), std::move(c));
  f.name = "constant";
  return f;
}

double divergence(const VectorField& field, const Eigen::VectorXd& x, double usq) {
  return field.div_x(x, usq);
}

double divergence_fd(const VectorField& field, const Eigen::VectorXd& x, double step,
                     double usq) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "step must be positive");
  double total = 0.0;
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + step;
    const double ahead = field.g(probe, usq)[i];
    probe[i] = x[i] - step;
    const double behind = field.g(probe, usq)[i];
    probe[i] = x[i];
    total += (ahead - behind) / (2.0 * step);
  }
  return total;
}

double usq_derivative_fd(const VectorField& field, const Eigen::VectorXd& x, double usq,
                         double step) {
  if (!(step > 0.0) || !(usq > step)) {
    throw Error(ErrorCode::invalid_argument, "need 0 < step < |u|^2");
  }
  const double ahead = field.g(x, usq + step).squaredNorm();
  const double behind = field.g(x, usq - step).squaredNorm();
  return (ahead - behind) / (2.0 * step);
}

double laplacian_fd(const std::function<double(const Eigen::VectorXd&)>& h,
                    const Eigen::VectorXd& x, double step) {
  // fourth-order five-point stencil per axis
  const double centre = h(x);
  double total = 0.0;
  Eigen::VectorXd probe = x;
  auto at = [&](Eigen::Index i, double offset) {
    probe[i] = x[i] + offset;
    const double v = h(probe);
    probe[i] = x[i];
    return v;
  };
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double near_sum = at(i, step) + at(i, -step);
    const double far_sum = at(i, 2.0 * step) + at(i, -2.0 * step);
    total += (16.0 * near_sum - far_sum - 30.0 * centre) / (12.0 * step * step);
  }
  return total;
}

}  // namespace steinlab
