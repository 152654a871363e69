#include "steinlab/estimators.hpp"

#include <cmath>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/errors.hpp"

namespace steinlab {

namespace {

void require_nonnegative(double a, const char* what) {
  if (!(std::isfinite(a) && a >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, std::string(what) + " must be >= 0");
  }
}

void require_residual(const Eigen::VectorXd& u) {
  if (u.size() == 0) {
    throw Error(ErrorCode::missing_residual, "unknown-scale estimator needs a residual vector");
  }
}

}  // namespace

OrthantFamily OrthantFamily::james_stein_faces(double multiplier) {
  require_nonnegative(multiplier, "orthant multiplier");
  OrthantFamily f;
  f.kind = Kind::james_stein_faces;
  f.multiplier = multiplier;
  return f;
}

OrthantFamily OrthantFamily::per_face(std::vector<ShrinkFn> faces) {
  OrthantFamily f;
  f.kind = Kind::per_face;
  f.multiplier = 0.0;
  f.faces = std::move(faces);
  return f;
}

double OrthantFamily::r(int s, double t) const {
  if (kind == Kind::james_stein_faces) return multiplier * std::max(s - 2, 0);
  if (s < 0 || static_cast<std::size_t>(s) >= faces.size()) {
    throw Error(ErrorCode::dimension_mismatch,
                "orthant family has no profile for face dimension " + std::to_string(s));
  }
  return faces[static_cast<std::size_t>(s)](t);
}

bool OrthantFamily::operator==(const OrthantFamily& other) const {
  if (kind != other.kind) return false;
  if (kind == Kind::james_stein_faces) return multiplier == other.multiplier;
  return faces == other.faces;
}

std::string EstimatorSpec::variant_name() const {
  static constexpr const char* kNames[] = {"identity",          "js_known",
                                           "baranchik_known",   "js_unknown",
                                           "baranchik_unknown", "orthant_restricted",
                                           "generalized_bayes"};
  return kNames[variant.index()];
}

bool EstimatorSpec::needs_residual() const {
  if (const auto* o = std::get_if<estimator::OrthantRestricted>(&variant)) {
    return !o->known_scale;
  }
  return std::holds_alternative<estimator::JsUnknown>(variant) ||
         std::holds_alternative<estimator::BaranchikUnknown>(variant) ||
         std::holds_alternative<estimator::GeneralizedBayes>(variant);
}

void EstimatorSpec::validate() const {
  if (sigma && !(std::isfinite(*sigma) && *sigma > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "estimator sigma must be positive");
  }
  std::visit(
      [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, estimator::JsKnown> ||
                      std::is_same_v<T, estimator::JsUnknown>) {
          require_nonnegative(v.a, "shrinkage constant a");
        } else if constexpr (std::is_same_v<T, estimator::BaranchikKnown>) {
          require_nonnegative(v.a, "shrinkage constant a");
        } else if constexpr (std::is_same_v<T, estimator::OrthantRestricted>) {
          if (v.family.kind == OrthantFamily::Kind::james_stein_faces) {
            require_nonnegative(v.family.multiplier, "orthant multiplier");
          }
        } else if constexpr (std::is_same_v<T, estimator::GeneralizedBayes>) {
          v.prior.validate();
        }
      },
      variant);
}

Eigen::VectorXd positive_part(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

Estimate js_known_scale(const Eigen::VectorXd& x, double a, double sigma) {
  const double t = x.squaredNorm();
  if (t == 0.0) return {x, true};
  return {(1.0 - a * sigma * sigma / t) * x, false};
}

Estimate baranchik_known_scale(const Eigen::VectorXd& x, double a, const ShrinkFn& r,
                               double sigma) {
  const double t = x.squaredNorm();
  if (t == 0.0) return {x, true};
  const double s2 = sigma * sigma;
  return {(1.0 - a * s2 * r(t / s2) / t) * x, false};
}

Estimate js_unknown_scale(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double a) {
  require_residual(u);
  const double t = x.squaredNorm();
  if (t == 0.0) return {x, true};
  const double k = static_cast<double>(u.size());
  return {(1.0 - a * u.squaredNorm() / ((k + 2.0) * t)) * x, false};
}

Estimate baranchik_unknown_scale(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const ShrinkFn& r) {
  require_residual(u);
  const double s = u.squaredNorm();
  if (s == 0.0) {
    throw Error(ErrorCode::missing_residual, "|u| = 0 carries no scale information");
  }
  const double t = x.squaredNorm();
  if (t == 0.0) return {x, true};
  return {(1.0 - s * r(t / s) / t) * x, false};
}

Eigen::VectorXd orthant_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const OrthantFamily& family, bool known_scale,
                                 double sigma) {
  if (!known_scale) require_residual(u);
  Eigen::VectorXd projected = positive_part(x);
  const int s = static_cast<int>((x.array() > 0.0).count());
  const double t = projected.squaredNorm();
  if (s <= 2 || t == 0.0) return projected;
  double factor;
  if (known_scale) {
    const double s2 = sigma * sigma;
    factor = 1.0 - s2 * family.r(s, t / s2) / t;
  } else {
    const double k = static_cast<double>(u.size());
    factor = 1.0 - u.squaredNorm() * family.r(s, t) / ((k + 2.0) * t);
  }
  // a negative factor would leave the orthant; zero is closer to every theta >= 0
  return std::max(factor, 0.0) * projected;
}

Estimate estimate(const EstimatorSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  const double sigma = spec.sigma.value_or(1.0);
  if (spec.needs_residual()) require_residual(u);
  return std::visit(
      [&](const auto& v) -> Estimate {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, estimator::Identity>) {
          return {x, false};
        } else if constexpr (std::is_same_v<T, estimator::JsKnown>) {
          return js_known_scale(x, v.a, sigma);
        } else if constexpr (std::is_same_v<T, estimator::BaranchikKnown>) {
          return baranchik_known_scale(x, v.a, v.r, sigma);
        } else if constexpr (std::is_same_v<T, estimator::JsUnknown>) {
          return js_unknown_scale(x, u, v.a);
        } else if constexpr (std::is_same_v<T, estimator::BaranchikUnknown>) {
          return baranchik_unknown_scale(x, u, v.r);
        } else if constexpr (std::is_same_v<T, estimator::OrthantRestricted>) {
          return {orthant_estimate(x, u, v.family, v.known_scale, sigma), false};
        } else {
          if (x.size() != v.prior.p || u.size() != v.prior.k) {
            throw Error(ErrorCode::dimension_mismatch,
                        "generalized Bayes prior dimensions do not match (x, u)");
          }
          return generalized_bayes_estimate(v.prior, x, u);
        }
      },
      spec.variant);
}

}  // namespace steinlab
