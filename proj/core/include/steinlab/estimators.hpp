#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "steinlab/bayes_prior.hpp"
#include "steinlab/shrink_fn.hpp"

namespace steinlab {

/// Face-dimension indexed profiles r_s for the orthant-restricted estimator.
struct OrthantFamily {
  enum class Kind { james_stein_faces, per_face };

  Kind kind = Kind::james_stein_faces;
  // james_stein_faces: r_s == multiplier * (s - 2)_+
  double multiplier = 1.0;
  // per_face: faces[s] for s = 0..p
  std::vector<ShrinkFn> faces;

  static OrthantFamily james_stein_faces(double multiplier = 1.0);
  static OrthantFamily per_face(std::vector<ShrinkFn> faces);

  double r(int s, double t) const;

  bool operator==(const OrthantFamily& other) const;
};

namespace estimator {

struct Identity {
  bool operator==(const Identity&) const = default;
};
// (1 - a sigma^2 / |x|^2) x
struct JsKnown {
  double a = 0.0;
  bool operator==(const JsKnown&) const = default;
};
// (1 - a sigma^2 r(|x|^2 / sigma^2) / |x|^2) x
struct BaranchikKnown {
  double a = 1.0;
  ShrinkFn r;
  bool operator==(const BaranchikKnown&) const = default;
};
// (1 - a |u|^2 / ((k + 2) |x|^2)) x
struct JsUnknown {
  double a = 0.0;
  bool operator==(const JsUnknown&) const = default;
};
// (1 - |u|^2 r(|x|^2 / |u|^2) / |x|^2) x
struct BaranchikUnknown {
  ShrinkFn r;
  bool operator==(const BaranchikUnknown&) const = default;
};
struct OrthantRestricted {
  OrthantFamily family;
  bool known_scale = false;
  bool operator==(const OrthantRestricted&) const = default;
};
// (1 - r(W) / W) x with W = |x|^2 / |u|^2
struct GeneralizedBayes {
  BayesPriorSpec prior;
  bool operator==(const GeneralizedBayes&) const = default;
};

}  // namespace estimator

using EstimatorVariant =
    std::variant<estimator::Identity, estimator::JsKnown, estimator::BaranchikKnown,
                 estimator::JsUnknown, estimator::BaranchikUnknown,
                 estimator::OrthantRestricted, estimator::GeneralizedBayes>;

struct EstimatorSpec {
  EstimatorVariant variant = estimator::Identity{};
  // Scale for known-scale variants; when unset the sampling model's sigma is used.
  std::optional<double> sigma;

  // Stable public identifier: identity, js_known, baranchik_known, js_unknown,
  // baranchik_unknown, orthant_restricted, generalized_bayes.
  std::string variant_name() const;
  bool needs_residual() const;
  void validate() const;

  bool operator==(const EstimatorSpec&) const = default;
};

struct Estimate {
  Eigen::VectorXd value;
  // Set when x hit the measure-zero point where the shrink factor is undefined;
  // value is then x (or its projection) unchanged.
  bool singular = false;
};

/// Dispatches on the variant. `u` may be empty for known-scale variants.
Estimate estimate(const EstimatorSpec& spec, const Eigen::VectorXd& x,
                  const Eigen::VectorXd& u = Eigen::VectorXd());

Estimate js_known_scale(const Eigen::VectorXd& x, double a, double sigma);
Estimate baranchik_known_scale(const Eigen::VectorXd& x, double a, const ShrinkFn& r,
                               double sigma);
Estimate js_unknown_scale(const Eigen::VectorXd& x, const Eigen::VectorXd& u, double a);
Estimate baranchik_unknown_scale(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const ShrinkFn& r);

/// Projects x onto the positive orthant and shrinks on the face of dimension
/// s = #{x_i > 0}. Pass an empty u with known_scale = true for the known-scale
/// form.
Eigen::VectorXd orthant_estimate(const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                                 const OrthantFamily& family, bool known_scale,
                                 double sigma = 1.0);

// Componentwise max(x, 0).
Eigen::VectorXd positive_part(const Eigen::VectorXd& x);

}  // namespace steinlab
