#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "steinlab/rng.hpp"

namespace steinlab {

/// Law of the variance multiplier V in a normal scale mixture.
///
/// Discrete laws are exact finite sums. The inverse-gamma law is handled in
/// closed form. The log-uniform law is a continuous density integrated with a
/// fixed 256-node Gauss–Legendre rule on the log-variance axis.
class MixingLaw {
 public:
  enum class Kind { discrete, inverse_gamma, log_uniform };

  // Point mass at 1.
  MixingLaw()
      : atoms_{1.0}, weights_{1.0}, log_weights_{0.0}, cumulative_{1.0} {}

  static MixingLaw point_mass(double v);
  static MixingLaw discrete(std::vector<double> atoms, std::vector<double> weights);
  // V = scale / G with G ~ Gamma(shape, 1).
  static MixingLaw inverse_gamma(double shape, double scale);
  // log V uniform on [log lo, log hi].
  static MixingLaw log_uniform(double lo, double hi);

  Kind kind() const noexcept { return kind_; }
  std::span<const double> atoms() const noexcept { return atoms_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double shape() const noexcept { return a_; }
  double scale() const noexcept { return b_; }
  double lo() const noexcept { return a_; }
  double hi() const noexcept { return b_; }

  /// log of the integral of v^power * exp(-t / (2v)) against the mixing law.
  /// Throws nonfinite_moment when the integral diverges.
  double log_weighted_moment(double power, double t) const;

  double moment(double s) const;
  double sample(ReplicateStream& stream) const;

  bool operator==(const MixingLaw& other) const = default;

 private:
  Kind kind_ = Kind::discrete;
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> cumulative_;
  double a_ = 0.0;
  double b_ = 0.0;
};

struct NormalFamily {
  bool operator==(const NormalFamily&) const = default;
};
struct StudentTFamily {
  double degrees_of_freedom = 5.0;
  bool operator==(const StudentTFamily&) const = default;
};
struct ScaleMixtureFamily {
  MixingLaw mixing;
  bool operator==(const ScaleMixtureFamily&) const = default;
};

using Family = std::variant<NormalFamily, StudentTFamily, ScaleMixtureFamily>;

/// Spherically symmetric joint law of (X, U): X has location theta, U has
/// location 0, and conditionally on V every coordinate is normal with variance
/// V * sigma^2.
struct ModelSpec {
  Family family = NormalFamily{};
  Eigen::VectorXd theta;
  double sigma = 1.0;
  int k = 0;

  int p() const noexcept { return static_cast<int>(theta.size()); }

  // Throws invalid_argument on the first violated invariant.
  void validate() const;

  // Normal is the point mass at 1; student_t(df) is inverse-gamma(df/2, df/2).
  MixingLaw mixing() const;
  std::string family_name() const;
  // Per-coordinate variance of X; infinite when the family lacks two moments.
  double coordinate_variance() const;

  ModelSpec with_theta(Eigen::VectorXd new_theta) const;

  bool operator==(const ModelSpec& other) const;
};

ModelSpec normal_model(Eigen::VectorXd theta, double sigma = 1.0, int k = 0);
ModelSpec student_t_model(double df, Eigen::VectorXd theta, double sigma = 1.0, int k = 0);
ModelSpec mixture_model(MixingLaw mixing, Eigen::VectorXd theta, double sigma = 1.0,
                        int k = 0);

/// Radial generator f(t) of a dim-dimensional spherical density, with tail
/// F(t) = 1/2 * integral_t^inf f and quotient Q(t) = F(t) / f(t). All work is
/// done in log space.
class RadialLaw {
 public:
  RadialLaw(const ModelSpec& model, int dim);

  int dim() const noexcept { return dim_; }
  double log_density(double t) const;
  double log_tail(double t) const;
  double density(double t) const { return std::exp(log_density(t)); }
  double tail(double t) const { return std::exp(log_tail(t)); }

 private:
  MixingLaw mixing_;
  double sigma_sq_;
  int dim_;
  bool is_normal_;
  bool is_student_;
  double df_ = 0.0;
};

/// Q(t) = F(t) / f(t). Throws degenerate_density when f(t) underflows.
double q_function(const RadialLaw& radial, double t);

/// c = E[V^{1-p/2}] / E[V^{-p/2}], a lower bound for Q over all t (unit sigma).
double mixture_q_lower_bound(const MixingLaw& mixing, int p);

/// Mean of V under the density proportional to v^{-p/2} exp(-t / 2v) g(v).
double posterior_mean_V(const MixingLaw& mixing, int p, double t);

struct SampleBatch {
  Eigen::MatrixXd x;  // n x p
  Eigen::MatrixXd u;  // n x k
  ModelSpec model;
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
};

/// Draws replicate `index` of the (model, seed) stream into x (size p) and
/// u (size k). Pure function of its arguments.
void draw_replicate(const ModelSpec& model, std::uint64_t seed, std::uint64_t index,
                    Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> u);

SampleBatch sample_joint(const ModelSpec& model, std::uint64_t n, std::uint64_t seed);

}  // namespace steinlab
