#include "steinlab/spherical_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "steinlab/errors.hpp"
#include "steinlab/quadrature.hpp"

namespace steinlab {

namespace {

constexpr int kLogUniformNodes = 256;

[[noreturn]] void invalid(const std::string& what) {
  throw Error(ErrorCode::invalid_argument, what);
}

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

MixingLaw MixingLaw::point_mass(double v) { return discrete({v}, {1.0}); }

MixingLaw MixingLaw::discrete(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.empty() || atoms.size() != weights.size()) {
    invalid("mixing law needs one weight per atom and at least one atom");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!positive_finite(atoms[i])) invalid("mixing atoms must be strictly positive");
    if (!(std::isfinite(weights[i]) && weights[i] >= 0.0)) {
      invalid("mixing weights must be nonnegative");
    }
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) invalid("mixing weights must sum to 1 within 1e-12");

  MixingLaw law;
  law.kind_ = Kind::discrete;
  law.atoms_ = std::move(atoms);
  law.weights_ = std::move(weights);
  law.log_weights_.clear();
  law.cumulative_.clear();
  law.log_weights_.reserve(law.weights_.size());
  law.cumulative_.reserve(law.weights_.size());
  double running = 0.0;
  for (double w : law.weights_) {
    law.log_weights_.push_back(std::log(w));
    running += w;
    law.cumulative_.push_back(running);
  }
  law.cumulative_.back() = 1.0;
  return law;
}

MixingLaw MixingLaw::inverse_gamma(double shape, double scale) {
  if (!positive_finite(shape) || !positive_finite(scale)) {
    invalid("inverse-gamma mixing needs positive shape and scale");
  }
  MixingLaw law;
  law.kind_ = Kind::inverse_gamma;
  law.a_ = shape;
  law.b_ = scale;
  law.atoms_.clear();
  law.weights_.clear();
  law.log_weights_.clear();
  law.cumulative_.clear();
  return law;
}

MixingLaw MixingLaw::log_uniform(double lo, double hi) {
  if (!positive_finite(lo) || !positive_finite(hi) || !(lo < hi)) {
    invalid("log-uniform mixing needs 0 < lo < hi");
  }
  MixingLaw law;
  law.kind_ = Kind::log_uniform;
  law.a_ = lo;
  law.b_ = hi;
  law.atoms_.clear();
  law.weights_.clear();
  law.log_weights_.clear();
  law.cumulative_.clear();
  const QuadratureRule rule = gauss_legendre(kLogUniformNodes);
  const double mid = 0.5 * (std::log(hi) + std::log(lo));
  const double half = 0.5 * (std::log(hi) - std::log(lo));
  for (int i = 0; i < kLogUniformNodes; ++i) {
    law.atoms_.push_back(std::exp(mid + half * rule.nodes[i]));
    law.weights_.push_back(0.5 * rule.weights[i]);
    law.log_weights_.push_back(std::log(0.5 * rule.weights[i]));
  }
  return law;
}

double MixingLaw::log_weighted_moment(double power, double t) const {
  if (kind_ == Kind::inverse_gamma) {
    // integral of v^power e^{-t/2v} b^a / Gamma(a) v^{-a-1} e^{-b/v} dv
    const double order = a_ - power;
    if (!(order > 0.0)) {
      throw Error(ErrorCode::nonfinite_moment,
                  "inverse-gamma moment of order " + std::to_string(power) + " diverges");
    }
    return a_ * std::log(b_) - std::lgamma(a_) + std::lgamma(order) -
           order * std::log(b_ + 0.5 * t);
  }
  std::vector<double> terms(atoms_.size());
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    terms[i] = log_weights_[i] + power * std::log(atoms_[i]) - 0.5 * t / atoms_[i];
  }
  const double value = log_sum_exp(terms);
  if (std::isnan(value)) {
    throw Error(ErrorCode::quadrature_failure, "mixing integral is not a number");
  }
  return value;
}

double MixingLaw::moment(double s) const { return std::exp(log_weighted_moment(s, 0.0)); }

double MixingLaw::sample(ReplicateStream& stream) const {
  switch (kind_) {
    case Kind::discrete: {
      if (atoms_.size() == 1) return atoms_.front();
      const double u = stream.uniform();
      const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
      const auto idx = std::min<std::size_t>(
          static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
      return atoms_[idx];
    }
    case Kind::inverse_gamma:
      return b_ / stream.gamma(a_);
    case Kind::log_uniform:
      return a_ * std::exp(stream.uniform() * std::log(b_ / a_));
  }
  return 1.0;
}

void ModelSpec::validate() const {
  if (p() < 1) invalid("p must be at least 1");
  if (k < 0) invalid("k must be nonnegative");
  if (!positive_finite(sigma)) invalid("sigma must be positive and finite");
  if (!theta.allFinite()) invalid("theta must be finite");
  if (const auto* t = std::get_if<StudentTFamily>(&family)) {
    if (!positive_finite(t->degrees_of_freedom)) {
      invalid("student_t degrees of freedom must be positive");
    }
  }
}

MixingLaw ModelSpec::mixing() const {
  return std::visit(
      [](const auto& fam) -> MixingLaw {
        using T = std::decay_t<decltype(fam)>;
        if constexpr (std::is_same_v<T, NormalFamily>) {
          return MixingLaw::point_mass(1.0);
        } else if constexpr (std::is_same_v<T, StudentTFamily>) {
          return MixingLaw::inverse_gamma(0.5 * fam.degrees_of_freedom,
                                          0.5 * fam.degrees_of_freedom);
        } else {
          return fam.mixing;
        }
      },
      family);
}

std::string ModelSpec::family_name() const {
  switch (family.index()) {
    case 0: return "normal";
    case 1: return "student_t";
    default: return "scale_mixture";
  }
}

double ModelSpec::coordinate_variance() const {
  try {
    return sigma * sigma * mixing().moment(1.0);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::nonfinite_moment) {
      return std::numeric_limits<double>::infinity();
    }
    throw;
  }
}

ModelSpec ModelSpec::with_theta(Eigen::VectorXd new_theta) const {
  ModelSpec copy = *this;
  copy.theta = std::move(new_theta);
  return copy;
}

bool ModelSpec::operator==(const ModelSpec& other) const {
  return family == other.family && theta.size() == other.theta.size() &&
         theta == other.theta && sigma == other.sigma && k == other.k;
}

ModelSpec normal_model(Eigen::VectorXd theta, double sigma, int k) {
  ModelSpec m{NormalFamily{}, std::move(theta), sigma, k};
  m.validate();
  return m;
}

ModelSpec student_t_model(double df, Eigen::VectorXd theta, double sigma, int k) {
  ModelSpec m{StudentTFamily{df}, std::move(theta), sigma, k};
  m.validate();
  return m;
}

ModelSpec mixture_model(MixingLaw mixing, Eigen::VectorXd theta, double sigma, int k) {
  ModelSpec m{ScaleMixtureFamily{std::move(mixing)}, std::move(theta), sigma, k};
  m.validate();
  return m;
}

RadialLaw::RadialLaw(const ModelSpec& model, int dim)
    : mixing_(model.mixing()),
      sigma_sq_(model.sigma * model.sigma),
      dim_(dim),
      is_normal_(std::holds_alternative<NormalFamily>(model.family)),
      is_student_(std::holds_alternative<StudentTFamily>(model.family)) {
  if (dim < 1) invalid("radial law dimension must be at least 1");
  if (is_student_) df_ = std::get<StudentTFamily>(model.family).degrees_of_freedom;
}

double RadialLaw::log_density(double t) const {
  const double n = dim_;
  if (is_normal_) {
    return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma_sq_) - 0.5 * t / sigma_sq_;
  }
  if (is_student_) {
    return std::lgamma(0.5 * (df_ + n)) - std::lgamma(0.5 * df_) -
           0.5 * n * std::log(df_ * std::numbers::pi * sigma_sq_) -
           0.5 * (df_ + n) * std::log1p(t / (df_ * sigma_sq_));
  }
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma_sq_) +
         mixing_.log_weighted_moment(-0.5 * n, t / sigma_sq_);
}

double RadialLaw::log_tail(double t) const {
  const double n = dim_;
  if (is_normal_) return std::log(sigma_sq_) + log_density(t);
  if (is_student_) {
    // F(t) = f(t) * sigma^2 (df + t/sigma^2) / (df + n - 2)
    if (!(df_ + n - 2.0 > 0.0)) {
      throw Error(ErrorCode::nonfinite_moment, "radial tail integral diverges");
    }
    return log_density(t) + std::log(sigma_sq_ * (df_ + t / sigma_sq_) / (df_ + n - 2.0));
  }
  return -0.5 * n * std::log(2.0 * std::numbers::pi * sigma_sq_) + std::log(sigma_sq_) +
         mixing_.log_weighted_moment(1.0 - 0.5 * n, t / sigma_sq_);
}

double q_function(const RadialLaw& radial, double t) {
  if (!(t >= 0.0)) invalid("q_function needs t >= 0");
  const double log_f = radial.log_density(t);
  if (!std::isfinite(log_f)) {
    throw Error(ErrorCode::degenerate_density, "f(t) underflows at t = " + std::to_string(t));
  }
  return std::exp(radial.log_tail(t) - log_f);
}

double mixture_q_lower_bound(const MixingLaw& mixing, int p) {
  return posterior_mean_V(mixing, p, 0.0);
}

double posterior_mean_V(const MixingLaw& mixing, int p, double t) {
  if (p < 1) invalid("dimension must be at least 1");
  if (!(t >= 0.0)) invalid("posterior_mean_V needs t >= 0");
  const double half = 0.5 * p;
  const double value =
      std::exp(mixing.log_weighted_moment(1.0 - half, t) - mixing.log_weighted_moment(-half, t));
  if (!std::isfinite(value)) {
    throw Error(ErrorCode::quadrature_failure, "posterior mean of V is not finite");
  }
  return value;
}

void draw_replicate(const ModelSpec& model, std::uint64_t seed, std::uint64_t index,
                    Eigen::Ref<Eigen::VectorXd> x, Eigen::Ref<Eigen::VectorXd> u) {
  ReplicateStream stream(seed, index);
  double scale = model.sigma;
  if (const auto* t = std::get_if<StudentTFamily>(&model.family)) {
    const double half_df = 0.5 * t->degrees_of_freedom;
    scale *= std::sqrt(half_df / stream.gamma(half_df));
  } else if (const auto* m = std::get_if<ScaleMixtureFamily>(&model.family)) {
    scale *= std::sqrt(m->mixing.sample(stream));
  }
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = model.theta[i] + scale * stream.normal();
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = scale * stream.normal();
}

SampleBatch sample_joint(const ModelSpec& model, std::uint64_t n, std::uint64_t seed) {
  model.validate();
  if (n == 0) invalid("sample_joint needs n >= 1");
  SampleBatch batch;
  batch.model = model;
  batch.seed = seed;
  batch.n = n;
  const auto rows = static_cast<Eigen::Index>(n);
  batch.x.resize(rows, model.p());
  batch.u.resize(rows, model.k);
  Eigen::VectorXd x(model.p());
  Eigen::VectorXd u(model.k);
  for (std::uint64_t i = 0; i < n; ++i) {
    draw_replicate(model, seed, i, x, u);
    batch.x.row(static_cast<Eigen::Index>(i)) = x.transpose();
    batch.u.row(static_cast<Eigen::Index>(i)) = u.transpose();
  }
  return batch;
}

}  // namespace steinlab
