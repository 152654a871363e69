#include "steinlab/risk_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steinlab/errors.hpp"
#include "steinlab/rng.hpp"

namespace steinlab {

namespace {

constexpr std::uint64_t kBallStreamTag = 0xba11;

EstimatorSpec with_model_sigma(EstimatorSpec spec, const ModelSpec& model) {
  if (!spec.sigma) spec.sigma = model.sigma;
  spec.validate();
  return spec;
}

void require_finite_risk(const ModelSpec& model) {
  model.validate();
  if (!std::isfinite(model.coordinate_variance())) {
    throw Error(ErrorCode::nonfinite_moment, "risk needs a finite second moment");
  }
}

void require_replicates(std::uint64_t n) {
  if (n < 1) throw Error(ErrorCode::invalid_argument, "replicate count must be >= 1");
}

bool skipped_ok(std::uint64_t skipped, std::uint64_t n) {
  return static_cast<double>(skipped) <= kMaxSkippedFraction * static_cast<double>(n);
}

// Round-off floor so zero-variance estimators can still pass.
bool within_se(double difference, double se, double lhs, double rhs) {
  const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(lhs) + std::abs(rhs));
  return std::abs(difference) <= kSeMultiplier * se + floor;
}

// Paired lhs, rhs, lhs - rhs channels into a report.
DiscrepancyReport discrepancy(std::string operation, const BlockResult<3>& r, std::uint64_t n,
                              std::uint64_t seed) {
  DiscrepancyReport out;
  out.operation = std::move(operation);
  out.lhs = r.moments[0].mean;
  out.rhs = r.moments[1].mean;
  out.difference = r.moments[2].mean;
  out.std_error = r.moments[2].std_error();
  out.n = n;
  out.seed = seed;
  out.skipped = r.skipped;
  out.valid = skipped_ok(r.skipped, n);
  out.pass = out.valid && within_se(out.difference, out.std_error, out.lhs, out.rhs);
  return out;
}

void add_pair(BlockResult<3>& partial, double lhs, double rhs) {
  partial.moments[0].add(lhs);
  partial.moments[1].add(rhs);
  partial.moments[2].add(lhs - rhs);
}

// Uniform direction on the unit sphere in R^p.
Eigen::VectorXd unit_direction(ReplicateStream& stream, int p) {
  Eigen::VectorXd d(p);
  double norm = 0.0;
  do {
    for (int i = 0; i < p; ++i) d[i] = stream.normal();
    norm = d.norm();
  } while (norm == 0.0);
  return d / norm;
}

}  // namespace

RiskEstimate mc_risk(const ModelSpec& model, const EstimatorSpec& estimator, std::uint64_t n,
                     std::uint64_t seed, const ExecutionPolicy& policy) {
  require_finite_risk(model);
  require_replicates(n);
  const EstimatorSpec spec = with_model_sigma(estimator, model);
  const int p = model.p();
  const auto result = reduce_replicates<1>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<1>& partial) {
        Eigen::VectorXd x(p), u(model.k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(model, seed, i, x, u);
          const Estimate e = estimate(spec, x, u);
          if (e.singular) ++partial.skipped;
          partial.moments[0].add((e.value - model.theta).squaredNorm());
        }
      });
  RiskEstimate out;
  out.mean_loss = result.moments[0].mean;
  out.std_error = result.moments[0].std_error();
  out.n = n;
  out.seed = seed;
  out.model = model;
  out.estimator = spec;
  out.singular = result.skipped;
  return out;
}

RiskDifferenceReport mc_risk_difference(const ModelSpec& model, const EstimatorSpec& a,
                                        const EstimatorSpec& b, std::uint64_t n,
                                        std::uint64_t seed, const ExecutionPolicy& policy) {
  require_finite_risk(model);
  require_replicates(n);
  const EstimatorSpec spec_a = with_model_sigma(a, model);
  const EstimatorSpec spec_b = with_model_sigma(b, model);
  const int p = model.p();
  // skipped counts singular evaluations of either arm
  const auto result = reduce_replicates<3>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<3>& partial) {
        Eigen::VectorXd x(p), u(model.k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(model, seed, i, x, u);
          const Estimate ea = estimate(spec_a, x, u);
          const Estimate eb = estimate(spec_b, x, u);
          if (ea.singular || eb.singular) ++partial.skipped;
          add_pair(partial, (ea.value - model.theta).squaredNorm(),
                   (eb.value - model.theta).squaredNorm());
        }
      });
  RiskDifferenceReport out;
  out.mean_difference = result.moments[2].mean;
  out.std_error = result.moments[2].std_error();
  out.seed = seed;
  out.n = n;
  out.common_random_numbers = true;
  auto arm = [&](const EstimatorSpec& spec, const Moments& m) {
    RiskEstimate r;
    r.mean_loss = m.mean;
    r.std_error = m.std_error();
    r.n = n;
    r.seed = seed;
    r.model = model;
    r.estimator = spec;
    r.singular = result.skipped;
    return r;
  };
  out.arm_a = arm(spec_a, result.moments[0]);
  out.arm_b = arm(spec_b, result.moments[1]);
  return out;
}

LinearRisk linear_risk_closed_form(int p, double sigma, double a, double theta_norm_sq) {
  if (p < 1 || !(sigma > 0.0) || !(theta_norm_sq >= 0.0)) {
    throw Error(ErrorCode::invalid_argument, "linear risk needs p >= 1, sigma > 0, |theta|^2 >= 0");
  }
  const double ps2 = p * sigma * sigma;
  return {ps2 * (1.0 - a) * (1.0 - a) + a * a * theta_norm_sq, ps2 / (ps2 + theta_norm_sq)};
}

namespace {

void require_u_independent(const VectorField& field, int k) {
  if (field.u_dependent) {
    throw Error(ErrorCode::invalid_argument, "unbiased risk difference needs a u-independent field");
  }
  if (k < 1) throw Error(ErrorCode::missing_residual, "unbiased risk difference needs k >= 1");
}

// |u|^4/(k+2)^2 (|g|^2 + 2 div g); false when x = 0.
bool unbiased_term(const VectorField& field, const Eigen::VectorXd& x, double usq, int k,
                   double& out) {
  if (field.singular_at_origin && x.squaredNorm() == 0.0) return false;
  const double scale = usq / (k + 2.0);
  out = scale * scale * (field.g(x, usq).squaredNorm() + 2.0 * field.div_x(x, usq));
  return true;
}

MeanReport mean_report(const BlockResult<1>& r, std::uint64_t n, std::uint64_t seed) {
  MeanReport out;
  out.mean = r.moments[0].mean;
  out.std_error = r.moments[0].std_error();
  out.n = n;
  out.seed = seed;
  out.skipped = r.skipped;
  out.valid = skipped_ok(r.skipped, n);
  return out;
}

}  // namespace

MeanReport unbiased_risk_difference(const SampleBatch& batch, const VectorField& field) {
  const int k = batch.model.k;
  require_u_independent(field, k);
  require_replicates(batch.n);
  // Single block order, same reduction tree as the streaming path.
  const auto result = reduce_replicates<1>(
      batch.n, ExecutionPolicy{1},
      [&](std::uint64_t first, std::uint64_t last, BlockResult<1>& partial) {
        for (std::uint64_t i = first; i < last; ++i) {
          const Eigen::VectorXd x = batch.x.row(static_cast<Eigen::Index>(i)).transpose();
          const double usq = batch.u.row(static_cast<Eigen::Index>(i)).squaredNorm();
          double value = 0.0;
          if (unbiased_term(field, x, usq, k, value)) {
            partial.moments[0].add(value);
          } else {
            ++partial.skipped;
          }
        }
      });
  return mean_report(result, batch.n, batch.seed);
}

MeanReport unbiased_risk_difference(const ModelSpec& model, const VectorField& field,
                                    std::uint64_t n, std::uint64_t seed,
                                    const ExecutionPolicy& policy) {
  model.validate();
  require_u_independent(field, model.k);
  require_replicates(n);
  const int p = model.p();
  const auto result = reduce_replicates<1>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<1>& partial) {
        Eigen::VectorXd x(p), u(model.k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(model, seed, i, x, u);
          double value = 0.0;
          if (unbiased_term(field, x, u.squaredNorm(), model.k, value)) {
            partial.moments[0].add(value);
          } else {
            ++partial.skipped;
          }
        }
      });
  return mean_report(result, n, seed);
}

namespace {

// Known-scale fields ignore their second argument; 1 keeps unknown-scale
// fields finite if one is passed by mistake.
constexpr double kKnownScaleUsq = 1.0;

template <typename Sides>
DiscrepancyReport paired_check(std::string operation, const ModelSpec& model,
                               const VectorField& field, std::uint64_t n, std::uint64_t seed,
                               const ExecutionPolicy& policy, Sides sides) {
  require_replicates(n);
  const int p = model.p();
  const auto result = reduce_replicates<3>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<3>& partial) {
        Eigen::VectorXd x(p), u(model.k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(model, seed, i, x, u);
          if (field.singular_at_origin && x.squaredNorm() == 0.0) {
            ++partial.skipped;
            continue;
          }
          const auto [lhs, rhs] = sides(x, u);
          add_pair(partial, lhs, rhs);
        }
      });
  return discrepancy(std::move(operation), result, n, seed);
}

}  // namespace

DiscrepancyReport stein_identity_check(const ModelSpec& model, const VectorField& field,
                                       std::uint64_t n, std::uint64_t seed,
                                       const ExecutionPolicy& policy) {
  model.validate();
  if (!std::holds_alternative<NormalFamily>(model.family)) {
    throw Error(ErrorCode::invalid_argument, "Stein's identity check needs a normal model");
  }
  const double sigma_sq = model.sigma * model.sigma;
  return paired_check("stein_identity", model, field, n, seed, policy,
                      [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
                        return std::pair{(x - model.theta).dot(field.g(x, kKnownScaleUsq)),
                                         sigma_sq * field.div_x(x, kKnownScaleUsq)};
                      });
}

DiscrepancyReport q_identity_check(const ModelSpec& model, const VectorField& field,
                                   std::uint64_t n, std::uint64_t seed,
                                   const ExecutionPolicy& policy) {
  model.validate();
  const RadialLaw radial(model, model.p());
  return paired_check("q_identity", model, field, n, seed, policy,
                      [&](const Eigen::VectorXd& x, const Eigen::VectorXd&) {
                        const Eigen::VectorXd d = x - model.theta;
                        return std::pair{d.dot(field.g(x, kKnownScaleUsq)),
                                         q_function(radial, d.squaredNorm()) *
                                             field.div_x(x, kKnownScaleUsq)};
                      });
}

DiscrepancyReport sphere_ball_check(const Eigen::VectorXd& theta, double radius,
                                    const VectorField& field, std::uint64_t n,
                                    std::uint64_t seed, const ExecutionPolicy& policy) {
  if (!(radius > 0.0)) throw Error(ErrorCode::invalid_argument, "radius must be positive");
  require_replicates(n);
  const int p = static_cast<int>(theta.size());
  if (p < 1) throw Error(ErrorCode::invalid_argument, "theta must be nonempty");
  const std::uint64_t ball_seed = derive_seed(seed, kBallStreamTag);
  const double ball_scale = radius * radius / p;
  const auto result = reduce_replicates<2>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<2>& partial) {
        for (std::uint64_t i = first; i < last; ++i) {
          ReplicateStream sphere_stream(seed, i);
          const Eigen::VectorXd on_sphere = theta + radius * unit_direction(sphere_stream, p);
          ReplicateStream ball_stream(ball_seed, i);
          const Eigen::VectorXd dir = unit_direction(ball_stream, p);
          const Eigen::VectorXd in_ball =
              theta + radius * std::pow(ball_stream.uniform(), 1.0 / p) * dir;
          if (field.singular_at_origin &&
              (on_sphere.squaredNorm() == 0.0 || in_ball.squaredNorm() == 0.0)) {
            ++partial.skipped;
            continue;
          }
          partial.moments[0].add((on_sphere - theta).dot(field.g(on_sphere, kKnownScaleUsq)));
          partial.moments[1].add(ball_scale * field.div_x(in_ball, kKnownScaleUsq));
        }
      });
  DiscrepancyReport out;
  out.operation = "sphere_ball";
  out.lhs = result.moments[0].mean;
  out.rhs = result.moments[1].mean;
  out.difference = out.lhs - out.rhs;
  // independent streams
  out.std_error = std::hypot(result.moments[0].std_error(), result.moments[1].std_error());
  out.n = n;
  out.seed = seed;
  out.skipped = result.skipped;
  out.valid = skipped_ok(result.skipped, n);
  out.pass = out.valid && within_se(out.difference, out.std_error, out.lhs, out.rhs);
  return out;
}

CrossTermReport unknown_scale_cross_term_check(const ModelSpec& model, const VectorField& field,
                                               std::uint64_t n, std::uint64_t seed,
                                               const ExecutionPolicy& policy) {
  model.validate();
  if (model.k < 1) throw Error(ErrorCode::missing_residual, "cross-term check needs k >= 1");
  require_replicates(n);
  const int p = model.p();
  const int k = model.k;
  const RadialLaw radial(model, p + k);
  const auto result = reduce_replicates<6>(
      n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<6>& partial) {
        Eigen::VectorXd x(p), u(k);
        for (std::uint64_t i = first; i < last; ++i) {
          draw_replicate(model, seed, i, x, u);
          const double s = u.squaredNorm();
          if ((field.singular_at_origin && x.squaredNorm() == 0.0) || s == 0.0) {
            ++partial.skipped;
            continue;
          }
          const Eigen::VectorXd d = x - model.theta;
          const Eigen::VectorXd g = field.g(x, s);
          const double q = q_function(radial, d.squaredNorm() + s);
          const double g_sq = g.squaredNorm();
          const double ds = field.u_dependent ? field.d_usq_norm_sq(x, s) : 0.0;
          const double h = (k + 2.0) * s * g_sq + 2.0 * s * s * ds;
          const double cross_lhs = s * d.dot(g);
          const double cross_rhs = s * field.div_x(x, s) * q;
          const double norm_lhs = s * s * g_sq;
          const double norm_rhs = q * h;
          partial.moments[0].add(cross_lhs);
          partial.moments[1].add(cross_rhs);
          partial.moments[2].add(cross_lhs - cross_rhs);
          partial.moments[3].add(norm_lhs);
          partial.moments[4].add(norm_rhs);
          partial.moments[5].add(norm_lhs - norm_rhs);
        }
      });
  auto part = [&](std::string name, std::size_t offset) {
    BlockResult<3> r;
    for (std::size_t c = 0; c < 3; ++c) r.moments[c] = result.moments[offset + c];
    r.skipped = result.skipped;
    return discrepancy(std::move(name), r, n, seed);
  };
  CrossTermReport out;
  out.cross_term = part("unknown_scale_cross_term", 0);
  out.norm_term = part("unknown_scale_norm_term", 3);
  out.pass = out.cross_term.pass && out.norm_term.pass;
  return out;
}

OrthantSweepReport orthant_domination_check(const ModelSpec& model, const OrthantFamily& family,
                                            std::uint64_t n, std::uint64_t seed,
                                            const std::vector<Eigen::VectorXd>& theta_grid,
                                            bool known_scale, const ExecutionPolicy& policy) {
  model.validate();
  if (!known_scale && model.k < 1) {
    throw Error(ErrorCode::missing_residual, "unknown-scale orthant estimator needs k >= 1");
  }
  OrthantSweepReport out;
  out.n = n;
  out.seed = seed;
  out.pass = true;
  for (const auto& theta : theta_grid) {
    if (theta.size() != model.p()) {
      throw Error(ErrorCode::dimension_mismatch, "theta grid entry has the wrong dimension");
    }
    if ((theta.array() < 0.0).any()) {
      throw Error(ErrorCode::invalid_argument, "orthant sweep needs theta >= 0");
    }
    const ModelSpec at = model.with_theta(theta);
    require_finite_risk(at);
    require_replicates(n);
    const int p = at.p();
    const auto result = reduce_replicates<1>(
        n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<1>& partial) {
          Eigen::VectorXd x(p), u(at.k);
          for (std::uint64_t i = first; i < last; ++i) {
            draw_replicate(at, seed, i, x, u);
            const Eigen::VectorXd shrunk =
                orthant_estimate(x, u, family, known_scale, at.sigma);
            const Eigen::VectorXd projected = positive_part(x);
            partial.moments[0].add((shrunk - theta).squaredNorm() -
                                   (projected - theta).squaredNorm());
          }
        });
    OrthantRow row;
    row.theta = theta;
    row.mean_difference = result.moments[0].mean;
    row.std_error = result.moments[0].std_error();
    row.not_worse = row.mean_difference <= kSeMultiplier * row.std_error;
    row.strictly_better = row.mean_difference < -kSeMultiplier * row.std_error;
    out.pass = out.pass && row.not_worse;
    out.rows.push_back(std::move(row));
  }
  return out;
}

BallAverageReport ball_average_monotonicity_check(const Eigen::VectorXd& theta,
                                                  const std::vector<double>& radii,
                                                  std::uint64_t n, std::uint64_t seed,
                                                  const ExecutionPolicy& policy) {
  const int p = static_cast<int>(theta.size());
  if (p < 3) throw Error(ErrorCode::infinite_expectation, "ball average of 1/|x|^2 needs p >= 3");
  if (radii.size() < 2 || !std::is_sorted(radii.begin(), radii.end()) || !(radii.front() > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "radii must be positive and increasing");
  }
  require_replicates(n);
  const double c = 2.0 * (p - 2.0) * (p - 2.0);
  auto value_at = [&](double radius, ReplicateStream& stream) {
    const Eigen::VectorXd dir = unit_direction(stream, p);
    const Eigen::VectorXd w = std::pow(stream.uniform(), 1.0 / p) * dir;
    const Eigen::VectorXd x = theta + radius * w;
    return -radius * radius * c / x.squaredNorm();
  };
  BallAverageReport out;
  out.radii = radii;
  out.pass = true;
  for (std::size_t j = 0; j + 1 < radii.size(); ++j) {
    const auto result = reduce_replicates<3>(
        n, policy, [&](std::uint64_t first, std::uint64_t last, BlockResult<3>& partial) {
          for (std::uint64_t i = first; i < last; ++i) {
            ReplicateStream lo_stream(seed, i);
            ReplicateStream hi_stream(seed, i);
            const double lo = value_at(radii[j], lo_stream);
            const double hi = value_at(radii[j + 1], hi_stream);
            add_pair(partial, hi, lo);
          }
        });
    if (j == 0) out.values.push_back(result.moments[1].mean);
    out.values.push_back(result.moments[0].mean);
    out.increments.push_back(result.moments[2].mean);
    out.increment_se.push_back(result.moments[2].std_error());
    if (result.moments[2].mean > kSeMultiplier * result.moments[2].std_error()) out.pass = false;
  }
  return out;
}

}  // namespace steinlab
