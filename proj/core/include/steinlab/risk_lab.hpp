#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "steinlab/estimators.hpp"
#include "steinlab/parallel.hpp"
#include "steinlab/spherical_models.hpp"
#include "steinlab/vector_field.hpp"

namespace steinlab {

// Passing criterion shared by every Monte Carlo check.
inline constexpr double kSeMultiplier = 3.0;
// Largest tolerated fraction of skipped (x = 0) replicates.
inline constexpr double kMaxSkippedFraction = 1e-4;

struct RiskEstimate {
  double mean_loss = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  ModelSpec model;
  EstimatorSpec estimator;
  // Replicates where the shrink factor was undefined (x = 0).
  std::uint64_t singular = 0;
};

struct RiskDifferenceReport {
  // mean of loss(a) - loss(b) on shared draws
  double mean_difference = 0.0;
  double std_error = 0.0;
  RiskEstimate arm_a;
  RiskEstimate arm_b;
  bool common_random_numbers = true;
  std::uint64_t seed = 0;
  std::uint64_t n = 0;
};

struct DiscrepancyReport {
  std::string operation;
  double lhs = 0.0;
  double rhs = 0.0;
  double difference = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t skipped = 0;
  // skipped fraction within kMaxSkippedFraction
  bool valid = true;
  bool pass = false;
};

// Monte Carlo estimate of E |delta(X, U) - theta|^2.
RiskEstimate mc_risk(const ModelSpec& model, const EstimatorSpec& estimator, std::uint64_t n,
                     std::uint64_t seed, const ExecutionPolicy& policy = {});

// Paired risk difference R(a) - R(b) with common random numbers.
RiskDifferenceReport mc_risk_difference(const ModelSpec& model, const EstimatorSpec& a,
                                        const EstimatorSpec& b, std::uint64_t n,
                                        std::uint64_t seed, const ExecutionPolicy& policy = {});

struct LinearRisk {
  double risk = 0.0;
  double optimal_a = 0.0;
};

// Risk of (1 - a) X: p (1 - a)^2 sigma^2 + a^2 |theta|^2, optimum p sigma^2 / (p sigma^2 + |theta|^2).
LinearRisk linear_risk_closed_form(int p, double sigma, double a, double theta_norm_sq);

struct MeanReport {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  std::uint64_t skipped = 0;
  bool valid = true;
};

/// Unbiased estimate of the risk difference of X + |U|^2/(k+2) g(X) versus X:
/// mean of |u|^4 / (k+2)^2 (|g(x)|^2 + 2 div g(x)). The field must not depend on u.
MeanReport unbiased_risk_difference(const SampleBatch& batch, const VectorField& field);
// Streaming form; draws the same replicates as sample_joint(model, n, seed).
MeanReport unbiased_risk_difference(const ModelSpec& model, const VectorField& field,
                                    std::uint64_t n, std::uint64_t seed,
                                    const ExecutionPolicy& policy = {});

/// E[(X - theta)' g(X)] against sigma^2 E[div g(X)] for a normal model.
DiscrepancyReport stein_identity_check(const ModelSpec& model, const VectorField& field,
                                       std::uint64_t n, std::uint64_t seed,
                                       const ExecutionPolicy& policy = {});

/// E[(X - theta)' g(X)] against E[Q(|X - theta|^2) div g(X)] with the radial
/// law of X in dimension p.
DiscrepancyReport q_identity_check(const ModelSpec& model, const VectorField& field,
                                   std::uint64_t n, std::uint64_t seed,
                                   const ExecutionPolicy& policy = {});

/// Sphere average of (X - theta)' g(X) over |X - theta| = R against
/// R^2 / p times the ball average of div g. The two sides use independent draws.
DiscrepancyReport sphere_ball_check(const Eigen::VectorXd& theta, double radius,
                                    const VectorField& field, std::uint64_t n,
                                    std::uint64_t seed, const ExecutionPolicy& policy = {});

struct CrossTermReport {
  // E[s (X - theta)' g] vs E[s div_x g Q(T)], s = |U|^2, T = |X - theta|^2 + s
  DiscrepancyReport cross_term;
  // E[s^2 |g|^2] vs E[Q(T) h], h = (k + 2) s |g|^2 + 2 s^2 d|g|^2/ds
  DiscrepancyReport norm_term;
  bool pass = false;
};

CrossTermReport unknown_scale_cross_term_check(const ModelSpec& model, const VectorField& field,
                                               std::uint64_t n, std::uint64_t seed,
                                               const ExecutionPolicy& policy = {});

struct OrthantRow {
  Eigen::VectorXd theta;
  double mean_difference = 0.0;  // R(orthant) - R(X_+)
  double std_error = 0.0;
  bool not_worse = false;        // difference <= 3 SE
  bool strictly_better = false;  // difference < -3 SE
};

struct OrthantSweepReport {
  std::vector<OrthantRow> rows;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  bool pass = false;
};

/// Paired comparison of the orthant-restricted estimator against X_+ for each
/// theta of the grid (all in the closed positive orthant).
OrthantSweepReport orthant_domination_check(const ModelSpec& model, const OrthantFamily& family,
                                            std::uint64_t n, std::uint64_t seed,
                                            const std::vector<Eigen::VectorXd>& theta_grid,
                                            bool known_scale = false,
                                            const ExecutionPolicy& policy = {});

struct BallAverageReport {
  std::vector<double> radii;
  std::vector<double> values;      // R^2 E[h(theta + R W)], W uniform on the unit ball
  std::vector<double> increments;  // values[i + 1] - values[i]
  std::vector<double> increment_se;
  bool pass = false;               // no increment above 3 SE
};

/// Spot check that R^2 E[h(theta + R W)] is nonincreasing in R for
/// h(x) = -2 (p - 2)^2 / |x|^2. Common draws across radii.
BallAverageReport ball_average_monotonicity_check(const Eigen::VectorXd& theta,
                                                  const std::vector<double>& radii,
                                                  std::uint64_t n, std::uint64_t seed,
                                                  const ExecutionPolicy& policy = {});

}  // namespace steinlab
