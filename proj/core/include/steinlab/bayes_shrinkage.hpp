#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "steinlab/bayes_prior.hpp"
#include "steinlab/estimators.hpp"
#include "steinlab/spherical_models.hpp"
#include "steinlab/vector_field.hpp"

namespace steinlab {

struct BayesRValue {
  double r = 0.0;
  double r_prime = 0.0;
  // Propagated absolute quadrature error of r.
  double error_estimate = 0.0;
};

/// Shrinkage profile of the generalized Bayes estimator under the prior
/// eta^a |theta|^{-b}:
///
///   r(w) = w * I(b/2, w) / I(b/2 - 1, w),
///   I(c, w) = int_0^1 lambda^c (1 - lambda)^{(p-b)/2 - 1} (1 + w lambda)^{-(k/2 + a + b/2 + 2)}
///
/// Both endpoint singularities are removed by substitution before adaptive
/// Gauss–Kronrod; r'(w) comes from the w-derivatives of the same integrals.
BayesRValue bayes_r_detail(const BayesPriorSpec& prior, double w);
double bayes_r(const BayesPriorSpec& prior, double w);

ShrinkFn bayes_shrink_fn(const BayesPriorSpec& prior);
// Unknown-scale field g(x, s) = -(k + 2) r(|x|^2 / s) x / |x|^2.
VectorField generalized_bayes_field(const BayesPriorSpec& prior);

/// (1 - r(W)/W) x with W = |x|^2 / |u|^2. Returns 0 at x = 0 (the factor has a
/// finite limit there). Throws missing_residual when |u| = 0.
Estimate generalized_bayes_estimate(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u);

struct RwRow {
  double w = 0.0;
  double r = 0.0;
  double error_estimate = 0.0;
};

struct RwTable {
  BayesPriorSpec prior;
  std::vector<RwRow> rows;

  // Largest drop r(w_i) - r(w_{i+1}) along the grid (<= 0 when monotone).
  double max_decrease() const;
  bool is_nondecreasing(double tolerance = 1e-10) const;
  double max_r() const;
  std::string to_csv() const;
};

std::vector<double> log_grid(double lo, double hi, std::size_t points);
RwTable build_rw_table(const BayesPriorSpec& prior, std::span<const double> w_grid);

struct CertificateClause {
  std::string name;
  bool evaluated = true;
  bool pass = false;
  std::string detail;
};

struct MinimaxCertificate {
  BayesPriorSpec prior;
  std::vector<CertificateClause> clauses;
  bool pass = false;

  const CertificateClause* clause(const std::string& name) const;
  std::string to_text() const;
};

/// Clause-by-clause check that the generalized Bayes estimator dominates X for
/// every spherical law: domain validity, b <= p - 2, the r-bound comparison,
/// and monotonicity plus boundedness of r on a 200-point grid over [1e-4, 1e6].
MinimaxCertificate minimaxity_certificate(const BayesPriorSpec& prior);

struct FIndependenceReport {
  Eigen::VectorXd estimate_first;
  Eigen::VectorXd estimate_second;
  Eigen::VectorXd closed_form;
  double max_discrepancy = 0.0;
  double max_closed_form_discrepancy = 0.0;
  bool pass = false;
};

/// Posterior-mean ratio E[theta eta | x, u] / E[eta | x, u] computed by direct
/// quadrature over (theta, eta) for two sampling families, compared with each
/// other and with (1 - r(W)/W) x. Supports p <= 2 and k <= 2.
FIndependenceReport verify_f_independence(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u, const ModelSpec& first,
                                          const ModelSpec& second, double tolerance = 1e-4);

/// Direct-quadrature posterior-mean ratio for a single family.
Eigen::VectorXd posterior_mean_ratio(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, const ModelSpec& family);

}  // namespace steinlab
