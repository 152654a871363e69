#include "steinlab/bayes_shrinkage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/quadrature/trapezoidal.hpp>

#include "steinlab/errors.hpp"
#include "steinlab/quadrature.hpp"

namespace steinlab {

void BayesPriorSpec::validate() const {
  if (p < 1 || k < 0) {
    throw Error(ErrorCode::parameter_domain, "prior needs p >= 1 and k >= 0");
  }
  if (!(b_prior > 0.0 && b_prior < p)) {
    throw Error(ErrorCode::parameter_domain, "prior needs 0 < b < p");
  }
  if (!(0.5 * k + a_prior + 0.5 * b_prior + 2.0 > 0.0)) {
    throw Error(ErrorCode::parameter_domain, "prior needs k/2 + a + b/2 + 2 > 0");
  }
}

namespace {

constexpr double kLambdaSplit = 0.5;
constexpr double kRelTol = 1e-11;

// Components: D = I(b/2-1), N = I(b/2), and the integrals behind their
// w-derivatives, D' = -m I'(b/2), N' = -m I'(b/2+1), where I' carries one
// extra power of (1 + w lambda)^{-1}.
struct LambdaIntegrals {
  double d = 0.0, n = 0.0, dd = 0.0, nd = 0.0;
  double d_err = 0.0, n_err = 0.0;
};

LambdaIntegrals lambda_integrals(const BayesPriorSpec& prior, double w) {
  const double half_b = 0.5 * prior.b_prior;
  const double beta = 0.5 * (prior.p - prior.b_prior);
  const double m = 0.5 * prior.k + prior.a_prior + half_b + 2.0;

  auto components = [&](double lambda, double weight) -> std::array<double, 4> {
    const double inv = 1.0 / (1.0 + w * lambda);
    const double base = weight * std::exp(-m * std::log1p(w * lambda));
    return {base, lambda * base, lambda * base * inv, lambda * lambda * base * inv};
  };

  // lambda = s^{2/b} absorbs lambda^{b/2-1} when b < 2.
  const bool substitute_low = half_b < 1.0;
  auto lower = [&](double v) -> std::array<double, 4> {
    if (substitute_low) {
      const double lambda = std::pow(v, 1.0 / half_b);
      return components(lambda, std::exp((beta - 1.0) * std::log1p(-lambda)) / half_b);
    }
    const double weight = (v == 0.0 && half_b == 1.0)
                              ? 1.0
                              : std::pow(v, half_b - 1.0) *
                                    std::exp((beta - 1.0) * std::log1p(-v));
    return components(v, weight);
  };
  // 1 - lambda = y^{1/beta} absorbs (1 - lambda)^{beta - 1}.
  auto upper = [&](double y) -> std::array<double, 4> {
    const double lambda = 1.0 - std::pow(y, 1.0 / beta);
    return components(lambda, std::pow(lambda, half_b - 1.0) / beta);
  };

  auto to_lower = [&](double lambda) {
    return substitute_low ? std::pow(lambda, half_b) : lambda;
  };

  // Break the lower piece geometrically around lambda ~ 1/w where
  // (1 + w lambda)^{-m} turns over.
  std::vector<double> breaks{0.0};
  if (w > 10.0 / kLambdaSplit) {
    for (double lambda = 0.1 / w; lambda < kLambdaSplit; lambda *= 10.0) {
      breaks.push_back(to_lower(lambda));
    }
  }
  breaks.push_back(to_lower(kLambdaSplit));

  LambdaIntegrals out;
  auto accumulate = [&](const VectorIntegral<4>& piece) {
    out.d += piece.value[0];
    out.n += piece.value[1];
    out.dd += piece.value[2];
    out.nd += piece.value[3];
    out.d_err += piece.abs_error[0];
    out.n_err += piece.abs_error[1];
  };
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    accumulate(integrate_gk_vector<4>(lower, breaks[i], breaks[i + 1], kRelTol));
  }
  accumulate(integrate_gk_vector<4>(upper, 0.0, std::pow(1.0 - kLambdaSplit, beta), kRelTol));

  if (!(out.d > 0.0) || !std::isfinite(out.d) || !std::isfinite(out.n)) {
    throw Error(ErrorCode::quadrature_failure,
                "r(w) integrals did not converge at w = " + std::to_string(w));
  }
  return out;
}

}  // namespace

BayesRValue bayes_r_detail(const BayesPriorSpec& prior, double w) {
  prior.validate();
  if (!(w >= 0.0) || !std::isfinite(w)) {
    throw Error(ErrorCode::invalid_argument, "bayes_r needs finite w >= 0");
  }
  const LambdaIntegrals in = lambda_integrals(prior, w);
  const double m = 0.5 * prior.k + prior.a_prior + 0.5 * prior.b_prior + 2.0;
  const double ratio = in.n / in.d;
  BayesRValue out;
  out.r = w * ratio;
  // r' = N/D + w (N' D - N D') / D^2 with N' = -m nd, D' = -m dd
  out.r_prime = ratio - m * w * (in.nd * in.d - in.n * in.dd) / (in.d * in.d);
  out.error_estimate = out.r * (in.n_err / std::abs(in.n) + in.d_err / in.d);
  return out;
}

double bayes_r(const BayesPriorSpec& prior, double w) { return bayes_r_detail(prior, w).r; }

ShrinkFn bayes_shrink_fn(const BayesPriorSpec& prior) {
  prior.validate();
  ShrinkFn fn = ShrinkFn::custom([prior](double w) { return bayes_r(prior, w); },
                                 [prior](double w) { return bayes_r_detail(prior, w).r_prime; },
                                 prior.r_upper_bound(), prior.b_prior <= prior.p - 2.0);
  return fn;
}

VectorField generalized_bayes_field(const BayesPriorSpec& prior) {
  VectorField field = baranchik_unknown_field(bayes_shrink_fn(prior), prior.k);
  std::ostringstream name;
  name << "generalized_bayes(a=" << prior.a_prior << ",b=" << prior.b_prior << ")";
  field.name = name.str();
  return field;
}

Estimate generalized_bayes_estimate(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                    const Eigen::VectorXd& u) {
  prior.validate();
  if (x.size() != prior.p || u.size() != prior.k) {
    throw Error(ErrorCode::dimension_mismatch, "(x, u) dimensions do not match the prior");
  }
  const double s = u.squaredNorm();
  if (s == 0.0) throw Error(ErrorCode::missing_residual, "generalized Bayes needs |u| > 0");
  const double w = x.squaredNorm() / s;
  // r(w)/w = N/D, finite at w = 0.
  const LambdaIntegrals in = lambda_integrals(prior, w);
  return {(1.0 - in.n / in.d) * x, false};
}

double RwTable::max_decrease() const {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    worst = std::max(worst, rows[i].r - rows[i + 1].r);
  }
  return worst;
}

bool RwTable::is_nondecreasing(double tolerance) const {
  return rows.size() < 2 || max_decrease() <= tolerance;
}

double RwTable::max_r() const {
  double best = 0.0;
  for (const auto& row : rows) best = std::max(best, row.r);
  return best;
}

std::string RwTable::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "w,r,error_estimate\n";
  for (const auto& row : rows) os << row.w << ',' << row.r << ',' << row.error_estimate << '\n';
  return os.str();
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
  if (!(lo > 0.0 && hi > lo) || points < 2) {
    throw Error(ErrorCode::invalid_argument, "log grid needs 0 < lo < hi and >= 2 points");
  }
  std::vector<double> grid(points);
  const double step = std::log(hi / lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    grid[i] = lo * std::exp(step * static_cast<double>(i));
  }
  grid.back() = hi;
  return grid;
}

RwTable build_rw_table(const BayesPriorSpec& prior, std::span<const double> w_grid) {
  prior.validate();
  RwTable table;
  table.prior = prior;
  table.rows.reserve(w_grid.size());
  for (double w : w_grid) {
    const BayesRValue v = bayes_r_detail(prior, w);
    table.rows.push_back({w, v.r, v.error_estimate});
  }
  return table;
}

const CertificateClause* MinimaxCertificate::clause(const std::string& name) const {
  for (const auto& c : clauses) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

std::string MinimaxCertificate::to_text() const {
  std::ostringstream os;
  os << "prior a=" << prior.a_prior << " b=" << prior.b_prior << " p=" << prior.p
     << " k=" << prior.k << '\n';
  for (const auto& c : clauses) {
    os << (c.evaluated ? (c.pass ? "  PASS  " : "  FAIL  ") : "  SKIP  ") << c.name;
    if (!c.detail.empty()) os << "  (" << c.detail << ')';
    os << '\n';
  }
  os << (pass ? "minimax: certified" : "minimax: NOT certified") << '\n';
  return os.str();
}

MinimaxCertificate minimaxity_certificate(const BayesPriorSpec& prior) {
  MinimaxCertificate cert;
  cert.prior = prior;
  const double a = prior.a_prior;
  const double b = prior.b_prior;
  const double p = prior.p;
  const double k = prior.k;
  auto add = [&](std::string name, bool pass, std::string detail) {
    cert.clauses.push_back({std::move(name), true, pass, std::move(detail)});
  };
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
  };

  const bool domain = prior.p >= 1 && prior.k >= 0 && b > 0.0 && b < p &&
                      0.5 * k + a + 0.5 * b + 2.0 > 0.0;
  add("parameter_domain", domain, "0 < b < p and k/2 + a + b/2 + 2 > 0");
  const bool bound_finite = k + 2.0 * a + 2.0 > 0.0;
  add("bound_finite", bound_finite, "k + 2a + 2 = " + fmt(k + 2.0 * a + 2.0) + " > 0");
  add("b_le_p_minus_2", b > 0.0 && b <= p - 2.0, "b = " + fmt(b) + ", p - 2 = " + fmt(p - 2.0));
  const double limit = p > 2.0 ? 2.0 * (p - 2.0) / (k + 2.0) : 0.0;
  const double r_bound = bound_finite ? b / (k + 2.0 * a + 2.0)
                                      : std::numeric_limits<double>::infinity();
  add("r_bound_le_2(p-2)/(k+2)", bound_finite && r_bound <= limit,
      "b/(k+2a+2) = " + fmt(r_bound) + ", 2(p-2)/(k+2) = " + fmt(limit));

  if (domain && bound_finite) {
    const std::vector<double> grid = log_grid(1e-4, 1e6, 200);
    const RwTable table = build_rw_table(prior, grid);
    add("r_nondecreasing_on_grid", table.is_nondecreasing(1e-10),
        "max decrease " + fmt(table.max_decrease()));
    add("r_le_2(p-2)/(k+2)_on_grid", table.max_r() <= limit + 1e-8,
        "max r " + fmt(table.max_r()));
  } else {
    cert.clauses.push_back({"r_nondecreasing_on_grid", false, false, "domain invalid"});
    cert.clauses.push_back({"r_le_2(p-2)/(k+2)_on_grid", false, false, "domain invalid"});
  }
  cert.pass = std::all_of(cert.clauses.begin(), cert.clauses.end(),
                          [](const CertificateClause& c) { return c.evaluated && c.pass; });
  return cert;
}

namespace {

constexpr double kDirectTol = 1e-10;

// int_0^inf eta^c f(eta S) d eta with eta = e^y.
double eta_integral(const RadialLaw& radial, double c, double s) {
  boost::math::quadrature::sinh_sinh<double> integrator;
  auto integrand = [&](double y) {
    const double log_value = (c + 1.0) * y + radial.log_density(std::exp(y) * s);
    return std::isfinite(log_value) ? std::exp(log_value) : 0.0;
  };
  return integrator.integrate(integrand, kDirectTol);
}

// Integral of h over the real half-lines, split at 0 and +-reach.
template <typename H>
double integrate_line(const H& h, double reach) {
  boost::math::quadrature::tanh_sinh<double> finite;
  boost::math::quadrature::exp_sinh<double> tail;
  const double inf = std::numeric_limits<double>::infinity();
  double total = finite.integrate(h, -reach, 0.0, kDirectTol);
  total += finite.integrate(h, 0.0, reach, kDirectTol);
  total += tail.integrate(h, reach, inf, kDirectTol);
  total += tail.integrate([&](double t) { return h(-t); }, reach, inf, kDirectTol);
  return total;
}

template <typename H>
double integrate_radius(const H& h, double reach) {
  boost::math::quadrature::tanh_sinh<double> finite;
  boost::math::quadrature::exp_sinh<double> tail;
  return finite.integrate(h, 0.0, reach, kDirectTol) +
         tail.integrate(h, reach, std::numeric_limits<double>::infinity(), kDirectTol);
}

}  // namespace

Eigen::VectorXd posterior_mean_ratio(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& u, const ModelSpec& family) {
  prior.validate();
  if (prior.p > 2 || prior.k > 2) {
    throw Error(ErrorCode::invalid_argument, "direct posterior quadrature supports p, k <= 2");
  }
  if (x.size() != prior.p || u.size() != prior.k) {
    throw Error(ErrorCode::dimension_mismatch, "(x, u) dimensions do not match the prior");
  }
  // int t^{(p+k)/2 + a + 1} f(t) dt < inf  <=>  E[V^{a+2}] < inf
  (void)family.mixing().moment(prior.a_prior + 2.0);

  const int n = prior.p + prior.k;
  const RadialLaw radial(family, n);
  const double c = 0.5 * n + prior.a_prior + 1.0;
  const double usq = u.squaredNorm();
  const double reach = 2.0 * (x.norm() + std::sqrt(usq)) + 1.0;
  const double b = prior.b_prior;

  Eigen::VectorXd out(prior.p);
  if (prior.p == 1) {
    auto weight = [&](double theta) {
      if (theta == 0.0) return 0.0;
      const double d = x[0] - theta;
      return std::pow(std::abs(theta), -b) * eta_integral(radial, c, d * d + usq);
    };
    const double den = integrate_line(weight, reach);
    const double num = integrate_line([&](double t) { return t * weight(t); }, reach);
    out[0] = num / den;
    return out;
  }

  // p = 2: theta = rho (cos phi, sin phi), d theta = rho d rho d phi.
  auto radial_weight = [&](double rho, double phi) {
    if (rho == 0.0) return 0.0;
    const double d0 = x[0] - rho * std::cos(phi);
    const double d1 = x[1] - rho * std::sin(phi);
    return std::pow(rho, 1.0 - b) * eta_integral(radial, c, d0 * d0 + d1 * d1 + usq);
  };
  auto angular = [&](auto&& factor) {
    return boost::math::quadrature::trapezoidal(
        [&](double phi) {
          return integrate_radius([&](double rho) { return factor(rho, phi) * radial_weight(rho, phi); },
                                  reach);
        },
        0.0, 2.0 * std::numbers::pi, 1e-9);
  };
  const double den = angular([](double, double) { return 1.0; });
  out[0] = angular([](double rho, double phi) { return rho * std::cos(phi); }) / den;
  out[1] = angular([](double rho, double phi) { return rho * std::sin(phi); }) / den;
  return out;
}

FIndependenceReport verify_f_independence(const BayesPriorSpec& prior, const Eigen::VectorXd& x,
                                          const Eigen::VectorXd& u, const ModelSpec& first,
                                          const ModelSpec& second, double tolerance) {
  FIndependenceReport report;
  report.estimate_first = posterior_mean_ratio(prior, x, u, first);
  report.estimate_second = posterior_mean_ratio(prior, x, u, second);
  report.closed_form = generalized_bayes_estimate(prior, x, u).value;
  report.max_discrepancy =
      (report.estimate_first - report.estimate_second).cwiseAbs().maxCoeff();
  report.max_closed_form_discrepancy =
      std::max((report.estimate_first - report.closed_form).cwiseAbs().maxCoeff(),
               (report.estimate_second - report.closed_form).cwiseAbs().maxCoeff());
  report.pass = report.max_discrepancy <= tolerance &&
                report.max_closed_form_discrepancy <= tolerance;
  return report;
}

}  // namespace steinlab
