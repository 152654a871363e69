#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "steinlab/errors.hpp"
#include "steinlab/parallel.hpp"
#include "steinlab/spherical_models.hpp"

using namespace steinlab;

namespace {

Eigen::VectorXd zeros(int p) { return Eigen::VectorXd::Zero(p); }

MixingLaw two_point() { return MixingLaw::discrete({1.0, 2.0}, {0.5, 0.5}); }

// Two-sample Kolmogorov-Smirnov distance.
double ks_distance(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

std::vector<double> squared_norms(const Eigen::MatrixXd& rows) {
  std::vector<double> out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] = rows.row(i).squaredNorm();
  return out;
}

// Q from the radial density by direct numerical integration of the tail.
double q_oracle(const std::function<double(double)>& f, double t) {
  boost::math::quadrature::exp_sinh<double> tail;
  const double F = 0.5 * tail.integrate([&](double s) { return f(t + s); });
  return F / f(t);
}

}  // namespace

TEST(SampleJoint, NormalChiSquareMean) {
  const auto batch = sample_joint(normal_model(zeros(3)), 1000000, 11);
  Moments m;
  for (double v : squared_norms(batch.x)) m.add(v);
  EXPECT_NEAR(m.mean, 3.0, 3 * m.std_error());
}

TEST(SampleJoint, DegenerateMixtureIsNormal) {
  const auto mix = sample_joint(mixture_model(MixingLaw::point_mass(4.0), zeros(5)), 100000, 1);
  const auto nor = sample_joint(normal_model(zeros(5), 2.0), 100000, 2);
  EXPECT_LT(ks_distance(squared_norms(mix.x), squared_norms(nor.x)), 0.01);
  const RadialLaw rm(mixture_model(MixingLaw::point_mass(4.0), zeros(5)), 5);
  for (double t : {0.0, 1.0, 30.0}) EXPECT_NEAR(q_function(rm, t), 4.0, 1e-12);
}

TEST(SampleJoint, StudentCovariance) {
  const double df = 5.0, sigma = 1.5;
  const auto batch = sample_joint(student_t_model(df, zeros(4), sigma, 2), 1000000, 5);
  const double target = df / (df - 2.0) * sigma * sigma;
  for (int c = 0; c < 4; ++c) {
    Moments diag, off;
    for (Eigen::Index i = 0; i < batch.x.rows(); ++i) {
      diag.add(batch.x(i, c) * batch.x(i, c));
      off.add(batch.x(i, c) * batch.x(i, (c + 1) % 4));
    }
    EXPECT_NEAR(diag.mean, target, 3 * diag.std_error()) << "coordinate " << c;
    EXPECT_NEAR(off.mean, 0.0, 3 * off.std_error());
  }
}

TEST(SampleJoint, StudentMatchesChiSquareRatioSampler) {
  // Independent construction: X = sigma Z sqrt(df / chi2_df), shared denominator for X and U.
  const double df = 5.0, sigma = 1.5;
  const int p = 4, k = 2, n = 100000;
  std::mt19937_64 gen(123);
  std::normal_distribution<double> z;
  std::chi_squared_distribution<double> chi(df);
  std::vector<double> ref_x, ref_u;
  for (int i = 0; i < n; ++i) {
    const double scale = sigma * std::sqrt(df / chi(gen));
    double sx = 0.0, su = 0.0;
    for (int c = 0; c < p; ++c) sx += std::pow(scale * z(gen), 2);
    for (int c = 0; c < k; ++c) su += std::pow(scale * z(gen), 2);
    ref_x.push_back(sx);
    ref_u.push_back(su / (sx + su));
  }
  const auto batch = sample_joint(student_t_model(df, zeros(p), sigma, k), n, 6);
  std::vector<double> lib_u(n);
  const auto lib_x = squared_norms(batch.x);
  for (int i = 0; i < n; ++i) lib_u[i] = batch.u.row(i).squaredNorm() / (lib_x[i] + batch.u.row(i).squaredNorm());
  EXPECT_LT(ks_distance(lib_x, ref_x), 0.01);
  EXPECT_LT(ks_distance(lib_u, ref_u), 0.01);
}

TEST(SampleJoint, Reproducible) {
  const auto model = mixture_model(two_point(), Eigen::VectorXd::Ones(3), 1.0, 2);
  const auto a = sample_joint(model, 5000, 99);
  const auto b = sample_joint(model, 5000, 99);
  EXPECT_TRUE(a.x == b.x);
  EXPECT_TRUE(a.u == b.u);
  const auto c = sample_joint(model, 5000, 100);
  EXPECT_FALSE(a.x == c.x);
  Eigen::VectorXd x(3), u(2);
  draw_replicate(model, 99, 1234, x, u);
  EXPECT_TRUE(x == a.x.row(1234).transpose());
  EXPECT_TRUE(u == a.u.row(1234).transpose());
}

TEST(SampleJoint, RotationInvariantMarginals) {
  const int p = 5, n = 100000;
  const auto batch = sample_joint(student_t_model(6.0, zeros(p)), n, 17);
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) m(i, j) = z(gen);
  const Eigen::MatrixXd o = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
  const Eigen::MatrixXd rotated = batch.x * o.transpose();
  std::vector<double> first(n), first_rot(n), pair(n), pair_rot(n);
  for (int i = 0; i < n; ++i) {
    first[i] = batch.x(i, 0);
    first_rot[i] = rotated(i, 0);
    pair[i] = batch.x.row(i).head(2).squaredNorm();
    pair_rot[i] = rotated.row(i).head(2).squaredNorm();
  }
  EXPECT_LT(ks_distance(first, first_rot), 0.01);
  EXPECT_LT(ks_distance(pair, pair_rot), 0.01);
  const auto norms = squared_norms(batch.x);
  const auto norms_rot = squared_norms(rotated);
  for (int i = 0; i < n; ++i) ASSERT_NEAR(norms_rot[i], norms[i], 1e-12 * norms[i]);
}

TEST(MixingLaw, Moments) {
  EXPECT_NEAR(two_point().moment(-1.0), 0.75, 1e-15);
  EXPECT_NEAR(two_point().moment(-2.0), 0.625, 1e-15);
  const auto ig = MixingLaw::inverse_gamma(3.5, 2.0);
  for (double s : {-2.0, -0.5, 1.0, 2.5}) {
    const double exact = std::pow(2.0, s) * boost::math::tgamma(3.5 - s) / boost::math::tgamma(3.5);
    EXPECT_NEAR(ig.moment(s), exact, 1e-12 * exact);
  }
  EXPECT_THROW(ig.moment(3.5), Error);
  const auto lu = MixingLaw::log_uniform(0.5, 4.0);
  for (double s : {-2.0, -1.0, 1.0}) {
    const double exact = (std::pow(4.0, s) - std::pow(0.5, s)) / (s * std::log(8.0));
    EXPECT_NEAR(lu.moment(s), exact, 1e-12 * exact);
  }
}

TEST(MixingLaw, RejectsBadLaws) {
  EXPECT_THROW(MixingLaw::discrete({1.0, 2.0}, {0.5, 0.6}), Error);
  EXPECT_THROW(MixingLaw::discrete({0.0, 2.0}, {0.5, 0.5}), Error);
  EXPECT_THROW(MixingLaw::inverse_gamma(-1.0, 1.0), Error);
  EXPECT_THROW(MixingLaw::log_uniform(2.0, 1.0), Error);
}

TEST(ModelSpec, Validation) {
  EXPECT_THROW(normal_model(Eigen::VectorXd()).validate(), Error);
  EXPECT_THROW(normal_model(zeros(3), 0.0).validate(), Error);
  EXPECT_THROW(normal_model(zeros(3), 1.0, -1).validate(), Error);
  EXPECT_THROW(student_t_model(0.0, zeros(3)).validate(), Error);
  EXPECT_NO_THROW(student_t_model(5.0, zeros(3)).validate());
  EXPECT_TRUE(std::isinf(student_t_model(2.0, zeros(3)).coordinate_variance()));
  EXPECT_DOUBLE_EQ(student_t_model(5.0, zeros(3), 2.0).coordinate_variance(), 5.0 / 3.0 * 4.0);
  EXPECT_DOUBLE_EQ(mixture_model(two_point(), zeros(3)).coordinate_variance(), 1.5);
}

TEST(QFunction, NormalIsConstant) {
  for (double sigma : {0.5, 1.0, 3.0}) {
    const RadialLaw radial(normal_model(zeros(4), sigma), 4);
    for (double t = 1e-3; t <= 1e3; t *= 1.5) {
      EXPECT_NEAR(q_function(radial, t), sigma * sigma, 1e-8 * sigma * sigma);
    }
  }
}

TEST(QFunction, TwoPointMixtureAtOrigin) {
  const RadialLaw radial(mixture_model(two_point(), zeros(4)), 4);
  EXPECT_NEAR(q_function(radial, 0.0), 1.2, 1e-12);
  EXPECT_NEAR(mixture_q_lower_bound(two_point(), 4), 1.2, 1e-12);
  EXPECT_NEAR(posterior_mean_V(two_point(), 4, 0.0), 1.2, 1e-12);
}

TEST(QFunction, MatchesNumericalTailIntegral) {
  const int p = 4;
  const double df = 5.0, sigma = 1.3;
  const RadialLaw student(student_t_model(df, zeros(p), sigma), p);
  auto f_student = [&](double t) { return std::pow(1.0 + t / (df * sigma * sigma), -(df + p) / 2.0); };
  const RadialLaw logu(mixture_model(MixingLaw::log_uniform(0.5, 4.0), zeros(p)), p);
  auto f_logu = [&](double t) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        [&](double v) {
          return std::pow(v, -p / 2.0 - 1.0) * std::exp(-t / (2.0 * v));
        },
        0.5, 4.0, 15, 1e-14);
  };
  for (double t : {0.0, 0.3, 2.0, 10.0, 50.0}) {
    const double qs = q_oracle(f_student, t);
    EXPECT_NEAR(q_function(student, t), qs, 1e-8 * qs) << t;
    const double ql = q_oracle(f_logu, t);
    EXPECT_NEAR(q_function(logu, t), ql, 1e-7 * ql) << t;
  }
}

TEST(QFunction, MixtureLowerBoundOnGrid) {
  for (const MixingLaw& law : {two_point(), MixingLaw::inverse_gamma(3.0, 3.0),
                               MixingLaw::log_uniform(0.2, 5.0)}) {
    const RadialLaw radial(mixture_model(law, zeros(4)), 4);
    const double c = mixture_q_lower_bound(law, 4);
    for (double t = 0.0; t <= 100.0; t += 0.5) {
      EXPECT_GE(q_function(radial, t), c - 1e-8) << t;
    }
  }
}

TEST(PosteriorMeanV, PointMassAndMonotone) {
  for (double t : {0.0, 1.0, 100.0}) {
    EXPECT_NEAR(posterior_mean_V(MixingLaw::point_mass(2.5), 3, t), 2.5, 1e-12);
  }
  // two-atom posterior computed directly
  auto direct = [](double t) {
    const double w1 = std::pow(1.0, -2.0) * std::exp(-t / 2.0);
    const double w2 = std::pow(2.0, -2.0) * std::exp(-t / 4.0);
    return (w1 * 1.0 + w2 * 2.0) / (w1 + w2);
  };
  EXPECT_NEAR(posterior_mean_V(two_point(), 4, 10.0), direct(10.0), 1e-12);
  EXPECT_GE(posterior_mean_V(two_point(), 4, 10.0), 1.2);
  for (const MixingLaw& law : {two_point(), MixingLaw::inverse_gamma(3.0, 3.0),
                               MixingLaw::log_uniform(0.2, 5.0)}) {
    double prev = posterior_mean_V(law, 5, 0.0);
    for (double t = 0.25; t <= 200.0; t *= 1.3) {
      const double cur = posterior_mean_V(law, 5, t);
      EXPECT_GE(cur, prev - 1e-12) << t;
      prev = cur;
    }
  }
}

TEST(RadialLaw, DensityAndTailShape) {
  const RadialLaw radial(student_t_model(4.0, zeros(3)), 3);
  double prev = radial.tail(0.0);
  for (double t = 0.1; t < 100.0; t *= 2.0) {
    EXPECT_GE(radial.density(t), 0.0);
    EXPECT_LE(radial.tail(t), prev);
    prev = radial.tail(t);
  }
  EXPECT_LT(radial.tail(1e8), 1e-10 * radial.tail(0.0));
}
