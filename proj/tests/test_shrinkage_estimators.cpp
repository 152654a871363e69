#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "steinlab/bayes_shrinkage.hpp"
#include "steinlab/errors.hpp"
#include "steinlab/estimators.hpp"
#include "steinlab/shrink_fn.hpp"
#include "steinlab/vector_field.hpp"

using namespace steinlab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Eigen::VectorXd random_point(int p, std::mt19937_64& gen, double lo = 0.5, double hi = 10.0) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> radius(lo, hi);
  Eigen::VectorXd d(p);
  for (int i = 0; i < p; ++i) d[i] = z(gen);
  return radius(gen) * d.normalized();
}

Eigen::MatrixXd random_rotation(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = z(gen);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
}

void expect_vec_near(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double tol) {
  ASSERT_EQ(a.size(), b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], tol) << "index " << i;
}

EstimatorSpec spec(EstimatorVariant v, std::optional<double> sigma = std::nullopt) {
  EstimatorSpec s;
  s.variant = std::move(v);
  s.sigma = sigma;
  return s;
}

}  // namespace

TEST(Estimate, Identity) {
  const Eigen::VectorXd x = vec({1.0, -2.0, 3.0});
  expect_vec_near(estimate(spec(estimator::Identity{}), x).value, x, 0.0);
}

TEST(Estimate, JamesSteinKnownZeroesAtThreshold) {
  const Eigen::VectorXd x = vec({std::sqrt(3.0), 0.0, 0.0, 0.0, 0.0});
  expect_vec_near(estimate(spec(estimator::JsKnown{3.0}, 1.0), x).value, Eigen::VectorXd::Zero(5), 1e-15);
}

TEST(Estimate, JamesSteinUnknownExample) {
  const Eigen::VectorXd x = vec({2.0, 0.0, 0.0, 0.0, 0.0});
  const Eigen::VectorXd u = vec({std::sqrt(6.0), 0.0, 0.0, 0.0});
  expect_vec_near(estimate(spec(estimator::JsUnknown{3.0}), x, u).value,
                  vec({0.5, 0.0, 0.0, 0.0, 0.0}), 1e-15);
}

TEST(JsUnknownScale, Cases) {
  const Eigen::VectorXd x = vec({1.0, 2.0, -1.0, 0.5, 3.0});
  const Eigen::VectorXd u = vec({1.0, 1.0, 0.0, 2.0});
  expect_vec_near(js_unknown_scale(x, u, 0.0).value, x, 0.0);

  const Eigen::VectorXd xr = vec({std::sqrt(3.0), 0.0, 0.0, 0.0, 0.0});
  const Eigen::VectorXd ur = vec({std::sqrt(6.0), 0.0, 0.0, 0.0});
  expect_vec_near(js_unknown_scale(xr, ur, 3.0).value, Eigen::VectorXd::Zero(5), 1e-15);

  // |u|^2 / (k + 2) = sigma^2
  const double sigma = std::sqrt(u.squaredNorm() / 6.0);
  expect_vec_near(js_unknown_scale(x, u, 3.0).value, js_known_scale(x, 3.0, sigma).value, 1e-14);
}

TEST(BaranchikUnknownScale, Cases) {
  const Eigen::VectorXd x = vec({1.0, 2.0, -1.0, 0.5, 3.0});
  const Eigen::VectorXd u = vec({1.0, 1.0, 0.0, 2.0});
  expect_vec_near(baranchik_unknown_scale(x, u, ShrinkFn::constant(0.0)).value, x, 0.0);

  const double c = 0.7;
  const double factor = 1.0 - c * u.squaredNorm() / x.squaredNorm();
  expect_vec_near(baranchik_unknown_scale(x, u, ShrinkFn::constant(c)).value, factor * x, 1e-14);

  // r(w) = min(w/(k+2), 2(p-2)/(k+2)): the factor tends to 1 as W grows
  const int p = 5, k = 4;
  const ShrinkFn r = ShrinkFn::saturating_linear(1.0 / (k + 2), 2.0 * (p - 2) / (k + 2));
  const Eigen::VectorXd big = 1e4 * x;
  const double w = big.squaredNorm() / u.squaredNorm();
  const double expected = 1.0 - 2.0 * (p - 2) / ((k + 2) * w);
  expect_vec_near(baranchik_unknown_scale(big, u, r).value, expected * big, 1e-9 * big.norm());
  EXPECT_NEAR(expected, 1.0, 1e-6);
}

TEST(Estimate, SingularAtOriginIsFlagged) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(4);
  const auto e = estimate(spec(estimator::JsKnown{2.0}, 1.0), zero);
  EXPECT_TRUE(e.singular);
  expect_vec_near(e.value, zero, 0.0);
}

TEST(Estimate, UnknownScaleNeedsResidual) {
  EXPECT_THROW(estimate(spec(estimator::JsUnknown{1.0}), vec({1.0, 2.0, 3.0})), Error);
}

TEST(OrthantEstimate, Cases) {
  const auto family = OrthantFamily::james_stein_faces();
  expect_vec_near(orthant_estimate(vec({-1.0, -2.0, -0.5}), Eigen::VectorXd(), family, true),
                  Eigen::VectorXd::Zero(3), 0.0);

  std::vector<ShrinkFn> zero_faces(5, ShrinkFn::constant(0.0));
  const auto zero = OrthantFamily::per_face(zero_faces);
  const Eigen::VectorXd pos = vec({1.0, 2.0, 0.5, 3.0});
  expect_vec_near(orthant_estimate(pos, Eigen::VectorXd(), zero, true), pos, 0.0);

  expect_vec_near(orthant_estimate(vec({1.0, 1.0, 1.0, 1.0, -1.0, -1.0}), Eigen::VectorXd(), family, true),
                  vec({0.5, 0.5, 0.5, 0.5, 0.0, 0.0}), 1e-15);
}

TEST(OrthantEstimate, NonnegativeAndProjectionWhenZero) {
  std::mt19937_64 gen(8);
  std::normal_distribution<double> z;
  std::vector<ShrinkFn> zero_faces(7, ShrinkFn::constant(0.0));
  const auto zero = OrthantFamily::per_face(zero_faces);
  const auto js = OrthantFamily::james_stein_faces();
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::VectorXd x(6), u(4);
    for (int i = 0; i < 6; ++i) x[i] = 2.0 * z(gen);
    for (int i = 0; i < 4; ++i) u[i] = z(gen);
    EXPECT_GE(orthant_estimate(x, u, js, false).minCoeff(), 0.0);
    EXPECT_GE(orthant_estimate(x, Eigen::VectorXd(), js, true).minCoeff(), 0.0);
    expect_vec_near(orthant_estimate(x, u, zero, false), positive_part(x), 0.0);
  }
}

TEST(Divergence, Examples) {
  const Eigen::VectorXd x = vec({1.0, 2.0, -2.0, 0.5, 1.5});
  const double a = 2.5;
  EXPECT_NEAR(divergence(james_stein_field(a), x), -a * 3.0 / x.squaredNorm(), 1e-14);
  EXPECT_NEAR(divergence_fd(james_stein_field(a), x, 1e-5), -a * 3.0 / x.squaredNorm(), 1e-8);

  const auto c = constant_field(vec({1.0, -1.0, 2.0, 0.0, 3.0}));
  EXPECT_EQ(divergence(c, x), 0.0);
  EXPECT_NEAR(divergence_fd(c, x, 1e-5), 0.0, 1e-9);

  // r(t) = t/(1+t), p = 4, |x|^2 = 1
  const auto bar = baranchik_field(ShrinkFn::rational(1.0));
  const Eigen::VectorXd x4 = vec({0.5, 0.5, 0.5, 0.5});
  EXPECT_NEAR(divergence(bar, x4), -1.5, 1e-14);
  EXPECT_NEAR(divergence_fd(bar, x4, 1e-5), -1.5, 1e-6);

  EXPECT_THROW(divergence(james_stein_field(1.0), Eigen::VectorXd::Zero(3)), Error);
}

TEST(Divergence, AnalyticMatchesFiniteDifferences) {
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> usq_dist(0.1, 20.0);
  const int p = 5, k = 3;
  Eigen::MatrixXd a = Eigen::MatrixXd::Random(p, p);
  BayesPriorSpec prior;
  prior.a_prior = 0.5;
  prior.b_prior = 2.5;
  prior.p = p;
  prior.k = k;
  const std::vector<VectorField> fields{
      james_stein_field(3.0),
      baranchik_field(ShrinkFn::constant(2.0), 1.5),
      baranchik_field(ShrinkFn::saturating_linear(0.3, 2.0)),
      baranchik_field(ShrinkFn::rational(4.0)),
      baranchik_unknown_field(ShrinkFn::rational(1.0), k),
      baranchik_unknown_field(ShrinkFn::saturating_linear(0.2, 1.0), k),
      generalized_bayes_field(prior),
      affine_field(a, Eigen::VectorXd::Ones(p)),
      constant_field(Eigen::VectorXd::Ones(p)),
  };
  for (const auto& field : fields) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = random_point(p, gen);
      const double usq = usq_dist(gen);
      const double fd = divergence_fd(field, x, 1e-5 * x.norm(), usq);
      const double an = divergence(field, x, usq);
      EXPECT_LE(std::abs(an - fd), std::max(1e-6, 1e-4 * std::abs(fd)))
          << field.name << " at |x| = " << x.norm();
      if (field.u_dependent) {
        const double dfd = usq_derivative_fd(field, x, usq, 1e-5 * usq);
        const double dan = field.d_usq_norm_sq(x, usq);
        EXPECT_LE(std::abs(dan - dfd), std::max(1e-6, 1e-4 * std::abs(dfd))) << field.name;
      }
    }
  }
}

TEST(ShrinkFn, DerivativeMatchesFiniteDifferences) {
  const std::vector<ShrinkFn> fns{ShrinkFn::constant(1.5), ShrinkFn::saturating_linear(0.5, 2.0),
                                  ShrinkFn::rational(3.0)};
  for (const auto& r : fns) {
    for (double t = 0.01; t < 1000.0; t *= 1.37) {
      if (r.kind == ShrinkFn::Kind::saturating_linear && std::abs(t - 4.0) < 0.05) continue;
      const double h = 1e-6 * std::max(1.0, t);
      const double fd = (r(t + h) - r(t - h)) / (2.0 * h);
      EXPECT_LE(std::abs(r.derivative(t) - fd), std::max(1e-6, 1e-4 * std::abs(r.derivative(t))))
          << r.describe() << " t=" << t;
      EXPECT_GE(r(t), 0.0);
      EXPECT_LE(r(t), r.declared_upper_bound + 1e-15);
    }
  }
}

TEST(Equivariance, Scale) {
  std::mt19937_64 gen(5);
  const int p = 6, k = 4;
  const std::vector<EstimatorSpec> known{spec(estimator::JsKnown{4.0}, 1.3),
                                         spec(estimator::BaranchikKnown{1.0, ShrinkFn::rational(4.0)}, 0.7)};
  BayesPriorSpec prior;
  prior.b_prior = 4.0;
  prior.p = p;
  prior.k = k;
  const std::vector<EstimatorSpec> unknown{
      spec(estimator::JsUnknown{4.0}),
      spec(estimator::BaranchikUnknown{ShrinkFn::saturating_linear(0.2, 1.0)}),
      spec(estimator::GeneralizedBayes{prior})};
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd x = random_point(p, gen);
    const Eigen::VectorXd u = random_point(k, gen);
    const double lambda = 0.1 + trial * 0.4;
    for (const auto& s : known) {
      EstimatorSpec scaled = s;
      scaled.sigma = *s.sigma * lambda;
      expect_vec_near(estimate(scaled, lambda * x).value, lambda * estimate(s, x).value,
                      1e-12 * lambda * x.norm());
    }
    for (const auto& s : unknown) {
      expect_vec_near(estimate(s, lambda * x, lambda * u).value, lambda * estimate(s, x, u).value,
                      1e-10 * lambda * x.norm());
    }
  }
}

TEST(Equivariance, Rotation) {
  std::mt19937_64 gen(6);
  const int p = 5, k = 3;
  BayesPriorSpec prior;
  prior.a_prior = -0.5;
  prior.b_prior = 2.0;
  prior.p = p;
  prior.k = k;
  const std::vector<EstimatorSpec> specs{
      spec(estimator::Identity{}), spec(estimator::JsKnown{3.0}, 1.0),
      spec(estimator::BaranchikKnown{2.0, ShrinkFn::rational(1.0)}, 2.0),
      spec(estimator::JsUnknown{3.0}),
      spec(estimator::BaranchikUnknown{ShrinkFn::rational(1.0)}),
      spec(estimator::GeneralizedBayes{prior})};
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd o = random_rotation(p, gen);
    const Eigen::MatrixXd ou = random_rotation(k, gen);
    const Eigen::VectorXd x = random_point(p, gen);
    const Eigen::VectorXd u = random_point(k, gen);
    for (const auto& s : specs) {
      expect_vec_near(estimate(s, o * x, ou * u).value, o * estimate(s, x, u).value, 1e-11 * x.norm());
    }
  }
}

TEST(BaranchikCondition, NonpositiveOnGrid) {
  // r nondecreasing and 0 <= r <= 2(p-2): r^2/t - 2(p-2) r/t - 4 r' <= 0
  const int p = 6;
  const std::vector<ShrinkFn> fns{ShrinkFn::constant(2.0 * (p - 2)), ShrinkFn::rational(2.0 * (p - 2)),
                                  ShrinkFn::saturating_linear(0.5, 2.0 * (p - 2)),
                                  ShrinkFn::rational(p - 2.0)};
  std::mt19937_64 gen(10);
  for (const auto& r : fns) {
    const auto field = baranchik_field(r);
    for (double t = 1e-3; t < 1e4; t *= 1.21) {
      const double formula = r(t) * r(t) / t - 2.0 * (p - 2) * r(t) / t - 4.0 * r.derivative(t);
      EXPECT_LE(formula, 1e-12 * (1.0 + std::abs(r(t) / t)));
      Eigen::VectorXd x = random_point(p, gen).normalized() * std::sqrt(t);
      const double via_field = field(x).squaredNorm() + 2.0 * divergence_fd(field, x, 1e-5 * x.norm());
      const double scale = r(t) * r(t) / t + 2.0 * (p - 2) * r(t) / t + 4.0 * std::abs(r.derivative(t));
      EXPECT_NEAR(via_field, formula, 1e-8 * scale + 1e-4 * std::abs(formula));
    }
  }
}

TEST(Superharmonic, InverseSquaredNorm) {
  std::mt19937_64 gen(12);
  auto h = [](const Eigen::VectorXd& x) { return 1.0 / x.squaredNorm(); };
  for (int p : {4, 6, 9}) {
    for (int i = 0; i < 100; ++i) {
      const Eigen::VectorXd x = random_point(p, gen, 0.5, 10.0);
      EXPECT_LE(laplacian_fd(h, x, 1e-3), 1e-6) << "p=" << p;
    }
  }
  // p = 3 is subharmonic away from the origin
  EXPECT_GT(laplacian_fd(h, vec({1.0, 0.0, 0.0}), 1e-3), 0.0);
}
