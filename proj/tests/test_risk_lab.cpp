#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "steinlab/errors.hpp"
#include "steinlab/risk_lab.hpp"

using namespace steinlab;

namespace {

constexpr std::uint64_t kN5 = 100000;
constexpr std::uint64_t kN6 = 1000000;

Eigen::VectorXd zeros(int p) { return Eigen::VectorXd::Zero(p); }
Eigen::VectorXd ones(int p) { return Eigen::VectorXd::Ones(p); }

EstimatorSpec identity() { return {}; }
EstimatorSpec js_known(double a) { return {estimator::JsKnown{a}, std::nullopt}; }
EstimatorSpec js_unknown(double a) { return {estimator::JsUnknown{a}, std::nullopt}; }

MixingLaw two_point() { return MixingLaw::discrete({1.0, 2.0}, {0.5, 0.5}); }

std::vector<ModelSpec> three_families(const Eigen::VectorXd& theta, int k) {
  return {normal_model(theta, 1.0, k), student_t_model(5.0, theta, 1.0, k),
          mixture_model(two_point(), theta, 1.0, k)};
}

VectorField zero_field(int p) { return constant_field(Eigen::VectorXd::Zero(p)); }

}  // namespace

TEST(McRisk, IdentityNormal) {
  const auto r = mc_risk(normal_model(zeros(6)), identity(), kN5, 1);
  EXPECT_NEAR(r.mean_loss, 6.0, 3 * r.std_error);
  EXPECT_GT(r.std_error, 0.0);
  EXPECT_EQ(r.n, kN5);
}

TEST(McRisk, IdentityMatchesCoordinateVarianceForEachFamily) {
  for (const auto& model : three_families(ones(4) * 2.0, 0)) {
    const auto r = mc_risk(model, identity(), kN5, 2);
    EXPECT_NEAR(r.mean_loss, 4.0 * model.coordinate_variance(), 3 * r.std_error) << model.family_name();
  }
}

TEST(McRisk, JamesSteinAtOrigin) {
  // 5 - 9 E[1/chi^2_5] = 5 - 9/3
  const auto r = mc_risk(normal_model(zeros(5)), js_known(3.0), kN5, 3);
  EXPECT_NEAR(r.mean_loss, 2.0, 3 * r.std_error);
  EXPECT_EQ(r.singular, 0u);
}

TEST(McRisk, RejectsInfiniteVariance) {
  EXPECT_THROW(mc_risk(student_t_model(2.0, zeros(3)), identity(), 1000, 1), Error);
}

TEST(McRisk, DeterministicAcrossThreadCounts) {
  const auto model = student_t_model(5.0, ones(6), 1.0, 4);
  const auto a = mc_risk(model, js_unknown(4.0), 50000, 9, ExecutionPolicy{1});
  const auto b = mc_risk(model, js_unknown(4.0), 50000, 9, ExecutionPolicy{4});
  EXPECT_EQ(a.mean_loss, b.mean_loss);
  EXPECT_EQ(a.std_error, b.std_error);
}

TEST(McRiskDifference, UnknownScaleJamesSteinBeatsIdentityForAllFamilies) {
  for (const auto& model : three_families(zeros(6), 4)) {
    const auto d = mc_risk_difference(model, js_unknown(4.0), identity(), kN5, 4);
    EXPECT_TRUE(d.common_random_numbers);
    EXPECT_LT(d.mean_difference, -3 * d.std_error) << model.family_name();
  }
}

TEST(McRiskDifference, SameEstimatorIsExactlyZero) {
  const auto d = mc_risk_difference(normal_model(ones(6)), js_known(4.0), js_known(4.0), 20000, 5);
  EXPECT_EQ(d.mean_difference, 0.0);
  EXPECT_EQ(d.std_error, 0.0);
}

TEST(McRiskDifference, JamesSteinVersusIdentity) {
  const auto near = mc_risk_difference(normal_model(zeros(6)), js_known(4.0), identity(), kN5, 6);
  EXPECT_NEAR(near.mean_difference, -4.0, 3 * near.std_error);
  EXPECT_NEAR(near.arm_a.mean_loss - near.arm_b.mean_loss, near.mean_difference, 1e-10);

  Eigen::VectorXd far = zeros(6);
  far[0] = 100.0;
  const auto d = mc_risk_difference(normal_model(far), js_known(4.0), identity(), kN5, 7);
  EXPECT_LE(std::abs(d.mean_difference), 3 * d.std_error + 0.01);
  EXPECT_LE(d.mean_difference, 3 * d.std_error);
}

TEST(McRiskDifference, RiskIsSmallestAtOrigin) {
  const auto base = normal_model(zeros(6));
  const auto at_zero = mc_risk(base, js_known(4.0), kN5, 8);
  for (double norm : {1.0, 2.0, 5.0, 10.0}) {
    const auto model = base.with_theta(ones(6).normalized() * norm);
    // same draws of X - theta at every theta
    const auto r = mc_risk(model, js_known(4.0), kN5, 8);
    EXPECT_LT(at_zero.mean_loss, r.mean_loss + 3 * std::hypot(at_zero.std_error, r.std_error))
        << norm;
  }
}

TEST(LinearRisk, ClosedForm) {
  EXPECT_DOUBLE_EQ(linear_risk_closed_form(5, 2.0, 0.0, 3.0).risk, 20.0);
  const auto origin = linear_risk_closed_form(4, 1.0, 1.0, 0.0);
  EXPECT_DOUBLE_EQ(origin.optimal_a, 1.0);
  EXPECT_DOUBLE_EQ(origin.risk, 0.0);
  const auto mid = linear_risk_closed_form(4, 1.0, 0.5, 4.0);
  EXPECT_DOUBLE_EQ(mid.optimal_a, 0.5);
  EXPECT_DOUBLE_EQ(mid.risk, 2.0);
}

TEST(UnbiasedRiskDifference, ZeroField) {
  const auto batch = sample_joint(normal_model(zeros(6), 1.0, 4), 10000, 1);
  const auto r = unbiased_risk_difference(batch, zero_field(6));
  EXPECT_EQ(r.mean, 0.0);
  EXPECT_EQ(r.std_error, 0.0);
}

TEST(UnbiasedRiskDifference, BatchAndStreamingAgree) {
  const auto model = student_t_model(5.0, ones(6), 1.0, 4);
  const auto batch = sample_joint(model, 30000, 12);
  const auto a = unbiased_risk_difference(batch, james_stein_field(4.0));
  const auto b = unbiased_risk_difference(model, james_stein_field(4.0), 30000, 12);
  EXPECT_NEAR(a.mean, b.mean, 1e-12 * std::abs(b.mean));
  EXPECT_NEAR(a.std_error, b.std_error, 1e-9 * b.std_error);
}

TEST(UnbiasedRiskDifference, AgreesWithPairedMonteCarlo) {
  for (double norm : {0.0, 2.0, 10.0}) {
    for (const auto& model : three_families(ones(6).normalized() * norm, 4)) {
      const auto u = unbiased_risk_difference(model, james_stein_field(4.0), kN5, 21);
      const auto d = mc_risk_difference(model, js_unknown(4.0), identity(), kN5, 22);
      EXPECT_TRUE(u.valid);
      EXPECT_LE(std::abs(u.mean - d.mean_difference), 3 * std::hypot(u.std_error, d.std_error))
          << model.family_name() << " |theta|=" << norm;
    }
  }
}

TEST(UnbiasedRiskDifference, NeedsResidualAndUIndependentField) {
  EXPECT_THROW(unbiased_risk_difference(normal_model(zeros(6)), james_stein_field(4.0), 100, 1), Error);
  EXPECT_THROW(unbiased_risk_difference(normal_model(zeros(6), 1.0, 4),
                                        baranchik_unknown_field(ShrinkFn::rational(1.0), 4), 100, 1),
               Error);
}

TEST(SteinIdentity, LinearFieldRightSideIsExact) {
  Eigen::MatrixXd a(3, 3);
  a << 1.0, 2.0, 0.0, -1.0, 3.0, 0.5, 0.0, 0.0, -2.0;
  const auto r = stein_identity_check(normal_model(ones(3), 1.5), affine_field(a, zeros(3)), kN5, 31);
  EXPECT_NEAR(r.rhs, 2.25 * a.trace(), 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(SteinIdentity, JamesSteinPassesAndWrongDivergenceFails) {
  const auto model = normal_model(ones(5), 2.0);
  const auto good = stein_identity_check(model, james_stein_field(3.0), kN6, 32);
  EXPECT_TRUE(good.pass) << good.difference << " se " << good.std_error;
  EXPECT_TRUE(good.valid);

  VectorField wrong = james_stein_field(3.0);
  const auto exact = wrong.div_x;
  wrong.div_x = [exact](const Eigen::VectorXd& x, double usq) { return 1.1 * exact(x, usq); };
  const auto bad = stein_identity_check(model, wrong, kN6, 32);
  EXPECT_FALSE(bad.pass) << bad.difference << " se " << bad.std_error;
}

TEST(SteinIdentity, RequiresNormalModel) {
  EXPECT_THROW(stein_identity_check(student_t_model(5.0, ones(4)), james_stein_field(2.0), 100, 1), Error);
}

TEST(QIdentity, NormalReducesToStein) {
  const auto model = normal_model(ones(5), 2.0);
  const auto q = q_identity_check(model, james_stein_field(3.0), kN5, 33);
  const auto s = stein_identity_check(model, james_stein_field(3.0), kN5, 33);
  EXPECT_EQ(q.lhs, s.lhs);
  EXPECT_NEAR(q.rhs, s.rhs, 1e-8 * std::abs(s.rhs));
}

TEST(QIdentity, StudentAndMixture) {
  const auto t = q_identity_check(student_t_model(5.0, ones(4)), james_stein_field(2.0), kN6, 34);
  EXPECT_TRUE(t.pass) << t.difference << " se " << t.std_error;
  const auto m = q_identity_check(mixture_model(two_point(), ones(4)),
                                  baranchik_field(ShrinkFn::rational(2.0)), kN6, 35);
  EXPECT_TRUE(m.pass) << m.difference << " se " << m.std_error;
}

TEST(SphereBall, LinearAndConstantFields) {
  const Eigen::VectorXd theta = ones(4);
  const double radius = 1.7;
  const auto lin = sphere_ball_check(theta, radius, affine_field(Eigen::MatrixXd::Identity(4, 4), -theta),
                                     10000, 41);
  EXPECT_NEAR(lin.lhs, radius * radius, 1e-12);
  EXPECT_NEAR(lin.rhs, radius * radius, 1e-12);
  EXPECT_TRUE(lin.pass);

  const auto c = sphere_ball_check(theta, radius, constant_field(Eigen::VectorXd::Constant(4, 2.0)), 10000, 42);
  EXPECT_EQ(c.rhs, 0.0);
  EXPECT_NEAR(c.lhs, 0.0, 3 * c.std_error);
  EXPECT_TRUE(c.pass);

  EXPECT_THROW(sphere_ball_check(theta, 0.0, james_stein_field(2.0), 100, 1), Error);
}

TEST(SphereBall, JamesSteinAwayFromOrigin) {
  Eigen::VectorXd theta = zeros(4);
  theta[0] = 3.0;
  const auto r = sphere_ball_check(theta, 2.0, james_stein_field(2.0), kN6, 43);
  EXPECT_TRUE(r.pass) << r.difference << " se " << r.std_error;
}

TEST(CrossTerm, ZeroFieldAndJamesStein) {
  const auto z = unknown_scale_cross_term_check(normal_model(ones(5), 1.0, 3), zero_field(5), 10000, 51);
  EXPECT_EQ(z.cross_term.lhs, 0.0);
  EXPECT_EQ(z.cross_term.rhs, 0.0);
  EXPECT_EQ(z.norm_term.lhs, 0.0);
  EXPECT_EQ(z.norm_term.rhs, 0.0);
  EXPECT_TRUE(z.pass);

  const auto n = unknown_scale_cross_term_check(normal_model(ones(5), 1.0, 3), james_stein_field(3.0), kN6, 52);
  EXPECT_TRUE(n.pass) << n.cross_term.difference << " / " << n.norm_term.difference;
  const auto t = unknown_scale_cross_term_check(student_t_model(6.0, ones(5), 1.0, 3),
                                                james_stein_field(3.0), kN6, 53);
  EXPECT_TRUE(t.pass) << t.cross_term.difference << " / " << t.norm_term.difference;
}

TEST(CrossTerm, UDependentField) {
  const auto r = unknown_scale_cross_term_check(mixture_model(two_point(), ones(5), 1.0, 3),
                                                baranchik_unknown_field(ShrinkFn::rational(1.0), 3), kN6, 54);
  EXPECT_TRUE(r.pass) << r.cross_term.difference << " / " << r.norm_term.difference;
  EXPECT_THROW(unknown_scale_cross_term_check(normal_model(ones(5)), james_stein_field(3.0), 100, 1), Error);
}

TEST(OrthantDomination, Sweep) {
  const auto model = normal_model(zeros(6), 1.0, 4);
  const std::vector<Eigen::VectorXd> grid{zeros(6), 10.0 * ones(6)};
  const auto r = orthant_domination_check(model, OrthantFamily::james_stein_faces(), kN5, 61, grid);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_TRUE(r.rows[0].strictly_better);
  EXPECT_LT(r.rows[0].mean_difference, -3 * r.rows[0].std_error);
  EXPECT_TRUE(r.rows[1].not_worse);
  EXPECT_TRUE(r.pass);

  const auto zero = OrthantFamily::per_face(std::vector<ShrinkFn>(7, ShrinkFn::constant(0.0)));
  const auto z = orthant_domination_check(model, zero, 20000, 62, grid);
  for (const auto& row : z.rows) {
    EXPECT_EQ(row.mean_difference, 0.0);
    EXPECT_EQ(row.std_error, 0.0);
  }
  EXPECT_THROW(orthant_domination_check(model, zero, 100, 1, {-ones(6)}), Error);
}

TEST(BallAverage, JamesSteinProfileIsNonincreasing) {
  Eigen::VectorXd theta = zeros(5);
  theta[0] = 1.5;
  const auto r = ball_average_monotonicity_check(theta, {0.25, 0.5, 1.0, 2.0, 4.0}, 200000, 71);
  ASSERT_EQ(r.increments.size(), 4u);
  EXPECT_TRUE(r.pass);
  EXPECT_THROW(ball_average_monotonicity_check(zeros(2), {0.5, 1.0}, 100, 1), Error);
}
