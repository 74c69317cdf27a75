#include "clfsynth/inverse_opt.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "clfsynth/demos.hpp"
#include "clfsynth/errors.hpp"
#include "clfsynth/numdiff.hpp"

namespace clfsynth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd Scalar(double v) { return VectorXd::Constant(1, v); }

TEST(LevelScalingTest, PiecewiseLinearValues) {
  const LevelScaling mu = BuildMu(1.0, {2.0, 5.0, 3.0});
  EXPECT_DOUBLE_EQ(mu(0.0), 1.0);
  EXPECT_DOUBLE_EQ(mu(0.25), 1.0);
  EXPECT_DOUBLE_EQ(mu(0.75), 1.5);
  EXPECT_DOUBLE_EQ(mu(1.5), 3.5);
  EXPECT_DOUBLE_EQ(mu(2.5), 5.0);
  EXPECT_DOUBLE_EQ(mu(10.0), 5.0);
  EXPECT_DOUBLE_EQ(mu.covered_level(), 4.0);
}

TEST(LevelScalingTest, RejectsBadLadders) {
  EXPECT_THROW(BuildMu(1.0, {}), ValidationError);
  EXPECT_THROW(BuildMu(1.0, {0.5}), ValidationError);
  EXPECT_THROW(BuildMu(0.0, {1.0}), ValidationError);
}

TEST(LevelScalingTest, DominatesLadderProperty) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> level(1.0, 20.0);
  std::uniform_real_distribution<double> radius(0.1, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double r0 = radius(rng);
    std::vector<double> ladder(1 + trial % 6);
    for (double& l : ladder) l = level(rng);
    const LevelScaling mu = BuildMu(r0, ladder);
    double prev = 1.0;
    for (int i = 0; i <= 2000; ++i) {
      const double s = (ladder.size() + 1.5) * r0 * i / 2000.0;
      const double m = mu(s);
      EXPECT_GE(m, prev);
      if (s <= 0.5 * r0) {
        EXPECT_EQ(m, 1.0);
      }
      const std::size_t k = static_cast<std::size_t>(s / r0);
      if (k >= 1 && k <= ladder.size()) {
        EXPECT_GE(m, ladder[k - 1]);
      }
      prev = m;
    }
  }
}

TEST(ImpliedWeightTest, RecoversRiccatiWeight) {
  MatrixXd A(2, 2);
  A << 0, 1, -1, 0.5;
  MatrixXd B(2, 1);
  B << 0, 1;
  MatrixXd Q(2, 2);
  Q << 2, 0.5, 0.5, 1;
  const MatrixXd R = MatrixXd::Constant(1, 1, 0.7);
  const LinearSystem sys(A, B);
  const RiccatiCertificate cert = SolveCare(sys, QuadraticWeights(Q, R));
  EXPECT_TRUE(ImpliedStateWeight(sys, cert.P, R).isApprox(Q, 1e-10));
}

class ScalarLqTest : public ::testing::Test {
 protected:
  ScalarLqTest() : demo_(ScalarLqDemo()) {}
  InverseOptimalDemo demo_;
};

TEST_F(ScalarLqTest, LadderIsTrivial) {
  for (double l : demo_.ladder.ladder) EXPECT_EQ(l, 1.0);
  for (double s : {0.0, 0.3, 2.0, 50.0}) EXPECT_EQ(demo_.cost.scaling(s), 1.0);
}

TEST_F(ScalarLqTest, CostIsQuadratic) {
  for (double x : {-2.0, -0.4, 0.1, 1.3}) {
    EXPECT_NEAR(demo_.cost.q(Scalar(x)), x * x, 1e-12);
    EXPECT_EQ(demo_.cost.r(Scalar(x))(0, 0), 1.0);
    EXPECT_NEAR(HjbResidual(demo_.V, demo_.cost, demo_.system, Scalar(x)), 0.0,
                1e-12);
    EXPECT_NEAR(demo_.law(Scalar(x))(0), -(1.0 + std::sqrt(2.0)) * x, 1e-12);
  }
}

TEST_F(ScalarLqTest, ValueEqualsClosedForm) {
  CostOptions opts;
  opts.dt = 5e-4;
  for (double x0 : {-1.5, 0.5, 1.0}) {
    const CostEstimate est = EvaluateCost(demo_.system, demo_.V, demo_.cost,
                                          demo_.law, Scalar(x0), opts);
    const double exact = (1.0 + std::sqrt(2.0)) * x0 * x0;
    EXPECT_NEAR(est.J, exact, 1e-6 * exact);
    EXPECT_EQ(est.tail_kind, TailKind::kExactValue);
  }
}

TEST_F(ScalarLqTest, SuboptimalGainCost) {
  // u = −3x: ẋ = −2x, J = ∫ 10 x0² e^{−4t} dt = 2.5 x0².
  const FeedbackLaw law = LinearFeedback(MatrixXd::Constant(1, 1, -3.0));
  CostOptions opts;
  opts.dt = 5e-4;
  const CostEstimate est =
      EvaluateCost(demo_.system, demo_.V, demo_.cost, law, Scalar(1.0), opts);
  EXPECT_NEAR(est.J, 2.5, 1e-6);
  EXPECT_GT(est.J, 1.0 + std::sqrt(2.0));
}

TEST_F(ScalarLqTest, BatchMatchesSerial) {
  const std::vector<VectorXd> x0s = {Scalar(0.3), Scalar(-1.0), Scalar(1.7)};
  const std::vector<CostEstimate> batch =
      EvaluateCostBatch(demo_.system, demo_.V, demo_.cost, demo_.law, x0s);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < x0s.size(); ++i) {
    EXPECT_EQ(batch[i].J, EvaluateCost(demo_.system, demo_.V, demo_.cost,
                                       demo_.law, x0s[i])
                              .J);
  }
}

TEST_F(ScalarLqTest, TraceColumns) {
  CostOptions opts;
  opts.keep_trace = true;
  const CostEstimate est = EvaluateCost(demo_.system, demo_.V, demo_.cost,
                                        demo_.law, Scalar(1.0), opts);
  ASSERT_TRUE(est.trace.has_value());
  EXPECT_EQ(est.trace->annotations.count("q"), 1u);
  EXPECT_EQ(est.trace->annotations.count("integrand"), 1u);
}

class ScalarCubicInverseTest : public ::testing::Test {
 protected:
  ScalarCubicInverseTest()
      : blended_(ScalarCubicDemo(0)), demo_(BuildInverseOptimalDemo(blended_, 0)) {}
  BlendedDemo blended_;
  InverseOptimalDemo demo_;
};

TEST_F(ScalarCubicInverseTest, LadderCoversExactRatio) {
  // 4 L_aV / L_bV² = 2x² = 2V, so the annulus maximum is 2(k+1)r0.
  const double r0 = demo_.cost.scaling.r0();
  const auto& ladder = demo_.ladder.ladder;
  ASSERT_FALSE(ladder.empty());
  for (std::size_t k = 1; k <= ladder.size(); ++k) {
    const double exact = 2.0 * (k + 1) * r0;
    if (exact > 1.0) {
      EXPECT_GE(ladder[k - 1], exact) << "annulus " << k;
    }
  }
}

TEST_F(ScalarCubicInverseTest, HjbAndPositivity) {
  const VectorXd zero = VectorXd::Zero(1);
  EXPECT_EQ(demo_.cost.q(zero), 0.0);
  EXPECT_EQ(demo_.cost.r(zero)(0, 0), 1.0);
  for (int i = 1; i <= 300; ++i) {
    const double x = -3.0 + 6.0 * i / 301.0;
    if (x == 0.0) continue;
    EXPECT_NEAR(HjbResidual(demo_.V, demo_.cost, demo_.system, Scalar(x)), 0.0,
                1e-10);
    EXPECT_GT(demo_.cost.q(Scalar(x)), 0.0) << x;
  }
  const MatrixXd H = CentralHessian(demo_.cost.q, zero, 1e-4);
  EXPECT_NEAR(H(0, 0), 2.0, 2e-3);
}

TEST(BuildInverseCostTest, RejectsNonRiccatiHessian) {
  // ẋ = x + u with V = x² (P = 1) is not a Riccati solution for Q = R = 1.
  const ControlAffineSystem sys(
      1, 1, [](const VectorXd& x) -> VectorXd { return x; },
      [](const VectorXd&) -> MatrixXd { return MatrixXd::Ones(1, 1); });
  const MatrixXd one = MatrixXd::Ones(1, 1);
  EXPECT_THROW(BuildInverseCost(LocalQuadraticClf(one), sys, one, one,
                                BuildMu(1.0, {1.0})),
               ValidationError);
}

}  // namespace
}  // namespace clfsynth
