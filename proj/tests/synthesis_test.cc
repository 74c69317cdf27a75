#include "clfsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "clfsynth/demos.hpp"
#include "clfsynth/errors.hpp"

namespace clfsynth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd Scalar(double v) { return VectorXd::Constant(1, v); }

ControlAffineSystem ScalarLinear(double a) {
  return ControlAffineSystem(
      1, 1, [a](const VectorXd& x) -> VectorXd { return a * x; },
      [](const VectorXd&) -> MatrixXd { return MatrixXd::Ones(1, 1); });
}

TEST(SontagTest, ScalarCubicValues) {
  // La = 2x⁴, Lb = 2x: u = −(x³ + x√(x⁴ + 4)), so u(±1) = ∓(1 + √5).
  const FeedbackLaw law = SontagFormula(LocalQuadraticClf(MatrixXd::Ones(1, 1)),
                                        ScalarCubicSystem());
  EXPECT_NEAR(law(Scalar(1.0))(0), -(1.0 + std::sqrt(5.0)), 1e-12);
  EXPECT_NEAR(law(Scalar(-1.0))(0), 1.0 + std::sqrt(5.0), 1e-12);
  EXPECT_EQ(law(Scalar(0.0))(0), 0.0);
}

TEST(SontagTest, CoefficientWithoutCancellation) {
  // La very negative: c = (La + √(La² + b⁴)) / b² ≈ b²/(2|La|).
  const double c = SontagCoefficient(-1e8, 1.0);
  EXPECT_NEAR(c, 0.5e-8, 1e-20);
  EXPECT_GT(c, 0.0);
}

TEST(SontagTest, LinearPlantLocalGain) {
  // ẋ = x + u, V = ½x²: u = −(x + √2|x|)·sign(x), so the gain is −(1 + √2).
  const Clf V = LocalQuadraticClf(MatrixXd::Constant(1, 1, 0.5));
  const FeedbackLaw law = SontagFormula(V, ScalarLinear(1.0));
  const MatrixXd K = LocalGain(law, 1e-4, true);
  EXPECT_NEAR(K(0, 0), -(1.0 + std::sqrt(2.0)), 1e-10);
}

TEST(SontagControllerTest, RejectsArtsteinViolation) {
  // The input acts only for x2 > 0; below, L_bV = 0 while L_aV = 2x1² > 0.
  const ControlAffineSystem sys(
      2, 1,
      [](const VectorXd& x) -> VectorXd { return Eigen::Vector2d(x(0), 0.0); },
      [](const VectorXd& x) -> MatrixXd {
        return Eigen::Vector2d(0, std::max(x(1), 0.0));
      });
  const Clf V = LocalQuadraticClf(MatrixXd::Identity(2, 2));
  try {
    SontagController(V, sys, Box::Symmetric(2, 1.0), 2000);
    FAIL() << "expected CertificateError";
  } catch (const CertificateError& e) {
    EXPECT_FALSE(e.states().empty());
  }
}

TEST(LocalGainTest, RichardsonRemovesCurvature) {
  const FeedbackLaw law(LawKind::kLinearGain, 1, 1,
                        [](const VectorXd& x) -> VectorXd {
                          return Scalar(-2.0 * x(0) + std::pow(x(0), 3));
                        });
  EXPECT_NEAR(LocalGain(law, 1e-2, true)(0, 0), -2.0, 1e-12);
  EXPECT_GT(std::abs(LocalGain(law, 1e-2, false)(0, 0) + 2.0), 1e-5);
}

class ScalarCubicSynthesisTest : public ::testing::Test {
 protected:
  ScalarCubicSynthesisTest() : demo_(ScalarCubicDemo(0)) {}
  BlendedDemo demo_;
};

TEST_F(ScalarCubicSynthesisTest, GainMatchesKo) {
  const MatrixXd K = LocalGain(demo_.synthesis.law, 1e-4, true);
  EXPECT_NEAR(K(0, 0), -1.0, 1e-9);
}

TEST_F(ScalarCubicSynthesisTest, R0InExactRange) {
  EXPECT_GE(demo_.synthesis.scan.r0, 0.5);
  EXPECT_LT(demo_.synthesis.scan.r0, 1.0);
}

TEST_F(ScalarCubicSynthesisTest, BlendMidpoint) {
  const double r0 = demo_.synthesis.rho.r0();
  EXPECT_DOUBLE_EQ(demo_.synthesis.rho(0.75 * r0), 0.5);
  // Inside r0/2 the law is exactly linear.
  const double x = 0.5 * std::sqrt(0.5 * r0);
  EXPECT_DOUBLE_EQ(demo_.synthesis.law(Scalar(x))(0), -x);
  // Above r0 it is exactly Sontag's formula.
  const double y = 2.0;
  EXPECT_DOUBLE_EQ(demo_.synthesis.law(Scalar(y))(0),
                   demo_.synthesis.alpha_inf(Scalar(y))(0));
}

TEST_F(ScalarCubicSynthesisTest, DecreaseAndSeams) {
  const DecreaseReport rep =
      VerifyDecrease(demo_.V, demo_.system, demo_.synthesis.law, demo_.region,
                     5000, 3, demo_.certified_level);
  EXPECT_TRUE(rep.ok());
  EXPECT_LT(rep.max_vdot, 0.0);
  const SeamDiagnostics seams =
      CheckBlendSeams(demo_.synthesis.law, demo_.V, demo_.synthesis.rho,
                      demo_.region, 500);
  EXPECT_TRUE(seams.continuous);
}

TEST(SynthesisTest, DeterministicInSeed) {
  const BlendedDemo a = ScalarCubicDemo(5);
  const BlendedDemo b = ScalarCubicDemo(5);
  EXPECT_EQ(a.synthesis.scan.r0, b.synthesis.scan.r0);
  for (double x : {-2.5, -0.7, 0.2, 1.1, 2.9}) {
    EXPECT_EQ(a.synthesis.law(Scalar(x))(0), b.synthesis.law(Scalar(x))(0));
  }
}

TEST(SynthesisTest, LinearFeedback) {
  MatrixXd K(1, 2);
  K << -1, -2;
  const FeedbackLaw law = LinearFeedback(K);
  EXPECT_EQ(law(Eigen::Vector2d(1.0, 1.0))(0), -3.0);
  EXPECT_EQ(law.kind(), LawKind::kLinearGain);
}

}  // namespace
}  // namespace clfsynth
