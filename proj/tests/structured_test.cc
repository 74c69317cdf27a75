#include "clfsynth/structured.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "clfsynth/demos.hpp"
#include "clfsynth/errors.hpp"
#include "clfsynth/numdiff.hpp"

namespace clfsynth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// ẏ = y + x, ẋ = u.
StrictFeedbackSystem LinearChain() {
  return StrictFeedbackSystem(
      1, [](const VectorXd& y) -> VectorXd { return y; },
      [](const VectorXd&) -> VectorXd { return VectorXd::Ones(1); },
      [](const VectorXd&, double) { return 0.0; },
      [](const VectorXd&, double) { return 1.0; });
}

TEST(PartitionTest, TwoByTwo) {
  MatrixXd P(2, 2);
  P << 2, 1, 1, 1;
  const BacksteppingPartition part = PartitionCertificate(P);
  EXPECT_DOUBLE_EQ(part.P_y(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(part.local_inner_gain(0), -1.0);
  EXPECT_DOUBLE_EQ(part.P22, 1.0);
  EXPECT_TRUE(part.Reassemble().isApprox(P, 1e-15));
  EXPECT_EQ(PartitionInputResidual(part, 1.0), 0.0);
  // TᵀP = [P_y 0].
  const MatrixXd TtP = part.T.transpose() * P;
  EXPECT_NEAR(TtP(0, 1), 0.0, 1e-15);
  EXPECT_NEAR(TtP(0, 0), 1.0, 1e-15);
}

TEST(PartitionTest, RejectsIndefinite) {
  MatrixXd P(2, 2);
  P << 1, 2, 2, 1;
  EXPECT_THROW(PartitionCertificate(P), ValidationError);
}

TEST(PartitionTest, RandomSpdProperty) {
  std::srand(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const MatrixXd M = MatrixXd::Random(n, n);
    const MatrixXd P = M * M.transpose() + 0.1 * MatrixXd::Identity(n, n);
    const BacksteppingPartition part = PartitionCertificate(P);
    EXPECT_GT(MinEigenvalueSymmetric(part.P_y), 0.0);
    EXPECT_LE((part.T.transpose() * P).rightCols(1).cwiseAbs().maxCoeff(),
              1e-12 * P.cwiseAbs().maxCoeff());
    EXPECT_TRUE(part.Reassemble().isApprox(P, 1e-12));
  }
}

TEST(BacksteppingClfTest, HessianIsTwiceP) {
  MatrixXd P(2, 2);
  P << 2, 1, 1, 1;
  const BacksteppingPartition part = PartitionCertificate(P);
  const InnerPair inner{LocalQuadraticClf(part.P_y),
                        [](const VectorXd& y) { return -y(0); },
                        {}};
  const Clf V = BacksteppingClf(inner, part.P22, part.local_inner_gain);
  MatrixXd expected(2, 2);
  expected << 4, 2, 2, 2;
  EXPECT_TRUE(V.hessian_origin().isApprox(expected, 1e-12));
  EXPECT_LT(RelativeMaxError(CentralHessian([&V](const VectorXd& x) {
                                              return V.value(x);
                                            },
                                            VectorXd::Zero(2)),
                             expected),
            1e-6);
  // V(y, x) = y² + (x + y)².
  const Eigen::Vector2d z(0.3, -0.7);
  EXPECT_NEAR(V.value(z), 0.09 + 0.16, 1e-15);
}

TEST(BacksteppingClfTest, GainMismatchRejected) {
  const InnerPair inner{LocalQuadraticClf(MatrixXd::Ones(1, 1)),
                        [](const VectorXd& y) { return -2.0 * y(0); },
                        {}};
  EXPECT_THROW(BacksteppingClf(inner, 1.0, Eigen::RowVectorXd::Constant(1, -1.0)),
               ValidationError);
}

TEST(StrictFeedbackTest, BlocksOfDemo) {
  const StrictFeedbackSystem sys = StrictFeedbackDemoSystem();
  const StrictFeedbackBlocks& b = sys.blocks();
  EXPECT_NEAR(b.H1(0, 0), 0.0, 1e-9);
  EXPECT_NEAR(b.H2(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(b.F1(0), 0.0, 1e-9);
  EXPECT_NEAR(b.F2, 0.0, 1e-9);
  EXPECT_EQ(b.G, 1.0);
  const ControlAffineSystem full = sys.Full();
  const Eigen::Vector2d s(0.5, -0.2);
  const VectorXd a = full.drift(s);
  EXPECT_DOUBLE_EQ(a(0), 0.25 - 0.2);
  EXPECT_DOUBLE_EQ(a(1), -0.1);
}

TEST(StrictFeedbackTest, VanishingGainRejected) {
  EXPECT_THROW(StrictFeedbackSystem(
                   1, [](const VectorXd& y) -> VectorXd { return y; },
                   [](const VectorXd&) -> VectorXd { return VectorXd::Ones(1); },
                   [](const VectorXd&, double) { return 0.0; },
                   [](const VectorXd&, double x) { return x; }),
               ValidationError);
}

TEST(BacksteppingSynthesizeTest, LinearPlantReproducesLq) {
  const StrictFeedbackSystem plant = LinearChain();
  const LinearSystem lin = plant.Linearization();
  const MatrixXd Q = MatrixXd::Identity(2, 2);
  const MatrixXd R = MatrixXd::Identity(1, 1);
  const RiccatiCertificate cert = SolveCare(lin, QuadraticWeights(Q, R));
  const MatrixXd K = LqrGain(cert, lin, R);
  BacksteppingOptions opts;
  opts.lyapunov_rhs = Q + K.transpose() * R * K;
  opts.synthesis.region = Box::Symmetric(2, 1.0);
  opts.inner_factory = LinearInnerFactory();
  const BacksteppingResult res = BacksteppingSynthesize(plant, K, opts);
  EXPECT_LE(RelativeMaxError(res.P, cert.P), 1e-8);
  for (const VectorXd& x : SampleBox(Box::Symmetric(2, 1.0), 100, 2)) {
    EXPECT_NEAR(res.V.value(x), x.dot(cert.P * x), 1e-8 * (1.0 + x.squaredNorm()));
  }
  EXPECT_LE((LocalGain(res.synthesis.law, 1e-4, true) - K).cwiseAbs().maxCoeff(),
            1e-8);
}

TEST(BacksteppingSynthesizeTest, DemoCertificate) {
  const BlendedDemo demo = StrictFeedbackDemo(0);
  const BacksteppingPartition part = PartitionCertificate(demo.P);
  EXPECT_LE(PartitionInputResidual(part, 1.0),
            1e-12 * std::max(1.0, demo.P.cwiseAbs().maxCoeff()));
  EXPECT_LE(RelativeMaxError(demo.V.hessian_origin(), 2.0 * demo.P), 1e-3);
  EXPECT_LE((LocalGain(demo.synthesis.law, 1e-4, true) - demo.K_o)
                .cwiseAbs()
                .maxCoeff(),
            1e-9);
  const DecreaseReport rep = VerifyDecrease(demo.V, demo.system, demo.synthesis.law,
                                            demo.region, 4000, 1, demo.certified_level);
  EXPECT_TRUE(rep.ok());
}

TEST(AdditiveClfTest, HessianAndValue) {
  const Clf base = LocalQuadraticClf(MatrixXd::Constant(1, 1, 2.0));
  const Clf V = AdditiveClf(base, Eigen::Vector2d(0.5, 3.0));
  MatrixXd expected = Eigen::Vector3d(4.0, 1.0, 6.0).asDiagonal();
  EXPECT_TRUE(V.hessian_origin().isApprox(expected));
  EXPECT_DOUBLE_EQ(V.value(Eigen::Vector3d(1.0, 2.0, -1.0)), 2.0 + 2.0 + 3.0);
  const Clf W = AdditiveForwardClf(base, 4.0);
  EXPECT_DOUBLE_EQ(W.value(Eigen::Vector2d(1.0, 0.5)), 3.0);
}

TEST(FeedforwardTest, Blocks) {
  // ẏ = x, ẋ = −x + x² + u.
  const FeedforwardSystem ff(
      1, 1, [](const VectorXd& x) { return x(0); },
      [](const VectorXd& x) -> VectorXd {
        return VectorXd::Constant(1, -x(0) + x(0) * x(0));
      },
      [](const VectorXd&) -> MatrixXd { return MatrixXd::Ones(1, 1); });
  EXPECT_NEAR(ff.H()(0), 1.0, 1e-9);
  EXPECT_NEAR(ff.F()(0, 0), -1.0, 1e-9);
  EXPECT_EQ(ff.G()(0, 0), 1.0);
  const ControlAffineSystem full = ff.Full();
  EXPECT_EQ(full.n(), 2);
  const VectorXd a = full.drift(Eigen::Vector2d(5.0, 2.0));
  EXPECT_DOUBLE_EQ(a(0), 2.0);
  EXPECT_DOUBLE_EQ(a(1), 2.0);
}

}  // namespace
}  // namespace clfsynth
