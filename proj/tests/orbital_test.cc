#include "clfsynth/orbital.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "clfsynth/errors.hpp"
#include "clfsynth/numdiff.hpp"

namespace clfsynth {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST(OrbitalParamsTest, DerivedConstants) {
  const OrbitalParams p = OrbitalParams::Make(4.0, 9.0);
  EXPECT_DOUBLE_EQ(p.nu, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.eta, 1.0 / (4.0 * p.nu));
  EXPECT_DOUBLE_EQ(p.nu_bar, p.nu * 2.0);
  EXPECT_DOUBLE_EQ(p.eta_bar, p.eta / 2.0);
  EXPECT_TRUE(p.IsConsistent());
  OrbitalParams broken = p;
  broken.eta *= 1.01;
  EXPECT_FALSE(broken.IsConsistent());
  EXPECT_THROW(OrbitalParams::Make(-1.0, 1.0), ValidationError);
}

TEST(OrbitalDynamicsTest, EquilibriumIsFixed) {
  for (double p0 : {1.0, 2.5, 42164.0}) {
    const OrbitalParams p = OrbitalParams::Make(p0, 398600.4418);
    const VectorXd s = OrbitalEquilibrium(p);
    EXPECT_EQ(s(3), p0);
    const VectorXd f = OrbitalVectorField(p, OrbitalState::FromVector(s),
                                          Eigen::Vector3d::Zero());
    EXPECT_LE(f.cwiseAbs().maxCoeff(), 1e-15 * (1.0 + p.eta));
  }
}

TEST(OrbitalDynamicsTest, DomainEnforced) {
  const OrbitalParams p = OrbitalParams::Make(1.0, 1.0);
  VectorXd chi = OrbitalEquilibrium(p);
  chi(1) = -1.0;
  EXPECT_THROW(OrbitalDrift(p, chi), DomainError);
  chi(1) = 0.0;
  chi(3) = 0.0;
  EXPECT_THROW(OrbitalInputMap(p, chi), DomainError);
}

TEST(OrbitalDynamicsTest, ClosedFormLinearizationMatchesDifferences) {
  for (double p0 : {1.0, 3.0}) {
    const OrbitalParams p = OrbitalParams::Make(p0, 2.0);
    const VectorXd s = OrbitalEquilibrium(p);
    const OrbitalLinearization lin = LinearizeOrbital(p);
    const MatrixXd A_fd = CentralJacobian(
        [&p](const VectorXd& chi) { return OrbitalDrift(p, chi); }, s, 1e-6);
    EXPECT_LE((A_fd - lin.A).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((OrbitalInputMap(p, s) - lin.B).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(lin.A_tilde.rows(), 4);
    EXPECT_TRUE(lin.A_tilde.bottomRows(1).isZero());
  }
}

TEST(OrbitalDynamicsTest, PartialSystemMatchesFullRows) {
  const OrbitalParams p = OrbitalParams::Make(1.0, 1.0);
  const ControlAffineSystem partial = OrbitalPartialSystem(p);
  const VectorXd s = OrbitalEquilibrium(p);
  for (const VectorXd& z : SampleBox(Box::Symmetric(3, 0.5), 300, 4)) {
    VectorXd chi = s;
    chi.head(3) = z;
    EXPECT_LE((partial.drift(z) - OrbitalDrift(p, chi).head(3)).cwiseAbs().maxCoeff(),
              1e-15);
    EXPECT_LE((partial.input_map(z).col(0) - OrbitalInputMap(p, chi).col(0).head(3))
                  .cwiseAbs()
                  .maxCoeff(),
              1e-15);
  }
}

TEST(OrbitalDynamicsTest, FourStateIgnoresOutOfPlaneWithoutThrust) {
  const OrbitalParams p = OrbitalParams::Make(1.0, 1.0);
  const ControlAffineSystem sys4 = OrbitalFourStateSystem(p);
  const ControlAffineSystem sys6 = OrbitalSystem(p);
  VectorXd z(6);
  z << 0.1, -0.2, 0.3, 0.05, 0.4, -0.3;
  EXPECT_LE((sys6.drift(z).head(4) - sys4.drift(z.head(4))).cwiseAbs().maxCoeff(),
            1e-15);
  EXPECT_LE((sys6.input_map(z).topLeftCorner(4, 2) -
             sys4.input_map(z.head(4)))
                .cwiseAbs()
                .maxCoeff(),
            1e-15);
}

TEST(OrbitalDynamicsTest, MomentumRadiusConservedWithoutNormalThrust) {
  const OrbitalParams p = OrbitalParams::Make(1.0, 1.0);
  const ControlAffineSystem sys = OrbitalSystem(p);
  const FeedbackLaw zero = LinearFeedback(MatrixXd::Zero(3, 6));
  VectorXd z0(6);
  z0 << 0.0, 0.1, -0.05, 0.1, 0.3, 0.2;
  const Trajectory tr = Integrate(sys, zero, z0, 0.01, 20.0);
  const double r2 = z0(4) * z0(4) + z0(5) * z0(5);
  for (const VectorXd& z : tr.states) {
    EXPECT_NEAR(z(4) * z(4) + z(5) * z(5), r2, 1e-8);
    EXPECT_NEAR(z(3), z0(3), 1e-15);
  }
}

TEST(OrbitalWeightsTest, RiccatiStructure) {
  const OrbitalParams p = OrbitalParams::Make(1.0, 1.0);
  const OrbitalWeights w = ComputeOrbitalWeights(p, OrbitalCostConfig{});
  EXPECT_LE(w.riccati_residual, 1e-10);
  const OrbitalLinearization lin = LinearizeOrbital(p);
  EXPECT_TRUE(ImpliedStateWeight(LinearSystem::Unchecked(lin.A_tilde, lin.B_tilde),
                                 w.P_tilde, w.R_tilde)
                  .isApprox(w.Q_tilde, 1e-9));
  EXPECT_GT(MinEigenvalueSymmetric(w.Q_tilde), 0.0);
  OrbitalCostConfig weak;
  weak.rho1 = 1e-3;
  EXPECT_THROW(ComputeOrbitalWeights(p, weak), ValidationError);
}

class OrbitalControllerTest : public ::testing::Test {
 protected:
  OrbitalControllerTest()
      : params_(OrbitalParams::Make(1.0, 1.0)),
        ctl_(BuildOrbitalController(params_, OrbitalCostConfig{})) {}
  OrbitalParams params_;
  OrbitalController ctl_;
};

TEST_F(OrbitalControllerTest, HjbOnFourStateSystem) {
  const Box box4 = Box::Symmetric((VectorXd(4) << 1.0, 0.5, 0.5, 0.5).finished());
  for (const VectorXd& z : SampleBox(box4, 2000, 8)) {
    EXPECT_NEAR(HjbResidual(ctl_.V_tilde, ctl_.cost_tilde, ctl_.four_state, z),
                0.0, 1e-10);
    if (z.norm() > 0.0) {
      EXPECT_GT(ctl_.cost_tilde.q(z), 0.0);
    }
  }
}

TEST_F(OrbitalControllerTest, HjbOnSixStateSystem) {
  const Box box6 = Box::Symmetric(
      (VectorXd(6) << 1.0, 0.5, 0.5, 0.5, 0.5, 0.5).finished());
  for (const VectorXd& z : SampleBox(box6, 1000, 9)) {
    EXPECT_NEAR(HjbResidual(ctl_.V, ctl_.cost, ctl_.system, z), 0.0, 1e-9);
  }
  EXPECT_TRUE(ctl_.cost.r(VectorXd::Zero(6)).isApprox(ctl_.weights.R));
}

TEST_F(OrbitalControllerTest, ClosedLoopConverges) {
  const OrbitalState s0{0.1, 0.05, -0.05, 1.1, 0.05, -0.05};
  const OrbitalSimulation sim =
      SimulateOrbital(params_, ctl_.V, ctl_.law, s0, 0.01, 200.0);
  EXPECT_LE(sim.terminal_error, 1e-3);
  EXPECT_LE(sim.max_step_increase,
            1e-9 * sim.trajectory.annotations.at("V").front());
  EXPECT_LT(sim.max_vdot, 1e-12);
}

TEST(OrbitalUnitsTest, GeostationaryScalingIsInvariant) {
  const double p0 = 42164.0;
  const double mu = 398600.4418;
  const double t_unit = std::pow(p0, 1.5) / std::sqrt(mu);
  const double a_unit = mu / (p0 * p0);

  const OrbitalParams nd = OrbitalParams::Make(1.0, 1.0);
  const OrbitalParams geo = OrbitalParams::Make(p0, mu);
  OrbitalCostConfig cfg_geo;
  cfg_geo.Q0 = Eigen::Matrix3d::Identity() / t_unit;
  cfg_geo.R_r = cfg_geo.R_theta = cfg_geo.R_h = 1.0 / (a_unit * a_unit * t_unit);
  cfg_geo.rho1 = 2.0 / (p0 * p0);
  OrbitalSynthesisOptions opts_geo;
  opts_geo.region = Box::Symmetric(
      (VectorXd(6) << 1.0, 0.5, 0.5, 0.5 * p0, 0.5, 0.5).finished());

  const OrbitalController a = BuildOrbitalController(nd, OrbitalCostConfig{});
  const OrbitalController b = BuildOrbitalController(geo, cfg_geo, opts_geo);
  EXPECT_NEAR(b.base_scan.r0, a.base_scan.r0, 1e-9 * a.base_scan.r0);
  ASSERT_EQ(a.ladder.ladder.size(), b.ladder.ladder.size());
  for (std::size_t k = 0; k < a.ladder.ladder.size(); ++k) {
    EXPECT_NEAR(b.ladder.ladder[k], a.ladder.ladder[k], 1e-6 * a.ladder.ladder[k]);
  }
  for (const VectorXd& z : SampleBox(Box::Symmetric(6, 0.3), 50, 1)) {
    VectorXd z_geo = z;
    z_geo(3) *= p0;
    EXPECT_NEAR(b.V.value(z_geo), a.V.value(z), 1e-9 * (1.0 + a.V.value(z)));
    const VectorXd u_nd = a.law(z);
    const VectorXd u_geo = b.law(z_geo);
    EXPECT_LE((u_geo / a_unit - u_nd).cwiseAbs().maxCoeff(),
              1e-8 * (1.0 + u_nd.norm()));
  }
}

}  // namespace
}  // namespace clfsynth
