#include "clfsynth/orbital.hpp"

#include <cmath>
#include <limits>

#include "clfsynth/errors.hpp"

namespace clfsynth {

OrbitalParams OrbitalParams::Make(double p0, double mu_grav) {
  if (!(p0 > 0.0) || !(mu_grav > 0.0) || !std::isfinite(p0) ||
      !std::isfinite(mu_grav)) {
    throw ValidationError("p0 and mu_grav must be positive and finite");
  }
  OrbitalParams out;
  out.p0 = p0;
  out.mu_grav = mu_grav;
  out.nu = std::sqrt(p0 / mu_grav);
  out.eta = 1.0 / (p0 * out.nu);
  out.nu_bar = out.nu * std::sqrt(p0);
  out.eta_bar = out.eta / std::sqrt(p0);
  return out;
}

bool OrbitalParams::IsConsistent() const {
  if (!(p0 > 0.0) || !(mu_grav > 0.0)) return false;
  const OrbitalParams ref = Make(p0, mu_grav);
  return nu == ref.nu && eta == ref.eta && nu_bar == ref.nu_bar &&
         eta_bar == ref.eta_bar && nu > 0.0 && eta > 0.0;
}

OrbitalState OrbitalState::FromVector(const Eigen::VectorXd& v) {
  if (v.size() != 6) throw DimensionError("orbital state has 6 entries");
  return OrbitalState{v(0), v(1), v(2), v(3), v(4), v(5)};
}

Eigen::VectorXd OrbitalState::ToVector() const {
  Eigen::VectorXd v(6);
  v << chi1, chi2, chi3, chi4, chi5, chi6;
  return v;
}

bool OrbitalState::InDomain() const { return 1.0 + chi2 > 0.0 && chi4 > 0.0; }

Eigen::VectorXd OrbitalEquilibrium(const OrbitalParams& params) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(6);
  s(3) = params.p0;
  return s;
}

namespace {

void CheckDomain(const Eigen::VectorXd& chi) {
  if (chi.size() != 6) throw DimensionError("orbital state has 6 entries");
  if (!(1.0 + chi(1) > 0.0) || !(chi(3) > 0.0)) {
    throw DomainError("orbital state left the domain 1 + chi2 > 0, chi4 > 0",
                      std::numeric_limits<double>::quiet_NaN());
  }
}

}  // namespace

Eigen::VectorXd OrbitalDrift(const OrbitalParams& params,
                             const Eigen::VectorXd& chi) {
  CheckDomain(chi);
  const double e = 1.0 + chi(1);
  const double w = e * e;
  const double s4 = std::sqrt(chi(3));
  const double rot = params.eta_bar * s4 * w;
  Eigen::VectorXd a(6);
  a(0) = rot - params.eta;
  a(1) = -params.eta * w * chi(2);
  a(2) = params.eta * w * ((chi(3) / params.p0) * e - 1.0);
  a(3) = 0.0;
  a(4) = rot * chi(5);
  a(5) = -rot * chi(4);
  return a;
}

Eigen::MatrixXd OrbitalInputMap(const OrbitalParams& params,
                                const Eigen::VectorXd& chi) {
  CheckDomain(chi);
  const double e = 1.0 + chi(1);
  const double s4 = std::sqrt(chi(3));
  const double k = params.nu / std::sqrt(params.p0 * params.p0 * params.p0);
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
  b(2, 0) = params.nu;
  b(3, 1) = 2.0 * k * chi(3) * chi(3) * s4 / e;
  b(0, 2) = -k * chi(5) * chi(3) * s4 / e;
  b(4, 2) = params.nu_bar * (1.0 + chi(4) * chi(4) - chi(5) * chi(5)) /
            (2.0 * s4 * e);
  b(5, 2) = params.nu_bar * chi(4) * chi(5) / (s4 * e);
  return b;
}

Eigen::VectorXd OrbitalVectorField(const OrbitalParams& params,
                                   const OrbitalState& s,
                                   const Eigen::Vector3d& u) {
  const Eigen::VectorXd chi = s.ToVector();
  return OrbitalDrift(params, chi) + OrbitalInputMap(params, chi) * u;
}

OrbitalLinearization LinearizeOrbital(const OrbitalParams& params) {
  const double eta = params.eta;
  const double nu = params.nu;
  const double p0 = params.p0;
  OrbitalLinearization lin;
  lin.A = Eigen::MatrixXd::Zero(6, 6);
  lin.A(0, 1) = 2.0 * eta;
  lin.A(0, 3) = eta / (2.0 * p0);
  lin.A(1, 2) = -eta;
  lin.A(2, 1) = eta;
  lin.A(2, 3) = eta / p0;
  lin.A(4, 5) = eta;
  lin.A(5, 4) = -eta;
  lin.B = Eigen::MatrixXd::Zero(6, 3);
  lin.B(2, 0) = nu;
  lin.B(3, 1) = 2.0 * nu * p0;
  lin.B(4, 2) = 0.5 * nu;

  lin.A0 = lin.A.topLeftCorner(3, 3);
  lin.A1 = lin.A.bottomRightCorner(2, 2);
  lin.A2 = lin.A.block(0, 3, 3, 1);
  lin.B0 = lin.B.block(0, 0, 3, 1);
  lin.B2 = lin.B.block(4, 2, 2, 1);
  lin.A_tilde = lin.A.topLeftCorner(4, 4);
  lin.B_tilde = lin.B.topLeftCorner(4, 2);
  return lin;
}

ControlAffineSystem OrbitalSystem(const OrbitalParams& params) {
  const Eigen::VectorXd s = OrbitalEquilibrium(params);
  const OrbitalLinearization lin = LinearizeOrbital(params);
  return ControlAffineSystem(
      6, 3,
      [params, s](const Eigen::VectorXd& z) {
        return OrbitalDrift(params, z + s);
      },
      [params, s](const Eigen::VectorXd& z) {
        return OrbitalInputMap(params, z + s);
      },
      LinearSystem::Unchecked(lin.A, lin.B), "orbital");
}

ControlAffineSystem OrbitalFourStateSystem(const OrbitalParams& params) {
  const Eigen::VectorXd s = OrbitalEquilibrium(params);
  const OrbitalLinearization lin = LinearizeOrbital(params);
  auto lift = [s](const Eigen::VectorXd& z) {
    Eigen::VectorXd chi = s;
    chi.head(4) += z;
    return chi;
  };
  return ControlAffineSystem(
      4, 2,
      [params, lift](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return OrbitalDrift(params, lift(z)).head(4);
      },
      [params, lift](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        return OrbitalInputMap(params, lift(z)).topLeftCorner(4, 2);
      },
      LinearSystem::Unchecked(lin.A_tilde, lin.B_tilde), "orbital_4");
}

ControlAffineSystem OrbitalPartialSystem(const OrbitalParams& params) {
  const double eta = params.eta;
  const double nu = params.nu;
  return ControlAffineSystem(
      3, 1,
      [eta](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const double w = (1.0 + z(1)) * (1.0 + z(1));
        Eigen::VectorXd a(3);
        a << eta * (w - 1.0), -eta * w * z(2), eta * w * z(1);
        return a;
      },
      [nu](const Eigen::VectorXd&) -> Eigen::MatrixXd {
        return (Eigen::MatrixXd(3, 1) << 0.0, 0.0, nu).finished();
      },
      std::nullopt, "orbital_partial");
}

StrictFeedbackSystem OrbitalReducedStrictFeedback(const OrbitalParams& params) {
  const double eta = params.eta;
  const double nu = params.nu;
  return StrictFeedbackSystem(
      1,
      [](const Eigen::VectorXd&) -> Eigen::VectorXd {
        return Eigen::VectorXd::Zero(1);
      },
      [eta](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return Eigen::VectorXd::Constant(1, -eta * (1.0 + y(0)) * (1.0 + y(0)));
      },
      [eta](const Eigen::VectorXd& y, double) {
        return eta * (1.0 + y(0)) * (1.0 + y(0)) * y(0);
      },
      [nu](const Eigen::VectorXd&, double) { return nu; }, std::nullopt,
      "orbital_reduced");
}

OrbitalWeights ComputeOrbitalWeights(const OrbitalParams& params,
                                     const OrbitalCostConfig& cfg) {
  if (!(cfg.R_r > 0.0) || !(cfg.R_theta > 0.0) || !(cfg.R_h > 0.0) ||
      !(cfg.rho1 > 0.0) || !(cfg.rho2 > 0.0)) {
    throw ValidationError("orbital weights R_r, R_theta, R_h, rho1, rho2 "
                          "must be positive");
  }
  const OrbitalLinearization lin = LinearizeOrbital(params);
  const Eigen::MatrixXd R0 = Eigen::MatrixXd::Constant(1, 1, cfg.R_r);
  const RiccatiCertificate cert =
      SolveCare(LinearSystem(lin.A0, lin.B0), QuadraticWeights(cfg.Q0, R0));

  OrbitalWeights w;
  w.P0 = cert.P;
  w.riccati_residual = CareResidual(lin.A0, lin.B0, cfg.Q0, R0, w.P0);
  w.P_tilde = Eigen::MatrixXd::Zero(4, 4);
  w.P_tilde.topLeftCorner(3, 3) = w.P0;
  w.P_tilde(3, 3) = cfg.rho1;
  w.R_tilde = Eigen::Vector2d(cfg.R_r, cfg.R_theta).asDiagonal();

  w.Q_tilde = Eigen::MatrixXd::Zero(4, 4);
  w.Q_tilde.topLeftCorner(3, 3) = cfg.Q0;
  w.Q_tilde.block(0, 3, 3, 1) = -w.P0 * lin.A2;
  w.Q_tilde.block(3, 0, 1, 3) = -(w.P0 * lin.A2).transpose();
  w.Q_tilde(3, 3) = 4.0 * cfg.rho1 * cfg.rho1 /
                    (params.eta * params.eta * cfg.R_theta);

  const Eigen::MatrixXd implied = ImpliedStateWeight(
      LinearSystem::Unchecked(lin.A_tilde, lin.B_tilde), w.P_tilde, w.R_tilde);
  if (RelativeMaxError(implied, w.Q_tilde) > 1e-9) {
    throw ValidationError("diag(P0, rho1) does not solve the 4-state Riccati "
                          "equation for the assembled weight");
  }
  if (!(MinEigenvalueSymmetric(w.Q_tilde) > 0.0)) {
    throw ValidationError(
        "the 4-state weight is not positive definite; increase rho1");
  }

  w.Q = Eigen::MatrixXd::Zero(6, 6);
  w.Q.topLeftCorner(4, 4) = w.Q_tilde;
  w.Q.bottomRightCorner(2, 2) =
      cfg.rho2 * cfg.rho2 * lin.B2 * lin.B2.transpose() / cfg.R_h;
  w.R = Eigen::Vector3d(cfg.R_r, cfg.R_theta, cfg.R_h).asDiagonal();
  return w;
}

OrbitalController BuildOrbitalController(const OrbitalParams& params,
                                         const OrbitalCostConfig& cfg,
                                         const OrbitalSynthesisOptions& options) {
  if (!params.IsConsistent()) {
    throw ValidationError("orbital constants are inconsistent with p0, mu");
  }
  if (options.region.dim() != 6 || !options.region.ContainsOrigin()) {
    throw ValidationError("orbital box must be 6-dimensional around s*");
  }
  OrbitalWeights weights = ComputeOrbitalWeights(params, cfg);
  ControlAffineSystem sys6 = OrbitalSystem(params);
  ControlAffineSystem sys4 = OrbitalFourStateSystem(params);
  const ControlAffineSystem partial = OrbitalPartialSystem(params);

  Clf V0 = options.V0 ? *options.V0 : LocalQuadraticClf(weights.P0);
  if (V0.n() != 3 ||
      RelativeMaxError(V0.hessian_origin(), 2.0 * weights.P0) > 1e-8) {
    throw ValidationError("V0 must be a 3-state function with Hessian 2 P0");
  }
  const Box box3{options.region.lower.head(3), options.region.upper.head(3)};
  const Box box4{options.region.lower.head(4), options.region.upper.head(4)};
  ArtsteinReport artstein = CheckArtsteinSampled(
      V0, partial, box3, options.n_samples, 0.0, options.seed);
  if (!artstein.ok()) {
    throw CertificateError("V0 violates the Artstein condition on the partial "
                           "system at sampled states",
                           artstein.violations);
  }

  Clf V_tilde = AdditiveForwardClf(V0, cfg.rho1);
  Clf V = AdditiveClf(V_tilde, Eigen::Vector2d(cfg.rho2, cfg.rho2));

  std::vector<double> grid = options.level_grid;
  if (grid.empty()) grid = DefaultLevelGrid(V_tilde, box4, options.seed);
  LevelScan scan = FindInverseOptimalR0(V_tilde, sys4, weights.R_tilde,
                                        std::move(grid), box4,
                                        options.n_samples, options.seed);
  LevelConstants ladder = EstimateLevelConstants(
      V_tilde, sys4, weights.R_tilde, scan.r0, box4, options.ladder);
  const LevelScaling scaling = BuildMu(scan.r0, ladder.ladder);
  InverseOptimalCost cost4 = BuildInverseCost(V_tilde, sys4, weights.R_tilde,
                                              weights.Q_tilde, scaling);

  const double R_h = cfg.R_h;
  const Eigen::VectorXd s = OrbitalEquilibrium(params);
  InverseOptimalCost cost6{nullptr, nullptr, weights.R, weights.Q, scaling};
  cost6.q = [cost4, V, params, s, R_h](const Eigen::VectorXd& z) {
    const double lbh =
        V.gradient(z).dot(OrbitalInputMap(params, z + s).col(2));
    return cost4.q(z.head(4)) + 0.25 * lbh * lbh / R_h;
  };
  cost6.r = [cost4, R_h](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(3, 3);
    r.topLeftCorner(2, 2) = cost4.r(z.head(4));
    r(2, 2) = R_h;
    return r;
  };
  FeedbackLaw law = OptimalFeedback(V, cost6, sys6);

  return OrbitalController{params,
                           cfg,
                           std::move(weights),
                           std::move(sys6),
                           std::move(sys4),
                           std::move(V0),
                           std::move(V_tilde),
                           std::move(V),
                           std::move(artstein),
                           std::move(scan),
                           std::move(ladder),
                           std::move(cost4),
                           std::move(cost6),
                           std::move(law)};
}

OrbitalSimulation SimulateOrbital(const OrbitalParams& params, const Clf& V,
                                  const FeedbackLaw& law,
                                  const OrbitalState& s0, double dt, double T) {
  if (!s0.InDomain()) {
    throw DomainError("initial orbital state outside 1 + chi2 > 0, chi4 > 0",
                      0.0);
  }
  const ControlAffineSystem sys = OrbitalSystem(params);
  const Eigen::VectorXd s = OrbitalEquilibrium(params);
  OrbitalSimulation out;
  out.trajectory = Integrate(sys, law, s0.ToVector() - s, dt, T);
  AnnotateLyapunov(out.trajectory, V, sys);
  const std::vector<double>& values = out.trajectory.annotations["V"];
  const std::vector<double>& rates = out.trajectory.annotations["Vdot"];
  out.max_vdot = *std::max_element(rates.begin(), rates.end());
  out.max_step_increase = MaxRelativeIncrease(values, 0.0);
  out.terminal_error = out.trajectory.final_state().norm();
  for (Eigen::VectorXd& z : out.trajectory.states) z += s;
  return out;
}

}  // namespace clfsynth
