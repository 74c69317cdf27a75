#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/integrate.hpp"
#include "clfsynth/inverse_opt.hpp"
#include "clfsynth/structured.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Target orbit parameter p0 and gravitational constant, with the derived
/// constants ν = √(p0/μ), η = 1/(p0 ν), ν̄ = ν√p0, η̄ = η/√p0.
struct OrbitalParams {
  double p0 = 1.0;
  double mu_grav = 1.0;
  double nu = 1.0;
  double eta = 1.0;
  double nu_bar = 1.0;
  double eta_bar = 1.0;

  static OrbitalParams Make(double p0, double mu_grav);
  /// Positivity and agreement of the derived constants with (p0, mu_grav).
  bool IsConsistent() const;
};

/// χ1 true longitude, (χ2, χ3) eccentricity vector, χ4 parameter,
/// (χ5, χ6) momentum vector.
struct OrbitalState {
  double chi1 = 0.0;
  double chi2 = 0.0;
  double chi3 = 0.0;
  double chi4 = 1.0;
  double chi5 = 0.0;
  double chi6 = 0.0;

  static OrbitalState FromVector(const Eigen::VectorXd& v);
  Eigen::VectorXd ToVector() const;
  /// 1 + χ2 > 0 and χ4 > 0.
  bool InDomain() const;
};

/// The equilibrium s* = (0, 0, 0, p0, 0, 0).
Eigen::VectorXd OrbitalEquilibrium(const OrbitalParams& params);

/// Drift a(χ) and input columns (b_r, b_θ, b_h). Throw DomainError outside
/// 1 + χ2 > 0, χ4 > 0.
Eigen::VectorXd OrbitalDrift(const OrbitalParams& params,
                             const Eigen::VectorXd& chi);
Eigen::MatrixXd OrbitalInputMap(const OrbitalParams& params,
                                const Eigen::VectorXd& chi);
Eigen::VectorXd OrbitalVectorField(const OrbitalParams& params,
                                   const OrbitalState& s,
                                   const Eigen::Vector3d& u);

struct OrbitalLinearization {
  Eigen::MatrixXd A;  // 6 × 6
  Eigen::MatrixXd B;  // 6 × 3
  Eigen::MatrixXd A0, A1, A2, B0, B2;
  Eigen::MatrixXd A_tilde;  // 4 × 4, [[A0, A2], [0, 0]]
  Eigen::MatrixXd B_tilde;  // 4 × 2, [[B0, 0], [0, 2/η]]
};

/// Closed-form Jacobians at (s*, 0).
OrbitalLinearization LinearizeOrbital(const OrbitalParams& params);

/// Full dynamics in shifted coordinates z = χ − s*.
ControlAffineSystem OrbitalSystem(const OrbitalParams& params);
/// (χ1, …, χ4) rows with inputs (u_r, u_θ), shifted; independent of χ5, χ6
/// once u_h = 0.
ControlAffineSystem OrbitalFourStateSystem(const OrbitalParams& params);
/// (χ1, χ2, χ3) at χ4 = p0 with input u_r.
ControlAffineSystem OrbitalPartialSystem(const OrbitalParams& params);
/// (χ2, χ3) subsystem in strict-feedback form with y = χ2, x = χ3.
StrictFeedbackSystem OrbitalReducedStrictFeedback(const OrbitalParams& params);

struct OrbitalCostConfig {
  Eigen::Matrix3d Q0 = Eigen::Matrix3d::Identity();
  double R_r = 1.0;
  double R_theta = 1.0;
  double R_h = 1.0;
  double rho1 = 2.0;
  double rho2 = 1.0;
};

struct OrbitalWeights {
  Eigen::MatrixXd P0;       // stabilizing solution for (A0, B0, Q0, R_r)
  double riccati_residual = 0.0;
  Eigen::MatrixXd P_tilde;  // diag(P0, ρ1)
  Eigen::MatrixXd Q_tilde;  // [[Q0, −P0A2], [−A2ᵀP0, 4ρ1²/(η²R_θ)]]
  Eigen::MatrixXd R_tilde;  // diag(R_r, R_θ)
  Eigen::MatrixXd Q;        // diag(Q̃, ρ2² B2 R_h⁻¹ B2ᵀ), semi-definite
  Eigen::MatrixXd R;        // diag(R_r, R_θ, R_h)
};

/// Solves the partial Riccati equation and assembles the weights. Throws
/// ValidationError when Q̃ is not positive definite (raise ρ1).
OrbitalWeights ComputeOrbitalWeights(const OrbitalParams& params,
                                     const OrbitalCostConfig& cfg);

struct OrbitalSynthesisOptions {
  /// Working box in shifted coordinates.
  Box region = Box::Symmetric(
      (Eigen::VectorXd(6) << 1.0, 0.5, 0.5, 0.5, 0.5, 0.5).finished());
  int n_samples = 4000;
  std::uint64_t seed = 0;
  /// Candidate base levels for the scaling; DefaultLevelGrid when empty.
  std::vector<double> level_grid;
  LevelConstantOptions ladder;
  /// Replaces the quadratic V0 = zᵀP0z when given; must have Hessian 2P0.
  std::optional<Clf> V0;
};

struct OrbitalController {
  OrbitalParams params;
  OrbitalCostConfig cfg;
  OrbitalWeights weights;
  ControlAffineSystem system;       // shifted 6-state
  ControlAffineSystem four_state;   // shifted (χ1..χ4), inputs (u_r, u_θ)
  Clf V0;
  Clf V_tilde;
  Clf V;
  ArtsteinReport v0_artstein;
  LevelScan base_scan;
  LevelConstants ladder;
  InverseOptimalCost cost_tilde;  // 4-state (q̃, r̃)
  InverseOptimalCost cost;        // 6-state (q, r)
  FeedbackLaw law;
};

/// V = V0 + ρ1 z4² + ρ2 (z5² + z6²), the 4-state inverse-optimal cost for
/// Ṽ, its extension by ¼(L_{b_h}V)²/R_h and r = diag(r̃, R_h), and the
/// optimal feedback u = −½ r⁻¹ L_bVᵀ. Throws CertificateError if V0 fails
/// its sampled Artstein check on the partial system.
OrbitalController BuildOrbitalController(
    const OrbitalParams& params, const OrbitalCostConfig& cfg,
    const OrbitalSynthesisOptions& options = {});

struct OrbitalSimulation {
  Trajectory trajectory;  // absolute χ coordinates, with V and Vdot columns
  double max_vdot = 0.0;
  /// max_k V_{k+1} − V_k, to be compared with a tolerance by the caller.
  double max_step_increase = 0.0;
  double terminal_error = 0.0;  // ‖χ(T) − s*‖
};

/// Closed loop of the orbital dynamics under `law` (a shifted-coordinate
/// law on the 6-state system) from the absolute state s0.
OrbitalSimulation SimulateOrbital(const OrbitalParams& params, const Clf& V,
                                  const FeedbackLaw& law,
                                  const OrbitalState& s0, double dt, double T);

}  // namespace clfsynth
