#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/integrate.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Continuous, non-decreasing, piecewise-linear μ with μ = 1 on [0, r0/2]
/// and μ ≥ ℓ_k on every annulus k·r0 ≤ s ≤ (k+1)·r0. Beyond the last
/// annulus μ is frozen at its final value.
class LevelScaling {
 public:
  LevelScaling(double r0, std::vector<double> ladder);

  double r0() const { return r0_; }
  const std::vector<double>& ladder() const { return ladder_; }
  double mu(double s) const;
  double operator()(double s) const { return mu(s); }
  /// Largest s covered by the ladder, (K+1)·r0.
  double covered_level() const;

  const std::vector<double>& knots() const { return knots_; }
  const std::vector<double>& knot_values() const { return values_; }

 private:
  double r0_;
  std::vector<double> ladder_;
  std::vector<double> knots_;
  std::vector<double> values_;
};

/// Builds μ from the ladder. Throws ValidationError on an empty ladder or
/// entries below 1.
LevelScaling BuildMu(double r0, std::vector<double> ladder);

struct LevelConstantOptions {
  /// Cap on the number of annuli; the ladder otherwise extends until it
  /// covers the largest V among the samples.
  int k_max = 256;
  int n_samples = 4000;
  double safety_factor = 1.5;
  /// A locally refined ratio maximum is kept only within this factor of the
  /// sampled maximum; larger values flag L_bV → 0 with L_aV > 0.
  double max_refine_gain = 100.0;
  int max_doublings = 6;
  std::uint64_t seed = 0;
};

struct LevelConstants {
  std::vector<double> ladder;
  std::vector<int> samples_per_annulus;
  std::vector<int> doublings;
  /// Annuli wholly inside the box level; μ is not certified above them.
  int covered_annuli = 0;
  std::vector<std::string> warnings;
};

/// ℓ_k per annulus C_k = {k·r0 ≤ V ≤ (k+1)·r0}, for k = 1 up to the first
/// annulus reaching the largest sampled V: 1 when the sampled ratio
/// 4·L_aV / (L_bV R⁻¹ L_bVᵀ) stays below 1, otherwise safety_factor times
/// its maximum over the samples, refined by a local search from the top
/// samples. Each ℓ_k is re-checked on fresh samples and doubled
/// on failure; CertificateError once the doubling cap is reached.
LevelConstants EstimateLevelConstants(const Clf& V,
                                      const ControlAffineSystem& sys,
                                      const Eigen::MatrixXd& R, double r0,
                                      const Box& region,
                                      const LevelConstantOptions& options = {});

/// Largest grid level on which L_aV − ¼ L_bV R⁻¹ L_bVᵀ < 0, i.e. where the
/// unscaled weight already certifies decrease.
LevelScan FindInverseOptimalR0(const Clf& V, const ControlAffineSystem& sys,
                               const Eigen::MatrixXd& R,
                               std::vector<double> level_grid,
                               const Box& region, int n_samples,
                               std::uint64_t seed = 0);

/// Q = P B R⁻¹ Bᵀ P − (PA + AᵀP), the state weight for which P solves the
/// Riccati equation.
Eigen::MatrixXd ImpliedStateWeight(const LinearSystem& lin,
                                   const Eigen::MatrixXd& P,
                                   const Eigen::MatrixXd& R);

/// Cost pair (q, r) for which V solves the HJB equation.
struct InverseOptimalCost {
  std::function<double(const Eigen::VectorXd&)> q;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> r;
  Eigen::MatrixXd base_R;
  Eigen::MatrixXd base_Q;
  LevelScaling scaling;
};

/// r(x) = R / μ(V(x)), q(x) = −L_aV + ¼ L_bV r(x)⁻¹ L_bVᵀ. Checks that
/// ½·hessian_origin solves the Riccati equation for (Q, R) first.
InverseOptimalCost BuildInverseCost(const Clf& V, const ControlAffineSystem& sys,
                                    const Eigen::MatrixXd& R,
                                    const Eigen::MatrixXd& Q,
                                    const LevelScaling& scaling);

/// q(x) + L_aV − ¼ L_bV r(x)⁻¹ L_bVᵀ.
double HjbResidual(const Clf& V, const InverseOptimalCost& cost,
                   const ControlAffineSystem& sys, const Eigen::VectorXd& x);

/// u = −½ r(x)⁻¹ L_bV(x)ᵀ.
FeedbackLaw OptimalFeedback(const Clf& V, const InverseOptimalCost& cost,
                            const ControlAffineSystem& sys);

enum class TailKind { kNone, kExactValue, kLocalLqEstimate };

std::string ToString(TailKind kind);

struct CostOptions {
  double horizon = 30.0;
  double dt = 1e-3;
  /// Integration stops once V ≤ terminal_fraction·V(x0).
  double terminal_fraction = 1e-8;
  /// Required terminal set {V ≤ terminal_level} at the horizon.
  std::optional<double> terminal_level;
  bool keep_trace = false;
};

struct CostEstimate {
  double J = 0.0;
  double integral = 0.0;
  double tail = 0.0;
  TailKind tail_kind = TailKind::kNone;
  double final_time = 0.0;
  Eigen::VectorXd final_state;
  /// Filled when keep_trace is set; annotations "q" and "integrand".
  std::optional<Trajectory> trace;
};

/// J = ∫ q(x) + uᵀ r(x) u dt along the closed loop plus a tail term: V(x(T))
/// for the optimal feedback (exact by the HJB identity), otherwise the cost
/// of the linearized loop from x(T). Throws DivergenceError on blow-up or
/// if the terminal set is not reached.
CostEstimate EvaluateCost(const ControlAffineSystem& sys, const Clf& V,
                          const InverseOptimalCost& cost, const FeedbackLaw& law,
                          const Eigen::VectorXd& x0,
                          const CostOptions& options = {});

/// EvaluateCost over several initial states on worker threads. Results are
/// in input order and independent of scheduling.
std::vector<CostEstimate> EvaluateCostBatch(
    const ControlAffineSystem& sys, const Clf& V,
    const InverseOptimalCost& cost, const FeedbackLaw& law,
    const std::vector<Eigen::VectorXd>& initial_states,
    const CostOptions& options = {});

}  // namespace clfsynth
