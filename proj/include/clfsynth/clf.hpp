#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/linear_core.hpp"
#include "clfsynth/numdiff.hpp"
#include "clfsynth/sampling.hpp"

namespace clfsynth {

/// ẋ = a(x) + b(x)u with a(0) = 0.
class ControlAffineSystem {
 public:
  using Drift = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using InputMap = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  /// The linearization is computed by central differences unless supplied;
  /// a supplied one must agree with the finite-difference one to 1e-5.
  ControlAffineSystem(int n, int p, Drift drift, InputMap input_map,
                      std::optional<LinearSystem> linearization = std::nullopt,
                      std::string name = "");

  int n() const { return n_; }
  int p() const { return p_; }
  const std::string& name() const { return name_; }

  Eigen::VectorXd drift(const Eigen::VectorXd& x) const { return drift_(x); }
  Eigen::MatrixXd input_map(const Eigen::VectorXd& x) const {
    return input_map_(x);
  }
  Eigen::VectorXd Field(const Eigen::VectorXd& x,
                        const Eigen::VectorXd& u) const;
  const LinearSystem& linearization() const { return linearization_; }

 private:
  int n_;
  int p_;
  Drift drift_;
  InputMap input_map_;
  LinearSystem linearization_;
  std::string name_;
};

/// Finite-difference linearization (A = ∂a/∂x(0), B = b(0)).
LinearSystem LinearizeAtOrigin(int n, const ControlAffineSystem::Drift& drift,
                               const ControlAffineSystem::InputMap& input_map);

/// A C² proper positive definite function carrying the CLF role. The
/// Hessian at the origin is stored explicitly (it equals 2P).
class Clf {
 public:
  using Value = std::function<double(const Eigen::VectorXd&)>;
  using Gradient = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  /// An empty gradient falls back to central differences. Checks that
  /// value(0) = 0, hessian_origin is symmetric PD and matches the
  /// finite-difference Hessian of value at 0 to 1e-3 relative.
  Clf(int n, Value value, Gradient gradient, Eigen::MatrixXd hessian_origin);

  int n() const { return n_; }
  double value(const Eigen::VectorXd& x) const { return value_(x); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  const Eigen::MatrixXd& hessian_origin() const { return hessian_origin_; }
  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }

 private:
  int n_;
  Value value_;
  Gradient gradient_;
  Eigen::MatrixXd hessian_origin_;
};

/// V(x) = xᵀPx, gradient 2Px, hessian_origin 2P.
Clf LocalQuadraticClf(const Eigen::MatrixXd& P);

struct LieDerivatives {
  double La = 0.0;       // ∂V/∂x · a(x)
  Eigen::RowVectorXd Lb; // ∂V/∂x · b(x), length p
};

LieDerivatives ComputeLieDerivatives(const Clf& V,
                                     const ControlAffineSystem& sys,
                                     const Eigen::VectorXd& x);

/// Default threshold under which ‖L_bV(x)‖ counts as zero.
double DefaultZeroTol(const Eigen::VectorXd& gradient);

/// Strict-decrease margin for L_aV-type quantities.
double DecreaseMargin(double La);

struct ArtsteinReport {
  int checked = 0;
  int near_kernel = 0;  // samples with ‖L_bV‖ <= zero_tol
  std::vector<Eigen::VectorXd> violations;
  bool ok() const { return violations.empty(); }
};

/// Sampled check of L_bV(x) = 0 ⇒ L_aV(x) < 0 on the box (origin excluded).
/// A non-positive zero_tol selects DefaultZeroTol per sample. This is a
/// sampling certificate, not a proof.
ArtsteinReport CheckArtsteinSampled(const Clf& V, const ControlAffineSystem& sys,
                                    const Box& region, int n_samples,
                                    double zero_tol = 0.0,
                                    std::uint64_t seed = 0);

struct ClfBoxReport {
  int checked = 0;
  double min_value_nonzero = 0.0;  // min V(x)/|x|² over samples
  double box_level = 0.0;          // min of V on the box boundary
  bool positive = false;
};

/// Positivity on the box and the largest level c such that {V < c} stays
/// inside the box (estimated as the minimum of V over boundary samples).
ClfBoxReport CheckClfOnBox(const Clf& V, const Box& region, int n_samples,
                           std::uint64_t seed = 0);

/// Minimum of V over boundary samples: an estimate of the largest level c
/// with {V < c} inside the box.
double BoxLevel(const Clf& V, const Box& region, int n_boundary,
                std::uint64_t seed = 0);

enum class LevelStatus { kPassed, kFailed, kEmpty, kBeyondBox };

struct LevelScan {
  double r0 = 0.0;
  std::vector<double> levels;
  std::vector<LevelStatus> status;
  std::vector<int> samples_per_level;
};

/// Largest grid level r0 such that every sample in {0 < V ≤ r0} ∩ box
/// satisfies L_aV + L_bV·K_o x < −δ. Levels with no samples are skipped;
/// levels above the box level cannot be certified and end the scan. Throws
/// CertificateError if no level passes.
LevelScan FindR0(const Clf& V, const ControlAffineSystem& sys,
                 const Eigen::MatrixXd& K_o, std::vector<double> level_grid,
                 const Box& region, int n_samples, std::uint64_t seed = 0);

struct DecreaseSample {
  double value = 0.0;  // quantity required to be negative
  double La = 0.0;     // L_aV(x), sets the margin DecreaseMargin(La)
};
using DecreaseFunctional = std::function<DecreaseSample(const Eigen::VectorXd&)>;

/// Generic level scan: `decrease(x).value` must be < −DecreaseMargin(La) on
/// the level set. Shared by FindR0 and the inverse-optimality base level.
LevelScan ScanLevels(const Clf& V, const DecreaseFunctional& decrease,
                     std::vector<double> level_grid, const Box& region,
                     int n_samples, std::uint64_t seed);

/// Geometric grid r_max·ratio^k, k = count−1..0, returned ascending.
std::vector<double> GeometricLevelGrid(double r_max, double ratio, int count);

/// ρ with ρ(s) = 0 for s ≤ r0/2, 1 for s ≥ r0, cubic smoothstep between.
class BlendProfile {
 public:
  explicit BlendProfile(double r0);

  double r0() const { return r0_; }
  double operator()(double s) const;
  /// dρ/ds.
  double Derivative(double s) const;

 private:
  double r0_;
};

BlendProfile MakeBlendProfile(double r0);

}  // namespace clfsynth
