#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Jacobian blocks of a strict-feedback system at the origin.
struct StrictFeedbackBlocks {
  Eigen::MatrixXd H1;  // ∂h1/∂y(0), n_y × n_y
  Eigen::MatrixXd H2;  // h2(0), n_y × 1
  Eigen::RowVectorXd F1;
  double F2 = 0.0;
  double G = 0.0;
};

/// ẏ = h1(y) + h2(y)·x, ẋ = f(y, x) + g(y, x)·u with y ∈ ℝ^{n_y} and scalar
/// x, u. The state is ordered (y, x).
class StrictFeedbackSystem {
 public:
  using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using ScalarFn =
      std::function<double(const Eigen::VectorXd& y, double x)>;

  /// Blocks are computed by central differences; supplied blocks must agree
  /// to 1e-5. Throws ValidationError when g(0, 0) = 0.
  StrictFeedbackSystem(int n_y, VecFn h1, VecFn h2, ScalarFn f, ScalarFn g,
                       std::optional<StrictFeedbackBlocks> blocks = std::nullopt,
                       std::string name = "strict_feedback");

  int n_y() const { return n_y_; }
  int n() const { return n_y_ + 1; }
  const StrictFeedbackBlocks& blocks() const { return blocks_; }
  const std::string& name() const { return name_; }

  Eigen::VectorXd h1(const Eigen::VectorXd& y) const { return h1_(y); }
  Eigen::VectorXd h2(const Eigen::VectorXd& y) const { return h2_(y); }
  double f(const Eigen::VectorXd& y, double x) const { return f_(y, x); }
  double g(const Eigen::VectorXd& y, double x) const { return g_(y, x); }

  /// The full (n_y + 1)-state control-affine system.
  ControlAffineSystem Full() const;
  /// The y-subsystem with x acting as its input.
  ControlAffineSystem Inner() const;
  /// A = [[H1, H2], [F1, F2]], B = [0; G].
  LinearSystem Linearization() const;

  /// States in the box where |g| ≤ tol.
  std::vector<Eigen::VectorXd> FindVanishingGain(const Box& region,
                                                 int n_samples,
                                                 double tol = 1e-12,
                                                 std::uint64_t seed = 0) const;

 private:
  int n_y_;
  VecFn h1_;
  VecFn h2_;
  ScalarFn f_;
  ScalarFn g_;
  StrictFeedbackBlocks blocks_;
  std::string name_;
};

/// ẏ = h(x), ẋ = f(x) + g(x)·u with scalar y; state ordered (y, x).
class FeedforwardSystem {
 public:
  using ScalarFn = std::function<double(const Eigen::VectorXd&)>;
  using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
  using MatFn = std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>;

  FeedforwardSystem(int n_x, int p, ScalarFn h, VecFn f, MatFn g,
                    std::string name = "feedforward");

  int n_x() const { return n_x_; }
  int p() const { return p_; }
  /// ∂h/∂x(0), ∂f/∂x(0), g(0).
  const Eigen::RowVectorXd& H() const { return H_; }
  const Eigen::MatrixXd& F() const { return F_; }
  const Eigen::MatrixXd& G() const { return G_; }

  ControlAffineSystem Full() const;

 private:
  int n_x_;
  int p_;
  ScalarFn h_;
  VecFn f_;
  MatFn g_;
  Eigen::RowVectorXd H_;
  Eigen::MatrixXd F_;
  Eigen::MatrixXd G_;
  std::string name_;
};

/// P = [[P11, P12], [P12ᵀ, P22]] split off its last coordinate.
struct BacksteppingPartition {
  Eigen::MatrixXd P11;
  Eigen::VectorXd P12;
  double P22 = 0.0;
  Eigen::MatrixXd P_y;  // P11 − P12 P12ᵀ / P22
  Eigen::MatrixXd T;    // [I; −P12ᵀ/P22]
  Eigen::RowVectorXd local_inner_gain;  // −P12ᵀ/P22

  Eigen::MatrixXd Reassemble() const;
};

/// Schur split of a symmetric positive definite P. Asserts TᵀP = [P_y 0]
/// to 1e-12 (relative to ‖P‖).
BacksteppingPartition PartitionCertificate(const Eigen::MatrixXd& P);

/// Same, and checks TᵀPB = 0 and the reduced Lyapunov inequality
/// P_y(H1 + H2·gain) + (·)ᵀP_y < 0. Throws CertificateError if it fails.
BacksteppingPartition PartitionCertificate(const Eigen::MatrixXd& P,
                                           const StrictFeedbackBlocks& blocks);

/// ‖TᵀPB‖_max for B = [0; G].
double PartitionInputResidual(const BacksteppingPartition& part, double G);

/// Inner pair (V_y, α_y) for the y-subsystem.
struct InnerPair {
  Clf V_y;
  std::function<double(const Eigen::VectorXd&)> alpha_y;
  /// Optional analytic gradient of α_y; central differences otherwise.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> alpha_y_gradient;
};

using InnerClfFactory = std::function<InnerPair(
    const Eigen::MatrixXd& P_y, const Eigen::RowVectorXd& gain,
    const ControlAffineSystem& inner)>;

/// V(y, x) = V_y(y) + P22·(x − α_y(y))². When expected_gain is given,
/// ∂α_y/∂y(0) must match it to 1e-6 (ValidationError otherwise).
Clf BacksteppingClf(const InnerPair& inner, double P22,
                    const std::optional<Eigen::RowVectorXd>& expected_gain =
                        std::nullopt);

/// Default inner pair: V_y = yᵀP_y y and α_y the blended Sontag law for the
/// y-subsystem with local gain `gain`, synthesized on `inner_region`.
InnerClfFactory QuadraticInnerFactory(Box inner_region,
                                      std::vector<double> level_grid,
                                      int n_samples = 4000,
                                      std::uint64_t seed = 0);

/// Inner pair with α_y(y) = gain·y exactly; valid when that linear law
/// stabilizes the y-subsystem on the region of interest.
InnerClfFactory LinearInnerFactory();

struct BacksteppingOptions {
  /// Right-hand side W of (A + BK_o)ᵀP + P(A + BK_o) = −W; identity if unset.
  std::optional<Eigen::MatrixXd> lyapunov_rhs;
  SynthesisOptions synthesis;
  /// Factory for the inner pair; QuadraticInnerFactory over the y-part of
  /// the synthesis box when unset.
  InnerClfFactory inner_factory;
};

struct BacksteppingResult {
  Eigen::MatrixXd P;
  BacksteppingPartition partition;
  Clf V;
  SynthesisResult synthesis;
};

/// Lyapunov certificate for A + BK_o, Schur split, inner pair, composite V
/// and blended Sontag synthesis with local gain K_o.
BacksteppingResult BacksteppingSynthesize(const StrictFeedbackSystem& sys,
                                          const Eigen::MatrixXd& K_o,
                                          const BacksteppingOptions& options);

/// V(x, z) = V_x(x) + Σ_i w_i z_i², the new coordinates z appended after x.
/// Hessian at the origin is diag(H(V_x)(0), 2w).
Clf AdditiveClf(const Clf& V_x, const Eigen::VectorXd& weights);

/// Single-coordinate case, V_x(x) + weight·z².
Clf AdditiveForwardClf(const Clf& V_x, double weight);

}  // namespace clfsynth
