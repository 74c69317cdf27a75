#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Core>

namespace clfsynth {

/// Tolerances shared by the linear-algebra routines. Mirrors the
/// "linear_core" JSON configuration block.
struct LinearCoreConfig {
  double care_tol = 1e-12;       // relative Newton step tolerance
  int max_newton_iter = 100;
  double hurwitz_margin = 1e-9;  // Re(λ) < -margin counts as stable
  double rank_tol = 1e-10;       // relative singular-value threshold
};

/// First-order approximation (A, B) of an input-affine system.
class LinearSystem {
 public:
  /// Checks dimensions and stabilizability; throws ModeError naming the
  /// first uncontrollable mode with Re(λ) >= 0.
  LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B,
               const LinearCoreConfig& config = {});

  /// Dimension checks only. Used for linearizations of arbitrary plants,
  /// which need not be stabilizable.
  static LinearSystem Unchecked(Eigen::MatrixXd A, Eigen::MatrixXd B);

  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& B() const { return B_; }
  int n() const { return static_cast<int>(A_.rows()); }
  int p() const { return static_cast<int>(B_.cols()); }

  bool IsStabilizable(const LinearCoreConfig& config = {}) const;

 private:
  struct UncheckedTag {};
  LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, UncheckedTag);

  Eigen::MatrixXd A_;
  Eigen::MatrixXd B_;
};

/// State weight Q (symmetric PSD) and input weight R (symmetric PD).
class QuadraticWeights {
 public:
  QuadraticWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R);

  const Eigen::MatrixXd& Q() const { return Q_; }
  const Eigen::MatrixXd& R() const { return R_; }

 private:
  Eigen::MatrixXd Q_;
  Eigen::MatrixXd R_;
};

/// Stabilizing solution of PA + AᵀP − PBR⁻¹BᵀP + Q = 0 together with the
/// recomputed residual and closed-loop spectral abscissa.
struct RiccatiCertificate {
  Eigen::MatrixXd P;
  double residual_norm = 0.0;
  double closed_loop_spectral_abscissa = 0.0;
  int newton_iterations = 0;
};

struct LyapunovSolution {
  Eigen::MatrixXd P;
  double residual_norm = 0.0;
  /// Reciprocal condition estimate of the vectorized n²×n² system.
  double rcond = 1.0;
  std::optional<std::string> warning;
};

/// Max real part over the eigenvalues of a square matrix.
double SpectralAbscissa(const Eigen::MatrixXd& A);

/// True iff every eigenvalue satisfies Re(λ) < -hurwitz_margin.
bool IsHurwitz(const Eigen::MatrixXd& A, const LinearCoreConfig& config = {});

/// Solves A_clᵀP + P A_cl = −Q for Hurwitz A_cl and symmetric PD Q.
LyapunovSolution SolveLyapunov(const Eigen::MatrixXd& A_cl,
                               const Eigen::MatrixXd& Q,
                               const LinearCoreConfig& config = {});

/// Same equation for any symmetric right-hand side; only requires the
/// vectorized operator I⊗Aᵀ + Aᵀ⊗I to be nonsingular.
LyapunovSolution SolveLyapunovGeneral(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& Q);

/// Unique stabilizing CARE solution via Kleinman–Newton iteration.
RiccatiCertificate SolveCare(const LinearSystem& sys,
                             const QuadraticWeights& w,
                             const LinearCoreConfig& config = {});

/// ‖PA + AᵀP − PBR⁻¹BᵀP + Q‖_F.
double CareResidual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                    const Eigen::MatrixXd& P);

/// K_o = −R⁻¹BᵀP.
Eigen::MatrixXd LqrGain(const RiccatiCertificate& cert, const LinearSystem& sys,
                        const Eigen::MatrixXd& R);
Eigen::MatrixXd LqrGain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& R);

/// Rank test of [A − λI, B] at every eigenvalue with Re(λ) >= 0. Returns the
/// offending eigenvalue, or nullopt if (A, B) is stabilizable.
std::optional<std::complex<double>> FindUnstabilizableMode(
    const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
    const LinearCoreConfig& config = {});

/// Dual test on (C, A) via [A − λI; C].
std::optional<std::complex<double>> FindUndetectableMode(
    const Eigen::MatrixXd& C, const Eigen::MatrixXd& A,
    const LinearCoreConfig& config = {});

/// Symmetric PSD square root.
Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& M);

bool IsSymmetric(const Eigen::MatrixXd& M, double tol = 1e-10);
double MinEigenvalueSymmetric(const Eigen::MatrixXd& M);
double MaxEigenvalueSymmetric(const Eigen::MatrixXd& M);

struct LmiReport {
  double max_eig_prescribed = 0.0;  // (A + BK_o)ᵀP + P(A + BK_o)
  double max_eig_uniting = 0.0;     // (A + BK_u)ᵀP + P(A + BK_u)
  double max_eig_global = 0.0;      // (A + BK_u)ᵀP_inf + P_inf(A + BK_u)
  bool feasible = false;
};

/// Evaluates the three matrix inequalities linking a local gain K_o, a
/// uniting gain K_u, a local certificate P and the Hessian P_inf of a global
/// CLF. Feasible iff all three maxima are negative.
LmiReport CheckLmiTriple(const LinearSystem& sys, const Eigen::MatrixXd& K_o,
                         const Eigen::MatrixXd& K_u, const Eigen::MatrixXd& P,
                         const Eigen::MatrixXd& P_inf);

struct LmiSearchResult {
  bool found = false;
  Eigen::MatrixXd K_u;
  Eigen::MatrixXd P;
  LmiReport report;
  int trials = 0;
};

/// Heuristic randomized search for (K_u, P). Samples K_u around K_o and
/// around gains that are stabilizing for P_inf, then tries P among the
/// Lyapunov solutions of both closed loops and their convex combinations.
/// Failure to find a pair says nothing about feasibility.
LmiSearchResult SearchLmiTripleHeuristic(const LinearSystem& sys,
                                         const Eigen::MatrixXd& K_o,
                                         const Eigen::MatrixXd& P_inf,
                                         int max_trials, std::uint64_t seed);

}  // namespace clfsynth
