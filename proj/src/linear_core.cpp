#include "clfsynth/linear_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "clfsynth/errors.hpp"

namespace clfsynth {
namespace {

std::string ModeString(std::complex<double> lambda) {
  std::ostringstream os;
  os << lambda.real() << (lambda.imag() < 0 ? " - " : " + ")
     << std::abs(lambda.imag()) << "i";
  return os.str();
}

// Modes with real part above this are treated as potentially unstable. The
// slack absorbs the O(sqrt(eps)) spread of eigenvalues in Jordan blocks.
double MarginalThreshold(const Eigen::MatrixXd& A) {
  return -1e-7 * (1.0 + A.norm());
}

bool FullRowRank(const Eigen::MatrixXcd& M, double rank_tol) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& s = svd.singularValues();
  if (s.size() < M.rows()) return false;
  const double threshold = rank_tol * std::max(s(0), 1.0);
  return s(M.rows() - 1) > threshold;
}

void RequireSquare(const Eigen::MatrixXd& A, const char* name) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    throw DimensionError(std::string(name) + " must be a nonempty square matrix");
  }
}

struct NewtonResult {
  Eigen::MatrixXd P;
  Eigen::MatrixXd K;
  int iterations = 0;
};

// Kleinman iteration from a stabilizing gain K0 (u = K x).
NewtonResult KleinmanNewton(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                            const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                            Eigen::MatrixXd K, const LinearCoreConfig& config) {
  const Eigen::LLT<Eigen::MatrixXd> R_llt(R);
  Eigen::MatrixXd P_prev;
  Eigen::MatrixXd P_best;
  Eigen::MatrixXd K_best;
  double best_residual = std::numeric_limits<double>::infinity();
  int best_iteration = 0;
  int converged_at = 0;
  for (int it = 1; it <= config.max_newton_iter; ++it) {
    const Eigen::MatrixXd A_k = A + B * K;
    const Eigen::MatrixXd rhs = Q + K.transpose() * R * K;
    Eigen::MatrixXd P = SolveLyapunovGeneral(A_k, rhs).P;
    P = 0.5 * (P + P.transpose());
    K = -R_llt.solve(B.transpose() * P);
    const double residual = CareResidual(A, B, Q, R, P);
    if (residual < best_residual) {
      best_residual = residual;
      P_best = P;
      K_best = K;
      best_iteration = it;
    }
    // One extra step after the update falls below tolerance.
    if (converged_at > 0) return {std::move(P_best), std::move(K_best), it};
    if (it > 1 && (P - P_prev).norm() <= config.care_tol * (1.0 + P.norm())) {
      converged_at = it;
    }
    // Roundoff floor: the residual has not improved for several steps.
    if (it - best_iteration >= 5) {
      return {std::move(P_best), std::move(K_best), it};
    }
    P_prev = std::move(P);
  }
  throw ConvergenceError("Kleinman-Newton iteration did not converge within " +
                             std::to_string(config.max_newton_iter) +
                             " iterations",
                         best_residual);
}

// Stabilizing gain by continuation on the eigenvalue shift σ: K = 0 stabilizes
// A − σI for σ large; each stage solves the LQ problem of A − σI and then
// reduces σ by half of the achieved closed-loop decay.
Eigen::MatrixXd InitialStabilizingGain(const Eigen::MatrixXd& A,
                                       const Eigen::MatrixXd& B,
                                       const Eigen::MatrixXd& Q,
                                       const Eigen::MatrixXd& R,
                                       const LinearCoreConfig& config) {
  const Eigen::Index n = A.rows();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(B.cols(), n);
  if (IsHurwitz(A, config)) return K;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd Q_shift = Q + I;
  double sigma = std::max(0.0, SpectralAbscissa(A)) + 1.0;
  for (int stage = 0; stage < 200; ++stage) {
    K = KleinmanNewton(A - sigma * I, B, Q_shift, R, K, config).K;
    if (sigma == 0.0) return K;
    const double decay = SpectralAbscissa(A - sigma * I + B * K);
    sigma = std::max(0.0, sigma + 0.5 * decay);
  }
  throw ConvergenceError("eigenvalue-shift continuation did not reach a "
                         "stabilizing gain",
                         SpectralAbscissa(A + B * K));
}

}  // namespace

LinearSystem::LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B,
                           const LinearCoreConfig& config)
    : LinearSystem(std::move(A), std::move(B), UncheckedTag{}) {
  if (auto mode = FindUnstabilizableMode(A_, B_, config)) {
    throw ModeError("(A, B) is not stabilizable: mode " + ModeString(*mode) +
                        " is uncontrollable",
                    mode->real(), mode->imag());
  }
}

LinearSystem::LinearSystem(Eigen::MatrixXd A, Eigen::MatrixXd B, UncheckedTag)
    : A_(std::move(A)), B_(std::move(B)) {
  RequireSquare(A_, "A");
  if (B_.rows() != A_.rows() || B_.cols() == 0) {
    throw DimensionError("B must have rows(A) rows and at least one column");
  }
}

LinearSystem LinearSystem::Unchecked(Eigen::MatrixXd A, Eigen::MatrixXd B) {
  return LinearSystem(std::move(A), std::move(B), UncheckedTag{});
}

bool LinearSystem::IsStabilizable(const LinearCoreConfig& config) const {
  return !FindUnstabilizableMode(A_, B_, config).has_value();
}

QuadraticWeights::QuadraticWeights(Eigen::MatrixXd Q, Eigen::MatrixXd R)
    : Q_(std::move(Q)), R_(std::move(R)) {
  RequireSquare(Q_, "Q");
  RequireSquare(R_, "R");
  if (!IsSymmetric(Q_) || !IsSymmetric(R_)) {
    throw ValidationError("Q and R must be symmetric");
  }
  if (MinEigenvalueSymmetric(R_) <= 0.0) {
    throw ValidationError("R must be positive definite");
  }
  if (MinEigenvalueSymmetric(Q_) < -1e-12 * (1.0 + Q_.norm())) {
    throw ValidationError("Q must be positive semi-definite");
  }
}

double SpectralAbscissa(const Eigen::MatrixXd& A) {
  RequireSquare(A, "A");
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  if (es.info() != Eigen::Success) {
    throw ConvergenceError("eigenvalue computation failed", 0.0);
  }
  return es.eigenvalues().real().maxCoeff();
}

bool IsHurwitz(const Eigen::MatrixXd& A, const LinearCoreConfig& config) {
  return SpectralAbscissa(A) < -config.hurwitz_margin;
}

bool IsSymmetric(const Eigen::MatrixXd& M, double tol) {
  if (M.rows() != M.cols()) return false;
  return (M - M.transpose()).norm() <= tol * (1.0 + M.norm());
}

double MinEigenvalueSymmetric(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double MaxEigenvalueSymmetric(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
      0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues()(es.eigenvalues().size() - 1);
}

Eigen::MatrixXd SymmetricSqrt(const Eigen::MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (M + M.transpose()));
  const Eigen::VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

LyapunovSolution SolveLyapunovGeneral(const Eigen::MatrixXd& A,
                                      const Eigen::MatrixXd& Q) {
  RequireSquare(A, "A");
  if (Q.rows() != A.rows() || Q.cols() != A.cols()) {
    throw DimensionError("Q must match the size of A");
  }
  const Eigen::Index n = A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd At = A.transpose();
  // Column-major vec: vec(AᵀP) = (I ⊗ Aᵀ) vec(P), vec(PA) = (Aᵀ ⊗ I) vec(P).
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    L.block(j * n, j * n, n, n) += At;
    for (Eigen::Index k = 0; k < n; ++k) {
      L.block(j * n, k * n, n, n) += At(j, k) * I;
    }
  }
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(L);
  LyapunovSolution out;
  out.rcond = lu.rcond();
  if (!(out.rcond > 0.0) || !std::isfinite(out.rcond)) {
    throw NoSolutionError("Lyapunov operator is singular");
  }
  const Eigen::VectorXd rhs =
      -Eigen::Map<const Eigen::VectorXd>(Q.data(), n * n);
  Eigen::VectorXd vec_p = lu.solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<Eigen::MatrixXd>(vec_p.data(), n, n);
  out.P = 0.5 * (P + P.transpose());
  out.residual_norm = (At * out.P + out.P * A + Q).norm();
  if (out.rcond < 1e-12) {
    out.warning = "ill-conditioned Kronecker system (rcond = " +
                  std::to_string(out.rcond) + ")";
  }
  return out;
}

LyapunovSolution SolveLyapunov(const Eigen::MatrixXd& A_cl,
                               const Eigen::MatrixXd& Q,
                               const LinearCoreConfig& config) {
  RequireSquare(A_cl, "A_cl");
  if (Q.rows() != A_cl.rows() || Q.cols() != A_cl.cols()) {
    throw DimensionError("Q must match the size of A_cl");
  }
  if (!IsSymmetric(Q) || MinEigenvalueSymmetric(Q) <= 0.0) {
    throw ValidationError("Q must be symmetric positive definite");
  }
  if (!IsHurwitz(A_cl, config)) {
    throw NoSolutionError(
        "A_cl is not Hurwitz; no positive definite Lyapunov solution exists");
  }
  return SolveLyapunovGeneral(A_cl, Q);
}

double CareResidual(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                    const Eigen::MatrixXd& Q, const Eigen::MatrixXd& R,
                    const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd BtP = B.transpose() * P;
  return (P * A + A.transpose() * P - BtP.transpose() * R.llt().solve(BtP) + Q)
      .norm();
}

std::optional<std::complex<double>> FindUnstabilizableMode(
    const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
    const LinearCoreConfig& config) {
  RequireSquare(A, "A");
  if (B.rows() != A.rows()) throw DimensionError("B rows must match A");
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<Eigen::MatrixXd> es(A, false);
  const double threshold = MarginalThreshold(A);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (lambda.real() < threshold) continue;
    Eigen::MatrixXcd M(n, n + B.cols());
    M.leftCols(n) = A.cast<std::complex<double>>() -
                    lambda * Eigen::MatrixXcd::Identity(n, n);
    M.rightCols(B.cols()) = B.cast<std::complex<double>>();
    if (!FullRowRank(M, config.rank_tol)) return lambda;
  }
  return std::nullopt;
}

std::optional<std::complex<double>> FindUndetectableMode(
    const Eigen::MatrixXd& C, const Eigen::MatrixXd& A,
    const LinearCoreConfig& config) {
  return FindUnstabilizableMode(A.transpose(), C.transpose(), config);
}

RiccatiCertificate SolveCare(const LinearSystem& sys, const QuadraticWeights& w,
                             const LinearCoreConfig& config) {
  const Eigen::MatrixXd& A = sys.A();
  const Eigen::MatrixXd& B = sys.B();
  if (w.Q().rows() != A.rows() || w.R().rows() != B.cols()) {
    throw DimensionError("weights do not match the system dimensions");
  }
  if (auto mode = FindUnstabilizableMode(A, B, config)) {
    throw ModeError("(A, B) is not stabilizable: mode " + ModeString(*mode),
                    mode->real(), mode->imag());
  }
  if (auto mode = FindUndetectableMode(SymmetricSqrt(w.Q()), A, config)) {
    throw ModeError("(Q^1/2, A) is not detectable: mode " + ModeString(*mode) +
                        " is unobservable through Q",
                    mode->real(), mode->imag());
  }
  const Eigen::MatrixXd K0 = InitialStabilizingGain(A, B, w.Q(), w.R(), config);
  NewtonResult newton = KleinmanNewton(A, B, w.Q(), w.R(), K0, config);

  RiccatiCertificate cert;
  cert.P = 0.5 * (newton.P + newton.P.transpose());
  cert.newton_iterations = newton.iterations;
  cert.residual_norm = CareResidual(A, B, w.Q(), w.R(), cert.P);
  cert.closed_loop_spectral_abscissa =
      SpectralAbscissa(A + B * LqrGain(cert.P, B, w.R()));
  if (cert.closed_loop_spectral_abscissa >= -config.hurwitz_margin) {
    throw ConvergenceError("Newton limit is not stabilizing",
                           cert.residual_norm);
  }
  return cert;
}

Eigen::MatrixXd LqrGain(const Eigen::MatrixXd& P, const Eigen::MatrixXd& B,
                        const Eigen::MatrixXd& R) {
  if (P.rows() != B.rows() || R.rows() != B.cols() || R.cols() != B.cols()) {
    throw DimensionError("LqrGain: inconsistent dimensions");
  }
  return -R.llt().solve(B.transpose() * P);
}

Eigen::MatrixXd LqrGain(const RiccatiCertificate& cert, const LinearSystem& sys,
                        const Eigen::MatrixXd& R) {
  return LqrGain(cert.P, sys.B(), R);
}

LmiReport CheckLmiTriple(const LinearSystem& sys, const Eigen::MatrixXd& K_o,
                         const Eigen::MatrixXd& K_u, const Eigen::MatrixXd& P,
                         const Eigen::MatrixXd& P_inf) {
  const int n = sys.n();
  const int p = sys.p();
  if (K_o.rows() != p || K_o.cols() != n || K_u.rows() != p ||
      K_u.cols() != n || P.rows() != n || P.cols() != n ||
      P_inf.rows() != n || P_inf.cols() != n) {
    throw DimensionError("CheckLmiTriple: inconsistent dimensions");
  }
  if (!IsSymmetric(P) || !IsSymmetric(P_inf)) {
    throw ValidationError("P and P_inf must be symmetric");
  }
  const Eigen::MatrixXd A_o = sys.A() + sys.B() * K_o;
  const Eigen::MatrixXd A_u = sys.A() + sys.B() * K_u;
  LmiReport r;
  r.max_eig_prescribed = MaxEigenvalueSymmetric(A_o.transpose() * P + P * A_o);
  r.max_eig_uniting = MaxEigenvalueSymmetric(A_u.transpose() * P + P * A_u);
  r.max_eig_global =
      MaxEigenvalueSymmetric(A_u.transpose() * P_inf + P_inf * A_u);
  r.feasible = r.max_eig_prescribed < 0.0 && r.max_eig_uniting < 0.0 &&
               r.max_eig_global < 0.0;
  return r;
}

LmiSearchResult SearchLmiTripleHeuristic(const LinearSystem& sys,
                                         const Eigen::MatrixXd& K_o,
                                         const Eigen::MatrixXd& P_inf,
                                         int max_trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = sys.n();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  // Gain that makes P_inf a Lyapunov matrix whenever one of this form exists.
  const Eigen::MatrixXd K_inf = -sys.B().transpose() * P_inf;
  LmiSearchResult result;
  for (int trial = 0; trial < max_trials; ++trial) {
    result.trials = trial + 1;
    const double scale = 0.1 * (1.0 + trial % 10);
    const double t = (trial % 2 == 0) ? 0.0 : 1.0;
    Eigen::MatrixXd K_u = (1.0 - t) * K_o + t * (1.0 + trial / 10) * K_inf;
    if (trial > 0) {
      for (Eigen::Index i = 0; i < K_u.size(); ++i) {
        K_u.data()[i] += scale * normal(rng);
      }
    }
    const Eigen::MatrixXd A_o = sys.A() + sys.B() * K_o;
    const Eigen::MatrixXd A_u = sys.A() + sys.B() * K_u;
    if (!IsHurwitz(A_u) || !IsHurwitz(A_o)) continue;
    const Eigen::MatrixXd X_o = SolveLyapunovGeneral(A_o, I).P;
    const Eigen::MatrixXd X_u = SolveLyapunovGeneral(A_u, I).P;
    for (double lambda : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const Eigen::MatrixXd P = lambda * X_o + (1.0 - lambda) * X_u;
      if (MinEigenvalueSymmetric(P) <= 0.0) continue;
      const LmiReport report = CheckLmiTriple(sys, K_o, K_u, P, P_inf);
      if (report.feasible) {
        result.found = true;
        result.K_u = K_u;
        result.P = P;
        result.report = report;
        return result;
      }
    }
  }
  return result;
}

}  // namespace clfsynth
