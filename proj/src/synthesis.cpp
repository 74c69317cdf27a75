#include "clfsynth/synthesis.hpp"

#include <algorithm>
#include <cmath>

#include "clfsynth/errors.hpp"

namespace clfsynth {

std::string ToString(LawKind kind) {
  switch (kind) {
    case LawKind::kLinearGain:
      return "linear_gain";
    case LawKind::kSontag:
      return "sontag";
    case LawKind::kBlended:
      return "blended";
    case LawKind::kOptimalFeedback:
      return "optimal_feedback";
  }
  return "unknown";
}

FeedbackLaw::FeedbackLaw(LawKind kind, int n, int p, Map map,
                         LawMetadata metadata)
    : kind_(kind),
      n_(n),
      p_(p),
      map_(std::move(map)),
      metadata_(std::move(metadata)) {
  if (n <= 0 || p <= 0 || !map_) {
    throw ValidationError("feedback law needs n, p > 0 and a map");
  }
  const Eigen::VectorXd u0 = map_(Eigen::VectorXd::Zero(n));
  if (u0.size() != p) throw DimensionError("law output must have size p");
  if (u0.norm() > 1e-12) throw ValidationError("law must vanish at 0");
}

FeedbackLaw LinearFeedback(const Eigen::MatrixXd& K) {
  LawMetadata meta;
  meta.K_o = K;
  meta.description = "u = K x";
  return FeedbackLaw(
      LawKind::kLinearGain, static_cast<int>(K.cols()),
      static_cast<int>(K.rows()),
      [K](const Eigen::VectorXd& x) -> Eigen::VectorXd { return K * x; },
      std::move(meta));
}

double SontagCoefficient(double La, double lb_sq) {
  const double s = std::hypot(La, lb_sq);
  if (La > 0.0) return (La + s) / lb_sq;
  return lb_sq / (s - La);
}

FeedbackLaw SontagFormula(const Clf& V, const ControlAffineSystem& sys,
                          double zero_tol) {
  if (V.n() != sys.n()) throw DimensionError("V and system differ in size");
  auto map = [V, sys, zero_tol](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    const Eigen::VectorXd g = V.gradient(x);
    const double La = g.dot(sys.drift(x));
    const Eigen::RowVectorXd Lb = g.transpose() * sys.input_map(x);
    const double tol = zero_tol >= 0.0 ? zero_tol : 1e-14 * (1.0 + g.norm());
    const double lb_norm = Lb.norm();
    if (lb_norm <= tol || lb_norm == 0.0) {
      return Eigen::VectorXd::Zero(sys.p());
    }
    return -SontagCoefficient(La, lb_norm * lb_norm) * Lb.transpose();
  };
  LawMetadata meta;
  meta.description = "Sontag universal formula";
  return FeedbackLaw(LawKind::kSontag, sys.n(), sys.p(), std::move(map),
                     std::move(meta));
}

FeedbackLaw SontagController(const Clf& V, const ControlAffineSystem& sys,
                             const Box& region, int n_samples,
                             std::uint64_t seed) {
  ArtsteinReport report = CheckArtsteinSampled(V, sys, region, n_samples,
                                               0.0, seed);
  if (!report.ok()) {
    throw CertificateError("Artstein condition violated at " +
                               std::to_string(report.violations.size()) +
                               " sampled states",
                           std::move(report.violations));
  }
  return SontagFormula(V, sys);
}

FeedbackLaw BlendedController(const FeedbackLaw& alpha_inf,
                              const Eigen::MatrixXd& K_o, const Clf& V,
                              const BlendProfile& rho) {
  if (K_o.rows() != alpha_inf.p() || K_o.cols() != alpha_inf.n() ||
      V.n() != alpha_inf.n()) {
    throw DimensionError("blend constituents have mismatched dimensions");
  }
  auto map = [alpha_inf, K_o, V, rho](const Eigen::VectorXd& x) {
    const double weight = rho(V.value(x));
    if (weight == 0.0) return Eigen::VectorXd(K_o * x);
    if (weight == 1.0) return alpha_inf(x);
    return Eigen::VectorXd(weight * alpha_inf(x) + (1.0 - weight) * (K_o * x));
  };
  LawMetadata meta;
  meta.K_o = K_o;
  meta.r0 = rho.r0();
  meta.description = "rho(V) alpha_inf + (1 - rho(V)) K_o x";
  return FeedbackLaw(LawKind::kBlended, alpha_inf.n(), alpha_inf.p(),
                     std::move(map), std::move(meta));
}

namespace {

Eigen::MatrixXd CentralGainAtZero(const FeedbackLaw& law, double h) {
  const int n = law.n();
  Eigen::MatrixXd J(law.p(), n);
  Eigen::VectorXd probe = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    probe(j) = h;
    const Eigen::VectorXd up = law(probe);
    probe(j) = -h;
    const Eigen::VectorXd um = law(probe);
    probe(j) = 0.0;
    if (!up.allFinite() || !um.allFinite()) {
      throw ValidationError("law is not finite at the probe points");
    }
    J.col(j) = (up - um) / (2.0 * h);
  }
  return J;
}

}  // namespace

Eigen::MatrixXd LocalGain(const FeedbackLaw& law, double h, bool richardson) {
  if (!(h > 0.0)) throw ValidationError("probe step must be positive");
  const Eigen::MatrixXd J = CentralGainAtZero(law, h);
  if (!richardson) return J;
  return (4.0 * CentralGainAtZero(law, 0.5 * h) - J) / 3.0;
}

DecreaseReport VerifyDecrease(const Clf& V, const ControlAffineSystem& sys,
                              const FeedbackLaw& law, const Box& region,
                              int n_samples, std::uint64_t seed,
                              std::optional<double> level_cap) {
  DecreaseReport report;
  for (const Eigen::VectorXd& x : SampleBox(region, n_samples, seed)) {
    if (x.norm() == 0.0) continue;
    if (level_cap && V.value(x) > *level_cap) continue;
    ++report.checked;
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
    const double vdot = lie.La + (lie.Lb * law(x)).value();
    report.max_vdot = std::max(report.max_vdot, vdot);
    if (!(vdot < -DecreaseMargin(lie.La))) report.violations.push_back(x);
  }
  return report;
}

namespace {

// Point on the ray through x where V equals `level`, if V(x) exceeds it.
std::optional<Eigen::VectorXd> RayLevelPoint(const Clf& V,
                                             const Eigen::VectorXd& x,
                                             double level) {
  if (!(V.value(x) > level)) return std::nullopt;
  double lo = 0.0;
  double hi = 1.0;
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (lo + hi);
    (V.value(mid * x) > level ? hi : lo) = mid;
  }
  return Eigen::VectorXd(0.5 * (lo + hi) * x);
}

double Quotient(const FeedbackLaw& law, const Eigen::VectorXd& a,
                const Eigen::VectorXd& b) {
  return (law(a) - law(b)).norm() / (a - b).norm();
}

}  // namespace

SeamDiagnostics CheckBlendSeams(const FeedbackLaw& law, const Clf& V,
                                const BlendProfile& rho, const Box& region,
                                int n_probes, std::uint64_t seed) {
  SeamDiagnostics diag;
  const std::vector<Eigen::VectorXd> points =
      SampleBox(region, n_probes, seed);
  for (const Eigen::VectorXd& x : points) {
    if (x.norm() == 0.0) continue;
    const Eigen::VectorXd dir = x / x.norm();
    const double step = 1e-6 * (1.0 + x.norm());
    diag.max_quotient_global = std::max(
        diag.max_quotient_global, Quotient(law, x + step * dir, x - step * dir));
    for (double level : {0.5 * rho.r0(), rho.r0()}) {
      auto seam = RayLevelPoint(V, x, level);
      if (!seam) continue;
      const double ds = 1e-6 * (1.0 + seam->norm());
      diag.max_quotient_seam =
          std::max(diag.max_quotient_seam,
                   Quotient(law, *seam + ds * dir, *seam - ds * dir));
      ++diag.probes;
    }
  }
  diag.continuous =
      diag.max_quotient_seam <= 10.0 * diag.max_quotient_global + 1e-9;
  return diag;
}

std::vector<double> DefaultLevelGrid(const Clf& V, const Box& region,
                                     std::uint64_t seed) {
  const double top = BoxLevel(V, region, 500, seed + 1);
  if (!(top > 0.0) || !std::isfinite(top)) {
    throw ValidationError("V has no positive level inside the box");
  }
  return GeometricLevelGrid(top, 0.85, 80);
}

SynthesisResult SynthesizeBlended(const Clf& V, const ControlAffineSystem& sys,
                                  const Eigen::MatrixXd& K_o,
                                  const SynthesisOptions& options) {
  ArtsteinReport artstein = CheckArtsteinSampled(
      V, sys, options.region, options.n_samples, 0.0, options.seed);
  if (!artstein.ok()) {
    throw CertificateError("Artstein condition violated; Sontag controller "
                           "refused",
                           artstein.violations);
  }
  std::vector<double> grid = options.level_grid;
  if (grid.empty()) grid = DefaultLevelGrid(V, options.region, options.seed);
  LevelScan scan = FindR0(V, sys, K_o, std::move(grid), options.region,
                          options.n_samples, options.seed);
  FeedbackLaw alpha_inf = SontagFormula(V, sys);
  BlendProfile rho(scan.r0);
  FeedbackLaw law = BlendedController(alpha_inf, K_o, V, rho);
  return SynthesisResult{std::move(alpha_inf), std::move(law), std::move(scan),
                         rho, std::move(artstein)};
}

}  // namespace clfsynth
