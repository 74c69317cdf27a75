#include "clfsynth/clf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clfsynth/errors.hpp"

namespace clfsynth {

LinearSystem LinearizeAtOrigin(int n, const ControlAffineSystem::Drift& drift,
                               const ControlAffineSystem::InputMap& input_map) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd A = CentralJacobian(drift, zero, 1e-6);
  return LinearSystem::Unchecked(std::move(A), input_map(zero));
}

ControlAffineSystem::ControlAffineSystem(
    int n, int p, Drift drift, InputMap input_map,
    std::optional<LinearSystem> linearization, std::string name)
    : n_(n),
      p_(p),
      drift_(std::move(drift)),
      input_map_(std::move(input_map)),
      linearization_(n > 0 && p > 0 && drift_ && input_map_
                         ? LinearizeAtOrigin(n, drift_, input_map_)
                         : throw ValidationError(
                               "system needs n, p > 0 and both callables")),
      name_(std::move(name)) {
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  const Eigen::VectorXd a0 = drift_(zero);
  const Eigen::MatrixXd b0 = input_map_(zero);
  if (a0.size() != n_ || b0.rows() != n_ || b0.cols() != p_) {
    throw DimensionError("drift or input map returns the wrong shape");
  }
  if (a0.norm() > 1e-12) {
    throw ValidationError("the origin is not an equilibrium: |a(0)| = " +
                          std::to_string(a0.norm()));
  }
  if (linearization) {
    const LinearSystem& fd = linearization_;
    if (linearization->n() != n_ || linearization->p() != p_) {
      throw DimensionError("supplied linearization has the wrong shape");
    }
    const double tol_a = 1e-5 * (1.0 + fd.A().cwiseAbs().maxCoeff());
    const double tol_b = 1e-5 * (1.0 + fd.B().cwiseAbs().maxCoeff());
    if ((linearization->A() - fd.A()).cwiseAbs().maxCoeff() > tol_a ||
        (linearization->B() - fd.B()).cwiseAbs().maxCoeff() > tol_b) {
      throw ValidationError(
          "supplied linearization disagrees with finite differences");
    }
    linearization_ = *linearization;
  }
}

Eigen::VectorXd ControlAffineSystem::Field(const Eigen::VectorXd& x,
                                           const Eigen::VectorXd& u) const {
  return drift_(x) + input_map_(x) * u;
}

Clf::Clf(int n, Value value, Gradient gradient, Eigen::MatrixXd hessian_origin)
    : n_(n),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      hessian_origin_(std::move(hessian_origin)) {
  if (!value_) throw ValidationError("Clf needs a value callable");
  if (hessian_origin_.rows() != n_ || hessian_origin_.cols() != n_) {
    throw DimensionError("hessian_origin must be n x n");
  }
  if (!IsSymmetric(hessian_origin_) ||
      MinEigenvalueSymmetric(hessian_origin_) <= 0.0) {
    throw ValidationError("hessian_origin must be symmetric positive definite");
  }
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n_);
  if (std::abs(value_(zero)) > 1e-12) {
    throw ValidationError("V(0) must be 0");
  }
  const Eigen::MatrixXd fd = CentralHessian(value_, zero, 1e-4);
  if (RelativeMaxError(fd, hessian_origin_) > 1e-3) {
    throw ValidationError(
        "finite-difference Hessian of V at 0 does not match hessian_origin");
  }
}

Eigen::VectorXd Clf::gradient(const Eigen::VectorXd& x) const {
  if (gradient_) return gradient_(x);
  return CentralGradient(value_, x, 1e-6);
}

Clf LocalQuadraticClf(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols()) throw DimensionError("P must be square");
  if (!IsSymmetric(P) || MinEigenvalueSymmetric(P) <= 0.0) {
    throw ValidationError("P must be symmetric positive definite");
  }
  const Eigen::MatrixXd Ps = 0.5 * (P + P.transpose());
  return Clf(
      static_cast<int>(P.rows()),
      [Ps](const Eigen::VectorXd& x) { return x.dot(Ps * x); },
      [Ps](const Eigen::VectorXd& x) -> Eigen::VectorXd { return 2.0 * Ps * x; },
      2.0 * Ps);
}

LieDerivatives ComputeLieDerivatives(const Clf& V,
                                     const ControlAffineSystem& sys,
                                     const Eigen::VectorXd& x) {
  const Eigen::VectorXd g = V.gradient(x);
  LieDerivatives out;
  out.La = g.dot(sys.drift(x));
  out.Lb = g.transpose() * sys.input_map(x);
  return out;
}

double DefaultZeroTol(const Eigen::VectorXd& gradient) {
  return 1e-7 * (1.0 + gradient.norm());
}

double DecreaseMargin(double La) { return 1e-9 * (1.0 + std::abs(La)); }

ArtsteinReport CheckArtsteinSampled(const Clf& V, const ControlAffineSystem& sys,
                                    const Box& region, int n_samples,
                                    double zero_tol, std::uint64_t seed) {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (!region.ContainsOrigin()) {
    throw ValidationError("the region must contain the origin");
  }
  ArtsteinReport report;
  for (const Eigen::VectorXd& x : SampleBox(region, n_samples, seed)) {
    if (x.norm() == 0.0) continue;
    ++report.checked;
    const Eigen::VectorXd g = V.gradient(x);
    const double La = g.dot(sys.drift(x));
    const double lb_norm = (g.transpose() * sys.input_map(x)).norm();
    const double tol = zero_tol > 0.0 ? zero_tol : DefaultZeroTol(g);
    if (lb_norm <= tol) {
      ++report.near_kernel;
      if (!(La < 0.0)) report.violations.push_back(x);
    }
  }
  return report;
}

ClfBoxReport CheckClfOnBox(const Clf& V, const Box& region, int n_samples,
                           std::uint64_t seed) {
  ClfBoxReport report;
  report.min_value_nonzero = std::numeric_limits<double>::infinity();
  report.positive = true;
  for (const Eigen::VectorXd& x : SampleBox(region, n_samples, seed)) {
    const double r2 = x.squaredNorm();
    if (r2 == 0.0) continue;
    ++report.checked;
    const double v = V.value(x);
    if (!(v > 0.0)) report.positive = false;
    report.min_value_nonzero = std::min(report.min_value_nonzero, v / r2);
  }
  report.box_level =
      BoxLevel(V, region, std::max(200, n_samples / 4), seed + 1);
  return report;
}

double BoxLevel(const Clf& V, const Box& region, int n_boundary,
                std::uint64_t seed) {
  double level = std::numeric_limits<double>::infinity();
  for (const Eigen::VectorXd& x : SampleBoxBoundary(region, n_boundary, seed)) {
    level = std::min(level, V.value(x));
  }
  return level;
}

LevelScan ScanLevels(const Clf& V, const DecreaseFunctional& decrease,
                     std::vector<double> level_grid, const Box& region,
                     int n_samples, std::uint64_t seed) {
  if (level_grid.empty()) throw ValidationError("level grid is empty");
  std::sort(level_grid.begin(), level_grid.end());
  if (level_grid.front() <= 0.0) {
    throw ValidationError("levels must be positive");
  }
  const double box_level =
      BoxLevel(V, region, std::max(500, n_samples / 4), seed + 1);

  struct Sample {
    double v;
    Eigen::VectorXd x;
  };
  std::vector<Sample> samples;
  for (Eigen::VectorXd& x : SampleBox(region, n_samples, seed)) {
    if (x.norm() == 0.0) continue;
    const double v = V.value(x);
    if (v <= level_grid.back()) samples.push_back({v, std::move(x)});
  }
  std::sort(samples.begin(), samples.end(),
            [](const Sample& a, const Sample& b) { return a.v < b.v; });

  LevelScan scan;
  scan.levels = level_grid;
  scan.status.assign(level_grid.size(), LevelStatus::kFailed);
  scan.samples_per_level.assign(level_grid.size(), 0);
  std::vector<Eigen::VectorXd> first_failure;
  std::size_t checked_upto = 0;
  bool failed = false;
  bool any_pass = false;
  for (std::size_t i = 0; i < level_grid.size(); ++i) {
    const double level = level_grid[i];
    if (failed) continue;  // supersets of a failing level fail as well
    if (level > box_level) {
      for (std::size_t j = i; j < level_grid.size(); ++j) {
        scan.status[j] = LevelStatus::kBeyondBox;
      }
      break;
    }
    std::size_t end = checked_upto;
    while (end < samples.size() && samples[end].v <= level) ++end;
    scan.samples_per_level[i] = static_cast<int>(end);
    if (end == 0) {
      scan.status[i] = LevelStatus::kEmpty;
      continue;
    }
    for (std::size_t k = checked_upto; k < end; ++k) {
      const DecreaseSample d = decrease(samples[k].x);
      if (!(d.value < -DecreaseMargin(d.La))) {
        first_failure.push_back(samples[k].x);
      }
    }
    checked_upto = end;
    if (first_failure.empty()) {
      scan.status[i] = LevelStatus::kPassed;
      scan.r0 = level;
      any_pass = true;
    } else {
      scan.status[i] = LevelStatus::kFailed;
      failed = true;
    }
  }
  if (!any_pass) {
    throw CertificateError(
        "no level of the grid passes the decrease test; refine the grid "
        "toward 0 or check that V is locally compatible with the gain",
        std::move(first_failure));
  }
  return scan;
}

LevelScan FindR0(const Clf& V, const ControlAffineSystem& sys,
                 const Eigen::MatrixXd& K_o, std::vector<double> level_grid,
                 const Box& region, int n_samples, std::uint64_t seed) {
  if (K_o.rows() != sys.p() || K_o.cols() != sys.n()) {
    throw DimensionError("K_o must be p x n");
  }
  const LinearSystem& lin = sys.linearization();
  if (!IsHurwitz(lin.A() + lin.B() * K_o)) {
    throw ValidationError("A + B K_o is not Hurwitz");
  }
  auto decrease = [&](const Eigen::VectorXd& x) {
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
    return DecreaseSample{lie.La + (lie.Lb * (K_o * x)).value(), lie.La};
  };
  return ScanLevels(V, decrease, std::move(level_grid), region, n_samples,
                    seed);
}

std::vector<double> GeometricLevelGrid(double r_max, double ratio, int count) {
  if (!(r_max > 0.0) || !(ratio > 0.0 && ratio < 1.0) || count < 1) {
    throw ValidationError("invalid geometric grid parameters");
  }
  std::vector<double> grid(count);
  double level = r_max;
  for (int k = count - 1; k >= 0; --k) {
    grid[k] = level;
    level *= ratio;
  }
  return grid;
}

BlendProfile::BlendProfile(double r0) : r0_(r0) {
  if (!(r0 > 0.0) || !std::isfinite(r0)) {
    throw ValidationError("blend level r0 must be positive");
  }
}

double BlendProfile::operator()(double s) const {
  const double half = 0.5 * r0_;
  if (s <= half) return 0.0;
  if (s >= r0_) return 1.0;
  const double t = (s - half) / half;
  return std::clamp(t * t * (3.0 - 2.0 * t), 0.0, 1.0);
}

double BlendProfile::Derivative(double s) const {
  const double half = 0.5 * r0_;
  if (s <= half || s >= r0_) return 0.0;
  const double t = (s - half) / half;
  return 6.0 * t * (1.0 - t) / half;
}

BlendProfile MakeBlendProfile(double r0) { return BlendProfile(r0); }

}  // namespace clfsynth
