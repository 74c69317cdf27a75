#include "clfsynth/inverse_opt.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>

#include "clfsynth/errors.hpp"

namespace clfsynth {

LevelScaling::LevelScaling(double r0, std::vector<double> ladder)
    : r0_(r0), ladder_(std::move(ladder)) {
  if (!(r0_ > 0.0) || !std::isfinite(r0_)) {
    throw ValidationError("r0 must be positive");
  }
  if (ladder_.empty()) throw ValidationError("level ladder is empty");
  for (double l : ladder_) {
    if (!(l >= 1.0) || !std::isfinite(l)) {
      throw ValidationError("ladder entries must be finite and >= 1");
    }
  }
  // Knots r0/2, r0, 2r0, …, (K+1)r0. The value at k·r0 is the running
  // maximum of ℓ_1..ℓ_k, so the segment over annulus k starts at ≥ ℓ_k and
  // never decreases.
  const std::size_t K = ladder_.size();
  knots_.push_back(0.5 * r0_);
  values_.push_back(1.0);
  double running = 1.0;
  for (std::size_t k = 1; k <= K; ++k) {
    running = std::max(running, ladder_[k - 1]);
    knots_.push_back(static_cast<double>(k) * r0_);
    values_.push_back(running);
  }
  knots_.push_back(static_cast<double>(K + 1) * r0_);
  values_.push_back(running);
}

double LevelScaling::mu(double s) const {
  if (s <= knots_.front()) return 1.0;
  if (s >= knots_.back()) return values_.back();
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin());
  const double t = (s - knots_[i - 1]) / (knots_[i] - knots_[i - 1]);
  return values_[i - 1] + t * (values_[i] - values_[i - 1]);
}

double LevelScaling::covered_level() const { return knots_.back(); }

LevelScaling BuildMu(double r0, std::vector<double> ladder) {
  return LevelScaling(r0, std::move(ladder));
}

namespace {

// L_bV R⁻¹ L_bVᵀ.
double WeightedInputNorm(const Eigen::RowVectorXd& Lb,
                         const Eigen::LLT<Eigen::MatrixXd>& R_llt) {
  return Lb.dot(R_llt.solve(Lb.transpose()).transpose());
}

Eigen::LLT<Eigen::MatrixXd> FactorSpd(const Eigen::MatrixXd& M,
                                      const char* what) {
  if (M.rows() != M.cols() || !IsSymmetric(M)) {
    throw ValidationError(std::string(what) + " must be symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw ValidationError(std::string(what) + " must be positive definite");
  }
  return llt;
}

// Compass search for the largest ratio 4·L_aV / (L_bV R⁻¹ L_bVᵀ) near x0,
// restricted to the annulus lo ≤ V ≤ hi inside the box. x ends at the peak.
double RefineMaxRatio(const Clf& V, const ControlAffineSystem& sys,
                      const Eigen::LLT<Eigen::MatrixXd>& R_llt,
                      const Box& region, double lo, double hi,
                      Eigen::VectorXd& x, double best) {
  auto ratio = [&](const Eigen::VectorXd& y) {
    if (!region.Contains(y) || y.norm() == 0.0) return -1.0;
    const double v = V.value(y);
    if (v < lo || v > hi) return -1.0;
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, y);
    const double w = WeightedInputNorm(lie.Lb, R_llt);
    if (!(w > 0.0)) return -1.0;
    return 4.0 * lie.La / w;
  };
  const Eigen::VectorXd width = region.upper - region.lower;
  double step = 0.05;
  while (step > 1e-7) {
    bool improved = false;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      for (double sign : {1.0, -1.0}) {
        Eigen::VectorXd y = x;
        y(i) += sign * step * width(i);
        const double r = ratio(y);
        if (r > best) {
          best = r;
          x = std::move(y);
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

LevelConstants EstimateLevelConstants(const Clf& V,
                                      const ControlAffineSystem& sys,
                                      const Eigen::MatrixXd& R, double r0,
                                      const Box& region,
                                      const LevelConstantOptions& options) {
  if (R.rows() != sys.p()) throw DimensionError("R must be p x p");
  if (!(r0 > 0.0)) throw ValidationError("r0 must be positive");
  if (options.k_max < 1 || options.n_samples < 1 ||
      !(options.safety_factor >= 1.0)) {
    throw ValidationError("invalid level-constant options");
  }
  const auto R_llt = FactorSpd(R, "R");
  const double box_level =
      BoxLevel(V, region, std::max(500, options.n_samples / 4), options.seed + 1);

  struct Eval {
    double La;
    double w;
    double v;
    Eigen::VectorXd x;
  };
  auto evaluate = [&](const std::vector<Eigen::VectorXd>& points) {
    std::vector<Eval> out;
    out.reserve(points.size());
    for (const Eigen::VectorXd& x : points) {
      if (x.norm() == 0.0) continue;
      const double v = V.value(x);
      if (v < r0) continue;
      const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
      out.push_back({lie.La, WeightedInputNorm(lie.Lb, R_llt), v, x});
    }
    return out;
  };
  const std::vector<Eval> fit = evaluate(
      SampleBox(region, options.n_samples, options.seed));
  const std::vector<Eval> fresh = evaluate(
      SampleBox(region, options.n_samples, options.seed ^ 0x9e3779b97f4a7c15ULL));

  double v_max = r0;
  for (const auto* evals : {&fit, &fresh}) {
    for (const Eval& e : *evals) v_max = std::max(v_max, e.v);
  }
  const int needed =
      std::max(1, static_cast<int>(std::ceil(v_max / r0)) - 1);
  const int k_last = std::min(needed, options.k_max);

  LevelConstants out;
  double previous = 1.0;
  for (int k = 1; k <= k_last; ++k) {
    const double lo = k * r0;
    const double hi = (k + 1) * r0;
    const bool inside = hi <= box_level;
    if (inside) out.covered_annuli = k;

    int count = 0;
    double max_ratio = -std::numeric_limits<double>::infinity();
    std::vector<std::pair<double, const Eval*>> ranked;
    for (const Eval& e : fit) {
      if (e.v < lo || e.v > hi) continue;
      ++count;
      if (e.w > 0.0) {
        const double r = 4.0 * e.La / e.w;
        max_ratio = std::max(max_ratio, r);
        if (r >= 1.0) ranked.emplace_back(r, &e);
      }
    }
    out.samples_per_annulus.push_back(count);
    const std::size_t starts = std::min<std::size_t>(ranked.size(), 5);
    std::partial_sort(ranked.begin(), ranked.begin() + starts, ranked.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    const double sampled_max = max_ratio;
    for (std::size_t i = 0; i < starts; ++i) {
      Eigen::VectorXd peak = ranked[i].second->x;
      const double refined = RefineMaxRatio(V, sys, R_llt, region, lo, hi,
                                            peak, ranked[i].first);
      if (refined <= options.max_refine_gain * sampled_max) {
        max_ratio = std::max(max_ratio, refined);
      } else {
        std::ostringstream msg;
        msg << "annulus " << k << ": ratio unbounded near x = ["
            << peak.transpose() << "], L_bV vanishes where L_aV > 0";
        out.warnings.push_back(msg.str());
      }
    }
    if (count == 0) {
      out.ladder.push_back(previous);
      out.doublings.push_back(0);
      out.warnings.push_back("annulus " + std::to_string(k) +
                             " has no samples; level constant carried over");
      continue;
    }
    double ell =
        max_ratio < 1.0 ? 1.0 : options.safety_factor * max_ratio;

    int doublings = 0;
    for (;;) {
      std::vector<Eigen::VectorXd> bad;
      for (const Eval& e : fresh) {
        if (e.v < lo || e.v > hi) continue;
        if (!(e.La - 0.25 * ell * e.w < -DecreaseMargin(e.La))) {
          bad.push_back(e.x);
        }
      }
      if (bad.empty()) break;
      if (doublings == options.max_doublings) {
        throw CertificateError(
            "level constant for annulus " + std::to_string(k) +
                " still fails on fresh samples after doubling; L_bV vanishes "
                "where L_aV >= 0",
            std::move(bad));
      }
      ell *= 2.0;
      ++doublings;
    }
    out.ladder.push_back(ell);
    out.doublings.push_back(doublings);
    previous = ell;
  }
  if (out.covered_annuli < k_last) {
    out.warnings.push_back(
        "annuli above " + std::to_string(out.covered_annuli) +
        " reach past the box; the certificate does not cover them");
  }
  if (needed > options.k_max) {
    out.warnings.push_back(
        "k_max = " + std::to_string(options.k_max) + " annuli stop below the "
        "largest sampled level " + std::to_string(v_max) +
        "; mu is frozen above " + std::to_string((k_last + 1) * r0));
  }
  return out;
}

LevelScan FindInverseOptimalR0(const Clf& V, const ControlAffineSystem& sys,
                               const Eigen::MatrixXd& R,
                               std::vector<double> level_grid,
                               const Box& region, int n_samples,
                               std::uint64_t seed) {
  if (R.rows() != sys.p()) throw DimensionError("R must be p x p");
  const auto R_llt = FactorSpd(R, "R");
  auto decrease = [&](const Eigen::VectorXd& x) {
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
    return DecreaseSample{lie.La - 0.25 * WeightedInputNorm(lie.Lb, R_llt),
                          lie.La};
  };
  return ScanLevels(V, decrease, std::move(level_grid), region, n_samples,
                    seed);
}

Eigen::MatrixXd ImpliedStateWeight(const LinearSystem& lin,
                                   const Eigen::MatrixXd& P,
                                   const Eigen::MatrixXd& R) {
  const auto R_llt = FactorSpd(R, "R");
  const Eigen::MatrixXd PB = P * lin.B();
  const Eigen::MatrixXd Q =
      PB * R_llt.solve(PB.transpose()) - (P * lin.A() + lin.A().transpose() * P);
  return 0.5 * (Q + Q.transpose());
}

InverseOptimalCost BuildInverseCost(const Clf& V, const ControlAffineSystem& sys,
                                    const Eigen::MatrixXd& R,
                                    const Eigen::MatrixXd& Q,
                                    const LevelScaling& scaling) {
  if (V.n() != sys.n() || Q.rows() != sys.n() || Q.cols() != sys.n() ||
      R.rows() != sys.p()) {
    throw DimensionError("V, Q, R and the system disagree in size");
  }
  const auto R_llt = FactorSpd(R, "R");
  FactorSpd(Q, "Q");
  const LinearSystem& lin = sys.linearization();
  const Eigen::MatrixXd P = 0.5 * V.hessian_origin();
  const double residual = CareResidual(lin.A(), lin.B(), Q, R, P);
  if (residual > 1e-6 * std::max(1.0, Q.norm())) {
    throw ValidationError(
        "half the Hessian of V at 0 does not solve the Riccati equation for "
        "(Q, R); residual " +
        std::to_string(residual));
  }

  InverseOptimalCost cost{nullptr, nullptr, R, Q, scaling};
  const Eigen::MatrixXd R_inv = R_llt.solve(Eigen::MatrixXd::Identity(
      R.rows(), R.cols()));
  cost.r = [R, V, scaling](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    return R / scaling.mu(V.value(x));
  };
  cost.q = [V, sys, R_inv, scaling](const Eigen::VectorXd& x) {
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
    const double mu = scaling.mu(V.value(x));
    return -lie.La + 0.25 * mu * lie.Lb.dot(R_inv * lie.Lb.transpose());
  };
  return cost;
}

double HjbResidual(const Clf& V, const InverseOptimalCost& cost,
                   const ControlAffineSystem& sys, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd r = cost.r(x);
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  if (llt.info() != Eigen::Success) {
    throw ValidationError("r(x) is not positive definite");
  }
  const LieDerivatives lie = ComputeLieDerivatives(V, sys, x);
  return cost.q(x) + lie.La - 0.25 * WeightedInputNorm(lie.Lb, llt);
}

FeedbackLaw OptimalFeedback(const Clf& V, const InverseOptimalCost& cost,
                            const ControlAffineSystem& sys) {
  auto map = [V, cost, sys](const Eigen::VectorXd& x) -> Eigen::VectorXd {
    Eigen::LLT<Eigen::MatrixXd> llt(cost.r(x));
    if (llt.info() != Eigen::Success) {
      throw ValidationError("r(x) is not positive definite");
    }
    const Eigen::RowVectorXd Lb = V.gradient(x).transpose() * sys.input_map(x);
    return -0.5 * llt.solve(Lb.transpose());
  };
  LawMetadata meta;
  meta.description = "u = -1/2 r(x)^-1 L_bV(x)^T";
  meta.r0 = cost.scaling.r0();
  return FeedbackLaw(LawKind::kOptimalFeedback, sys.n(), sys.p(),
                     std::move(map), std::move(meta));
}

std::string ToString(TailKind kind) {
  switch (kind) {
    case TailKind::kNone:
      return "none";
    case TailKind::kExactValue:
      return "exact_value";
    case TailKind::kLocalLqEstimate:
      return "local_lq_estimate";
  }
  return "unknown";
}

namespace {

double LocalTail(const ControlAffineSystem& sys, const InverseOptimalCost& cost,
                 const FeedbackLaw& law, const Eigen::VectorXd& x) {
  const Eigen::MatrixXd K = LocalGain(law, 1e-5, true);
  const LinearSystem& lin = sys.linearization();
  const Eigen::MatrixXd A_cl = lin.A() + lin.B() * K;
  const Eigen::MatrixXd W = cost.base_Q + K.transpose() * cost.base_R * K;
  if (!IsHurwitz(A_cl)) {
    throw DivergenceError("law is not locally stabilizing; no tail estimate",
                          x, std::numeric_limits<double>::quiet_NaN());
  }
  const LyapunovSolution S =
      SolveLyapunovGeneral(A_cl, 0.5 * (W + W.transpose()));
  return x.dot(S.P * x);
}

}  // namespace

CostEstimate EvaluateCost(const ControlAffineSystem& sys, const Clf& V,
                          const InverseOptimalCost& cost, const FeedbackLaw& law,
                          const Eigen::VectorXd& x0,
                          const CostOptions& options) {
  const int n = sys.n();
  if (x0.size() != n) throw DimensionError("x0 has the wrong size");
  if (!(options.dt > 0.0) || !(options.horizon > options.dt)) {
    throw ValidationError("cost evaluation needs dt > 0 and horizon > dt");
  }
  CostEstimate est;
  est.final_state = x0;
  const double v0 = V.value(x0);
  if (v0 == 0.0) {
    if (options.keep_trace) {
      Trajectory t;
      t.times = {0.0};
      t.states = {x0};
      t.inputs = {law(x0)};
      t.annotations["q"] = {0.0};
      t.annotations["integrand"] = {0.0};
      est.trace = std::move(t);
    }
    return est;
  }

  auto integrand = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                       double* q_out) {
    const double q = cost.q(x);
    if (q_out) *q_out = q;
    return q + u.dot(cost.r(x) * u);
  };
  const Rhs rhs = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd x = z.head(n);
    const Eigen::VectorXd u = law(x);
    Eigen::VectorXd dz(n + 1);
    dz.head(n) = sys.Field(x, u);
    dz(n) = integrand(x, u, nullptr);
    return dz;
  };

  Trajectory trace;
  auto record = [&](double t, const Eigen::VectorXd& x) {
    if (!options.keep_trace) return;
    const Eigen::VectorXd u = law(x);
    double q = 0.0;
    const double l = integrand(x, u, &q);
    trace.times.push_back(t);
    trace.states.push_back(x);
    trace.inputs.push_back(u);
    trace.annotations["q"].push_back(q);
    trace.annotations["integrand"].push_back(l);
  };

  Eigen::VectorXd z(n + 1);
  z << x0, 0.0;
  double t = 0.0;
  record(t, x0);
  const auto n_steps =
      static_cast<long long>(std::ceil(options.horizon / options.dt - 1e-9));
  const double terminal = options.terminal_fraction * v0;
  for (long long k = 1; k <= n_steps; ++k) {
    const double t_next =
        std::min(options.horizon, static_cast<double>(k) * options.dt);
    Eigen::VectorXd next = Rk4Step(rhs, z, t_next - t);
    if (!next.allFinite()) {
      throw DivergenceError("cost integration diverged", z.head(n), t);
    }
    z = std::move(next);
    t = t_next;
    record(t, z.head(n));
    if (V.value(z.head(n)) <= terminal) break;
  }

  const Eigen::VectorXd xT = z.head(n);
  const double vT = V.value(xT);
  const double required =
      options.terminal_level.value_or(0.5 * cost.scaling.r0());
  if (vT > required) {
    throw DivergenceError("terminal set not reached before the horizon", xT, t);
  }
  est.integral = z(n);
  est.final_time = t;
  est.final_state = xT;
  if (law.kind() == LawKind::kOptimalFeedback) {
    est.tail = vT;
    est.tail_kind = TailKind::kExactValue;
  } else {
    est.tail = LocalTail(sys, cost, law, xT);
    est.tail_kind = TailKind::kLocalLqEstimate;
  }
  est.J = est.integral + est.tail;
  if (options.keep_trace) est.trace = std::move(trace);
  return est;
}

std::vector<CostEstimate> EvaluateCostBatch(
    const ControlAffineSystem& sys, const Clf& V,
    const InverseOptimalCost& cost, const FeedbackLaw& law,
    const std::vector<Eigen::VectorXd>& initial_states,
    const CostOptions& options) {
  std::vector<std::future<CostEstimate>> jobs;
  jobs.reserve(initial_states.size());
  for (const Eigen::VectorXd& x0 : initial_states) {
    jobs.push_back(std::async(std::launch::async, [&, x0] {
      return EvaluateCost(sys, V, cost, law, x0, options);
    }));
  }
  std::vector<CostEstimate> out;
  out.reserve(jobs.size());
  for (auto& job : jobs) out.push_back(job.get());
  return out;
}

}  // namespace clfsynth
