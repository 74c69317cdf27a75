#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"

namespace clfsynth {

enum class LawKind { kLinearGain, kSontag, kBlended, kOptimalFeedback };

std::string ToString(LawKind kind);

/// Constituents a law was assembled from, kept for reporting.
struct LawMetadata {
  std::optional<Eigen::MatrixXd> K_o;
  std::optional<double> r0;
  std::string description;
};

/// A state-feedback map x ↦ u with map(0) = 0.
class FeedbackLaw {
 public:
  using Map = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

  FeedbackLaw(LawKind kind, int n, int p, Map map, LawMetadata metadata = {});

  LawKind kind() const { return kind_; }
  int n() const { return n_; }
  int p() const { return p_; }
  const LawMetadata& metadata() const { return metadata_; }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return map_(x); }
  const Map& map() const { return map_; }

 private:
  LawKind kind_;
  int n_;
  int p_;
  Map map_;
  LawMetadata metadata_;
};

/// u = K x.
FeedbackLaw LinearFeedback(const Eigen::MatrixXd& K);

/// Sontag's universal formula for (V, sys) without any precondition check.
/// u = 0 when ‖L_bV‖ ≤ zero_tol, otherwise
/// u = −[(L_aV + √(L_aV² + ‖L_bV‖⁴)) / ‖L_bV‖²] L_bVᵀ.
/// A negative zero_tol selects 1e-14·(1 + ‖∇V‖), small enough that the
/// formula keeps its small-control behaviour at tiny states.
FeedbackLaw SontagFormula(const Clf& V, const ControlAffineSystem& sys,
                          double zero_tol = -1.0);

/// The scalar coefficient c with u = −c·L_bVᵀ, evaluated without
/// cancellation. Requires lb_sq = ‖L_bV‖² > 0.
double SontagCoefficient(double La, double lb_sq);

/// Sontag controller gated by a sampled Artstein check on the working box.
/// Throws CertificateError carrying the violating states.
FeedbackLaw SontagController(const Clf& V, const ControlAffineSystem& sys,
                             const Box& region, int n_samples,
                             std::uint64_t seed = 0);

/// α_o(x) = ρ(V(x)) α_∞(x) + (1 − ρ(V(x))) K_o x.
FeedbackLaw BlendedController(const FeedbackLaw& alpha_inf,
                              const Eigen::MatrixXd& K_o, const Clf& V,
                              const BlendProfile& rho);

/// Central-difference Jacobian of the law at 0. Richardson extrapolation
/// (steps h and h/2) removes the O(h²) term when requested.
Eigen::MatrixXd LocalGain(const FeedbackLaw& law, double h,
                          bool richardson = false);

struct DecreaseReport {
  int checked = 0;
  double max_vdot = -std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXd> violations;
  bool ok() const { return violations.empty(); }
};

/// Samples where L_aV + L_bV·u(x) ≥ −δ (origin excluded). Samples are
/// restricted to {V ≤ level_cap} when a cap is given.
DecreaseReport VerifyDecrease(const Clf& V, const ControlAffineSystem& sys,
                              const FeedbackLaw& law, const Box& region,
                              int n_samples, std::uint64_t seed = 0,
                              std::optional<double> level_cap = std::nullopt);

struct SeamDiagnostics {
  double max_quotient_seam = 0.0;    // |Δu|/|Δx| straddling V = r0/2, V = r0
  double max_quotient_global = 0.0;  // same on random nearby pairs
  int probes = 0;
  bool continuous = false;
};

/// Difference quotients of the law across the blend seams compared with a
/// sampled global Lipschitz estimate.
SeamDiagnostics CheckBlendSeams(const FeedbackLaw& law, const Clf& V,
                                const BlendProfile& rho, const Box& region,
                                int n_probes, std::uint64_t seed = 0);

/// Everything a blended synthesis produces.
struct SynthesisResult {
  FeedbackLaw alpha_inf;
  FeedbackLaw law;
  LevelScan scan;
  BlendProfile rho;
  ArtsteinReport artstein;
};

/// Geometric grid from the box level of V down by 0.85 per step (80 levels).
std::vector<double> DefaultLevelGrid(const Clf& V, const Box& region,
                                     std::uint64_t seed = 0);

struct SynthesisOptions {
  Box region;
  /// Candidate levels for r0; DefaultLevelGrid when empty.
  std::vector<double> level_grid;
  int n_samples = 4000;
  std::uint64_t seed = 0;
};

/// Artstein check, r0 search, Sontag's formula and the blend in one call.
SynthesisResult SynthesizeBlended(const Clf& V, const ControlAffineSystem& sys,
                                  const Eigen::MatrixXd& K_o,
                                  const SynthesisOptions& options);

}  // namespace clfsynth
