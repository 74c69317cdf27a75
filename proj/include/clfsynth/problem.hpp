#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/io.hpp"
#include "clfsynth/linear_core.hpp"
#include "clfsynth/structured.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Process exit codes of the command-line tool.
enum class ExitStatus : int {
  kPass = 0,
  kValidation = 2,
  kCertificate = 3,
  kDivergence = 4,
};

std::string ToString(ExitStatus status);
int ToExitCode(ExitStatus status);
/// The more severe of two statuses (divergence > certificate > pass).
ExitStatus Worst(ExitStatus a, ExitStatus b);
/// Validation, dimension, mode and no-solution errors map to kValidation,
/// certificate failures to kCertificate, divergence, domain and convergence
/// failures to kDivergence.
ExitStatus ClassifyException(const std::exception& e);
/// {"error": kind, "message": what(), "states": [...]} for any exception.
Json ExceptionToJson(const std::exception& e);

/// CLFSYNTH_SEED when set; ValidationError if it is not an unsigned integer.
std::optional<std::uint64_t> SeedFromEnvironment();

/// A system resolved from its JSON description, with the strict-feedback
/// view attached when the system has one.
struct ResolvedSystem {
  std::string name;
  ControlAffineSystem full;
  std::optional<StrictFeedbackSystem> strict_feedback;
};

/// A registry name or a polynomial system object.
ResolvedSystem ResolveSystem(const Json& j);

/// Where the Lyapunov function comes from.
enum class ClfSource { kQuadratic, kBackstepping };

/// Fields shared by the synth, invopt and backstep commands:
/// {"system", "K_o" or ("Q", "R"), optional "P", "clf", "working_box",
///  "grid", "n_samples", "n_check", "seed", "linear_core"}.
struct Problem {
  ResolvedSystem system;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
  Eigen::MatrixXd K_o;
  /// Local certificate: the Riccati solution when K_o is derived from
  /// (Q, R), otherwise the Lyapunov solution for A + B K_o.
  Eigen::MatrixXd P;
  bool K_o_from_riccati = false;
  ClfSource clf = ClfSource::kQuadratic;
  Box region;
  std::vector<double> grid;
  int n_samples = 4000;
  int n_check = 10000;
  std::uint64_t seed = 0;
  LinearCoreConfig linear_core;
};

/// Parses and validates; the seed override replaces "seed" when given.
Problem ProblemFromJson(const Json& j,
                        std::optional<std::uint64_t> seed_override);

/// V together with the synthesis that produced it (backstepping builds both
/// at once).
struct ClfConstruction {
  Clf V;
  std::optional<BacksteppingResult> backstepping;
};

ClfConstruction BuildProblemClf(const Problem& problem);
SynthesisOptions ProblemSynthesisOptions(const Problem& problem);

/// Up to `limit` states as nested arrays.
Json StatesToJson(const std::vector<Eigen::VectorXd>& states,
                  std::size_t limit = 10);

}  // namespace clfsynth
