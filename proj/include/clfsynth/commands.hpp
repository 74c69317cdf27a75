#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/io.hpp"
#include "clfsynth/problem.hpp"

namespace clfsynth {

/// A JSON report, the status it implies and any files to write.
struct CommandOutcome {
  Json report;
  ExitStatus status = ExitStatus::kPass;
  /// (path, contents) pairs, written by WriteOutcomeFiles.
  std::vector<std::pair<std::string, std::string>> files;
};

void WriteOutcomeFiles(const CommandOutcome& outcome);

/// {"A", "B", "Q", "R", optional "linear_core"} → P, K_o and the Riccati
/// certificate. Fails when the residual exceeds 1e-8·(1 + ‖Q‖_F) or the
/// closed loop is not Hurwitz.
CommandOutcome CareCommand(const Json& input);

/// Blended synthesis for a problem file (see Problem) with the gain,
/// decrease and seam checks.
CommandOutcome SynthCommand(const Json& input,
                            std::optional<std::uint64_t> seed_override);

/// Inverse-optimal cost for the problem. The report carries an
/// "inverse_optimal" block {r0, ladder} and the original "problem", so it
/// can be fed back to the verify-hjb and cost subcommands.
CommandOutcome InvoptBuildCommand(const Json& input,
                                  std::optional<std::uint64_t> seed_override);
/// HJB residual, q > 0 and the origin checks at sampled states. The input
/// is a problem or the output of InvoptBuildCommand; optional "hjb_tol".
CommandOutcome InvoptVerifyHjbCommand(
    const Json& input, std::optional<std::uint64_t> seed_override);
/// J(x0) against V(x0) for "x0": [[...], ...], plus optional
/// "perturbations": [factors] that must strictly increase J. Optional
/// "dt", "horizon", "value_tol". When trace_prefix is set the cost traces
/// are returned as <prefix><k>.csv files.
CommandOutcome InvoptCostCommand(const Json& input,
                                 std::optional<std::uint64_t> seed_override,
                                 const std::string& trace_prefix = "");

/// Backstepping CLF and synthesis for a strict-feedback problem, with the
/// partition and Hessian checks.
CommandOutcome BackstepCommand(const Json& input,
                               std::optional<std::uint64_t> seed_override);

struct OrbitalCommandArgs {
  /// {"p0", "mu_grav"}; both default to 1.
  Json params = Json::object();
  /// {"Q0", "R_r", "R_theta", "R_h", "rho1", "rho2", optional
  /// "working_box", "n_samples"}.
  Json cost = Json::object();
  /// Absolute initial state; s* + (0.1, 0.05, −0.05, 0.1·p0, 0.05, −0.05)
  /// when empty.
  Eigen::VectorXd x0;
  double dt = 0.01;
  double T = 200.0;
  std::optional<std::uint64_t> seed;
  /// Required ‖χ(T) − s*‖ when set.
  std::optional<double> terminal_tol;
  /// Path of the CSV trace; no file when empty.
  std::string out;
};

CommandOutcome OrbitalCommand(const OrbitalCommandArgs& args);

/// Parsed and validated run configuration.
struct RunConfig {
  /// The configuration with the effective seed written back, hashed for
  /// the report.
  Json normalized;
  std::string config_hash{};
  Problem problem;
  std::string law_type = "blended";  // "blended", "linear" or "optimal"
  double dt = 1e-3;
  double T = 10.0;
  std::optional<double> terminal_set_level{};
  double gain_tol = 1e-9;
  double monotone_tol = 1e-9;
  double hjb_tol = 1e-10;
  double value_tol = 1e-3;
  std::set<std::string> checks{};
  std::vector<Eigen::VectorXd> initial_states{};
  std::string report_path{};
  std::string trajectory_prefix{};
};

/// Checks every field before any synthesis runs. Unknown systems, bad
/// shapes, non-positive tolerances, dt ≤ 0 or T ≤ dt are ValidationErrors.
RunConfig ParseRunConfig(const Json& config,
                         std::optional<std::uint64_t> seed_override);

/// Synthesis, the requested checks and closed-loop traces. Deterministic in
/// the configuration.
CommandOutcome ExecuteRun(const RunConfig& config);

}  // namespace clfsynth
