// Command-line front end for the clfsynth library.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "clfsynth/commands.hpp"
#include "clfsynth/io.hpp"
#include "clfsynth/problem.hpp"

namespace {

using clfsynth::CommandOutcome;
using clfsynth::Json;

int Emit(const CommandOutcome& outcome, const std::string& out_path) {
  clfsynth::WriteOutcomeFiles(outcome);
  const std::string text = outcome.report.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
  } else {
    clfsynth::WriteTextFile(out_path, text);
  }
  return clfsynth::ToExitCode(outcome.status);
}

int Fail(const std::exception& e) {
  const Json j = clfsynth::ExceptionToJson(e);
  std::cerr << j.dump(2) << "\n";
  return clfsynth::ToExitCode(clfsynth::ClassifyException(e));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controller synthesis from control Lyapunov functions"};
  app.require_subcommand(1);

  std::string input;
  std::string out;

  auto* care = app.add_subcommand("care", "Solve a continuous algebraic Riccati equation");
  care->add_option("input", input, "JSON with A, B, Q, R")->required();
  care->add_option("-o,--output", out, "Write the report here instead of stdout");

  auto* synth = app.add_subcommand("synth", "Blended synthesis with a prescribed local gain");
  synth->add_option("problem", input, "Problem JSON")->required();
  synth->add_option("-o,--output", out, "Report path");

  auto* invopt = app.add_subcommand("invopt", "Inverse-optimal cost reconstruction");
  invopt->require_subcommand(1);
  auto* build = invopt->add_subcommand("build", "Construct (q, r) for a problem");
  auto* verify = invopt->add_subcommand("verify-hjb", "Check the HJB residual at samples");
  auto* cost = invopt->add_subcommand("cost", "Evaluate J(x0) along the optimal closed loop");
  std::string trace_prefix;
  for (auto* sub : {build, verify, cost}) {
    sub->add_option("input", input, "Problem JSON or a build record")->required();
    sub->add_option("-o,--output", out, "Report path");
  }
  cost->add_option("--trace", trace_prefix,
                   "Write cost traces to <prefix><k>.csv (t, x..., u..., q, integrand)");

  auto* backstep = app.add_subcommand("backstep", "Backstepping CLF for a strict-feedback system");
  backstep->add_option("problem", input, "Problem JSON")->required();
  backstep->add_option("-o,--output", out, "Report path");

  auto* orbital = app.add_subcommand("orbital", "Inverse-optimal orbital transfer controller");
  std::string params_path;
  std::string cost_path;
  std::string x0_text;
  std::string report_path;
  double dt = 0.01;
  double T = 200.0;
  std::optional<double> terminal_tol;
  std::string csv_path;
  orbital->add_option("--params", params_path, "JSON with p0 and mu_grav");
  orbital->add_option("--cost", cost_path, "JSON with Q0, R_r, R_theta, R_h, rho1, rho2");
  orbital->add_option("--x0", x0_text, "Absolute initial state chi1,...,chi6");
  orbital->add_option("--dt", dt, "Integration step")->capture_default_str();
  orbital->add_option("--T", T, "Horizon")->capture_default_str();
  orbital->add_option("--out", csv_path, "CSV trace path");
  orbital->add_option("--report", report_path, "Report path (stdout otherwise)");
  orbital->add_option("--terminal-tol", terminal_tol, "Required final distance to s*");

  auto* run = app.add_subcommand("run", "Execute a run configuration");
  run->add_option("config", input, "Run configuration JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : clfsynth::ToExitCode(clfsynth::ExitStatus::kValidation);
  }

  try {
    const std::optional<std::uint64_t> seed = clfsynth::SeedFromEnvironment();
    if (care->parsed()) {
      return Emit(clfsynth::CareCommand(clfsynth::ReadJsonFile(input)), out);
    }
    if (synth->parsed()) {
      return Emit(clfsynth::SynthCommand(clfsynth::ReadJsonFile(input), seed), out);
    }
    if (build->parsed()) {
      return Emit(clfsynth::InvoptBuildCommand(clfsynth::ReadJsonFile(input), seed), out);
    }
    if (verify->parsed()) {
      return Emit(clfsynth::InvoptVerifyHjbCommand(clfsynth::ReadJsonFile(input), seed),
                  out);
    }
    if (cost->parsed()) {
      return Emit(
          clfsynth::InvoptCostCommand(clfsynth::ReadJsonFile(input), seed, trace_prefix),
          out);
    }
    if (backstep->parsed()) {
      return Emit(clfsynth::BackstepCommand(clfsynth::ReadJsonFile(input), seed), out);
    }
    if (orbital->parsed()) {
      clfsynth::OrbitalCommandArgs args;
      if (!params_path.empty()) args.params = clfsynth::ReadJsonFile(params_path);
      if (!cost_path.empty()) args.cost = clfsynth::ReadJsonFile(cost_path);
      if (!x0_text.empty()) args.x0 = clfsynth::ParseVectorList(x0_text);
      args.dt = dt;
      args.T = T;
      args.seed = seed;
      args.terminal_tol = terminal_tol;
      args.out = csv_path;
      return Emit(clfsynth::OrbitalCommand(args), report_path);
    }
    if (run->parsed()) {
      const clfsynth::RunConfig config =
          clfsynth::ParseRunConfig(clfsynth::ReadJsonFile(input), seed);
      const CommandOutcome outcome = clfsynth::ExecuteRun(config);
      clfsynth::WriteOutcomeFiles(outcome);
      std::cout << outcome.report.dump(2) << "\n";
      return clfsynth::ToExitCode(outcome.status);
    }
  } catch (const std::exception& e) {
    return Fail(e);
  }
  return clfsynth::ToExitCode(clfsynth::ExitStatus::kValidation);
}
