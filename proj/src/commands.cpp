#include "clfsynth/commands.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "clfsynth/errors.hpp"
#include "clfsynth/integrate.hpp"
#include "clfsynth/inverse_opt.hpp"
#include "clfsynth/numdiff.hpp"
#include "clfsynth/orbital.hpp"

namespace clfsynth {

void WriteOutcomeFiles(const CommandOutcome& outcome) {
  for (const auto& [path, text] : outcome.files) WriteTextFile(path, text);
}

namespace {

class CheckLog {
 public:
  void Fail(const std::string& check, const std::string& detail,
            ExitStatus status = ExitStatus::kCertificate) {
    failures_.push_back({{"check", check}, {"detail", detail}});
    status_ = Worst(status_, status);
  }
  const Json& failures() const { return failures_; }
  ExitStatus status() const { return status_; }

  void Finish(Json& report) const {
    report["failures"] = failures_;
    report["status"] = ToString(status_);
    report["exit_code"] = ToExitCode(status_);
  }

 private:
  Json failures_ = Json::array();
  ExitStatus status_ = ExitStatus::kPass;
};

Eigen::MatrixXd RequiredMatrix(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw ValidationError(std::string("missing matrix '") + key + "'");
  }
  return MatrixFromJson(j.at(key));
}

double PositiveNumber(const Json& j, const char* key, double fallback) {
  double v = fallback;
  try {
    v = j.value(key, fallback);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("'") + key + "' must be a number");
  }
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string("'") + key + "' must be positive");
  }
  return v;
}

Json ScanToJson(const LevelScan& scan) {
  int passed = 0;
  for (LevelStatus s : scan.status) passed += s == LevelStatus::kPassed;
  return {{"r0", scan.r0},
          {"levels_tested", scan.levels.size()},
          {"levels_passed", passed}};
}

Json ArtsteinToJson(const ArtsteinReport& rep) {
  return {{"checked", rep.checked},
          {"near_kernel", rep.near_kernel},
          {"violations", rep.violations.size()},
          {"examples", StatesToJson(rep.violations)},
          {"pass", rep.ok()}};
}

Json GainCheck(const FeedbackLaw& law, const Eigen::MatrixXd& K_o, double tol,
               CheckLog& log) {
  const Eigen::MatrixXd measured = LocalGain(law, 1e-4, true);
  const double err = (measured - K_o).cwiseAbs().maxCoeff();
  const bool pass = err <= tol;
  if (!pass) {
    log.Fail("gain", "local gain differs from K_o by " + FormatDouble(err));
  }
  return {{"expected", MatrixToJson(K_o)},
          {"measured", MatrixToJson(measured)},
          {"max_abs_error", err},
          {"tolerance", tol},
          {"pass", pass}};
}

Json DecreaseCheck(const Clf& V, const ControlAffineSystem& sys,
                   const FeedbackLaw& law, const Box& region, int n,
                   std::uint64_t seed, CheckLog& log) {
  const double cap = BoxLevel(V, region, 1000, seed + 1);
  const DecreaseReport rep =
      VerifyDecrease(V, sys, law, region, n, seed + 7, cap);
  const bool pass = rep.ok() && rep.checked > 0;
  if (rep.checked == 0) {
    log.Fail("decrease", "no samples inside the certified level set");
  } else if (!rep.ok()) {
    log.Fail("decrease", std::to_string(rep.violations.size()) +
                             " samples without strict decrease");
  }
  return {{"level_cap", cap},
          {"checked", rep.checked},
          {"max_vdot", rep.max_vdot},
          {"violations", rep.violations.size()},
          {"examples", StatesToJson(rep.violations)},
          {"pass", pass}};
}

Json SeamsToJson(const SeamDiagnostics& d) {
  return {{"probes", d.probes},
          {"max_quotient_seam", d.max_quotient_seam},
          {"max_quotient_global", d.max_quotient_global},
          {"continuous", d.continuous}};
}

Json SynthesisToJson(const SynthesisResult& s, const Clf& V,
                     const ControlAffineSystem& sys, const Problem& pr,
                     double gain_tol, CheckLog& log) {
  Json out;
  out["r0"] = s.scan.r0;
  out["scan"] = ScanToJson(s.scan);
  out["artstein"] = ArtsteinToJson(s.artstein);
  out["gain_check"] = GainCheck(s.law, pr.K_o, gain_tol, log);
  out["decrease"] =
      DecreaseCheck(V, sys, s.law, pr.region, pr.n_check, pr.seed, log);
  out["seams"] = SeamsToJson(
      CheckBlendSeams(s.law, V, s.rho, pr.region, 200, pr.seed + 5));
  return out;
}

Json ScalingToJson(const LevelScaling& mu) {
  return {{"r0", mu.r0()},
          {"ladder", mu.ladder()},
          {"knots", mu.knots()},
          {"knot_values", mu.knot_values()},
          {"covered_level", mu.covered_level()}};
}

struct InverseBuild {
  Problem problem;
  Clf V;
  std::optional<LevelScan> scan;
  std::optional<LevelConstants> constants;
  InverseOptimalCost cost;
  FeedbackLaw law;
};

InverseBuild BuildInverse(Problem pr, const Json* supplied) {
  ClfConstruction c = BuildProblemClf(pr);
  const ControlAffineSystem& sys = pr.system.full;
  std::optional<LevelScan> scan;
  std::optional<LevelConstants> constants;
  double r0 = 0.0;
  std::vector<double> ladder;
  if (supplied != nullptr) {
    try {
      r0 = supplied->at("r0").get<double>();
      ladder = supplied->at("ladder").get<std::vector<double>>();
    } catch (const Json::exception& e) {
      throw ValidationError(std::string("malformed inverse_optimal block: ") +
                            e.what());
    }
  } else {
    const std::vector<double> grid =
        pr.grid.empty() ? DefaultLevelGrid(c.V, pr.region, pr.seed) : pr.grid;
    scan = FindInverseOptimalR0(c.V, sys, pr.R, grid, pr.region, pr.n_samples,
                                pr.seed);
    LevelConstantOptions opts;
    opts.n_samples = pr.n_samples;
    opts.seed = pr.seed;
    constants =
        EstimateLevelConstants(c.V, sys, pr.R, scan->r0, pr.region, opts);
    r0 = scan->r0;
    ladder = constants->ladder;
  }
  InverseOptimalCost cost =
      BuildInverseCost(c.V, sys, pr.R, pr.Q, BuildMu(r0, ladder));
  FeedbackLaw law = OptimalFeedback(c.V, cost, sys);
  return InverseBuild{std::move(pr),      c.V,       std::move(scan),
                      std::move(constants), std::move(cost), std::move(law)};
}

// Options of the verify-hjb and cost subcommands: the problem fields of a
// build record, overridden by top-level keys.
Json CommandOptions(const Json& input) {
  if (!input.is_object() || !input.contains("problem")) return input;
  Json out = input.at("problem");
  for (auto& [key, value] : input.items()) {
    if (key != "problem" && key != "inverse_optimal" && key != "report") {
      out[key] = value;
    }
  }
  return out;
}

InverseBuild BuildInverseFromInput(const Json& input,
                                   std::optional<std::uint64_t> seed) {
  const bool is_record = input.is_object() && input.contains("problem");
  const Json& pj = is_record ? input.at("problem") : input;
  const Json* supplied = is_record && input.contains("inverse_optimal")
                             ? &input.at("inverse_optimal")
                             : nullptr;
  return BuildInverse(ProblemFromJson(pj, seed), supplied);
}

Json InverseToJson(const InverseBuild& b) {
  Json out = ScalingToJson(b.cost.scaling);
  if (b.scan) out["scan"] = ScanToJson(*b.scan);
  if (b.constants) {
    out["samples_per_annulus"] = b.constants->samples_per_annulus;
    out["doublings"] = b.constants->doublings;
    out["covered_annuli"] = b.constants->covered_annuli;
    out["warnings"] = b.constants->warnings;
  }
  return out;
}

// HJB residual, q > 0 and the behaviour of (q, r) at the origin.
Json HjbChecks(const InverseBuild& b, double hjb_tol, CheckLog& log) {
  const Problem& pr = b.problem;
  const ControlAffineSystem& sys = pr.system.full;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.n());

  const bool r_exact = (b.cost.r(zero).array() == pr.R.array()).all();
  if (!r_exact) log.Fail("r_origin", "r(0) differs from R");
  const Eigen::MatrixXd H = CentralHessian(b.cost.q, zero, 1e-4);
  const double hess_err = RelativeMaxError(H, 2.0 * pr.Q);
  if (!(hess_err <= 1e-3)) {
    log.Fail("q_hessian", "Hessian of q at 0 differs from 2Q by " +
                              FormatDouble(hess_err) + " (relative)");
  }

  double hjb_max = 0.0;
  double q_min = std::numeric_limits<double>::infinity();
  int checked = 0;
  std::vector<Eigen::VectorXd> q_bad;
  for (const Eigen::VectorXd& x :
       SampleBox(pr.region, pr.n_check, pr.seed + 11)) {
    if (x.norm() == 0.0) continue;
    ++checked;
    hjb_max = std::max(hjb_max, std::abs(HjbResidual(b.V, b.cost, sys, x)));
    const double q = b.cost.q(x);
    q_min = std::min(q_min, q);
    if (!(q > 0.0)) q_bad.push_back(x);
  }
  if (!(hjb_max <= hjb_tol)) {
    log.Fail("hjb", "HJB residual " + FormatDouble(hjb_max) +
                        " exceeds " + FormatDouble(hjb_tol));
  }
  if (!q_bad.empty()) {
    log.Fail("q_positive",
             std::to_string(q_bad.size()) + " samples with q(x) <= 0");
  }
  return {{"checked", checked},
          {"hjb_max_abs", hjb_max},
          {"hjb_tol", hjb_tol},
          {"q_min", q_min},
          {"q_nonpositive", q_bad.size()},
          {"q_nonpositive_examples", StatesToJson(q_bad)},
          {"q_hessian_rel_error", hess_err},
          {"r_origin_exact", r_exact}};
}

std::vector<std::string> NumberedNames(const std::string& stem, int count) {
  std::vector<std::string> out;
  for (int i = 1; i <= count; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

std::vector<Eigen::VectorXd> StateList(const Json& j, int n,
                                       const char* what) {
  if (!j.is_array()) {
    throw ValidationError(std::string("'") + what + "' must be a list");
  }
  std::vector<Eigen::VectorXd> out;
  for (const Json& item : j) {
    Eigen::VectorXd x = VectorFromJson(item);
    if (x.size() != n) {
      throw DimensionError(std::string("entries of '") + what + "' need " +
                           std::to_string(n) + " components");
    }
    if (!x.allFinite()) {
      throw ValidationError(std::string("'") + what + "' must be finite");
    }
    out.push_back(std::move(x));
  }
  return out;
}

FeedbackLaw ScaledLaw(const FeedbackLaw& law, double factor) {
  return FeedbackLaw(
      law.kind(), law.n(), law.p(),
      [law, factor](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return factor * law(x);
      });
}

std::string CsvText(const Trajectory& traj,
                    const std::vector<std::string>& states,
                    const std::vector<std::string>& inputs,
                    const std::vector<std::string>& annotations) {
  std::ostringstream os;
  WriteTrajectoryCsv(os, traj, states, inputs, annotations);
  return os.str();
}

}  // namespace

CommandOutcome CareCommand(const Json& input) {
  const LinearCoreConfig cfg = LinearCoreConfigFromJson(
      input.contains("linear_core") ? input.at("linear_core") : Json());
  const Eigen::MatrixXd Q = RequiredMatrix(input, "Q");
  const Eigen::MatrixXd R = RequiredMatrix(input, "R");
  const LinearSystem sys(RequiredMatrix(input, "A"), RequiredMatrix(input, "B"),
                         cfg);
  const QuadraticWeights w(Q, R);
  const RiccatiCertificate cert = SolveCare(sys, w, cfg);
  const Eigen::MatrixXd K = LqrGain(cert, sys, R);

  CheckLog log;
  const double bound = 1e-8 * (1.0 + Q.norm());
  if (!(cert.residual_norm <= bound)) {
    log.Fail("residual", "Riccati residual " +
                             FormatDouble(cert.residual_norm) + " exceeds " +
                             FormatDouble(bound));
  }
  const double min_eig = MinEigenvalueSymmetric(cert.P);
  if (!(min_eig > 0.0)) log.Fail("P_spd", "P is not positive definite");
  const bool hurwitz = IsHurwitz(sys.A() + sys.B() * K, cfg);
  if (!hurwitz) log.Fail("hurwitz", "A + B K_o is not Hurwitz");

  Json report;
  report["P"] = MatrixToJson(cert.P);
  report["K_o"] = MatrixToJson(K);
  report["residual_norm"] = cert.residual_norm;
  report["residual_bound"] = bound;
  report["newton_iterations"] = cert.newton_iterations;
  report["closed_loop_spectral_abscissa"] = cert.closed_loop_spectral_abscissa;
  report["P_min_eigenvalue"] = min_eig;
  report["hurwitz"] = hurwitz;
  log.Finish(report);
  return {report, log.status(), {}};
}

CommandOutcome SynthCommand(const Json& input,
                            std::optional<std::uint64_t> seed_override) {
  const Problem pr = ProblemFromJson(input, seed_override);
  const double gain_tol = PositiveNumber(input, "gain_tol", 1e-9);
  const ControlAffineSystem& sys = pr.system.full;
  ClfConstruction c = BuildProblemClf(pr);
  const SynthesisResult s =
      c.backstepping ? c.backstepping->synthesis
                     : SynthesizeBlended(c.V, sys, pr.K_o,
                                         ProblemSynthesisOptions(pr));
  CheckLog log;
  Json report;
  report["system"] = pr.system.name;
  report["seed"] = pr.seed;
  report["K_o"] = MatrixToJson(pr.K_o);
  report["P"] = MatrixToJson(pr.P);
  const Json synthesis = SynthesisToJson(s, c.V, sys, pr, gain_tol, log);
  report.update(synthesis);
  log.Finish(report);
  return {report, log.status(), {}};
}

CommandOutcome InvoptBuildCommand(const Json& input,
                                  std::optional<std::uint64_t> seed_override) {
  const InverseBuild b = BuildInverseFromInput(input, seed_override);
  CheckLog log;
  Json report;
  report["problem"] = input.contains("problem") ? input.at("problem") : input;
  report["inverse_optimal"] = {{"r0", b.cost.scaling.r0()},
                               {"ladder", b.cost.scaling.ladder()}};
  Json details;
  details["system"] = b.problem.system.name;
  details["seed"] = b.problem.seed;
  details["scaling"] = InverseToJson(b);
  details["checks"] = HjbChecks(b, 1e-10, log);
  details["gain_check"] = GainCheck(b.law, b.problem.K_o, 1e-9, log);
  report["report"] = details;
  log.Finish(report);
  return {report, log.status(), {}};
}

CommandOutcome InvoptVerifyHjbCommand(
    const Json& input, std::optional<std::uint64_t> seed_override) {
  const InverseBuild b = BuildInverseFromInput(input, seed_override);
  const double tol = PositiveNumber(CommandOptions(input), "hjb_tol", 1e-10);
  CheckLog log;
  Json report;
  report["system"] = b.problem.system.name;
  report["seed"] = b.problem.seed;
  report["scaling"] = ScalingToJson(b.cost.scaling);
  report["hjb"] = HjbChecks(b, tol, log);
  log.Finish(report);
  return {report, log.status(), {}};
}

CommandOutcome InvoptCostCommand(const Json& input,
                                 std::optional<std::uint64_t> seed_override,
                                 const std::string& trace_prefix) {
  const InverseBuild b = BuildInverseFromInput(input, seed_override);
  const ControlAffineSystem& sys = b.problem.system.full;
  const Json options = CommandOptions(input);
  if (!options.contains("x0")) throw ValidationError("cost needs 'x0' states");
  const std::vector<Eigen::VectorXd> states =
      StateList(options.at("x0"), sys.n(), "x0");
  CostOptions opts;
  opts.dt = PositiveNumber(options, "dt", opts.dt);
  opts.horizon = PositiveNumber(options, "horizon", opts.horizon);
  opts.keep_trace = !trace_prefix.empty();
  if (!(opts.horizon > opts.dt)) {
    throw ValidationError("horizon must exceed dt");
  }
  const double value_tol = PositiveNumber(options, "value_tol", 1e-3);
  std::vector<double> factors;
  if (options.contains("perturbations")) {
    try {
      factors = options.at("perturbations").get<std::vector<double>>();
    } catch (const Json::exception&) {
      throw ValidationError("'perturbations' must be a list of numbers");
    }
  }

  const std::vector<CostEstimate> results =
      EvaluateCostBatch(sys, b.V, b.cost, b.law, states, opts);
  CheckLog log;
  CommandOutcome outcome;
  Json runs = Json::array();
  for (std::size_t k = 0; k < states.size(); ++k) {
    const CostEstimate& est = results[k];
    const double v = b.V.value(states[k]);
    const double rel = v > 0.0 ? std::abs(est.J - v) / v : std::abs(est.J);
    const bool pass = rel <= value_tol;
    if (!pass) {
      log.Fail("value", "x0[" + std::to_string(k) + "]: |J - V|/V = " +
                            FormatDouble(rel));
    }
    Json entry{{"x0", VectorToJson(states[k])},
               {"J", est.J},
               {"V", v},
               {"integral", est.integral},
               {"tail", est.tail},
               {"tail_kind", ToString(est.tail_kind)},
               {"final_time", est.final_time},
               {"relative_error", rel},
               {"pass", pass}};
    if (!factors.empty()) {
      Json perturbed = Json::array();
      CostOptions popts = opts;
      popts.keep_trace = false;
      for (double f : factors) {
        const CostEstimate pe =
            EvaluateCost(sys, b.V, b.cost, ScaledLaw(b.law, f), states[k], popts);
        const bool increased = pe.J > est.J;
        if (!increased) {
          log.Fail("perturbation", "x0[" + std::to_string(k) + "], factor " +
                                       FormatDouble(f) +
                                       ": cost did not increase");
        }
        perturbed.push_back(
            {{"factor", f}, {"J", pe.J}, {"increased", increased}});
      }
      entry["perturbations"] = perturbed;
    }
    if (est.trace) {
      const std::string path = trace_prefix + std::to_string(k) + ".csv";
      outcome.files.emplace_back(
          path, CsvText(*est.trace, NumberedNames("x", sys.n()),
                        NumberedNames("u", sys.p()), {"q", "integrand"}));
      entry["trace"] = path;
    }
    runs.push_back(entry);
  }
  outcome.report["system"] = b.problem.system.name;
  outcome.report["value_tol"] = value_tol;
  outcome.report["runs"] = runs;
  log.Finish(outcome.report);
  outcome.status = log.status();
  return outcome;
}

CommandOutcome BackstepCommand(const Json& input,
                               std::optional<std::uint64_t> seed_override) {
  Problem pr = ProblemFromJson(input, seed_override);
  if (!pr.system.strict_feedback) {
    throw ValidationError("backstep needs a system in strict-feedback form");
  }
  pr.clf = ClfSource::kBackstepping;
  const double gain_tol = PositiveNumber(input, "gain_tol", 1e-9);
  const ClfConstruction c = BuildProblemClf(pr);
  const BacksteppingResult& res = *c.backstepping;
  const BacksteppingPartition& part = res.partition;

  CheckLog log;
  const double scale = std::max(1.0, res.P.cwiseAbs().maxCoeff());
  const double input_res =
      PartitionInputResidual(part, pr.system.strict_feedback->blocks().G);
  if (!(input_res <= 1e-12 * scale)) {
    log.Fail("partition", "T^T P B = " + FormatDouble(input_res));
  }
  const double hess_err =
      RelativeMaxError(c.V.hessian_origin(), 2.0 * res.P);
  if (!(hess_err <= 1e-3)) {
    log.Fail("hessian", "Hessian of V at 0 differs from 2P by " +
                            FormatDouble(hess_err) + " (relative)");
  }

  Json report;
  report["system"] = pr.system.name;
  report["seed"] = pr.seed;
  report["K_o"] = MatrixToJson(pr.K_o);
  report["P"] = MatrixToJson(res.P);
  report["partition"] = {
      {"P11", MatrixToJson(part.P11)},
      {"P12", VectorToJson(part.P12)},
      {"P22", part.P22},
      {"P_y", MatrixToJson(part.P_y)},
      {"T", MatrixToJson(part.T)},
      {"local_inner_gain", MatrixToJson(part.local_inner_gain)},
      {"input_residual", input_res},
      {"reassembly_error", RelativeMaxError(part.Reassemble(), res.P)}};
  report["hessian_rel_error"] = hess_err;
  report["synthesis"] =
      SynthesisToJson(res.synthesis, c.V, pr.system.full, pr, gain_tol, log);
  log.Finish(report);
  return {report, log.status(), {}};
}

CommandOutcome OrbitalCommand(const OrbitalCommandArgs& args) {
  if (!(args.dt > 0.0) || !(args.T > args.dt)) {
    throw ValidationError("need dt > 0 and T > dt");
  }
  OrbitalParams params;
  OrbitalCostConfig cfg;
  OrbitalSynthesisOptions opts;
  try {
    params = OrbitalParams::Make(args.params.value("p0", 1.0),
                                 args.params.value("mu_grav", 1.0));
    const Json& c = args.cost;
    if (c.contains("Q0")) {
      const Eigen::MatrixXd Q0 = MatrixFromJson(c.at("Q0"));
      if (Q0.rows() != 3 || Q0.cols() != 3) {
        throw DimensionError("Q0 must be 3x3");
      }
      cfg.Q0 = Q0;
    }
    cfg.R_r = c.value("R_r", cfg.R_r);
    cfg.R_theta = c.value("R_theta", cfg.R_theta);
    cfg.R_h = c.value("R_h", cfg.R_h);
    cfg.rho1 = c.value("rho1", cfg.rho1);
    cfg.rho2 = c.value("rho2", cfg.rho2);
    if (c.contains("working_box")) opts.region = BoxFromJson(c.at("working_box"), 6);
    opts.n_samples = c.value("n_samples", opts.n_samples);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed orbital input: ") + e.what());
  }
  for (double w : {cfg.R_r, cfg.R_theta, cfg.R_h, cfg.rho1, cfg.rho2}) {
    if (!(w > 0.0)) throw ValidationError("orbital weights must be positive");
  }
  if (opts.n_samples < 1) throw ValidationError("n_samples must be positive");
  if (args.seed) opts.seed = *args.seed;

  const Eigen::VectorXd s_star = OrbitalEquilibrium(params);
  Eigen::VectorXd x0 = args.x0;
  if (x0.size() == 0) {
    x0 = s_star + (Eigen::VectorXd(6) << 0.1, 0.05, -0.05, 0.1 * params.p0,
                   0.05, -0.05)
                      .finished();
  }
  if (x0.size() != 6) throw DimensionError("x0 needs 6 components");
  const OrbitalState s0 = OrbitalState::FromVector(x0);
  if (!s0.InDomain()) {
    throw ValidationError("x0 must satisfy 1 + chi2 > 0 and chi4 > 0");
  }

  const OrbitalController ctl = BuildOrbitalController(params, cfg, opts);
  const OrbitalSimulation sim =
      SimulateOrbital(params, ctl.V, ctl.law, s0, args.dt, args.T);

  CheckLog log;
  const double v0 = sim.trajectory.annotations.at("V").front();
  const bool monotone = sim.max_step_increase <= 1e-9 * v0;
  if (!monotone) {
    log.Fail("monotone", "V increased by " +
                             FormatDouble(sim.max_step_increase) +
                             " in one step");
  }
  if (args.terminal_tol && !(sim.terminal_error <= *args.terminal_tol)) {
    log.Fail("terminal", "final distance to s* is " +
                             FormatDouble(sim.terminal_error));
  }

  double hjb4 = 0.0;
  const Box box4{opts.region.lower.head(4), opts.region.upper.head(4)};
  for (const Eigen::VectorXd& z : SampleBox(box4, opts.n_samples, opts.seed + 11)) {
    if (z.norm() == 0.0) continue;
    try {
      hjb4 = std::max(hjb4, std::abs(HjbResidual(ctl.V_tilde, ctl.cost_tilde,
                                                 ctl.four_state, z)));
    } catch (const DomainError&) {
    }
  }

  Json report;
  report["params"] = {{"p0", params.p0}, {"mu_grav", params.mu_grav},
                      {"nu", params.nu}, {"eta", params.eta}};
  report["seed"] = opts.seed;
  report["equilibrium_residual"] =
      OrbitalDrift(params, s_star).norm();
  report["weights"] = {
      {"P0", MatrixToJson(ctl.weights.P0)},
      {"riccati_residual", ctl.weights.riccati_residual},
      {"Q_tilde_min_eigenvalue", MinEigenvalueSymmetric(ctl.weights.Q_tilde)}};
  report["v0_artstein"] = ArtsteinToJson(ctl.v0_artstein);
  report["scaling"] = ScalingToJson(ctl.cost.scaling);
  report["hjb4_max_abs"] = hjb4;
  report["simulation"] = {{"x0", VectorToJson(x0)},
                          {"dt", args.dt},
                          {"T", args.T},
                          {"steps", sim.trajectory.size()},
                          {"V0", v0},
                          {"max_vdot", sim.max_vdot},
                          {"max_step_increase", sim.max_step_increase},
                          {"monotone", monotone},
                          {"terminal_error", sim.terminal_error},
                          {"final_state",
                           VectorToJson(sim.trajectory.final_state())}};
  if (!args.out.empty()) report["simulation"]["csv"] = args.out;
  log.Finish(report);

  CommandOutcome outcome{report, log.status(), {}};
  if (!args.out.empty()) {
    outcome.files.emplace_back(
        args.out,
        CsvText(sim.trajectory, NumberedNames("chi", 6),
                {"u_r", "u_theta", "u_h"}, {"V", "Vdot"}));
  }
  return outcome;
}

namespace {

const std::vector<std::string>& AvailableChecks(const std::string& law) {
  static const std::vector<std::string> blended{"artstein", "gain", "decrease",
                                                "seams", "monotone"};
  static const std::vector<std::string> linear{"gain", "decrease", "monotone"};
  static const std::vector<std::string> optimal{"gain", "hjb", "decrease",
                                                "monotone", "value"};
  if (law == "blended") return blended;
  if (law == "linear") return linear;
  return optimal;
}

}  // namespace

RunConfig ParseRunConfig(const Json& config,
                         std::optional<std::uint64_t> seed_override) {
  if (!config.is_object()) throw ValidationError("config must be an object");
  if (!config.contains("system")) throw ValidationError("config needs 'system'");
  try {
    const Json controller = config.value("controller", Json::object());
    const Json sampling = config.value("sampling", Json::object());
    const Json integrator = config.value("integrator", Json::object());
    const Json tolerances = config.value("tolerances", Json::object());
    const Json output = config.value("output", Json::object());

    Json flat;
    flat["system"] = config.at("system");
    for (const char* key : {"K_o", "Q", "R", "P", "clf"}) {
      if (controller.contains(key)) flat[key] = controller.at(key);
    }
    if (sampling.contains("box")) flat["working_box"] = sampling.at("box");
    for (const char* key : {"grid", "n_samples", "n_check", "seed"}) {
      if (sampling.contains(key)) flat[key] = sampling.at(key);
    }
    if (config.contains("linear_core")) {
      flat["linear_core"] = config.at("linear_core");
    }
    RunConfig rc{.normalized = config,
                 .problem = ProblemFromJson(flat, seed_override)};

    rc.law_type = controller.value("type", std::string("blended"));
    if (rc.law_type != "blended" && rc.law_type != "linear" &&
        rc.law_type != "optimal") {
      throw ValidationError("controller type must be blended, linear or "
                            "optimal, got '" + rc.law_type + "'");
    }

    const std::string method = integrator.value("method", std::string("rk4"));
    if (method != "rk4") {
      throw ValidationError("unsupported integrator '" + method + "'");
    }
    rc.dt = PositiveNumber(integrator, "dt", rc.dt);
    rc.T = PositiveNumber(integrator, "T", rc.T);
    if (!(rc.T > rc.dt)) throw ValidationError("integrator needs T > dt");
    if (integrator.contains("terminal_set_level")) {
      rc.terminal_set_level =
          PositiveNumber(integrator, "terminal_set_level", 1.0);
    }

    rc.gain_tol = PositiveNumber(tolerances, "gain", rc.gain_tol);
    rc.monotone_tol = PositiveNumber(tolerances, "monotone", rc.monotone_tol);
    rc.hjb_tol = PositiveNumber(tolerances, "hjb", rc.hjb_tol);
    rc.value_tol = PositiveNumber(tolerances, "value", rc.value_tol);

    const auto& available = AvailableChecks(rc.law_type);
    if (config.contains("checks")) {
      for (const std::string& check :
           config.at("checks").get<std::vector<std::string>>()) {
        if (std::find(available.begin(), available.end(), check) ==
            available.end()) {
          throw ValidationError("check '" + check +
                                "' does not apply to a " + rc.law_type +
                                " controller");
        }
        rc.checks.insert(check);
      }
    } else {
      rc.checks.insert(available.begin(), available.end());
    }

    if (config.contains("initial_states")) {
      rc.initial_states = StateList(config.at("initial_states"),
                                    rc.problem.system.full.n(),
                                    "initial_states");
    }
    rc.report_path = output.value("report", std::string());
    rc.trajectory_prefix = output.value("trajectory_prefix", std::string());
    rc.normalized["sampling"]["seed"] = rc.problem.seed;
    rc.config_hash = HexDigest(Fnv1a64(rc.normalized.dump()));
    return rc;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
}

CommandOutcome ExecuteRun(const RunConfig& rc) {
  const Problem& pr = rc.problem;
  const ControlAffineSystem& sys = pr.system.full;
  auto wants = [&rc](const char* check) { return rc.checks.count(check) > 0; };
  CheckLog log;
  Json certs;

  std::optional<Clf> V;
  std::optional<FeedbackLaw> law;
  std::optional<InverseBuild> inverse;
  if (rc.law_type == "optimal") {
    inverse = BuildInverse(pr, nullptr);
    V = inverse->V;
    law = inverse->law;
    certs["inverse_optimal"] = InverseToJson(*inverse);
    if (wants("hjb")) certs["hjb"] = HjbChecks(*inverse, rc.hjb_tol, log);
  } else {
    ClfConstruction c = BuildProblemClf(pr);
    V = c.V;
    if (rc.law_type == "linear") {
      law = LinearFeedback(pr.K_o);
    } else {
      const SynthesisResult s =
          c.backstepping ? c.backstepping->synthesis
                         : SynthesizeBlended(c.V, sys, pr.K_o,
                                             ProblemSynthesisOptions(pr));
      law = s.law;
      certs["r0"] = s.scan.r0;
      certs["scan"] = ScanToJson(s.scan);
      if (wants("artstein")) certs["artstein"] = ArtsteinToJson(s.artstein);
      if (wants("seams")) {
        const SeamDiagnostics d =
            CheckBlendSeams(s.law, c.V, s.rho, pr.region, 200, pr.seed + 5);
        if (!d.continuous) {
          log.Fail("seams", "difference quotients jump across the blend");
        }
        certs["seams"] = SeamsToJson(d);
      }
    }
  }
  if (wants("gain")) certs["gain_check"] = GainCheck(*law, pr.K_o, rc.gain_tol, log);
  if (wants("decrease")) {
    certs["decrease"] =
        DecreaseCheck(*V, sys, *law, pr.region, pr.n_check, pr.seed, log);
  }

  CommandOutcome outcome;
  Json trajectories = Json::array();
  for (std::size_t k = 0; k < rc.initial_states.size(); ++k) {
    const Eigen::VectorXd& x0 = rc.initial_states[k];
    Json entry{{"index", k}, {"x0", VectorToJson(x0)}};
    try {
      StopPredicate stop;
      if (rc.terminal_set_level) {
        const double level = *rc.terminal_set_level;
        const Clf& v = *V;
        stop = [&v, level](double, const Eigen::VectorXd& x) {
          return v.value(x) <= level;
        };
      }
      Trajectory traj = Integrate(sys, *law, x0, rc.dt, rc.T, stop);
      AnnotateLyapunov(traj, *V, sys);
      const std::vector<double>& values = traj.annotations.at("V");
      const double inc = MaxRelativeIncrease(values, rc.monotone_tol);
      entry["steps"] = traj.size();
      entry["final_time"] = traj.times.back();
      entry["final_state"] = VectorToJson(traj.final_state());
      entry["V0"] = values.front();
      entry["V_final"] = values.back();
      entry["max_relative_increase"] = inc;
      if (wants("monotone")) {
        const bool monotone = inc <= 0.0;
        entry["monotone"] = monotone;
        if (!monotone) {
          log.Fail("monotone", "trajectory " + std::to_string(k) +
                                   ": V increased beyond tolerance");
        }
      }
      const std::string csv =
          CsvText(traj, NumberedNames("x", sys.n()),
                  NumberedNames("u", sys.p()), {"V", "Vdot"});
      entry["csv_fnv1a"] = HexDigest(Fnv1a64(csv));
      if (!rc.trajectory_prefix.empty()) {
        const std::string path =
            rc.trajectory_prefix + std::to_string(k) + ".csv";
        entry["csv"] = path;
        outcome.files.emplace_back(path, csv);
      }
    } catch (const DivergenceError& e) {
      entry["error"] = ExceptionToJson(e);
      log.Fail("trajectory", "trajectory " + std::to_string(k) + ": " +
                                 e.what(),
               ExitStatus::kDivergence);
    } catch (const DomainError& e) {
      entry["error"] = ExceptionToJson(e);
      log.Fail("trajectory", "trajectory " + std::to_string(k) + ": " +
                                 e.what(),
               ExitStatus::kDivergence);
    }
    trajectories.push_back(entry);
  }
  certs["trajectories"] = trajectories;

  if (inverse && wants("value") && !rc.initial_states.empty()) {
    CostOptions opts;
    opts.dt = rc.dt;
    opts.horizon = rc.T;
    Json values = Json::array();
    try {
      const std::vector<CostEstimate> est = EvaluateCostBatch(
          sys, *V, inverse->cost, *law, rc.initial_states, opts);
      for (std::size_t k = 0; k < est.size(); ++k) {
        const double v = V->value(rc.initial_states[k]);
        const double rel =
            v > 0.0 ? std::abs(est[k].J - v) / v : std::abs(est[k].J);
        const bool pass = rel <= rc.value_tol;
        if (!pass) {
          log.Fail("value", "x0[" + std::to_string(k) +
                                "]: |J - V|/V = " + FormatDouble(rel));
        }
        values.push_back({{"J", est[k].J},
                          {"V", v},
                          {"relative_error", rel},
                          {"tail_kind", ToString(est[k].tail_kind)},
                          {"pass", pass}});
      }
    } catch (const DivergenceError& e) {
      log.Fail("value", e.what(), ExitStatus::kDivergence);
    } catch (const DomainError& e) {
      log.Fail("value", e.what(), ExitStatus::kDivergence);
    }
    certs["value"] = values;
  }

  Json& report = outcome.report;
  report["config_hash"] = rc.config_hash;
  report["seed"] = pr.seed;
  report["system"] = {{"name", pr.system.name},
                      {"n", sys.n()},
                      {"p", sys.p()}};
  report["controller"] = {
      {"type", rc.law_type},
      {"clf", pr.clf == ClfSource::kBackstepping ? "backstepping" : "quadratic"},
      {"K_o", MatrixToJson(pr.K_o)},
      {"P", MatrixToJson(pr.P)}};
  report["checks"] = std::vector<std::string>(rc.checks.begin(), rc.checks.end());
  report["certificates"] = certs;
  log.Finish(report);
  outcome.status = log.status();
  if (!rc.report_path.empty()) {
    outcome.files.emplace_back(rc.report_path, report.dump(2) + "\n");
  }
  return outcome;
}

}  // namespace clfsynth
