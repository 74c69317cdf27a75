#include "clfsynth/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>

#include "clfsynth/demos.hpp"
#include "clfsynth/errors.hpp"
#include "clfsynth/orbital.hpp"
#include "clfsynth/polynomial.hpp"

namespace clfsynth {

std::string ToString(ExitStatus status) {
  switch (status) {
    case ExitStatus::kPass:
      return "pass";
    case ExitStatus::kValidation:
      return "validation_error";
    case ExitStatus::kCertificate:
      return "certificate_failure";
    case ExitStatus::kDivergence:
      return "divergence";
  }
  return "unknown";
}

int ToExitCode(ExitStatus status) { return static_cast<int>(status); }

ExitStatus Worst(ExitStatus a, ExitStatus b) {
  auto rank = [](ExitStatus s) {
    switch (s) {
      case ExitStatus::kPass:
        return 0;
      case ExitStatus::kCertificate:
        return 1;
      case ExitStatus::kDivergence:
        return 2;
      case ExitStatus::kValidation:
        return 3;
    }
    return 0;
  };
  return rank(a) >= rank(b) ? a : b;
}

ExitStatus ClassifyException(const std::exception& e) {
  if (dynamic_cast<const CertificateError*>(&e)) {
    return ExitStatus::kCertificate;
  }
  if (dynamic_cast<const DivergenceError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) ||
      dynamic_cast<const ConvergenceError*>(&e)) {
    return ExitStatus::kDivergence;
  }
  return ExitStatus::kValidation;
}

Json StatesToJson(const std::vector<Eigen::VectorXd>& states,
                  std::size_t limit) {
  Json out = Json::array();
  for (std::size_t i = 0; i < states.size() && i < limit; ++i) {
    out.push_back(VectorToJson(states[i]));
  }
  return out;
}

Json ExceptionToJson(const std::exception& e) {
  Json out;
  std::string kind = "error";
  if (auto* c = dynamic_cast<const CertificateError*>(&e)) {
    kind = "certificate";
    out["states"] = StatesToJson(c->states());
  } else if (auto* d = dynamic_cast<const DivergenceError*>(&e)) {
    kind = "divergence";
    out["time"] = d->time();
    out["last_state"] = VectorToJson(d->last_state());
  } else if (auto* dom = dynamic_cast<const DomainError*>(&e)) {
    kind = "domain";
    out["time"] = dom->time();
  } else if (auto* conv = dynamic_cast<const ConvergenceError*>(&e)) {
    kind = "convergence";
    out["last_residual"] = conv->last_residual();
  } else if (auto* m = dynamic_cast<const ModeError*>(&e)) {
    kind = "mode";
    out["mode"] = {m->mode_real(), m->mode_imag()};
  } else if (dynamic_cast<const DimensionError*>(&e)) {
    kind = "dimension";
  } else if (dynamic_cast<const NoSolutionError*>(&e)) {
    kind = "no_solution";
  } else if (dynamic_cast<const ValidationError*>(&e)) {
    kind = "validation";
  }
  Json result{{"error", kind}, {"message", e.what()}};
  for (auto& [key, value] : out.items()) result[key] = value;
  result["exit_code"] = ToExitCode(ClassifyException(e));
  return result;
}

std::optional<std::uint64_t> SeedFromEnvironment() {
  const char* text = std::getenv("CLFSYNTH_SEED");
  if (text == nullptr || *text == '\0') return std::nullopt;
  const std::string s(text);
  std::uint64_t seed = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ValidationError("CLFSYNTH_SEED must be an unsigned integer, got '" +
                          s + "'");
  }
  return seed;
}

ResolvedSystem ResolveSystem(const Json& j) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "strict_feedback_demo") {
      StrictFeedbackSystem sfs = StrictFeedbackDemoSystem();
      return ResolvedSystem{name, sfs.Full(), sfs};
    }
    if (name == "orbital_reduced") {
      StrictFeedbackSystem sfs =
          OrbitalReducedStrictFeedback(OrbitalParams::Make(1.0, 1.0));
      return ResolvedSystem{name, sfs.Full(), sfs};
    }
    return ResolvedSystem{name, MakeRegisteredSystem(name), std::nullopt};
  }
  if (!j.is_object()) {
    throw ValidationError("'system' must be a registry name or an object");
  }
  const PolynomialSystemSpec spec = ParsePolynomialSystem(j);
  if (spec.structure == "strict_feedback") {
    StrictFeedbackSystem sfs = ToStrictFeedback(spec);
    return ResolvedSystem{spec.name, sfs.Full(), sfs};
  }
  if (spec.structure == "feedforward") {
    return ResolvedSystem{spec.name, ToFeedforward(spec).Full(), std::nullopt};
  }
  return ResolvedSystem{spec.name, ToControlAffine(spec), std::nullopt};
}

namespace {

Eigen::MatrixXd MatrixField(const Json& j, const char* key, int rows, int cols,
                            const Eigen::MatrixXd& fallback) {
  if (!j.contains(key)) return fallback;
  Eigen::MatrixXd M = MatrixFromJson(j.at(key));
  if (M.rows() != rows || M.cols() != cols) {
    throw DimensionError(std::string("'") + key + "' must be " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  return M;
}

ClfSource ParseClfSource(const Json& j) {
  const std::string s = j.value("clf", std::string("quadratic"));
  if (s == "quadratic") return ClfSource::kQuadratic;
  if (s == "backstepping") return ClfSource::kBackstepping;
  throw ValidationError("'clf' must be 'quadratic' or 'backstepping'");
}

}  // namespace

Problem ProblemFromJson(const Json& j,
                        std::optional<std::uint64_t> seed_override) {
  if (!j.is_object()) throw ValidationError("problem must be a JSON object");
  if (!j.contains("system")) throw ValidationError("problem needs 'system'");
  try {
    Problem pr{ResolveSystem(j.at("system")),
               {}, {}, {}, {}, false, ClfSource::kQuadratic,
               Box::Symmetric(1, 1.0), {}, 4000, 10000, 0, {}};
    const int n = pr.system.full.n();
    const int p = pr.system.full.p();
    pr.linear_core = LinearCoreConfigFromJson(
        j.contains("linear_core") ? j.at("linear_core") : Json());
    pr.Q = MatrixField(j, "Q", n, n, Eigen::MatrixXd::Identity(n, n));
    pr.R = MatrixField(j, "R", p, p, Eigen::MatrixXd::Identity(p, p));
    const QuadraticWeights weights(pr.Q, pr.R);
    const LinearSystem& lin = pr.system.full.linearization();

    if (j.contains("K_o")) {
      pr.K_o = MatrixField(j, "K_o", p, n, Eigen::MatrixXd());
      const Eigen::MatrixXd A_cl = lin.A() + lin.B() * pr.K_o;
      if (!IsHurwitz(A_cl, pr.linear_core)) {
        throw ValidationError("A + B K_o is not Hurwitz");
      }
      pr.P = SolveLyapunov(A_cl,
                           pr.Q + pr.K_o.transpose() * pr.R * pr.K_o,
                           pr.linear_core)
                 .P;
    } else {
      const LinearSystem checked(lin.A(), lin.B(), pr.linear_core);
      const RiccatiCertificate cert =
          SolveCare(checked, weights, pr.linear_core);
      pr.P = cert.P;
      pr.K_o = LqrGain(cert.P, lin.B(), pr.R);
      pr.K_o_from_riccati = true;
    }
    if (j.contains("P")) {
      pr.P = MatrixField(j, "P", n, n, Eigen::MatrixXd());
      if (!IsSymmetric(pr.P) || !(MinEigenvalueSymmetric(pr.P) > 0.0)) {
        throw ValidationError("'P' must be symmetric positive definite");
      }
    }
    pr.clf = ParseClfSource(j);
    if (pr.clf == ClfSource::kBackstepping && !pr.system.strict_feedback) {
      throw ValidationError(
          "clf 'backstepping' needs a system in strict-feedback form");
    }
    if (j.contains("working_box")) {
      pr.region = BoxFromJson(j.at("working_box"), n);
    } else {
      pr.region = Box::Symmetric(n, 1.0);
    }
    if (j.contains("grid")) {
      pr.grid = j.at("grid").get<std::vector<double>>();
      for (double level : pr.grid) {
        if (!(level > 0.0) || !std::isfinite(level)) {
          throw ValidationError("grid levels must be positive and finite");
        }
      }
      std::sort(pr.grid.begin(), pr.grid.end());
    }
    pr.n_samples = j.value("n_samples", pr.n_samples);
    pr.n_check = j.value("n_check", pr.n_check);
    if (pr.n_samples < 1 || pr.n_check < 1) {
      throw ValidationError("n_samples and n_check must be positive");
    }
    pr.seed = j.value("seed", std::uint64_t{0});
    if (seed_override) pr.seed = *seed_override;
    return pr;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed problem: ") + e.what());
  }
}

SynthesisOptions ProblemSynthesisOptions(const Problem& problem) {
  SynthesisOptions opts;
  opts.region = problem.region;
  opts.level_grid = problem.grid;
  opts.n_samples = problem.n_samples;
  opts.seed = problem.seed;
  return opts;
}

ClfConstruction BuildProblemClf(const Problem& problem) {
  if (problem.clf == ClfSource::kQuadratic) {
    return ClfConstruction{LocalQuadraticClf(problem.P), std::nullopt};
  }
  BacksteppingOptions opts;
  opts.lyapunov_rhs =
      problem.Q + problem.K_o.transpose() * problem.R * problem.K_o;
  opts.synthesis = ProblemSynthesisOptions(problem);
  BacksteppingResult res =
      BacksteppingSynthesize(*problem.system.strict_feedback, problem.K_o, opts);
  Clf V = res.V;
  return ClfConstruction{std::move(V), std::move(res)};
}

}  // namespace clfsynth
