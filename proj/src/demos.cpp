#include "clfsynth/demos.hpp"

#include <cmath>

#include "clfsynth/errors.hpp"

namespace clfsynth {

std::vector<std::string> RegisteredSystemNames() {
  return {"scalar_cubic", "strict_feedback_demo", "orbital",
          "orbital_reduced"};
}

ControlAffineSystem ScalarCubicSystem() {
  return ControlAffineSystem(
      1, 1,
      [](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return x.array().cube().matrix();
      },
      [](const Eigen::VectorXd&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Ones(1, 1);
      },
      std::nullopt, "scalar_cubic");
}

StrictFeedbackSystem StrictFeedbackDemoSystem() {
  return StrictFeedbackSystem(
      1,
      [](const Eigen::VectorXd& y) -> Eigen::VectorXd {
        return y.array().square().matrix();
      },
      [](const Eigen::VectorXd&) -> Eigen::VectorXd {
        return Eigen::VectorXd::Ones(1);
      },
      [](const Eigen::VectorXd& y, double x) { return x * y(0); },
      [](const Eigen::VectorXd&, double) { return 1.0; }, std::nullopt,
      "strict_feedback_demo");
}

ControlAffineSystem MakeRegisteredSystem(const std::string& name) {
  if (name == "scalar_cubic") return ScalarCubicSystem();
  if (name == "strict_feedback_demo") return StrictFeedbackDemoSystem().Full();
  const OrbitalParams params = OrbitalParams::Make(1.0, 1.0);
  if (name == "orbital") return OrbitalSystem(params);
  if (name == "orbital_reduced") {
    return OrbitalReducedStrictFeedback(params).Full();
  }
  throw ValidationError("unknown system '" + name + "'");
}

namespace {

BlendedDemo FromBackstepping(const std::string& name,
                             const StrictFeedbackSystem& sfs, const Box& region,
                             std::uint64_t seed) {
  const LinearSystem lin = sfs.Linearization();
  const int n = sfs.n();
  const Eigen::MatrixXd Q = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = Eigen::MatrixXd::Identity(1, 1);
  const RiccatiCertificate cert =
      SolveCare(LinearSystem(lin.A(), lin.B()), QuadraticWeights(Q, R));
  const Eigen::MatrixXd K = LqrGain(cert.P, lin.B(), R);

  BacksteppingOptions options;
  options.lyapunov_rhs = Q + K.transpose() * R * K;
  options.synthesis.region = region;
  options.synthesis.seed = seed;
  BacksteppingResult res = BacksteppingSynthesize(sfs, K, options);
  const double level = BoxLevel(res.V, region, 1000, seed + 1);
  return BlendedDemo{name,   sfs.Full(), res.V, K,     region,
                     std::move(res.synthesis), level,  res.P, Q, R};
}

}  // namespace

BlendedDemo ScalarCubicDemo(std::uint64_t seed) {
  ControlAffineSystem sys = ScalarCubicSystem();
  const Eigen::MatrixXd P = Eigen::MatrixXd::Ones(1, 1);
  const Eigen::MatrixXd K = -Eigen::MatrixXd::Ones(1, 1);
  Clf V = LocalQuadraticClf(P);
  const Box region = Box::Symmetric(1, 3.0);
  SynthesisOptions options;
  options.region = region;
  options.seed = seed;
  SynthesisResult synth = SynthesizeBlended(V, sys, K, options);
  const double level = BoxLevel(V, region, 1000, seed + 1);
  return BlendedDemo{"scalar_cubic", std::move(sys),
                     std::move(V),   K,
                     region,         std::move(synth),
                     level,          P,
                     Eigen::MatrixXd::Ones(1, 1), Eigen::MatrixXd::Ones(1, 1)};
}

BlendedDemo StrictFeedbackDemo(std::uint64_t seed) {
  return FromBackstepping("strict_feedback_demo", StrictFeedbackDemoSystem(),
                          Box::Symmetric(2, 1.5), seed);
}

BlendedDemo ReducedOrbitalDemo(std::uint64_t seed) {
  return FromBackstepping(
      "orbital_reduced",
      OrbitalReducedStrictFeedback(OrbitalParams::Make(1.0, 1.0)),
      Box::Symmetric(2, 0.5), seed);
}

std::vector<BlendedDemo> AllBlendedDemos(std::uint64_t seed) {
  std::vector<BlendedDemo> out;
  out.push_back(ScalarCubicDemo(seed));
  out.push_back(StrictFeedbackDemo(seed));
  out.push_back(ReducedOrbitalDemo(seed));
  return out;
}

InverseOptimalDemo BuildInverseOptimalDemo(const BlendedDemo& demo,
                                           std::uint64_t seed) {
  LevelScan scan = FindInverseOptimalR0(
      demo.V, demo.system, demo.R, DefaultLevelGrid(demo.V, demo.region, seed),
      demo.region, 4000, seed);
  LevelConstantOptions opts;
  opts.seed = seed;
  LevelConstants ladder = EstimateLevelConstants(demo.V, demo.system, demo.R,
                                                 scan.r0, demo.region, opts);
  InverseOptimalCost cost =
      BuildInverseCost(demo.V, demo.system, demo.R, demo.Q,
                       BuildMu(scan.r0, ladder.ladder));
  FeedbackLaw law = OptimalFeedback(demo.V, cost, demo.system);
  return InverseOptimalDemo{demo.name,       demo.system,     demo.V,
                            demo.region,     std::move(scan), std::move(ladder),
                            std::move(cost), std::move(law)};
}

InverseOptimalDemo ScalarLqDemo() {
  ControlAffineSystem sys(
      1, 1, [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return x; },
      [](const Eigen::VectorXd&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Ones(1, 1);
      },
      std::nullopt, "scalar_lq");
  const Eigen::MatrixXd P =
      Eigen::MatrixXd::Constant(1, 1, 1.0 + std::sqrt(2.0));
  Clf V = LocalQuadraticClf(P);
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const Box region = Box::Symmetric(1, 2.0);
  LevelScan scan = FindInverseOptimalR0(V, sys, one,
                                        DefaultLevelGrid(V, region, 0), region,
                                        2000, 0);
  LevelConstants ladder = EstimateLevelConstants(V, sys, one, scan.r0, region);
  InverseOptimalCost cost =
      BuildInverseCost(V, sys, one, one, BuildMu(scan.r0, ladder.ladder));
  FeedbackLaw law = OptimalFeedback(V, cost, sys);
  return InverseOptimalDemo{"scalar_lq",      std::move(sys),    std::move(V),
                            region,           std::move(scan),   std::move(ladder),
                            std::move(cost),  std::move(law)};
}

}  // namespace clfsynth
