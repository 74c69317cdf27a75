// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails or exceeds its time budget.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clfsynth/commands.hpp"
#include "clfsynth/demos.hpp"
#include "clfsynth/errors.hpp"
#include "clfsynth/integrate.hpp"
#include "clfsynth/inverse_opt.hpp"
#include "clfsynth/io.hpp"
#include "clfsynth/numdiff.hpp"
#include "clfsynth/orbital.hpp"
#include "clfsynth/structured.hpp"

namespace {

using namespace clfsynth;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void Require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Check = std::function<void(Verdict&)>;

bool RunCriterion(int id, const std::string& title, double budget_s,
                  const Check& check) {
  Verdict v;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    check(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (elapsed > budget_s) {
    v.pass = false;
    v.detail << " [over budget]";
  }
  std::printf("criterion %d %s %s:%s (%.2f s of %.0f s)\n", id,
              v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.str().c_str(),
              elapsed, budget_s);
  std::fflush(stdout);
  return v.pass;
}

// Demos are shared by several criteria and built once.
const std::vector<BlendedDemo>& Demos() {
  static const std::vector<BlendedDemo> demos = AllBlendedDemos(0);
  return demos;
}

const std::vector<InverseOptimalDemo>& InverseDemos() {
  static const std::vector<InverseOptimalDemo> inv = [] {
    std::vector<InverseOptimalDemo> out;
    for (const BlendedDemo& d : Demos()) {
      out.push_back(BuildInverseOptimalDemo(d, 0));
    }
    return out;
  }();
  return inv;
}

// Nonzero states of the box with V below `fraction` of the certified level.
std::vector<VectorXd> InteriorStates(const BlendedDemo& d, double fraction,
                                     std::size_t count, std::uint64_t seed) {
  std::vector<VectorXd> out;
  int n = 500;
  while (out.size() < count && n <= 512000) {
    out.clear();
    for (const VectorXd& x : SampleBox(d.region, n, seed)) {
      if (x.norm() == 0.0 || !(d.V.value(x) < fraction * d.certified_level)) {
        continue;
      }
      out.push_back(x);
      if (out.size() == count) break;
    }
    n *= 2;
  }
  return out;
}

void CareCorrectness(Verdict& v) {
  std::mt19937_64 rng(20261019);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> dim_n(1, 10);
  std::uniform_int_distribution<int> dim_p(1, 3);
  auto randn = [&](int r, int c) {
    MatrixXd M(r, c);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) M(i, j) = normal(rng);
    }
    return M;
  };
  int solved = 0;
  double worst_ratio = 0.0;
  std::ostringstream misses;
  for (int k = 0; k < 100; ++k) {
    const int n = dim_n(rng);
    const int p = dim_p(rng);
    const MatrixXd A = randn(n, n);
    const MatrixXd B = randn(n, p);
    const MatrixXd C = randn(n, n);
    const MatrixXd Q = C.transpose() * C + 1e-3 * MatrixXd::Identity(n, n);
    const MatrixXd D = randn(p, p);
    const MatrixXd R = D.transpose() * D + MatrixXd::Identity(p, p);
    const LinearSystem sys(A, B);
    const RiccatiCertificate cert = SolveCare(sys, QuadraticWeights(Q, R));
    const double residual = CareResidual(A, B, Q, R, cert.P);
    const double ratio = residual / (1e-8 * (1.0 + Q.norm()));
    worst_ratio = std::max(worst_ratio, ratio);
    const MatrixXd K = LqrGain(cert, sys, R);
    const bool ok = ratio <= 1.0 && MinEigenvalueSymmetric(cert.P) > 0.0 &&
                    IsHurwitz(A + B * K);
    solved += ok;
    if (!ok) {
      misses << " #" << k << "(n=" << n << ",p=" << p << ",|P|=" << cert.P.norm()
             << ",residual/bound=" << ratio << ")";
    }
  }
  v.detail << " " << solved << "/100 instances certified, worst residual "
           << worst_ratio << " of the bound" << misses.str();
  v.Require(solved == 100, "every instance certified");
}

void PrescribedLocalBehavior(Verdict& v) {
  for (const BlendedDemo& d : Demos()) {
    const MatrixXd K = LocalGain(d.synthesis.law, 1e-4, true);
    const double err = (K - d.K_o).cwiseAbs().maxCoeff();
    v.detail << " " << d.name << " |dK|=" << err;
    v.Require(err <= 1e-9, d.name + " local gain");
  }
}

void ClfDecrease(Verdict& v) {
  for (const BlendedDemo& d : Demos()) {
    int n = 10000;
    DecreaseReport rep;
    for (;;) {
      rep = VerifyDecrease(d.V, d.system, d.synthesis.law, d.region, n, 7,
                           d.certified_level);
      if (rep.checked >= 10000) break;
      n = static_cast<int>(1.2 * n * 10000.0 / std::max(rep.checked, 1));
    }
    const std::vector<VectorXd> starts = InteriorStates(d, 0.95, 100, 99);
    std::vector<std::future<double>> jobs;
    for (const VectorXd& x0 : starts) {
      jobs.push_back(std::async(std::launch::async, [&d, x0] {
        Trajectory tr = Integrate(d.system, d.synthesis.law, x0, 1e-3, 10.0);
        AnnotateLyapunov(tr, d.V, d.system);
        return MaxRelativeIncrease(tr.annotations.at("V"), 1e-9);
      }));
    }
    int monotone = 0;
    for (auto& j : jobs) monotone += j.get() <= 0.0;
    v.detail << " " << d.name << ": " << rep.checked << " samples, "
             << rep.violations.size() << " violations, " << monotone << "/"
             << starts.size() << " monotone";
    v.Require(rep.ok() && rep.checked >= 10000, d.name + " sampled decrease");
    v.Require(starts.size() == 100 && monotone == 100,
              d.name + " monotone trajectories");
  }
}

void Reconstruction(Verdict& v) {
  for (std::size_t k = 0; k < Demos().size(); ++k) {
    const BlendedDemo& d = Demos()[k];
    const InverseOptimalDemo& io = InverseDemos()[k];
    const VectorXd zero = VectorXd::Zero(d.system.n());
    double hjb = 0.0;
    int q_bad = 0;
    int checked = 0;
    for (const VectorXd& x : SampleBox(d.region, 10001, 11)) {
      if (x.norm() == 0.0) continue;
      ++checked;
      hjb = std::max(hjb, std::abs(HjbResidual(io.V, io.cost, io.system, x)));
      q_bad += !(io.cost.q(x) > 0.0);
    }
    const double hess =
        RelativeMaxError(CentralHessian(io.cost.q, zero, 1e-4), 2.0 * d.Q);
    const bool r_exact = (io.cost.r(zero).array() == d.R.array()).all();
    v.detail << " " << d.name << ": hjb " << hjb << " on " << checked
             << ", |H(q)-2Q| " << hess << ", q<=0 at " << q_bad;
    v.Require(checked >= 10000 && hjb <= 1e-10, d.name + " HJB residual");
    v.Require(hess <= 1e-3, d.name + " Hessian of q");
    v.Require(r_exact, d.name + " r(0) = R");
    v.Require(q_bad == 0, d.name + " q positive");
  }
}

CostOptions FineCost() {
  CostOptions o;
  o.dt = 2.5e-4;
  o.horizon = 60.0;
  return o;
}

void ValueIdentity(Verdict& v) {
  for (std::size_t k = 0; k < Demos().size(); ++k) {
    const BlendedDemo& d = Demos()[k];
    const InverseOptimalDemo& io = InverseDemos()[k];
    const std::vector<VectorXd> starts = InteriorStates(d, 0.9, 20, 5);
    const std::vector<CostEstimate> est =
        EvaluateCostBatch(io.system, io.V, io.cost, io.law, starts, FineCost());
    double worst = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
      const double V0 = io.V.value(starts[i]);
      worst = std::max(worst, std::abs(est[i].J - V0) / V0);
    }
    v.detail << " " << d.name << ": worst |J-V|/V " << worst << " on "
             << starts.size();
    v.Require(starts.size() == 20 && worst <= 1e-3, d.name + " J = V");
  }
  const InverseOptimalDemo lq = ScalarLqDemo();
  double worst = 0.0;
  for (double x0 : {-1.5, -0.5, 0.25, 1.0, 1.9}) {
    const VectorXd x = VectorXd::Constant(1, x0);
    const double J = EvaluateCost(lq.system, lq.V, lq.cost, lq.law, x,
                                  FineCost()).J;
    const double exact = (1.0 + std::sqrt(2.0)) * x0 * x0;
    worst = std::max(worst, std::abs(J - exact) / exact);
  }
  v.detail << " scalar_lq: worst |J-(1+sqrt2)x0^2|/J " << worst;
  v.Require(worst <= 1e-3, "scalar LQ closed form");
}

void OptimalitySpotCheck(Verdict& v) {
  for (std::size_t k = 0; k < Demos().size(); ++k) {
    const BlendedDemo& d = Demos()[k];
    const InverseOptimalDemo& io = InverseDemos()[k];
    const std::vector<VectorXd> starts = InteriorStates(d, 0.9, 20, 5);
    std::vector<std::future<bool>> jobs;
    for (const VectorXd& x0 : starts) {
      jobs.push_back(std::async(std::launch::async, [&io, x0] {
        const double J =
            EvaluateCost(io.system, io.V, io.cost, io.law, x0, FineCost()).J;
        bool increased = true;
        for (double f : {0.95, 1.05}) {
          const FeedbackLaw& law = io.law;
          FeedbackLaw scaled(law.kind(), law.n(), law.p(),
                             [&law, f](const VectorXd& x) -> VectorXd {
                               return f * law(x);
                             });
          const double Jp =
              EvaluateCost(io.system, io.V, io.cost, scaled, x0, FineCost()).J;
          increased = increased && Jp > J;
        }
        return increased;
      }));
    }
    int ok = 0;
    for (auto& j : jobs) ok += j.get();
    v.detail << " " << d.name << ": " << ok << "/" << starts.size();
    v.Require(ok == static_cast<int>(starts.size()) && !starts.empty(),
              d.name + " perturbations increase J");
  }
}

void CompositeClf(Verdict& v) {
  for (std::size_t k = 1; k < Demos().size(); ++k) {
    const BlendedDemo& d = Demos()[k];
    const BacksteppingPartition part = PartitionCertificate(d.P);
    const double hess =
        RelativeMaxError(d.V.hessian_origin(), 2.0 * part.Reassemble());
    const int n = d.system.n();
    const double G = d.system.input_map(VectorXd::Zero(n))(n - 1, 0);
    const double scale = std::max(1.0, d.P.cwiseAbs().maxCoeff());
    const double tpb = PartitionInputResidual(part, G);
    v.detail << " " << d.name << ": |H(V)-2P| " << hess << ", |T'PB| " << tpb;
    v.Require(hess <= 1e-3, d.name + " Hessian");
    v.Require(tpb <= 1e-12 * scale, d.name + " T'PB");
  }

  // Linear strict-feedback plant: y' = y + x, x' = u.
  const StrictFeedbackSystem plant(
      1, [](const VectorXd& y) -> VectorXd { return y; },
      [](const VectorXd&) -> VectorXd { return VectorXd::Ones(1); },
      [](const VectorXd&, double) { return 0.0; },
      [](const VectorXd&, double) { return 1.0; });
  const LinearSystem lin = plant.Linearization();
  const MatrixXd Q = MatrixXd::Identity(2, 2);
  const MatrixXd R = MatrixXd::Identity(1, 1);
  const RiccatiCertificate cert = SolveCare(lin, QuadraticWeights(Q, R));
  const MatrixXd K = LqrGain(cert, lin, R);
  BacksteppingOptions opts;
  opts.lyapunov_rhs = Q + K.transpose() * R * K;
  opts.synthesis.region = Box::Symmetric(2, 1.0);
  opts.inner_factory = LinearInnerFactory();
  const BacksteppingResult res = BacksteppingSynthesize(plant, K, opts);
  const double dP = RelativeMaxError(res.P, cert.P);
  double dV = 0.0;
  for (const VectorXd& x : SampleBox(Box::Symmetric(2, 1.0), 200, 3)) {
    const double exact = x.dot(cert.P * x);
    if (exact > 0.0) dV = std::max(dV, std::abs(res.V.value(x) - exact) / exact);
  }
  const double dK =
      (LocalGain(res.synthesis.law, 1e-4, true) - K).cwiseAbs().maxCoeff();
  v.detail << " linear plant: |P-P_lq| " << dP << ", |V-x'Px| " << dV
           << ", |dK| " << dK;
  v.Require(dP <= 1e-8 && dV <= 1e-8 && dK <= 1e-8, "linear plant = LQ");
}

void OrbitalCase(Verdict& v) {
  const OrbitalParams params = OrbitalParams::Make(1.0, 1.0);
  const VectorXd s_star = OrbitalEquilibrium(params);
  const double eq = OrbitalVectorField(params, OrbitalState::FromVector(s_star),
                                       Eigen::Vector3d::Zero())
                        .norm();
  v.detail << " equilibrium " << eq;
  v.Require(eq <= 1e-14, "equilibrium residual");

  // Partial (χ1, χ2, χ3) system against the full rows at χ4 = p0, u = u_r.
  const ControlAffineSystem partial = OrbitalPartialSystem(params);
  double termwise = 0.0;
  const Box box3 = Box::Symmetric(3, 0.5);
  for (const VectorXd& z : SampleBox(box3, 500, 17)) {
    VectorXd chi = s_star;
    chi.head(3) = z;
    const VectorXd a = OrbitalDrift(params, chi);
    const MatrixXd b = OrbitalInputMap(params, chi);
    termwise = std::max(termwise, (partial.drift(z) - a.head(3)).cwiseAbs().maxCoeff());
    termwise = std::max(
        termwise, (partial.input_map(z).col(0) - b.col(0).head(3)).cwiseAbs().maxCoeff());
  }
  v.detail << ", partial rows " << termwise;
  v.Require(termwise <= 1e-14, "partial system termwise");

  const ControlAffineSystem sys = OrbitalSystem(params);
  const FeedbackLaw zero(LawKind::kLinearGain, 6, 3,
                         [](const VectorXd&) -> VectorXd {
                           return VectorXd::Zero(3);
                         });
  VectorXd z0 = VectorXd::Zero(6);
  z0 << 0.2, 0.1, -0.1, 0.2, 0.3, -0.4;
  const Trajectory tr = Integrate(sys, zero, z0, 0.01, 10.0);
  double drift = 0.0;
  const double r0 = z0(4) * z0(4) + z0(5) * z0(5);
  for (const VectorXd& z : tr.states) {
    drift = std::max(drift, std::abs(z(4) * z(4) + z(5) * z(5) - r0));
  }
  v.detail << ", |chi5^2+chi6^2 drift| " << drift;
  v.Require(drift <= 1e-8, "momentum radius conserved");

  const OrbitalController ctl = BuildOrbitalController(params, {});
  const OrbitalState s0{0.1, 0.05, -0.05, 1.1, 0.05, -0.05};
  const OrbitalSimulation sim =
      SimulateOrbital(params, ctl.V, ctl.law, s0, 0.01, 200.0);
  const double V0 = sim.trajectory.annotations.at("V").front();
  v.detail << ", terminal error " << sim.terminal_error
           << ", max step increase " << sim.max_step_increase / V0;
  v.Require(sim.terminal_error <= 1e-3, "terminal error");
  v.Require(sim.max_step_increase <= 1e-9 * V0, "monotone V");

  double hjb4 = 0.0;
  const Box box4 = Box::Symmetric(
      (VectorXd(4) << 1.0, 0.5, 0.5, 0.5).finished());
  for (const VectorXd& z : SampleBox(box4, 10000, 23)) {
    if (z.norm() == 0.0) continue;
    hjb4 = std::max(hjb4, std::abs(HjbResidual(ctl.V_tilde, ctl.cost_tilde,
                                               ctl.four_state, z)));
  }
  v.detail << ", 4-state HJB " << hjb4;
  v.Require(hjb4 <= 1e-10, "4-state HJB residual");
}

std::string RunDigest(const Json& config) {
  const CommandOutcome out = ExecuteRun(ParseRunConfig(config, std::nullopt));
  std::string all = out.report.dump();
  for (const auto& [path, text] : out.files) all += path + "\n" + text;
  return HexDigest(Fnv1a64(all));
}

void Determinism(Verdict& v) {
  const std::string dir = CLFSYNTH_CONFIG_DIR;
  for (const char* name : {"scalar_lq_run.json", "scalar_cubic_run.json",
                           "strict_feedback_run.json"}) {
    Json config = ReadJsonFile(dir + "/" + name);
    config.erase("output");
    config["output"] = {{"trajectory_prefix", "traj_"}};
    const std::string a = RunDigest(config);
    const std::string b = RunDigest(config);
    v.detail << " " << name << " " << a << (a == b ? " == " : " != ") << b;
    v.Require(a == b, std::string(name) + " reproducible");
  }
}

}  // namespace

int main() {
  bool ok = true;
  ok &= RunCriterion(1, "CARE correctness", 10, CareCorrectness);
  ok &= RunCriterion(2, "prescribed local gain", 5, [](Verdict& v) {
    PrescribedLocalBehavior(v);
  });
  ok &= RunCriterion(3, "CLF decrease", 60, ClfDecrease);
  ok &= RunCriterion(4, "inverse-optimal reconstruction", 30, [](Verdict& v) {
    InverseDemos();
    Reconstruction(v);
  });
  ok &= RunCriterion(5, "value-function identity", 60, ValueIdentity);
  ok &= RunCriterion(6, "optimality spot check", 60, OptimalitySpotCheck);
  ok &= RunCriterion(7, "composite backstepping CLF", 5, CompositeClf);
  ok &= RunCriterion(8, "orbital transfer", 120, OrbitalCase);
  ok &= RunCriterion(9, "run determinism", 10, Determinism);
  std::printf("acceptance %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 1;
}
