#include "clfsynth/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "clfsynth/errors.hpp"

namespace clfsynth {

bool Trajectory::IsValid() const {
  const std::size_t n = times.size();
  if (states.size() != n || inputs.size() != n) return false;
  for (const auto& [name, column] : annotations) {
    if (column.size() != n) return false;
    for (double v : column) {
      if (!std::isfinite(v)) return false;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(times[k])) return false;
    if (k > 0 && !(times[k] > times[k - 1])) return false;
    if (!states[k].allFinite() || !inputs[k].allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd Rk4Step(const Rhs& f, const Eigen::VectorXd& x, double dt) {
  const Eigen::VectorXd k1 = f(x);
  const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
  const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
  const Eigen::VectorXd k4 = f(x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Trajectory Integrate(const ControlAffineSystem& sys, const FeedbackLaw& law,
                     const Eigen::VectorXd& x0, double dt, double T,
                     const StopPredicate& stop) {
  if (!(dt > 0.0) || !(T > dt)) {
    throw ValidationError("integrator needs dt > 0 and T > dt");
  }
  if (x0.size() != sys.n() || law.n() != sys.n() || law.p() != sys.p()) {
    throw DimensionError("initial state, law and system differ in size");
  }
  const Rhs rhs = [&](const Eigen::VectorXd& x) {
    return sys.Field(x, law(x));
  };
  const auto n_steps = static_cast<long long>(std::ceil(T / dt - 1e-9));

  Trajectory traj;
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);
  traj.inputs.reserve(n_steps + 1);
  Eigen::VectorXd x = x0;
  double t = 0.0;
  try {
    traj.times.push_back(0.0);
    traj.states.push_back(x);
    traj.inputs.push_back(law(x));
    for (long long k = 1; k <= n_steps; ++k) {
      const double t_next = std::min(T, static_cast<double>(k) * dt);
      Eigen::VectorXd next = Rk4Step(rhs, x, t_next - t);
      if (!next.allFinite()) {
        throw DivergenceError("closed-loop state became non-finite", x, t);
      }
      x = std::move(next);
      t = t_next;
      traj.times.push_back(t);
      traj.states.push_back(x);
      traj.inputs.push_back(law(x));
      if (stop && stop(t, x)) break;
    }
  } catch (const DomainError& e) {
    throw DomainError(std::string(e.what()) + " (near t = " +
                          std::to_string(t) + ")",
                      t);
  }
  return traj;
}

void AnnotateLyapunov(Trajectory& traj, const Clf& V,
                      const ControlAffineSystem& sys) {
  std::vector<double>& values = traj.annotations["V"];
  std::vector<double>& rates = traj.annotations["Vdot"];
  values.resize(traj.size());
  rates.resize(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const LieDerivatives lie = ComputeLieDerivatives(V, sys, traj.states[k]);
    values[k] = V.value(traj.states[k]);
    rates[k] = lie.La + (lie.Lb * traj.inputs[k]).value();
  }
}

double MaxRelativeIncrease(const std::vector<double>& values, double tol) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < values.size(); ++k) {
    worst = std::max(worst, values[k] - values[k - 1] - tol * values[k - 1]);
  }
  return worst;
}

}  // namespace clfsynth
