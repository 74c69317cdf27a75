#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Sampled closed-loop solution. `inputs[k]` is the input applied at
/// `times[k]`; annotations are optional per-step scalar columns.
struct Trajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::map<std::string, std::vector<double>> annotations;

  std::size_t size() const { return times.size(); }
  const Eigen::VectorXd& final_state() const { return states.back(); }

  /// Equal lengths, strictly increasing times, finite entries.
  bool IsValid() const;
};

using Rhs = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// One classical fourth-order Runge–Kutta step of ẋ = f(x).
Eigen::VectorXd Rk4Step(const Rhs& f, const Eigen::VectorXd& x, double dt);

/// Fires after a completed step; integration stops when it returns true.
using StopPredicate = std::function<bool(double t, const Eigen::VectorXd& x)>;

/// Fixed-step RK4 integration of ẋ = a(x) + b(x)·law(x) on [0, T].
/// Throws DivergenceError on non-finite states and rethrows DomainError from
/// the vector field with the failing time stamp.
Trajectory Integrate(const ControlAffineSystem& sys, const FeedbackLaw& law,
                     const Eigen::VectorXd& x0, double dt, double T,
                     const StopPredicate& stop = {});

/// Adds V and V̇ = L_aV + L_bV·u columns to a trajectory.
void AnnotateLyapunov(Trajectory& traj, const Clf& V,
                      const ControlAffineSystem& sys);

/// Largest per-step increase V_{k+1} − V_k − tol·V_k; ≤ 0 means the trace
/// is monotone within the relative tolerance.
double MaxRelativeIncrease(const std::vector<double>& values, double tol);

}  // namespace clfsynth
