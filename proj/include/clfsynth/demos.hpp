#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/inverse_opt.hpp"
#include "clfsynth/orbital.hpp"
#include "clfsynth/structured.hpp"
#include "clfsynth/synthesis.hpp"

namespace clfsynth {

/// Names accepted by MakeRegisteredSystem.
std::vector<std::string> RegisteredSystemNames();

/// ẋ = x³ + u.
ControlAffineSystem ScalarCubicSystem();

/// ẏ = y² + x, ẋ = x·y + u.
StrictFeedbackSystem StrictFeedbackDemoSystem();

/// "scalar_cubic", "strict_feedback_demo", "orbital" (shifted 6-state,
/// p0 = mu = 1) or "orbital_reduced". Throws ValidationError otherwise.
ControlAffineSystem MakeRegisteredSystem(const std::string& name);

/// A blended synthesis together with what it was built from.
struct BlendedDemo {
  std::string name;
  ControlAffineSystem system;
  Clf V;
  Eigen::MatrixXd K_o;
  Box region;
  SynthesisResult synthesis;
  /// Min of V on the box boundary; {V < certified_level} is inside the box.
  double certified_level = 0.0;
  /// ½H(V)(0) and the LQ weights K_o is optimal for.
  Eigen::MatrixXd P;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd R;
};

/// V = x², K_o = −1 (LQ for Q = R = 1) on |x| ≤ 3.
BlendedDemo ScalarCubicDemo(std::uint64_t seed = 0);

/// Backstepping on the strict-feedback demo with K_o the LQ gain for
/// Q = I, R = 1, on |y|, |x| ≤ 1.5.
BlendedDemo StrictFeedbackDemo(std::uint64_t seed = 0);

/// Backstepping on the reduced orbital (χ2, χ3) subsystem with the LQ gain
/// for Q = I, R = 1, on |χ2|, |χ3| ≤ 0.5.
BlendedDemo ReducedOrbitalDemo(std::uint64_t seed = 0);

std::vector<BlendedDemo> AllBlendedDemos(std::uint64_t seed = 0);

/// Inverse-optimal cost for a demo whose ½H(V)(0) solves the Riccati
/// equation for its (Q, R).
struct InverseOptimalDemo {
  std::string name;
  ControlAffineSystem system;
  Clf V;
  Box region;
  LevelScan base_scan;
  LevelConstants ladder;
  InverseOptimalCost cost;
  FeedbackLaw law;
};

InverseOptimalDemo BuildInverseOptimalDemo(const BlendedDemo& demo,
                                           std::uint64_t seed = 0);

/// ẋ = x + u, V = (1 + √2)x², Q = R = 1, μ ≡ 1.
InverseOptimalDemo ScalarLqDemo();

}  // namespace clfsynth
