#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace clfsynth {

/// Axis-aligned box [lower, upper] in state space.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Box Symmetric(int n, double half_width);
  static Box Symmetric(const Eigen::VectorXd& half_widths);

  int dim() const { return static_cast<int>(lower.size()); }
  bool Contains(const Eigen::VectorXd& x) const;
  bool ContainsOrigin() const;
};

/// Halton low-discrepancy sequence on [0,1)^d with a seeded
/// Cranley–Patterson rotation. Output depends only on (dim, seed, index).
class HaltonSequence {
 public:
  HaltonSequence(int dim, std::uint64_t seed);

  Eigen::VectorXd Next();
  Eigen::VectorXd At(std::uint64_t index) const;

 private:
  Eigen::VectorXd shift_;
  std::uint64_t index_ = 1;
};

/// n deterministic points in the box (Halton, rotated by seed).
std::vector<Eigen::VectorXd> SampleBox(const Box& box, int n,
                                       std::uint64_t seed = 0);

/// n deterministic points on the boundary faces of the box.
std::vector<Eigen::VectorXd> SampleBoxBoundary(const Box& box, int n,
                                               std::uint64_t seed = 0);

/// Portable uniform double in [0,1) from a 64-bit engine output.
double UnitFromBits(std::uint64_t bits);

}  // namespace clfsynth
