#include "clfsynth/sampling.hpp"

#include <array>
#include <cmath>
#include <random>

#include "clfsynth/errors.hpp"

namespace clfsynth {
namespace {

constexpr std::array<int, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                         23, 29, 31, 37, 41, 43, 47, 53};

double RadicalInverse(std::uint64_t index, int base) {
  double result = 0.0;
  double f = 1.0 / base;
  while (index > 0) {
    result += f * static_cast<double>(index % base);
    index /= base;
    f /= base;
  }
  return result;
}

}  // namespace

Box Box::Symmetric(int n, double half_width) {
  return Symmetric(Eigen::VectorXd::Constant(n, half_width));
}

Box Box::Symmetric(const Eigen::VectorXd& half_widths) {
  if ((half_widths.array() <= 0.0).any()) {
    throw ValidationError("box half widths must be positive");
  }
  return Box{-half_widths, half_widths};
}

bool Box::Contains(const Eigen::VectorXd& x) const {
  return x.size() == lower.size() && (x.array() >= lower.array()).all() &&
         (x.array() <= upper.array()).all();
}

bool Box::ContainsOrigin() const {
  return (lower.array() <= 0.0).all() && (upper.array() >= 0.0).all();
}

double UnitFromBits(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

HaltonSequence::HaltonSequence(int dim, std::uint64_t seed)
    : shift_(Eigen::VectorXd::Zero(dim)) {
  if (dim <= 0 || dim > static_cast<int>(kPrimes.size())) {
    throw DimensionError("Halton sequence supports 1..16 dimensions");
  }
  if (seed != 0) {
    std::mt19937_64 engine(seed);
    for (int i = 0; i < dim; ++i) shift_(i) = UnitFromBits(engine());
  }
}

Eigen::VectorXd HaltonSequence::At(std::uint64_t index) const {
  Eigen::VectorXd u(shift_.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double v = RadicalInverse(index, kPrimes[i]) + shift_(i);
    u(i) = v - std::floor(v);
  }
  return u;
}

Eigen::VectorXd HaltonSequence::Next() { return At(index_++); }

std::vector<Eigen::VectorXd> SampleBox(const Box& box, int n,
                                       std::uint64_t seed) {
  if (box.upper.size() != box.lower.size()) {
    throw DimensionError("box bounds differ in size");
  }
  HaltonSequence halton(box.dim(), seed);
  const Eigen::ArrayXd width = (box.upper - box.lower).array();
  std::vector<Eigen::VectorXd> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    out.push_back(box.lower + (halton.Next().array() * width).matrix());
  }
  return out;
}

std::vector<Eigen::VectorXd> SampleBoxBoundary(const Box& box, int n,
                                               std::uint64_t seed) {
  const int d = box.dim();
  std::vector<Eigen::VectorXd> out = SampleBox(box, n, seed);
  // Project each interior point onto a face chosen round-robin.
  for (int i = 0; i < n; ++i) {
    const int face = i % (2 * d);
    const int axis = face / 2;
    out[i](axis) = (face % 2 == 0) ? box.lower(axis) : box.upper(axis);
  }
  return out;
}

}  // namespace clfsynth
