#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "clfsynth/clf.hpp"
#include "clfsynth/io.hpp"
#include "clfsynth/structured.hpp"

namespace clfsynth {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> exponents;
};

/// Sum of monomials in n variables.
class Polynomial {
 public:
  Polynomial() = default;
  Polynomial(int n_vars, std::vector<Monomial> terms);

  int n_vars() const { return n_vars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  double operator()(const Eigen::VectorXd& x) const;
  bool IsZero() const;
  int MaxExponent(int var) const;
  /// Terms whose exponent of `var` equals k, with that exponent removed.
  Polynomial CoefficientOf(int var, int k) const;
  bool DependsOn(int var) const { return MaxExponent(var) > 0; }

 private:
  int n_vars_ = 0;
  std::vector<Monomial> terms_;
};

/// ẋ_i = Σ drift_i + Σ_j input_ij u_j with polynomial entries.
struct PolynomialSystemSpec {
  std::string name = "polynomial";
  int n = 0;
  int p = 0;
  std::vector<Polynomial> drift;
  std::vector<std::vector<Polynomial>> input;
  /// "", "strict_feedback" or "feedforward".
  std::string structure;
  /// n_y for strict feedback, the y dimension (1) for feedforward.
  int split = 0;
};

/// {"n", "p", "drift": [[{coeff, exponents}...] per row],
///  "input": [[terms or number per column] per row],
///  optional "name", "structure", "split"}.
PolynomialSystemSpec ParsePolynomialSystem(const Json& j);

ControlAffineSystem ToControlAffine(const PolynomialSystemSpec& spec);
/// Requires structure "strict_feedback": y-rows affine in x and unforced.
StrictFeedbackSystem ToStrictFeedback(const PolynomialSystemSpec& spec);
/// Requires structure "feedforward" with scalar y: no row depends on y and
/// u does not enter the y-row.
FeedforwardSystem ToFeedforward(const PolynomialSystemSpec& spec);

}  // namespace clfsynth
