#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace clfsynth {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent matrix or vector sizes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input fails a structural requirement (symmetry, definiteness, ranges).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A matrix equation has no admissible solution (e.g. non-Hurwitz Lyapunov).
class NoSolutionError : public Error {
 public:
  using Error::Error;
};

/// Stabilizability or detectability failed; carries the offending eigenvalue.
class ModeError : public Error {
 public:
  ModeError(const std::string& what, double re, double im)
      : Error(what), re_(re), im_(im) {}
  double mode_real() const { return re_; }
  double mode_imag() const { return im_; }

 private:
  double re_;
  double im_;
};

/// An iteration stopped before reaching its tolerance.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double last_residual)
      : Error(what), last_residual_(last_residual) {}
  double last_residual() const { return last_residual_; }

 private:
  double last_residual_;
};

/// A sampled certificate found counterexamples; the states are attached.
class CertificateError : public Error {
 public:
  CertificateError(const std::string& what, std::vector<Eigen::VectorXd> states)
      : Error(what), states_(std::move(states)) {}
  const std::vector<Eigen::VectorXd>& states() const { return states_; }

 private:
  std::vector<Eigen::VectorXd> states_;
};

/// State left the domain where the vector field is defined.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, double time = 0.0)
      : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Integration produced non-finite values or failed to reach a terminal set.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, Eigen::VectorXd last_state,
                  double time)
      : Error(what), last_state_(std::move(last_state)), time_(time) {}
  const Eigen::VectorXd& last_state() const { return last_state_; }
  double time() const { return time_; }

 private:
  Eigen::VectorXd last_state_;
  double time_;
};

}  // namespace clfsynth
