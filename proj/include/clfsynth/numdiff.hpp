#pragma once

#include <functional>

#include <Eigen/Core>

namespace clfsynth {

using ScalarField = std::function<double(const Eigen::VectorXd&)>;
using VectorField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Central-difference gradient with step h·(1 + |x_i|).
Eigen::VectorXd CentralGradient(const ScalarField& f, const Eigen::VectorXd& x,
                                double h = 1e-6);

/// Central-difference Jacobian (rows = outputs) with step h·(1 + |x_j|).
Eigen::MatrixXd CentralJacobian(const VectorField& f, const Eigen::VectorXd& x,
                                double h = 1e-6);

/// Second-order central-difference Hessian.
Eigen::MatrixXd CentralHessian(const ScalarField& f, const Eigen::VectorXd& x,
                               double h = 1e-4);

/// max |a_ij - b_ij| / max |b_ij|.
double RelativeMaxError(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace clfsynth
