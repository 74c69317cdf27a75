#include "clfsynth/numdiff.hpp"

#include <cmath>

namespace clfsynth {

Eigen::VectorXd CentralGradient(const ScalarField& f, const Eigen::VectorXd& x,
                                double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * (1.0 + std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = f(xp);
    xp(i) = x(i) - step;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

Eigen::MatrixXd CentralJacobian(const VectorField& f, const Eigen::VectorXd& x,
                                double h) {
  Eigen::MatrixXd J;
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = h * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + step;
    const Eigen::VectorXd fp = f(xp);
    xp(j) = x(j) - step;
    const Eigen::VectorXd fm = f(xp);
    xp(j) = x(j);
    if (j == 0) J.resize(fp.size(), x.size());
    J.col(j) = (fp - fm) / (2.0 * step);
  }
  return J;
}

Eigen::MatrixXd CentralHessian(const ScalarField& f, const Eigen::VectorXd& x,
                               double h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  Eigen::VectorXd y = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = x(i) + h;
    const double fp = f(y);
    y(i) = x(i) - h;
    const double fm = f(y);
    y(i) = x(i);
    H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          y(i) = x(i) + si * h;
          y(j) = x(j) + sj * h;
          acc += si * sj * f(y);
        }
      }
      y(i) = x(i);
      y(j) = x(j);
      H(i, j) = H(j, i) = acc / (4.0 * h * h);
    }
  }
  return H;
}

double RelativeMaxError(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1e-12, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace clfsynth
