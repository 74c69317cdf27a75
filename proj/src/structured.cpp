#include "clfsynth/structured.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "clfsynth/errors.hpp"

namespace clfsynth {

namespace {

void CheckClose(const Eigen::MatrixXd& supplied, const Eigen::MatrixXd& fd,
                const char* what) {
  if (supplied.rows() != fd.rows() || supplied.cols() != fd.cols()) {
    throw DimensionError(std::string("supplied block ") + what +
                         " has the wrong shape");
  }
  const double scale = 1.0 + fd.cwiseAbs().maxCoeff();
  if ((supplied - fd).cwiseAbs().maxCoeff() > 1e-5 * scale) {
    throw ValidationError(std::string("supplied block ") + what +
                          " disagrees with finite differences");
  }
}

}  // namespace

StrictFeedbackSystem::StrictFeedbackSystem(
    int n_y, VecFn h1, VecFn h2, ScalarFn f, ScalarFn g,
    std::optional<StrictFeedbackBlocks> blocks, std::string name)
    : n_y_(n_y),
      h1_(std::move(h1)),
      h2_(std::move(h2)),
      f_(std::move(f)),
      g_(std::move(g)),
      name_(std::move(name)) {
  if (n_y_ < 1 || !h1_ || !h2_ || !f_ || !g_) {
    throw ValidationError("strict-feedback system needs n_y >= 1 and h1, h2, "
                          "f, g");
  }
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(n_y_);
  if (h1_(y0).size() != n_y_ || h2_(y0).size() != n_y_) {
    throw DimensionError("h1 and h2 must return vectors of size n_y");
  }
  if (h1_(y0).norm() > 1e-12 || std::abs(f_(y0, 0.0)) > 1e-12) {
    throw ValidationError("the origin is not an equilibrium");
  }
  if (g_(y0, 0.0) == 0.0) throw ValidationError("g(0, 0) must be nonzero");

  StrictFeedbackBlocks fd;
  fd.H1 = CentralJacobian(h1_, y0, 1e-6);
  fd.H2 = h2_(y0);
  const ScalarFn& f_ref = f_;
  fd.F1 = CentralGradient(
              [&f_ref](const Eigen::VectorXd& y) { return f_ref(y, 0.0); }, y0,
              1e-6)
              .transpose();
  const double hx = 1e-6;
  fd.F2 = (f_(y0, hx) - f_(y0, -hx)) / (2.0 * hx);
  fd.G = g_(y0, 0.0);
  if (blocks) {
    CheckClose(blocks->H1, fd.H1, "H1");
    CheckClose(blocks->H2, fd.H2, "H2");
    CheckClose(blocks->F1, fd.F1, "F1");
    CheckClose(Eigen::MatrixXd::Constant(1, 1, blocks->F2),
               Eigen::MatrixXd::Constant(1, 1, fd.F2), "F2");
    CheckClose(Eigen::MatrixXd::Constant(1, 1, blocks->G),
               Eigen::MatrixXd::Constant(1, 1, fd.G), "G");
    blocks_ = *blocks;
  } else {
    blocks_ = fd;
  }
}

ControlAffineSystem StrictFeedbackSystem::Full() const {
  const int ny = n_y_;
  auto h1 = h1_;
  auto h2 = h2_;
  auto f = f_;
  auto g = g_;
  return ControlAffineSystem(
      ny + 1, 1,
      [ny, h1, h2, f](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const Eigen::VectorXd y = z.head(ny);
        const double x = z(ny);
        Eigen::VectorXd dz(ny + 1);
        dz.head(ny) = h1(y) + h2(y) * x;
        dz(ny) = f(y, x);
        return dz;
      },
      [ny, g](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(ny + 1, 1);
        b(ny, 0) = g(z.head(ny), z(ny));
        return b;
      },
      Linearization(), name_);
}

ControlAffineSystem StrictFeedbackSystem::Inner() const {
  auto h2 = h2_;
  return ControlAffineSystem(
      n_y_, 1, h1_,
      [h2](const Eigen::VectorXd& y) -> Eigen::MatrixXd { return h2(y); },
      LinearSystem::Unchecked(blocks_.H1, blocks_.H2), name_ + "_inner");
}

LinearSystem StrictFeedbackSystem::Linearization() const {
  const int n = n_y_ + 1;
  Eigen::MatrixXd A(n, n);
  A.topLeftCorner(n_y_, n_y_) = blocks_.H1;
  A.topRightCorner(n_y_, 1) = blocks_.H2;
  A.bottomLeftCorner(1, n_y_) = blocks_.F1;
  A(n_y_, n_y_) = blocks_.F2;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, 1);
  B(n_y_, 0) = blocks_.G;
  return LinearSystem::Unchecked(std::move(A), std::move(B));
}

std::vector<Eigen::VectorXd> StrictFeedbackSystem::FindVanishingGain(
    const Box& region, int n_samples, double tol, std::uint64_t seed) const {
  if (region.dim() != n()) throw DimensionError("box must have dimension n");
  std::vector<Eigen::VectorXd> bad;
  for (const Eigen::VectorXd& z : SampleBox(region, n_samples, seed)) {
    if (!(std::abs(g_(z.head(n_y_), z(n_y_))) > tol)) bad.push_back(z);
  }
  return bad;
}

FeedforwardSystem::FeedforwardSystem(int n_x, int p, ScalarFn h, VecFn f,
                                     MatFn g, std::string name)
    : n_x_(n_x),
      p_(p),
      h_(std::move(h)),
      f_(std::move(f)),
      g_(std::move(g)),
      name_(std::move(name)) {
  if (n_x_ < 1 || p_ < 1 || !h_ || !f_ || !g_) {
    throw ValidationError("feedforward system needs n_x, p >= 1 and h, f, g");
  }
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(n_x_);
  if (std::abs(h_(x0)) > 1e-12 || f_(x0).norm() > 1e-12) {
    throw ValidationError("feedforward system needs h(0) = 0 and f(0) = 0");
  }
  G_ = g_(x0);
  if (f_(x0).size() != n_x_ || G_.rows() != n_x_ || G_.cols() != p_) {
    throw DimensionError("f or g returns the wrong shape");
  }
  H_ = CentralGradient(h_, x0, 1e-6).transpose();
  F_ = CentralJacobian(f_, x0, 1e-6);
}

ControlAffineSystem FeedforwardSystem::Full() const {
  const int nx = n_x_;
  const int p = p_;
  auto h = h_;
  auto f = f_;
  auto g = g_;
  return ControlAffineSystem(
      nx + 1, p,
      [nx, h, f](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        const Eigen::VectorXd x = z.tail(nx);
        Eigen::VectorXd dz(nx + 1);
        dz(0) = h(x);
        dz.tail(nx) = f(x);
        return dz;
      },
      [nx, p, g](const Eigen::VectorXd& z) -> Eigen::MatrixXd {
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(nx + 1, p);
        b.bottomRows(nx) = g(z.tail(nx));
        return b;
      },
      std::nullopt, name_);
}

Eigen::MatrixXd BacksteppingPartition::Reassemble() const {
  const auto ny = P11.rows();
  Eigen::MatrixXd P(ny + 1, ny + 1);
  P.topLeftCorner(ny, ny) = P11;
  P.topRightCorner(ny, 1) = P12;
  P.bottomLeftCorner(1, ny) = P12.transpose();
  P(ny, ny) = P22;
  return P;
}

BacksteppingPartition PartitionCertificate(const Eigen::MatrixXd& P) {
  if (P.rows() != P.cols() || P.rows() < 2) {
    throw DimensionError("P must be square with at least two rows");
  }
  if (!IsSymmetric(P) || Eigen::LLT<Eigen::MatrixXd>(P).info() !=
                             Eigen::Success) {
    throw ValidationError("P must be symmetric positive definite");
  }
  const auto ny = P.rows() - 1;
  BacksteppingPartition part;
  part.P11 = P.topLeftCorner(ny, ny);
  part.P12 = P.topRightCorner(ny, 1);
  part.P22 = P(ny, ny);
  part.local_inner_gain = -part.P12.transpose() / part.P22;
  part.P_y = part.P11 - part.P12 * part.P12.transpose() / part.P22;
  part.P_y = 0.5 * (part.P_y + part.P_y.transpose());
  part.T.resize(ny + 1, ny);
  part.T.topRows(ny) = Eigen::MatrixXd::Identity(ny, ny);
  part.T.bottomRows(1) = part.local_inner_gain;

  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(ny, ny + 1);
  expected.leftCols(ny) = part.P_y;
  const double err =
      (part.T.transpose() * P - expected).cwiseAbs().maxCoeff();
  if (err > 1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff())) {
    throw ValidationError("TᵀP = [P_y 0] fails numerically");
  }
  return part;
}

double PartitionInputResidual(const BacksteppingPartition& part, double G) {
  Eigen::VectorXd B = Eigen::VectorXd::Zero(part.T.rows());
  B(B.size() - 1) = G;
  return (part.T.transpose() * part.Reassemble() * B).cwiseAbs().maxCoeff();
}

BacksteppingPartition PartitionCertificate(const Eigen::MatrixXd& P,
                                           const StrictFeedbackBlocks& blocks) {
  BacksteppingPartition part = PartitionCertificate(P);
  const auto ny = part.P_y.rows();
  if (blocks.H1.rows() != ny || blocks.H2.rows() != ny) {
    throw DimensionError("blocks and P disagree in n_y");
  }
  if (PartitionInputResidual(part, blocks.G) >
      1e-12 * std::max(1.0, P.cwiseAbs().maxCoeff() * std::abs(blocks.G))) {
    throw ValidationError("TᵀPB = 0 fails numerically");
  }
  const Eigen::MatrixXd M =
      part.P_y * (blocks.H1 + blocks.H2 * part.local_inner_gain);
  const double worst = MaxEigenvalueSymmetric(M + M.transpose());
  if (!(worst < 0.0)) {
    throw CertificateError(
        "reduced Lyapunov inequality fails (max eigenvalue " +
            std::to_string(worst) + "); P does not certify A + B K_o on this "
            "structure",
        {});
  }
  return part;
}

Clf BacksteppingClf(const InnerPair& inner, double P22,
                    const std::optional<Eigen::RowVectorXd>& expected_gain) {
  if (!(P22 > 0.0)) throw ValidationError("P22 must be positive");
  if (!inner.alpha_y) throw ValidationError("alpha_y is required");
  const int ny = inner.V_y.n();
  const Eigen::VectorXd y0 = Eigen::VectorXd::Zero(ny);
  if (std::abs(inner.alpha_y(y0)) > 1e-12) {
    throw ValidationError("alpha_y(0) must be 0");
  }
  auto alpha = inner.alpha_y;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> dalpha =
      inner.alpha_y_gradient;
  if (!dalpha) {
    dalpha = [alpha](const Eigen::VectorXd& y) {
      return CentralGradient(alpha, y, 1e-6);
    };
  }
  const Eigen::RowVectorXd gain = dalpha(y0).transpose();
  if (expected_gain) {
    if (expected_gain->size() != ny) {
      throw DimensionError("expected gain has the wrong size");
    }
    const double tol = 1e-6 * (1.0 + expected_gain->cwiseAbs().maxCoeff());
    if ((gain - *expected_gain).cwiseAbs().maxCoeff() > tol) {
      throw ValidationError(
          "d alpha_y / dy (0) does not match the partition gain");
    }
  }
  const Eigen::MatrixXd& Hy = inner.V_y.hessian_origin();
  Eigen::MatrixXd H(ny + 1, ny + 1);
  H.topLeftCorner(ny, ny) = Hy + 2.0 * P22 * gain.transpose() * gain;
  H.topRightCorner(ny, 1) = -2.0 * P22 * gain.transpose();
  H.bottomLeftCorner(1, ny) = -2.0 * P22 * gain;
  H(ny, ny) = 2.0 * P22;

  const Clf V_y = inner.V_y;
  return Clf(
      ny + 1,
      [V_y, alpha, P22, ny](const Eigen::VectorXd& z) {
        const Eigen::VectorXd y = z.head(ny);
        const double e = z(ny) - alpha(y);
        return V_y.value(y) + P22 * e * e;
      },
      [V_y, alpha, dalpha, P22, ny](const Eigen::VectorXd& z)
          -> Eigen::VectorXd {
        const Eigen::VectorXd y = z.head(ny);
        const double e = z(ny) - alpha(y);
        Eigen::VectorXd grad(ny + 1);
        grad.head(ny) = V_y.gradient(y) - 2.0 * P22 * e * dalpha(y);
        grad(ny) = 2.0 * P22 * e;
        return grad;
      },
      H);
}

InnerClfFactory QuadraticInnerFactory(Box inner_region,
                                      std::vector<double> level_grid,
                                      int n_samples, std::uint64_t seed) {
  return [inner_region, level_grid, n_samples, seed](
             const Eigen::MatrixXd& P_y, const Eigen::RowVectorXd& gain,
             const ControlAffineSystem& inner) {
    Clf V_y = LocalQuadraticClf(P_y);
    SynthesisOptions opts;
    opts.region = inner_region;
    opts.level_grid = level_grid;
    opts.n_samples = n_samples;
    opts.seed = seed;
    SynthesisResult res = SynthesizeBlended(V_y, inner, gain, opts);
    FeedbackLaw law = std::move(res.law);
    return InnerPair{
        V_y,
        [law](const Eigen::VectorXd& y) { return law(y)(0); },
        {}};
  };
}

InnerClfFactory LinearInnerFactory() {
  return [](const Eigen::MatrixXd& P_y, const Eigen::RowVectorXd& gain,
            const ControlAffineSystem&) {
    const Eigen::VectorXd k = gain.transpose();
    return InnerPair{
        LocalQuadraticClf(P_y),
        [k](const Eigen::VectorXd& y) { return k.dot(y); },
        [k](const Eigen::VectorXd&) -> Eigen::VectorXd { return k; }};
  };
}

BacksteppingResult BacksteppingSynthesize(const StrictFeedbackSystem& sys,
                                          const Eigen::MatrixXd& K_o,
                                          const BacksteppingOptions& options) {
  const int n = sys.n();
  if (K_o.rows() != 1 || K_o.cols() != n) {
    throw DimensionError("K_o must be 1 x (n_y + 1)");
  }
  const LinearSystem lin = sys.Linearization();
  const Eigen::MatrixXd A_cl = lin.A() + lin.B() * K_o;
  if (!IsHurwitz(A_cl)) {
    throw ValidationError("A + B K_o is not Hurwitz; construction refused");
  }
  const Eigen::MatrixXd W = options.lyapunov_rhs.value_or(
      Eigen::MatrixXd::Identity(n, n));
  Eigen::MatrixXd P = SolveLyapunov(A_cl, W).P;
  P = 0.5 * (P + P.transpose());
  BacksteppingPartition part = PartitionCertificate(P, sys.blocks());

  const Box& region = options.synthesis.region;
  if (region.dim() != n) throw DimensionError("synthesis box must be n-dim");
  InnerClfFactory factory = options.inner_factory;
  if (!factory) {
    factory = QuadraticInnerFactory(
        Box{region.lower.head(n - 1), region.upper.head(n - 1)}, {},
        options.synthesis.n_samples, options.synthesis.seed);
  }
  const InnerPair pair = factory(part.P_y, part.local_inner_gain, sys.Inner());
  Clf V = BacksteppingClf(pair, part.P22, part.local_inner_gain);
  SynthesisResult synth =
      SynthesizeBlended(V, sys.Full(), K_o, options.synthesis);
  return BacksteppingResult{std::move(P), std::move(part), std::move(V),
                            std::move(synth)};
}

Clf AdditiveClf(const Clf& V_x, const Eigen::VectorXd& weights) {
  if (weights.size() < 1 || !(weights.minCoeff() > 0.0)) {
    throw ValidationError("additive weights must be positive");
  }
  const int nx = V_x.n();
  const int k = static_cast<int>(weights.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(nx + k, nx + k);
  H.topLeftCorner(nx, nx) = V_x.hessian_origin();
  H.bottomRightCorner(k, k) = (2.0 * weights).asDiagonal();
  return Clf(
      nx + k,
      [V_x, weights, nx, k](const Eigen::VectorXd& z) {
        return V_x.value(z.head(nx)) +
               weights.dot(z.tail(k).cwiseAbs2());
      },
      [V_x, weights, nx, k](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        Eigen::VectorXd grad(nx + k);
        grad.head(nx) = V_x.gradient(z.head(nx));
        grad.tail(k) = 2.0 * weights.cwiseProduct(z.tail(k));
        return grad;
      },
      H);
}

Clf AdditiveForwardClf(const Clf& V_x, double weight) {
  return AdditiveClf(V_x, Eigen::VectorXd::Constant(1, weight));
}

}  // namespace clfsynth
