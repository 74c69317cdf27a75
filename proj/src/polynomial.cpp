#include "clfsynth/polynomial.hpp"

#include <algorithm>
#include <cmath>

#include "clfsynth/errors.hpp"

namespace clfsynth {

Polynomial::Polynomial(int n_vars, std::vector<Monomial> terms)
    : n_vars_(n_vars), terms_(std::move(terms)) {
  for (const Monomial& m : terms_) {
    if (static_cast<int>(m.exponents.size()) != n_vars_) {
      throw DimensionError("monomial exponents must have one entry per state");
    }
    for (int e : m.exponents) {
      if (e < 0) throw ValidationError("exponents must be nonnegative");
    }
    if (!std::isfinite(m.coeff)) {
      throw ValidationError("monomial coefficients must be finite");
    }
  }
}

double Polynomial::operator()(const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (const Monomial& m : terms_) {
    double v = m.coeff;
    for (int i = 0; i < n_vars_; ++i) {
      for (int k = 0; k < m.exponents[i]; ++k) v *= x(i);
    }
    sum += v;
  }
  return sum;
}

bool Polynomial::IsZero() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const Monomial& m) { return m.coeff == 0.0; });
}

int Polynomial::MaxExponent(int var) const {
  int out = 0;
  for (const Monomial& m : terms_) {
    if (m.coeff != 0.0) out = std::max(out, m.exponents.at(var));
  }
  return out;
}

Polynomial Polynomial::CoefficientOf(int var, int k) const {
  std::vector<Monomial> out;
  for (const Monomial& m : terms_) {
    if (m.exponents.at(var) != k) continue;
    Monomial c = m;
    c.exponents[var] = 0;
    out.push_back(std::move(c));
  }
  return Polynomial(n_vars_, std::move(out));
}

namespace {

Polynomial ParseEntry(const Json& j, int n) {
  if (j.is_number()) {
    return Polynomial(n, {Monomial{j.get<double>(), std::vector<int>(n, 0)}});
  }
  if (!j.is_array()) {
    throw ValidationError("polynomial entries are term lists or numbers");
  }
  std::vector<Monomial> terms;
  for (const Json& t : j) {
    if (!t.is_object() || !t.contains("coeff") || !t.contains("exponents")) {
      throw ValidationError("each term needs 'coeff' and 'exponents'");
    }
    terms.push_back(
        Monomial{t.at("coeff").get<double>(),
                 t.at("exponents").get<std::vector<int>>()});
  }
  return Polynomial(n, std::move(terms));
}

// Drops variables [from, to) after checking they do not appear.
Polynomial Restrict(const Polynomial& poly, int from, int to) {
  std::vector<Monomial> out;
  for (const Monomial& m : poly.terms()) {
    Monomial r;
    r.coeff = m.coeff;
    for (int i = 0; i < poly.n_vars(); ++i) {
      if (i >= from && i < to) {
        if (m.exponents[i] != 0 && m.coeff != 0.0) {
          throw ValidationError("term depends on a variable the structure "
                                "excludes");
        }
        continue;
      }
      r.exponents.push_back(m.exponents[i]);
    }
    out.push_back(std::move(r));
  }
  return Polynomial(poly.n_vars() - (to - from), std::move(out));
}

}  // namespace

PolynomialSystemSpec ParsePolynomialSystem(const Json& j) {
  try {
    PolynomialSystemSpec spec;
    spec.name = j.value("name", std::string("polynomial"));
    spec.n = j.at("n").get<int>();
    spec.p = j.at("p").get<int>();
    if (spec.n < 1 || spec.p < 1) throw ValidationError("n and p must be >= 1");
    const Json& drift = j.at("drift");
    const Json& input = j.at("input");
    if (!drift.is_array() || static_cast<int>(drift.size()) != spec.n) {
      throw DimensionError("drift must have n rows");
    }
    if (!input.is_array() || static_cast<int>(input.size()) != spec.n) {
      throw DimensionError("input must have n rows");
    }
    for (const Json& row : drift) spec.drift.push_back(ParseEntry(row, spec.n));
    for (const Json& row : input) {
      if (!row.is_array() || static_cast<int>(row.size()) != spec.p) {
        throw DimensionError("each input row must have p entries");
      }
      std::vector<Polynomial> entries;
      for (const Json& e : row) entries.push_back(ParseEntry(e, spec.n));
      spec.input.push_back(std::move(entries));
    }
    spec.structure = j.value("structure", std::string());
    spec.split = j.value("split", 0);
    if (!spec.structure.empty() && spec.structure != "strict_feedback" &&
        spec.structure != "feedforward") {
      throw ValidationError("unknown structure '" + spec.structure + "'");
    }
    return spec;
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed polynomial system: ") +
                          e.what());
  }
}

ControlAffineSystem ToControlAffine(const PolynomialSystemSpec& spec) {
  const auto drift = spec.drift;
  const auto input = spec.input;
  const int n = spec.n;
  const int p = spec.p;
  return ControlAffineSystem(
      n, p,
      [drift, n](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd a(n);
        for (int i = 0; i < n; ++i) a(i) = drift[i](x);
        return a;
      },
      [input, n, p](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        Eigen::MatrixXd b(n, p);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < p; ++j) b(i, j) = input[i][j](x);
        }
        return b;
      },
      std::nullopt, spec.name);
}

StrictFeedbackSystem ToStrictFeedback(const PolynomialSystemSpec& spec) {
  if (spec.structure != "strict_feedback") {
    throw ValidationError("system is not tagged strict_feedback");
  }
  const int ny = spec.split;
  if (ny < 1 || ny + 1 != spec.n || spec.p != 1) {
    throw ValidationError(
        "strict feedback needs split = n_y = n - 1 and a scalar input");
  }
  std::vector<Polynomial> h1;
  std::vector<Polynomial> h2;
  for (int i = 0; i < ny; ++i) {
    if (!spec.input[i][0].IsZero()) {
      throw ValidationError("the input must not enter the y-rows");
    }
    if (spec.drift[i].MaxExponent(ny) > 1) {
      throw ValidationError("y-rows must be affine in x");
    }
    h1.push_back(Restrict(spec.drift[i].CoefficientOf(ny, 0), ny, ny + 1));
    h2.push_back(Restrict(spec.drift[i].CoefficientOf(ny, 1), ny, ny + 1));
  }
  const Polynomial f = spec.drift[ny];
  const Polynomial g = spec.input[ny][0];
  auto stack = [](const std::vector<Polynomial>& rows) {
    return [rows](const Eigen::VectorXd& y) -> Eigen::VectorXd {
      Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) out(i) = rows[i](y);
      return out;
    };
  };
  auto joint = [ny](const Polynomial& poly) {
    return [poly, ny](const Eigen::VectorXd& y, double x) {
      Eigen::VectorXd z(ny + 1);
      z << y, x;
      return poly(z);
    };
  };
  return StrictFeedbackSystem(ny, stack(h1), stack(h2), joint(f), joint(g),
                              std::nullopt, spec.name);
}

FeedforwardSystem ToFeedforward(const PolynomialSystemSpec& spec) {
  if (spec.structure != "feedforward") {
    throw ValidationError("system is not tagged feedforward");
  }
  if (spec.split != 1 || spec.n < 2) {
    throw ValidationError("feedforward needs a scalar y (split = 1), n >= 2");
  }
  const int nx = spec.n - 1;
  for (int j = 0; j < spec.p; ++j) {
    if (!spec.input[0][j].IsZero()) {
      throw ValidationError("the input must not enter the y-row");
    }
  }
  const Polynomial h = Restrict(spec.drift[0], 0, 1);
  std::vector<Polynomial> f;
  std::vector<std::vector<Polynomial>> g;
  for (int i = 1; i < spec.n; ++i) {
    f.push_back(Restrict(spec.drift[i], 0, 1));
    std::vector<Polynomial> row;
    for (int j = 0; j < spec.p; ++j) {
      row.push_back(Restrict(spec.input[i][j], 0, 1));
    }
    g.push_back(std::move(row));
  }
  const int p = spec.p;
  return FeedforwardSystem(
      nx, p, [h](const Eigen::VectorXd& x) { return h(x); },
      [f, nx](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd out(nx);
        for (int i = 0; i < nx; ++i) out(i) = f[i](x);
        return out;
      },
      [g, nx, p](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
        Eigen::MatrixXd out(nx, p);
        for (int i = 0; i < nx; ++i) {
          for (int j = 0; j < p; ++j) out(i, j) = g[i][j](x);
        }
        return out;
      },
      spec.name);
}

}  // namespace clfsynth
