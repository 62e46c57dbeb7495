#pragma once
// Poisson GLM engine: design construction from ring/grid profiles, IRLS
// fitting with log-exposure offsets, AICc, and multivariate-normal
// coefficient simulation.
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "forms.hpp"
#include "rings.hpp"
#include "rng.hpp"

namespace dwp {

struct degenerate_input : std::runtime_error {
  explicit degenerate_input(const std::string& m) : std::runtime_error(m) {}
};
struct singular_fit : std::runtime_error {
  explicit singular_fit(const std::string& m) : std::runtime_error(m) {}
};

struct Design {
  Form form = Form::constant;
  std::vector<std::string> class_levels;  // empty, or all levels (first = reference)
  std::vector<double> x, y, off;
  std::vector<int> cls;  // index into class_levels, -1 when none
  std::vector<std::string> warnings;

  int n() const { return static_cast<int>(x.size()); }
  int k() const {
    const int lc = class_levels.empty() ? 0 : static_cast<int>(class_levels.size()) - 1;
    return 1 + lc + static_cast<int>(form_terms(form).size());
  }
  Eigen::MatrixXd matrix() const {
    const auto& terms = form_terms(form);
    const int lc = class_levels.empty() ? 0 : static_cast<int>(class_levels.size()) - 1;
    Eigen::MatrixXd X(n(), k());
    for (int i = 0; i < n(); ++i) {
      X(i, 0) = 1.0;
      for (int j = 0; j < lc; ++j) X(i, 1 + j) = cls[i] == j + 1 ? 1.0 : 0.0;
      for (std::size_t j = 0; j < terms.size(); ++j)
        X(i, 1 + lc + static_cast<int>(j)) = term_value(terms[j], x[i]);
    }
    return X;
  }
  Design without(int row) const {
    Design d = *this;
    d.x.erase(d.x.begin() + row);
    d.y.erase(d.y.begin() + row);
    d.off.erase(d.off.begin() + row);
    d.cls.erase(d.cls.begin() + row);
    return d;
  }
};

namespace detail {

inline bool regressors_finite(Form f, double x) {
  if (!std::isfinite(offset_adjust(f, x))) return false;
  for (Term t : form_terms(f))
    if (!std::isfinite(term_value(t, x))) return false;
  return true;
}

inline int class_index(const std::vector<std::string>& levels, const std::string& c) {
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i] == c) return static_cast<int>(i);
  return -1;
}

}  // namespace detail

// site-level design: one observation per pooled (ring x class) with
// positive exposure, distance regressor at the ring midpoint
inline Design build_design(const RingProfile& p, Form form) {
  Design d;
  d.form = form;
  std::set<std::string> classes;
  for (const auto& row : p.site)
    if (row.exposure > 0.0) classes.insert(row.search_class);
  if (classes.size() > 1) d.class_levels.assign(classes.begin(), classes.end());
  for (const auto& row : p.site) {
    if (row.exposure <= 0.0) continue;
    const double x = row.r - 0.5;
    if (x < support_lo(form)) {
      d.warnings.push_back("ring " + std::to_string(row.r) + " below support of " +
                           form_name(form) + "; dropped");
      continue;
    }
    d.x.push_back(x);
    d.y.push_back(static_cast<double>(row.ncarc));
    d.off.push_back(std::log(row.exposure) + offset_adjust(form, x));
    d.cls.push_back(d.class_levels.empty()
                        ? -1
                        : detail::class_index(d.class_levels, row.search_class));
  }
  if (d.n() == 0) throw degenerate_input("no usable rings for " + form_name(form));
  return d;
}

// grid design: one observation per cell at its exact center distance
inline Design build_design(const GridProfile& g, Form form) {
  Design d;
  d.form = form;
  for (const auto& t : g.turbines) {
    for (const auto& c : t.cells) {
      if (c.r < support_lo(form) || !detail::regressors_finite(form, c.r)) {
        d.warnings.push_back(t.name + ": cell at r=" + std::to_string(c.r) +
                             " unusable for " + form_name(form) + "; dropped");
        continue;
      }
      d.x.push_back(c.r);
      d.y.push_back(static_cast<double>(c.ncarc));
      d.off.push_back(std::log(c.exposure) + offset_adjust(form, c.r));
      d.cls.push_back(-1);
    }
  }
  if (d.n() == 0) throw degenerate_input("no usable cells for " + form_name(form));
  return d;
}

struct FittedGLM {
  Form form = Form::constant;
  std::vector<std::string> class_levels;
  Eigen::VectorXd beta;
  Eigen::MatrixXd cov;
  double loglik = std::numeric_limits<double>::quiet_NaN();
  double aicc = std::numeric_limits<double>::infinity();
  int n_obs = 0, k_params = 0;
  bool converged = false;

  // coefficients of the distance terms, in form order
  std::vector<double> distance_beta() const {
    const std::size_t nt = form_terms(form).size();
    std::vector<double> b(nt);
    for (std::size_t i = 0; i < nt; ++i)
      b[i] = beta(beta.size() - static_cast<int>(nt) + static_cast<int>(i));
    return b;
  }
  std::vector<std::string> coef_names() const {
    std::vector<std::string> names{"a"};
    for (std::size_t i = 1; i < class_levels.size(); ++i) names.push_back(class_levels[i]);
    for (Term t : form_terms(form)) names.push_back(term_name(t));
    return names;
  }
};

inline double aicc_value(double loglik, int k, int n) {
  if (n <= k + 1) return std::numeric_limits<double>::infinity();
  return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1.0) / (n - k - 1.0);
}
inline double aicc(const FittedGLM& fit) { return fit.aicc; }

inline FittedGLM fit_poisson(const Design& d) {
  const int n = d.n(), k = d.k();
  if (n < k) throw degenerate_input("fewer observations than parameters");
  double ytot = 0.0, etot = 0.0;
  for (int i = 0; i < n; ++i) {
    ytot += d.y[i];
    etot += std::exp(d.off[i]);
  }
  if (ytot < 1.0) throw degenerate_input("no carcasses to fit");

  const Eigen::MatrixXd X = d.matrix();
  Eigen::Map<const Eigen::VectorXd> y(d.y.data(), n), off(d.off.data(), n);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  beta(0) = std::log(ytot / etot);

  Eigen::MatrixXd A(k, k);
  double dev = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd eta =
        (X * beta + off).cwiseMin(700.0);  // exp() overflow guard on divergent steps
    const Eigen::VectorXd mu = eta.array().exp().max(1e-10).matrix();
    double dev_new = 0.0;
    for (int i = 0; i < n; ++i)
      dev_new += 2.0 * (y(i) > 0.0 ? y(i) * std::log(y(i) / mu(i)) - (y(i) - mu(i)) : mu(i));
    const Eigen::VectorXd z =
        (eta - off) + ((y - mu).array() / mu.array()).matrix();
    A = X.transpose() * mu.asDiagonal() * X;
    const Eigen::VectorXd b = X.transpose() * (mu.asDiagonal() * z);
    const Eigen::VectorXd sol = A.ldlt().solve(b);
    if ((A * sol - b).norm() > 1e-6 * (b.norm() + 1.0))
      throw singular_fit("singular design for " + form_name(d.form));
    beta = sol;
    if (std::isfinite(dev) && std::fabs(dev - dev_new) / (0.1 + std::fabs(dev_new)) < 1e-10) {
      dev = dev_new;
      converged = true;
      break;
    }
    dev = dev_new;
  }

  FittedGLM fit;
  fit.form = d.form;
  fit.class_levels = d.class_levels;
  fit.beta = beta;
  fit.n_obs = n;
  fit.k_params = k;
  fit.converged = converged;
  const Eigen::VectorXd eta = (X * beta + off).cwiseMin(700.0);
  const Eigen::VectorXd mu = eta.array().exp().max(1e-300).matrix();
  A = X.transpose() * mu.asDiagonal() * X;
  fit.cov = A.inverse();
  if (!fit.cov.allFinite())
    throw singular_fit("Fisher information not invertible for " + form_name(d.form));
  double ll = 0.0;
  for (int i = 0; i < n; ++i) ll += y(i) * eta(i) - mu(i) - std::lgamma(y(i) + 1.0);
  fit.loglik = ll;
  fit.aicc = aicc_value(ll, k, n);
  return fit;
}

// MVN draws about the MLE; eigenvalue clipping tolerates tiny negative
// eigenvalues from finite-precision covariance
inline Eigen::MatrixXd simulate_coefficients(const FittedGLM& fit, int nsim,
                                             std::uint64_t seed) {
  const int k = static_cast<int>(fit.beta.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.cov);
  Eigen::VectorXd lam = es.eigenvalues();
  const double lmax = std::max(lam.maxCoeff(), 0.0);
  for (int j = 0; j < k; ++j) {
    if (lam(j) < -1e-12 * std::max(lmax, 1.0))
      throw singular_fit("covariance not positive semi-definite");
    lam(j) = std::max(lam(j), 0.0);
  }
  const Eigen::MatrixXd B = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  Rng rng(seed);
  Eigen::MatrixXd draws(nsim, k);
  Eigen::VectorXd z(k);
  for (int i = 0; i < nsim; ++i) {
    for (int j = 0; j < k; ++j) z(j) = rng.normal();
    draws.row(i) = (fit.beta + B * z).transpose();
  }
  return draws;
}

// fit every requested form, capturing per-form failures
struct BatteryFit {
  Form form = Form::constant;
  FittedGLM fit;
  bool ok = false;
  std::string error;
};

template <class Profile>
std::vector<BatteryFit> fit_battery(const Profile& p, const std::vector<Form>& forms) {
  std::vector<BatteryFit> out;
  for (Form f : forms) {
    BatteryFit bf;
    bf.form = f;
    try {
      bf.fit = fit_poisson(build_design(p, f));
      bf.ok = bf.fit.converged;
      if (!bf.ok) bf.error = "did not converge";
    } catch (const std::exception& e) {
      bf.error = e.what();
    }
    out.push_back(std::move(bf));
  }
  return out;
}

}  // namespace dwp
