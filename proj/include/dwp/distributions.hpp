#pragma once
// Normalized distance distributions built from fitted model coefficients:
// density / CDF / quantile / sampling plus descriptive statistics.
//
// The CDF is a cached cumulative quadrature of the kernel. Forms whose kernel
// has log/inverse distance terms get the cache built in u = log(x) so that
// integrable endpoint singularities and slowly decaying power tails are
// handled on a finite, smooth grid; the remaining forms integrate directly
// in x. Closed-form normalizing constants are used where they exist, with
// the quadrature total as fallback (and as a cross-check in tests).
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "forms.hpp"
#include "quadrature.hpp"
#include "rng.hpp"

namespace dwp {

struct not_extensible : std::runtime_error {
  explicit not_extensible(const std::string& m) : std::runtime_error(m) {}
};

struct DistStats {
  double median, q75, q90, q95, mode, p_win;
  bool mode_at_boundary;
};

namespace detail {

// log of the standard normal CDF, safe deep into the lower tail.
inline double log_normal_cdf(double z) {
  if (z > -8.0) return std::log(0.5 * std::erfc(-z * 0.7071067811865476));
  // asymptotic erfcx expansion for the far tail
  const double t = -z * 0.7071067811865476;
  const double it2 = 1.0 / (2.0 * t * t);
  double series = 1.0 - it2 * (1.0 - 3.0 * it2 * (1.0 - 5.0 * it2 * (1.0 - 7.0 * it2)));
  const double log_erfcx = std::log(series / (t * 1.7724538509055160));
  return std::log(0.5) + log_erfcx - t * t;
}

inline std::optional<double> closed_log_norm(Form f, const std::vector<double>& b) {
  auto coef = [&](Term t) { return b[static_cast<std::size_t>(term_index(f, t))]; };
  switch (f) {
    case Form::xep1:
      return -2.0 * std::log(-coef(Term::X));
    case Form::xep01: {
      const double s = coef(Term::LogX) + 2.0;
      return std::lgamma(s) - s * std::log(-coef(Term::X));
    }
    case Form::xep2:
      return -std::log(-2.0 * coef(Term::X2));
    case Form::xep02: {
      const double s = 0.5 * (coef(Term::LogX) + 2.0);
      return std::lgamma(s) - std::log(2.0) - s * std::log(-coef(Term::X2));
    }
    case Form::lognormal: {
      const double s2 = -0.5 / coef(Term::Log2X);
      const double mu = (coef(Term::LogX) + 2.0) * s2;
      return 0.5 * std::log(2.0 * M_PI * s2) + mu * mu / (2.0 * s2);
    }
    case Form::tnormal: {
      const double s2 = -0.5 / coef(Term::X2);
      const double mu = s2 * coef(Term::X);
      return 0.5 * std::log(2.0 * M_PI * s2) + mu * mu / (2.0 * s2) +
             log_normal_cdf(mu / std::sqrt(s2));
    }
    case Form::maxwell_boltzmann:
      return std::log(0.25) + 0.5 * (std::log(M_PI) - 3.0 * std::log(-coef(Term::X2)));
    case Form::xep0:
      return -std::log(-(coef(Term::LogX) + 2.0));
    case Form::xepi0: {
      const double s = -(coef(Term::LogX) + 2.0);
      return std::lgamma(s) - s * std::log(-coef(Term::InvX));
    }
    case Form::chisquared: {
      const double s = coef(Term::LogX) + 2.0;
      return std::lgamma(s) + s * std::log(2.0);
    }
    case Form::exponential:
      return -std::log(-coef(Term::X));
    case Form::inverse_gaussian:
      return 0.5 * (std::log(M_PI) - std::log(-coef(Term::InvX))) -
             2.0 * std::sqrt(coef(Term::InvX) * coef(Term::X));
    default:
      return std::nullopt;  // xep12, xep012, xep123, xep0123: numeric
  }
}

inline bool needs_log_space(Form f) {
  for (Term t : form_terms(f))
    if (t == Term::LogX || t == Term::Log2X || t == Term::InvX) return true;
  return false;
}

}  // namespace detail

class DistanceDistribution {
 public:
  DistanceDistribution(Form f, std::vector<double> beta)
      : form_(f), beta_(std::move(beta)) {
    if (!dwp::extensible(form_, beta_))
      throw not_extensible(form_name(form_) + " is not extensible at these coefficients");
    tspace_ = detail::needs_log_space(form_);
    build_cache();
    if (auto closed = detail::closed_log_norm(form_, beta_))
      log_norm_ = *closed;
    else
      log_norm_ = scale_ + std::log(cache_total_);
    z_scaled_ = std::exp(log_norm_ - scale_);
  }

  Form form() const { return form_; }
  const std::vector<double>& beta() const { return beta_; }
  double log_norm_const() const { return log_norm_; }
  double support_lo() const { return dwp::support_lo(form_); }
  double support_hi() const { return tspace_ ? std::exp(u_hi_) : u_hi_; }
  // total kernel mass from the quadrature cache (diagnostic)
  double quadrature_norm() const { return std::exp(scale_ + std::log(cache_total_)); }

  double ddd(double x) const {
    if (x < support_lo() || !(x < std::numeric_limits<double>::infinity())) return 0.0;
    return std::exp(log_kernel(form_, beta_, x) - log_norm_);
  }

  double pdd(double x) const {
    if (x <= support_lo()) return 0.0;
    const double u = tspace_ ? std::log(x) : x;
    if (u <= ku_.front()) return 0.0;
    if (u >= ku_.back()) return std::min(1.0, cache_total_ / z_scaled_);
    const auto it = std::upper_bound(ku_.begin(), ku_.end(), u);
    const std::size_t i = static_cast<std::size_t>(it - ku_.begin()) - 1;
    const double part = quad::gl7([this](double v) { return integrand(v); }, ku_[i], u);
    return std::clamp((kc_[i] + part) / z_scaled_, 0.0, 1.0);
  }

  double qdd(double p) const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("qdd: p outside [0, 1]");
    if (p <= 0.0) return support_lo();
    const double target = p * z_scaled_;
    if (target >= kc_.back()) return support_hi();
    const auto it = std::upper_bound(kc_.begin(), kc_.end(), target);
    std::size_t i = static_cast<std::size_t>(it - kc_.begin());
    if (i == 0) i = 1;
    double xa = tspace_ ? std::exp(ku_[i - 1]) : ku_[i - 1];
    double xb = tspace_ ? std::exp(ku_[i]) : ku_[i];
    auto fn = [this, p](double x) { return pdd(x) - p; };
    double fa = fn(xa), fb = fn(xb);
    if (fa >= 0.0) return xa;
    if (fb <= 0.0) return xb;
    boost::math::tools::eps_tolerance<double> tol(48);
    std::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(fn, xa, xb, fa, fb, tol, iters);
    return 0.5 * (r.first + r.second);
  }

  double rdd(Rng& rng) const { return qdd(rng.uniform01()); }

  DistStats stats(double srad) const {
    DistStats s{};
    s.median = qdd(0.50);
    s.q75 = qdd(0.75);
    s.q90 = qdd(0.90);
    s.q95 = qdd(0.95);
    const double lo = support_lo();
    const double hi = qdd(0.999);
    auto logf = [this](double x) { return log_kernel(form_, beta_, x); };
    // coarse scan guards against local optima before golden-section polish
    const int n = 200;
    double best = lo, bestv = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      const double x = lo + (hi - lo) * i / n;
      const double v = logf(std::max(x, lo + 1e-12));
      if (v > bestv) {
        bestv = v;
        best = x;
      }
    }
    const double step = (hi - lo) / n;
    const double a = std::max(lo, best - step), b = std::min(hi, best + step);
    s.mode = quad::golden_max(logf, std::max(a, lo + 1e-12), b, 1e-6);
    if (s.mode - lo <= 2e-6) {
      s.mode = lo;
      s.mode_at_boundary = true;
    } else {
      s.mode_at_boundary = false;
    }
    s.p_win = pdd(srad);
    return s;
  }

 private:
  double logq(double u) const {
    if (tspace_) return log_kernel_logx(form_, beta_, u) + u;
    return log_kernel(form_, beta_, u);
  }
  double integrand(double u) const { return std::exp(logq(u) - scale_); }

  void build_cache() {
    const double lo = dwp::support_lo(form_);
    // locate the integrand's peak on a log-spaced grid
    double um_best = 0.0, q_best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 600; ++i) {
      const double x = std::max(lo + 1e-12, std::pow(10.0, -6.0 + 15.0 * i / 600.0));
      const double u = tspace_ ? std::log(x) : x;
      const double q = logq(u);
      if (q > q_best) {
        q_best = q;
        um_best = u;
      }
    }
    scale_ = q_best;

    // upper bound: grow until the next piece adds a negligible fraction
    double xm = tspace_ ? std::exp(um_best) : um_best;
    double hi = std::max({64.0, 4.0 * xm, lo + 1.0});
    double u_hi = tspace_ ? std::log(hi) : hi;
    double rough = quad::gl15([this](double v) { return integrand(v); },
                              tspace_ ? std::max(um_best - 8.0, std::log(std::max(lo, 1e-300))) : lo,
                              u_hi);
    double stepw = tspace_ ? 2.0 : hi;
    for (int it = 0; it < 600; ++it) {
      // wild (but extensible) draws can peak beyond the scan grid: re-anchor
      // the log-scale before it overflows exp()
      const double qmid = logq(u_hi + 0.5 * stepw);
      if (qmid > scale_ + 600.0) {
        rough *= std::exp(scale_ - qmid);
        scale_ = qmid;
      }
      const double piece =
          quad::gl15([this](double v) { return integrand(v); }, u_hi, u_hi + stepw);
      if (!(piece > rough * 1e-13)) break;
      rough += piece;
      u_hi += stepw;
      stepw *= 2.0;
    }
    u_hi_ = u_hi + stepw;  // include the final (negligible) window

    // lower bound
    if (tspace_) {
      if (lo > 0.0) {
        u_lo_ = std::log(lo);
      } else {
        double u_lo = std::min(um_best, u_hi_) - 1.0;
        double wid = 1.0;
        for (int it = 0; it < 600; ++it) {
          const double piece =
              quad::gl15([this](double v) { return integrand(v); }, u_lo - wid, u_lo);
          if (!(piece > rough * 1e-13)) break;
          u_lo -= wid;
          wid *= 2.0;
        }
        u_lo_ = u_lo - wid;
      }
    } else {
      u_lo_ = lo;
    }

    std::vector<quad::Segment> segs;
    // the scaled integrand peaks near 1, so its double-precision error floor
    // sits around 1e-13 per unit width; `rough` can undershoot the integral
    // by orders of magnitude when the fixed panels straddle a needle peak
    // (wild covariance draws), and a tolerance below the floor would recurse
    // to full depth across the peak and exhaust memory
    const double tol = 1e-11 * (rough > 1.0 ? rough : 1.0);
    cache_total_ = quad::adaptive_simpson([this](double v) { return integrand(v); }, u_lo_,
                                          u_hi_, tol, &segs, 6);
    ku_.resize(segs.size() + 1);
    kc_.resize(segs.size() + 1);
    ku_[0] = segs.front().a;
    kc_[0] = 0.0;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      ku_[i + 1] = segs[i].b;
      kc_[i + 1] = kc_[i] + segs[i].integral;
    }
    cache_total_ = kc_.back();
  }

  Form form_;
  std::vector<double> beta_;
  double log_norm_ = 0.0;
  double scale_ = 0.0;     // log-scale factor keeping the integrand in range
  double z_scaled_ = 1.0;  // exp(log_norm_ - scale_)
  bool tspace_ = false;
  double u_lo_ = 0.0, u_hi_ = 0.0;
  std::vector<double> ku_, kc_;
  double cache_total_ = 0.0;
};

inline std::optional<DistanceDistribution> make_distribution(Form f,
                                                             const std::vector<double>& beta) {
  if (!extensible(f, beta)) return std::nullopt;
  return DistanceDistribution(f, beta);
}

inline DistanceDistribution normalize(Form f, const std::vector<double>& beta) {
  return DistanceDistribution(f, beta);
}

inline double ddd(double x, const DistanceDistribution& d) { return d.ddd(x); }
inline double pdd(double x, const DistanceDistribution& d) { return d.pdd(x); }
inline double qdd(double p, const DistanceDistribution& d) { return d.qdd(p); }

inline std::vector<double> rdd(std::size_t n, const DistanceDistribution& d,
                               std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = d.rdd(rng);
  return out;
}

// Vectorized over simulated coefficient draws: rows that are not extensible
// yield NaN rather than aborting the batch.
inline std::vector<double> pdd(double x, Form f,
                               const std::vector<std::vector<double>>& draws) {
  std::vector<double> out(draws.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < draws.size(); ++i)
    if (auto d = make_distribution(f, draws[i])) out[i] = d->pdd(x);
  return out;
}

inline DistStats dist_stats(const DistanceDistribution& d, double srad) {
  return d.stats(srad);
}

}  // namespace dwp
