#pragma once
// Coverage estimation: psi (probability a carcass lies in searched area) with
// parameter uncertainty propagated through coefficient draws, the posterior
// of the true count M given the found count, dwp draws, and GenEst export.
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "csv.hpp"
#include "distributions.hpp"
#include "glm.hpp"
#include "rings.hpp"

namespace dwp {

struct estimation_failed : std::runtime_error {
  explicit estimation_failed(const std::string& m) : std::runtime_error(m) {}
};

// type-7 (linear interpolation) quantile over the finite entries
inline double quantile_type7(std::vector<double> v, double p) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }),
          v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double h = (v.size() - 1) * std::clamp(p, 0.0, 1.0);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= v.size()) return v.back();
  const double frac = h - lo;
  return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

struct PsiDraws {
  std::vector<std::string> turbines;  // column order; a final "total" column follows
  Eigen::MatrixXd draws;              // nsim x (n_turbines + 1)
  double na_fraction = 0.0;           // fraction of non-extensible coefficient draws
  Form form = Form::constant;

  int nsim() const { return static_cast<int>(draws.rows()); }
  int n_turbines() const { return static_cast<int>(turbines.size()); }
  std::vector<double> column(int t) const {
    std::vector<double> v(draws.rows());
    for (int i = 0; i < draws.rows(); ++i) v[i] = draws(i, t);
    return v;
  }
};

namespace detail {

inline std::vector<std::vector<double>> draw_distance_coefs(const FittedGLM& fit, int nsim,
                                                            std::uint64_t seed) {
  const Eigen::MatrixXd all = simulate_coefficients(fit, nsim, seed);
  const std::size_t nt = form_terms(fit.form).size();
  std::vector<std::vector<double>> out(nsim, std::vector<double>(nt));
  for (int i = 0; i < nsim; ++i)
    for (std::size_t j = 0; j < nt; ++j)
      out[i][j] = all(i, all.cols() - static_cast<int>(nt) + static_cast<int>(j));
  out[0] = fit.distance_beta();  // draw 1 is the MLE by convention
  return out;
}

}  // namespace detail

// ring route: psi(draw, turbine) = sum over rings of the CDF increment times
// that ring's searched proportion; exact for ring-constant coverage
inline PsiDraws est_psi(const RingProfile& p, const FittedGLM& fit, int nsim,
                        std::uint64_t seed) {
  if (!extensible(fit.form, fit.distance_beta()))
    throw estimation_failed(form_name(fit.form) + " is not extensible at the MLE");
  const int T = static_cast<int>(p.turbines.size());
  const int srad = p.srad;

  // per-turbine searched proportion by ring, plus the pooled site profile
  std::vector<std::vector<double>> pinc(T + 1, std::vector<double>(srad + 1, 0.0));
  for (int t = 0; t < T; ++t)
    for (const auto& row : p.turbines[t].rows)
      pinc[t][row.r] += row.exposure / annulus_area(row.r);
  for (const auto& row : p.site)
    pinc[T][row.r] += row.exposure / (annulus_area(row.r) * T);

  const auto coefs = detail::draw_distance_coefs(fit, nsim, seed);
  PsiDraws out;
  out.form = fit.form;
  for (const auto& t : p.turbines) out.turbines.push_back(t.name);
  out.draws.setConstant(nsim, T + 1, std::numeric_limits<double>::quiet_NaN());

  int n_na = 0;
  std::vector<double> cdf(srad + 1, 0.0);
  for (int i = 0; i < nsim; ++i) {
    if (!extensible(fit.form, coefs[i])) {
      ++n_na;
      continue;
    }
    const DistanceDistribution dist(fit.form, coefs[i]);
    for (int r = 1; r <= srad; ++r) cdf[r] = dist.pdd(r);
    for (int t = 0; t <= T; ++t) {
      double psi = 0.0;
      for (int r = 1; r <= srad; ++r) psi += (cdf[r] - cdf[r - 1]) * pinc[t][r];
      out.draws(i, t) = psi;
    }
  }
  out.na_fraction = static_cast<double>(n_na) / nsim;
  return out;
}

// grid route: cell-by-cell integration of the per-area density, slightly
// less accurate than ring CDF differences
inline PsiDraws est_psi(const GridProfile& g, const FittedGLM& fit, int nsim,
                        std::uint64_t seed) {
  if (!extensible(fit.form, fit.distance_beta()))
    throw estimation_failed(form_name(fit.form) + " is not extensible at the MLE");
  const int T = static_cast<int>(g.turbines.size());
  const auto coefs = detail::draw_distance_coefs(fit, nsim, seed);
  PsiDraws out;
  out.form = fit.form;
  for (const auto& t : g.turbines) out.turbines.push_back(t.name);
  out.draws.setConstant(nsim, T + 1, std::numeric_limits<double>::quiet_NaN());

  int n_na = 0;
  for (int i = 0; i < nsim; ++i) {
    if (!extensible(fit.form, coefs[i])) {
      ++n_na;
      continue;
    }
    const DistanceDistribution dist(fit.form, coefs[i]);
    const double lz = dist.log_norm_const();
    double total = 0.0;
    for (int t = 0; t < T; ++t) {
      double psi = 0.0;
      for (const auto& c : g.turbines[t].cells) {
        if (c.r <= 0.0 || c.r < dist.support_lo()) continue;  // origin-cell guard
        const double log_h =
            log_kernel(fit.form, coefs[i], c.r) - std::log(2.0 * M_PI * c.r) - lz;
        if (std::isfinite(log_h)) psi += std::exp(log_h) * c.exposure;
      }
      psi = std::clamp(psi, 0.0, 1.0);
      out.draws(i, t) = psi;
      total += psi;
    }
    out.draws(i, T) = total / T;
  }
  out.na_fraction = static_cast<double>(n_na) / nsim;
  return out;
}

// ---- posterior of the true count M given the in-area count m_in
//
// pmf(m) proportional to Binomial(m_in; m, psi) * (sqrt(m+1) - sqrt(m)).
// Weights walk incrementally via the ratio
//   w(m+1)/w(m) = (m+1)/(m+1-m_in) * (1-psi) * prior(m+1)/prior(m)
// so no per-term lgamma is needed.

namespace detail {

inline double m_prior(long m) {
  // sqrt(m+1) - sqrt(m), in cancellation-free form
  return 1.0 / (std::sqrt(m + 1.0) + std::sqrt(static_cast<double>(m)));
}

inline long posterior_cap(long m_in, double psi) {
  return static_cast<long>(m_in / psi * 20.0 + 1000.0);
}

}  // namespace detail

struct PosteriorM {
  long m0 = 0;              // support starts here (= m_in)
  std::vector<double> pmf;  // normalized
};

inline PosteriorM posterior_m(long m_in, double psi) {
  if (!(psi > 0.0 && psi <= 1.0)) throw std::invalid_argument("posterior_m: psi outside (0, 1]");
  if (m_in < 0) throw std::invalid_argument("posterior_m: negative count");
  PosteriorM out;
  out.m0 = m_in;
  if (psi == 1.0) {
    out.pmf = {1.0};
    return out;
  }
  const long cap = detail::posterior_cap(m_in, psi);
  const double q = 1.0 - psi;
  double w = detail::m_prior(m_in);
  double acc = 0.0;
  for (long m = m_in; m <= cap; ++m) {
    out.pmf.push_back(w);
    acc += w;
    if (m > m_in / psi && w < acc * 1e-14) break;
    w *= (m + 1.0) / (m + 1.0 - m_in) * q * detail::m_prior(m + 1) / detail::m_prior(m);
    if (w > 1e270) {
      // the unnormalized walk spans e^(-m_in ln psi): rescale by an exact
      // power of two before it overflows
      constexpr double s = 0x1p-900;
      w *= s;
      acc *= s;
      for (auto& v : out.pmf) v *= s;
    }
  }
  for (auto& v : out.pmf) v /= acc;
  return out;
}

// credible interval: lower = 1 + the largest m with CDF below level/2 margin,
// upper = first m reaching the upper margin
inline std::pair<long, long> credible_interval_m(long m_in, double psi,
                                                 double level = 0.90) {
  const PosteriorM post = posterior_m(m_in, psi);
  const double alpha = 1.0 - level;
  long lo = post.m0, hi = post.m0 + static_cast<long>(post.pmf.size()) - 1;
  double cdf = 0.0;
  bool lo_set = false, hi_set = false;
  for (std::size_t i = 0; i < post.pmf.size(); ++i) {
    cdf += post.pmf[i];
    const long m = post.m0 + static_cast<long>(i);
    if (!lo_set && cdf >= 0.5 * alpha) {
      lo = m + 1;
      lo_set = true;
    }
    if (!hi_set && cdf >= 1.0 - 0.5 * alpha) {
      hi = m;
      hi_set = true;
      break;
    }
  }
  lo = std::max(std::min(lo, hi), m_in);
  return {lo, hi};
}

// sample M by an incremental weight walk; weights from the accumulation pass
// are kept in a per-thread buffer so the inversion pass is a plain scan (this
// runs once per coefficient draw per turbine, so it is on the hot path)
inline long sample_posterior_m(long m_in, double psi, Rng& rng) {
  if (psi >= 1.0) return m_in;
  psi = std::max(psi, 1e-3);  // wild tiny draws would make the walk unbounded
  const long cap = detail::posterior_cap(m_in, psi);
  const double q = 1.0 - psi;
  constexpr std::size_t buf_max = 1 << 22;
  thread_local std::vector<double> buf;
  buf.clear();
  // carry sqrt(m) / sqrt(m+1) across iterations: one sqrt per step
  double s0 = std::sqrt(static_cast<double>(m_in)), s1 = std::sqrt(m_in + 1.0);
  double w = 1.0 / (s1 + s0), acc = 0.0;
  long m_end = cap;
  for (long m = m_in; m <= cap; ++m) {
    acc += w;
    if (buf.size() < buf_max) buf.push_back(w);
    if (m > m_in / psi && w < acc * 1e-14) {
      m_end = m;
      break;
    }
    const double s2 = std::sqrt(m + 2.0);
    w *= (m + 1.0) / (m + 1.0 - m_in) * q * (s1 + s0) / (s2 + s1);
    s0 = s1;
    s1 = s2;
    if (w > 1e270) {
      // rescale the whole walk state by an exact power of two before the
      // unnormalized weights overflow (peak is about e^(-m_in ln psi))
      constexpr double sc = 0x1p-900;
      w *= sc;
      acc *= sc;
      for (auto& v : buf) v *= sc;
    }
  }
  const double target = rng.uniform01() * acc;
  double run = 0.0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    run += buf[i];
    if (run >= target) return m_in + static_cast<long>(i);
  }
  // walk overran the buffer (tiny psi with a huge count): recompute the tail
  s0 = std::sqrt(m_in + static_cast<double>(buf.size()) - 1.0);
  s1 = std::sqrt(m_in + static_cast<double>(buf.size()));
  w = buf.empty() ? 1.0 / (s1 + s0) : buf.back();
  for (long m = m_in + static_cast<long>(buf.size()) - 1; m <= m_end; ++m) {
    if (m >= m_in + static_cast<long>(buf.size())) {
      run += w;
      if (run >= target) return m;
    }
    const double s2 = std::sqrt(m + 2.0);
    w *= (m + 1.0) / (m + 1.0 - m_in) * q * (s1 + s0) / (s2 + s1);
    s0 = s1;
    s1 = s2;
  }
  return m_end;
}

struct DwpDraws {
  std::vector<std::string> turbines;
  Eigen::MatrixXd draws;  // nsim x (n_turbines + 1); final column = site total
  std::vector<long> ncarc;
  long site_ncarc = 0;
};

// dwp draw = m_in / M with M sampled from the posterior at that draw's psi;
// turbines with no carcasses fall back to the psi draws themselves
inline DwpDraws est_dwp(const PsiDraws& psi, const std::vector<long>& ncarc,
                        std::uint64_t seed) {
  const int T = psi.n_turbines();
  if (static_cast<int>(ncarc.size()) != T)
    throw std::invalid_argument("est_dwp: ncarc length != number of turbines");
  DwpDraws out;
  out.turbines = psi.turbines;
  out.ncarc = ncarc;
  for (long n : ncarc) out.site_ncarc += n;
  out.draws.setConstant(psi.nsim(), T + 1, std::numeric_limits<double>::quiet_NaN());
  Rng rng(seed);
  for (int i = 0; i < psi.nsim(); ++i) {
    for (int t = 0; t <= T; ++t) {
      const double ps = psi.draws(i, t);
      if (!std::isfinite(ps)) continue;
      const long m_in = t == T ? out.site_ncarc : ncarc[t];
      if (m_in == 0) {
        out.draws(i, t) = ps;
      } else {
        const long M = sample_posterior_m(m_in, ps, rng);
        out.draws(i, t) = static_cast<double>(m_in) / static_cast<double>(M);
      }
    }
  }
  return out;
}

// ---- GenEst export

enum class GenestMode { point, simulated };

struct GenestTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

namespace detail {

inline std::string genest_value(double v, int digits) {
  return std::isfinite(v) ? csv::fmt(v, digits) : "NA";
}

}  // namespace detail

inline GenestTable format_genest(const DwpDraws& d, GenestMode mode, int round_digits = 3) {
  GenestTable tab;
  tab.header = {"turbine", "dwp"};
  const int T = static_cast<int>(d.turbines.size());
  if (mode == GenestMode::point) {
    for (int t = 0; t < T; ++t) {
      const double med = quantile_type7(
          [&] {
            std::vector<double> v(d.draws.rows());
            for (int i = 0; i < d.draws.rows(); ++i) v[i] = d.draws(i, t);
            return v;
          }(),
          0.5);
      tab.rows.push_back({d.turbines[t], detail::genest_value(med, round_digits)});
    }
  } else {
    for (int t = 0; t < T; ++t)
      for (int i = 0; i < d.draws.rows(); ++i)
        tab.rows.push_back(
            {d.turbines[t], detail::genest_value(d.draws(i, t), round_digits)});
  }
  return tab;
}

// one dwp column per carcass class (map order fixes the column order)
inline GenestTable format_genest(const std::map<std::string, DwpDraws>& by_class,
                                 GenestMode mode, int round_digits = 3) {
  if (by_class.empty()) throw std::invalid_argument("format_genest: no classes");
  GenestTable tab;
  tab.header = {"turbine"};
  for (const auto& [cls, d] : by_class) tab.header.push_back(cls);
  const auto& first = by_class.begin()->second;
  const int T = static_cast<int>(first.turbines.size());
  const int nsim = static_cast<int>(first.draws.rows());
  const int n_rows = mode == GenestMode::point ? T : T * nsim;
  for (int rix = 0; rix < n_rows; ++rix) {
    const int t = mode == GenestMode::point ? rix : rix / nsim;
    const int i = mode == GenestMode::point ? -1 : rix % nsim;
    std::vector<std::string> row{first.turbines[t]};
    for (const auto& [cls, d] : by_class) {
      if (mode == GenestMode::point) {
        std::vector<double> v(d.draws.rows());
        for (int j = 0; j < d.draws.rows(); ++j) v[j] = d.draws(j, t);
        row.push_back(detail::genest_value(quantile_type7(std::move(v), 0.5), round_digits));
      } else {
        row.push_back(detail::genest_value(d.draws(i, t), round_digits));
      }
    }
    tab.rows.push_back(std::move(row));
  }
  return tab;
}

inline void export_genest(const GenestTable& tab, const std::string& path) {
  csv::Writer w(path, tab.header);
  for (const auto& row : tab.rows) w.row(row);
}

}  // namespace dwp
