#pragma once
// The catalog of distance-model forms fit by Poisson regression.
//
// Every form models the per-area carcass density as exp(p(x) + adjust(x))
// where p(x) is a linear combination of distance terms; the implied
// per-distance density kernel is then
//     log f(x) = log x + adjust(x) + p(x)
// (the log x comes from the 2*pi*x circumference factor). The same adjust()
// enters the GLM as an extra additive offset, so the fitted coefficients are
// directly the kernel's parameters.
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dwp {

enum class Term { InvX, LogX, X, X2, X3, Log2X };

enum class Form {
  constant,
  xep1,
  xep01,
  xep2,
  xep02,
  xep12,
  xep012,
  xep123,
  xep0123,
  lognormal,
  tnormal,
  maxwell_boltzmann,
  // supplementary set
  xep0,
  xepi0,
  chisquared,
  exponential,
  inverse_gaussian,
};

inline double term_value(Term t, double x) {
  switch (t) {
    case Term::InvX: return 1.0 / x;
    case Term::LogX: return std::log(x);
    case Term::X: return x;
    case Term::X2: return x * x;
    case Term::X3: return x * x * x;
    case Term::Log2X: {
      const double l = std::log(x);
      return l * l;
    }
  }
  return 0.0;
}

inline std::string term_name(Term t) {
  switch (t) {
    case Term::InvX: return "b_i";
    case Term::LogX: return "b0";
    case Term::X: return "b1";
    case Term::X2: return "b2";
    case Term::X3: return "b3";
    case Term::Log2X: return "b_log2";
  }
  return "?";
}

inline const std::vector<Term>& form_terms(Form f) {
  static const std::vector<Term> none{};
  static const std::vector<Term> t1{Term::X};
  static const std::vector<Term> t01{Term::LogX, Term::X};
  static const std::vector<Term> t2{Term::X2};
  static const std::vector<Term> t02{Term::LogX, Term::X2};
  static const std::vector<Term> t12{Term::X, Term::X2};
  static const std::vector<Term> t012{Term::LogX, Term::X, Term::X2};
  static const std::vector<Term> t123{Term::X, Term::X2, Term::X3};
  static const std::vector<Term> t0123{Term::LogX, Term::X, Term::X2, Term::X3};
  static const std::vector<Term> tln{Term::LogX, Term::Log2X};
  static const std::vector<Term> t0{Term::LogX};
  static const std::vector<Term> ti0{Term::InvX, Term::LogX};
  static const std::vector<Term> ti1{Term::InvX, Term::X};
  switch (f) {
    case Form::constant: return none;
    case Form::xep1: return t1;
    case Form::xep01: return t01;
    case Form::xep2: return t2;
    case Form::xep02: return t02;
    case Form::xep12: return t12;
    case Form::xep012: return t012;
    case Form::xep123: return t123;
    case Form::xep0123: return t0123;
    case Form::lognormal: return tln;
    case Form::tnormal: return t12;
    case Form::maxwell_boltzmann: return t2;
    case Form::xep0: return t0;
    case Form::xepi0: return ti0;
    case Form::chisquared: return t0;
    case Form::exponential: return t1;
    case Form::inverse_gaussian: return ti1;
  }
  return none;
}

// Additive log-offset modifier entering both the GLM offset and the kernel.
inline double offset_adjust(Form f, double x) {
  switch (f) {
    case Form::tnormal: return -std::log(x);
    case Form::maxwell_boltzmann: return std::log(x);
    case Form::chisquared: return -0.5 * x;
    case Form::exponential: return -std::log(x);
    case Form::inverse_gaussian: return -2.5 * std::log(x);
    default: return 0.0;
  }
}

inline double support_lo(Form f) { return f == Form::xep0 ? 1.0 : 0.0; }

inline std::string form_name(Form f) {
  switch (f) {
    case Form::constant: return "constant";
    case Form::xep1: return "xep1";
    case Form::xep01: return "xep01";
    case Form::xep2: return "xep2";
    case Form::xep02: return "xep02";
    case Form::xep12: return "xep12";
    case Form::xep012: return "xep012";
    case Form::xep123: return "xep123";
    case Form::xep0123: return "xep0123";
    case Form::lognormal: return "lognormal";
    case Form::tnormal: return "tnormal";
    case Form::maxwell_boltzmann: return "MaxwellBoltzmann";
    case Form::xep0: return "xep0";
    case Form::xepi0: return "xepi0";
    case Form::chisquared: return "chisquared";
    case Form::exponential: return "exponential";
    case Form::inverse_gaussian: return "inverseGaussian";
  }
  return "?";
}

inline Form parse_form(const std::string& s) {
  static const Form all[] = {
      Form::constant, Form::xep1,   Form::xep01,     Form::xep2,        Form::xep02,
      Form::xep12,    Form::xep012, Form::xep123,    Form::xep0123,     Form::lognormal,
      Form::tnormal,  Form::maxwell_boltzmann,       Form::xep0,        Form::xepi0,
      Form::chisquared, Form::exponential, Form::inverse_gaussian};
  for (Form f : all)
    if (form_name(f) == s) return f;
  throw std::runtime_error("unknown model form: " + s);
}

// The 12 standard forms in catalog order.
inline const std::vector<Form>& standard_forms() {
  static const std::vector<Form> v{
      Form::constant, Form::xep1,     Form::xep01,  Form::xep2,
      Form::xep02,    Form::xep12,    Form::xep012, Form::xep123,
      Form::xep0123,  Form::lognormal, Form::tnormal, Form::maxwell_boltzmann};
  return v;
}

inline const std::vector<Form>& all_forms() {
  static const std::vector<Form> v{
      Form::constant, Form::xep1,      Form::xep01,   Form::xep2,
      Form::xep02,    Form::xep12,     Form::xep012,  Form::xep123,
      Form::xep0123,  Form::lognormal, Form::tnormal, Form::maxwell_boltzmann,
      Form::xep0,     Form::xepi0,     Form::chisquared, Form::exponential,
      Form::inverse_gaussian};
  return v;
}

inline int term_index(Form f, Term t) {
  const auto& terms = form_terms(f);
  for (std::size_t i = 0; i < terms.size(); ++i)
    if (terms[i] == t) return static_cast<int>(i);
  return -1;
}

// Tail-behavior conditions under which the fitted kernel integrates to a
// finite value on its support, per the form catalog. beta is ordered like
// form_terms(f).
inline bool extensible(Form f, const std::vector<double>& beta) {
  const auto& terms = form_terms(f);
  if (beta.size() != terms.size())
    throw std::invalid_argument("coefficient count does not match form " + form_name(f));
  auto coef = [&](Term t) { return beta[static_cast<std::size_t>(term_index(f, t))]; };
  switch (f) {
    case Form::constant: return false;
    case Form::xep1: return coef(Term::X) < 0;
    case Form::xep01: return coef(Term::LogX) > -2 && coef(Term::X) < 0;
    case Form::xep2: return coef(Term::X2) < 0;
    case Form::xep02: return coef(Term::LogX) > -2 && coef(Term::X2) < 0;
    case Form::xep12: return coef(Term::X2) < 0;
    case Form::xep012: return coef(Term::LogX) > -2 && coef(Term::X2) < 0;
    case Form::xep123: return coef(Term::X3) < 0;
    case Form::xep0123: return coef(Term::LogX) > -2 && coef(Term::X3) < 0;
    case Form::lognormal: return coef(Term::Log2X) < 0;
    case Form::tnormal: return coef(Term::X2) < 0;
    case Form::maxwell_boltzmann: return coef(Term::X2) < 0;
    case Form::xep0: return coef(Term::LogX) < -2;
    case Form::xepi0: return coef(Term::LogX) < -2 && coef(Term::InvX) < 0;
    case Form::chisquared: return coef(Term::LogX) > -2;
    case Form::exponential: return coef(Term::X) < 0;
    case Form::inverse_gaussian: return coef(Term::InvX) < 0 && coef(Term::X) < 0;
  }
  return false;
}

// log of the unnormalized per-distance kernel.
inline double log_kernel(Form f, const std::vector<double>& beta, double x) {
  if (x < support_lo(f)) return -std::numeric_limits<double>::infinity();
  if (x <= 0.0) {
    // limit handling: kernels with positive distance powers vanish at 0
    x = std::numeric_limits<double>::min();
  }
  double v = std::log(x) + offset_adjust(f, x);
  const auto& terms = form_terms(f);
  for (std::size_t i = 0; i < terms.size(); ++i) v += beta[i] * term_value(terms[i], x);
  return v;
}

// Kernel at x = exp(u), evaluated without materializing x so it stays finite
// for |u| far beyond exp() range (power-law tails need u in the thousands).
// Assumes extensible coefficients, i.e. the dominant tail term is negative.
inline double log_kernel_logx(Form f, const std::vector<double>& beta, double u) {
  const double lo = support_lo(f);
  if (lo > 0.0 && u < std::log(lo)) return -std::numeric_limits<double>::infinity();
  const auto& terms = form_terms(f);
  if (u > 200.0) {
    // any polynomial distance term dominates everything else out here
    if (f == Form::chisquared) return -std::numeric_limits<double>::infinity();
    for (Term t : terms)
      if (t == Term::X || t == Term::X2 || t == Term::X3)
        return -std::numeric_limits<double>::infinity();
  }
  if (u < -200.0) {
    for (Term t : terms)
      if (t == Term::InvX) return -std::numeric_limits<double>::infinity();
  }
  double v = u;
  switch (f) {
    case Form::tnormal: v -= u; break;
    case Form::maxwell_boltzmann: v += u; break;
    case Form::chisquared: v -= 0.5 * std::exp(u); break;
    case Form::exponential: v -= u; break;
    case Form::inverse_gaussian: v -= 2.5 * u; break;
    default: break;
  }
  for (std::size_t i = 0; i < terms.size(); ++i) {
    switch (terms[i]) {
      case Term::InvX: v += beta[i] * std::exp(-u); break;
      case Term::LogX: v += beta[i] * u; break;
      case Term::X: v += beta[i] * std::exp(u); break;
      case Term::X2: v += beta[i] * std::exp(2.0 * u); break;
      case Term::X3: v += beta[i] * std::exp(3.0 * u); break;
      case Term::Log2X: v += beta[i] * u * u; break;
    }
  }
  return v;
}

}  // namespace dwp
