#pragma once
// Shared 1-D quadrature helpers: fixed Gauss-Legendre rules, an adaptive
// Simpson integrator that can emit its accepted subintervals (used to build
// cumulative CDF caches), and golden-section maximization.
#include <cmath>
#include <functional>
#include <vector>

namespace dwp::quad {

// 15-point Gauss-Legendre on [a, b]; exact for polynomials up to degree 29.
template <class F>
double gl15(F&& f, double a, double b) {
  static const double xk[8] = {0.0,
                               0.2011940939974345,
                               0.3941513470775634,
                               0.5709721726085388,
                               0.7244177313601701,
                               0.8482065834104272,
                               0.9372733924007060,
                               0.9879925180204854};
  static const double wk[8] = {0.2025782419255613, 0.1984314853271116, 0.1861610000155622,
                               0.1662692058169939, 0.1395706779261543, 0.1071592204671719,
                               0.0703660474881081, 0.0307532419961173};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = wk[0] * f(c);
  for (int i = 1; i < 8; ++i) s += wk[i] * (f(c - h * xk[i]) + f(c + h * xk[i]));
  return s * h;
}

// 7-point Gauss-Legendre on [a, b].
template <class F>
double gl7(F&& f, double a, double b) {
  static const double xk[4] = {0.0, 0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
  static const double wk[4] = {0.4179591836734694, 0.3818300505051189, 0.2797053914892766,
                               0.1294849661688697};
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = wk[0] * f(c);
  for (int i = 1; i < 4; ++i) s += wk[i] * (f(c - h * xk[i]) + f(c + h * xk[i]));
  return s * h;
}

struct Segment {
  double a, b, integral;
};

namespace detail {
template <class F>
void simpson_rec(F& f, double a, double b, double fa, double fm, double fb, double whole,
                 double tol, int depth, int min_depth, std::vector<Segment>* out, double* acc) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  // NaN fails every tolerance test; accept the leaf so it surfaces in the
  // total instead of recursing to full depth
  if (std::isnan(err) || (depth >= min_depth && (std::fabs(err) <= 15.0 * tol || depth >= 52))) {
    const double v = left + right + err / 15.0;
    if (out) {
      // keep two segments so partial integrals stay on narrow smooth pieces
      out->push_back({a, m, left + 0.5 * err / 15.0});
      out->push_back({m, b, right + 0.5 * err / 15.0});
    }
    *acc += v;
    return;
  }
  simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, min_depth, out, acc);
  simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, min_depth, out, acc);
}
}  // namespace detail

// Adaptive Simpson on [a, b] with absolute tolerance; optionally records the
// accepted subintervals (in order) for cumulative-CDF caching.
template <class F>
double adaptive_simpson(F&& f, double a, double b, double tol_abs,
                        std::vector<Segment>* out = nullptr, int min_depth = 4) {
  if (!(b > a)) return 0.0;
  const double fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  double acc = 0.0;
  detail::simpson_rec(f, a, b, fa, fm, fb, whole, tol_abs, 0, min_depth, out, &acc);
  return acc;
}

// Golden-section maximization on [a, b]; ties resolve toward smaller x
// because the left candidate is kept on equality.
template <class F>
double golden_max(F&& f, double a, double b, double tol) {
  const double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 >= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace dwp::quad
