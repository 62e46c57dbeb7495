#pragma once
// Plot geometry: searched-area fraction by distance for the supported plot
// shapes, ring exposure integration, and polygon containment/quadrature.
#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "quadrature.hpp"

namespace dwp {

struct invalid_layout : std::runtime_error {
  explicit invalid_layout(const std::string& m) : std::runtime_error(m) {}
};
struct invalid_carcass : std::runtime_error {
  explicit invalid_carcass(const std::string& m) : std::runtime_error(m) {}
};

struct Point {
  double x = 0.0, y = 0.0;
};

// One simple polygon ring; multipolygon layouts hold several (pieces with the
// same class label combine by even-odd parity, so holes are supported).
struct Polygon {
  std::vector<Point> v;
  std::string cls;
};

inline bool point_in_polygon(const std::vector<Point>& v, double px, double py) {
  bool in = false;
  for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
    if ((v[i].y > py) != (v[j].y > py)) {
      const double xint =
          v[j].x + (py - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
      if (px < xint) in = !in;
    }
  }
  return in;
}

namespace detail {

inline bool segments_properly_intersect(Point a, Point b, Point c, Point d) {
  auto cross = [](Point o, Point p, Point q) {
    return (p.x - o.x) * (q.y - o.y) - (p.y - o.y) * (q.x - o.x);
  };
  const double d1 = cross(c, d, a), d2 = cross(c, d, b);
  const double d3 = cross(a, b, c), d4 = cross(a, b, d);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

}  // namespace detail

inline bool polygon_self_intersects(const std::vector<Point>& v) {
  const std::size_t n = v.size();
  if (n < 3) return true;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      // skip edges sharing a vertex
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_properly_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]))
        return true;
    }
  }
  return false;
}

// class label of the searched piece containing (x, y); empty optional-style
// sentinel is the empty string paired with `found = false`
inline bool classify_point(const std::vector<Polygon>& pieces, double x, double y,
                           std::string* cls_out) {
  std::map<std::string, int> parity;
  for (const auto& p : pieces)
    if (point_in_polygon(p.v, x, y)) parity[p.cls] ^= 1;
  for (const auto& [c, odd] : parity) {
    if (odd) {
      if (cls_out) *cls_out = c;
      return true;
    }
  }
  return false;
}

// ---- analytic coverage fractions: proportion of the circle of radius x
// ---- that lies inside the searched plot

inline double frac_circular(double x, double radius) { return x <= radius ? 1.0 : 0.0; }

// square plot given by half-side a (the "radius" column)
inline double frac_square(double x, double a) {
  if (x <= a) return 1.0;
  if (x >= a * std::sqrt(2.0)) return 0.0;
  return 1.0 - (4.0 / M_PI) * std::acos(a / x);
}

// road-and-pad: full pad coverage to padrad, then n_road radial road strips
// of width w out to the layout radius
inline double frac_rp(double x, double padrad, double w, int n_road, double radius) {
  if (x > radius) return 0.0;
  if (x <= padrad) return 1.0;
  const double s = std::min(1.0, w / (2.0 * x));
  return std::min(1.0, n_road * std::asin(s) / M_PI);
}

// exposure of one ring: integral of frac(x) * 2*pi*x over (a, b), split at the
// shape's transition radii so each piece is smooth
inline double ring_exposure(const std::function<double(double)>& frac, double a, double b,
                            std::vector<double> breaks) {
  breaks.push_back(a);
  breaks.push_back(b);
  std::sort(breaks.begin(), breaks.end());
  double s = 0.0, prev = a;
  for (double u : breaks) {
    u = std::clamp(u, a, b);
    if (u > prev) {
      s += quad::gl15([&](double x) { return frac(x) * 2.0 * M_PI * x; }, prev, u);
      prev = u;
    }
  }
  return s;
}

// ---- polygon layouts: annulus/polygon intersection by angular quadrature

struct PolygonExposureOptions {
  int n_angles = 3600;
  int n_radial = 5;  // per 1 m ring
};

// per-class exposure of ring (r-1, r] for rings 1..n_rings
inline std::map<std::string, std::vector<double>> polygon_ring_exposure(
    const std::vector<Polygon>& pieces, int n_rings,
    const PolygonExposureOptions& opt = {}) {
  for (const auto& p : pieces) {
    if (p.v.size() < 3) throw invalid_layout("polygon with fewer than 3 vertices");
    if (polygon_self_intersects(p.v)) throw invalid_layout("self-intersecting polygon");
  }
  std::map<std::string, std::vector<double>> out;
  const double dth = 2.0 * M_PI / opt.n_angles;
  const double dr = 1.0 / opt.n_radial;
  for (int r = 1; r <= n_rings; ++r) {
    for (int k = 0; k < opt.n_radial; ++k) {
      const double rho = (r - 1) + (k + 0.5) * dr;
      const double w = rho * dth * dr;
      for (int j = 0; j < opt.n_angles; ++j) {
        const double th = (j + 0.5) * dth;
        std::string cls;
        if (classify_point(pieces, rho * std::cos(th), rho * std::sin(th), &cls)) {
          auto& vec = out[cls];
          if (vec.empty()) vec.assign(n_rings, 0.0);
          vec[r - 1] += w;
        }
      }
    }
  }
  return out;
}

inline double max_vertex_distance(const std::vector<Polygon>& pieces) {
  double m = 0.0;
  for (const auto& p : pieces)
    for (const auto& pt : p.v) m = std::max(m, std::hypot(pt.x, pt.y));
  return m;
}

}  // namespace dwp
