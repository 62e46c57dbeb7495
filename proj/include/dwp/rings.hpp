#pragma once
// Ring profiles: the common site representation consumed by the fitting and
// coverage stages. All layouts (circular / simple-geometry / polygon / grid)
// reduce to 1 m concentric annuli with searched exposure per class, or to
// grid cells with per-cell exposure.
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "csv.hpp"
#include "geometry.hpp"

namespace dwp {

struct RingRow {
  int r = 0;                 // outer radius of the 1 m ring
  std::string search_class;  // empty when the layout has no classes
  double exposure = 0.0;     // searched area in this ring for this class, m^2
  long ncarc = 0;
};

inline double annulus_area(int r) { return M_PI * (2.0 * r - 1.0); }

struct TurbineRings {
  std::string name;
  Point center;
  std::vector<RingRow> rows;  // sorted by (r, search_class)
  long ncarc = 0;
  int n_rings = 0;

  // searched proportion of ring r, summed over classes
  double pinc(int r) const {
    double e = 0.0;
    for (const auto& row : rows)
      if (row.r == r) e += row.exposure;
    return e / annulus_area(r);
  }
};

struct RingProfile {
  std::vector<TurbineRings> turbines;
  std::vector<RingRow> site;  // pooled across turbines per (r, class)
  int srad = 0;
  std::string sc_var;

  long site_ncarc() const {
    long n = 0;
    for (const auto& t : turbines) n += t.ncarc;
    return n;
  }
  const TurbineRings* find(const std::string& name) const {
    for (const auto& t : turbines)
      if (t.name == name) return &t;
    return nullptr;
  }
  // site-level searched proportion: pooled exposure over all turbines' full
  // annuli (turbines weighted equally)
  double site_pinc(int r) const {
    double e = 0.0;
    for (const auto& row : site)
      if (row.r == r) e += row.exposure;
    return e / (annulus_area(r) * static_cast<double>(turbines.size()));
  }
};

namespace detail {

inline void sort_rows(std::vector<RingRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const RingRow& a, const RingRow& b) {
    return a.r != b.r ? a.r < b.r : a.search_class < b.search_class;
  });
}

inline void finalize_turbine(TurbineRings& t) {
  sort_rows(t.rows);
  t.ncarc = 0;
  t.n_rings = 0;
  for (auto& row : t.rows) {
    const double cap = annulus_area(row.r);
    row.exposure = std::clamp(row.exposure, 0.0, cap);
    t.ncarc += row.ncarc;
    t.n_rings = std::max(t.n_rings, row.r);
  }
}

}  // namespace detail

// recompute the pooled site rows and srad from the per-turbine rows
inline void pool_site(RingProfile& p) {
  std::map<std::pair<int, std::string>, RingRow> pooled;
  p.srad = 0;
  for (auto& t : p.turbines) {
    detail::finalize_turbine(t);
    p.srad = std::max(p.srad, t.n_rings);
    for (const auto& row : t.rows) {
      auto& s = pooled[{row.r, row.search_class}];
      s.r = row.r;
      s.search_class = row.search_class;
      s.exposure += row.exposure;
      s.ncarc += row.ncarc;
    }
  }
  p.site.clear();
  for (auto& [k, row] : pooled) p.site.push_back(row);
  detail::sort_rows(p.site);
}

// ---- layout builders

inline TurbineRings rings_from_frac(const std::string& name,
                                    const std::function<double(double)>& frac,
                                    int n_rings, const std::vector<double>& breaks) {
  TurbineRings t;
  t.name = name;
  for (int r = 1; r <= n_rings; ++r) {
    RingRow row;
    row.r = r;
    row.exposure = ring_exposure(frac, r - 1.0, r, breaks);
    t.rows.push_back(row);
  }
  detail::finalize_turbine(t);
  return t;
}

inline RingProfile build_rings_circular(double srad,
                                        const std::vector<std::string>& names = {"all"}) {
  if (!(srad > 0.0)) throw invalid_layout("search radius must be positive");
  RingProfile p;
  const int n = static_cast<int>(std::ceil(srad));
  for (const auto& name : names)
    p.turbines.push_back(rings_from_frac(
        name, [srad](double x) { return frac_circular(x, srad); }, n, {srad}));
  pool_site(p);
  return p;
}

struct SimpleGeometryRow {
  std::string turbine;
  double radius = 0.0;
  std::string shape;  // circular | square | RP
  double padrad = 0.0, roadwidth = 0.0;
  int n_road = 0;
};

inline RingProfile build_rings_simple(const std::vector<SimpleGeometryRow>& layout) {
  RingProfile p;
  std::set<std::string> seen;
  for (const auto& g : layout) {
    if (!seen.insert(g.turbine).second)
      throw invalid_layout("duplicate turbine " + g.turbine);
    if (!(g.radius > 0.0)) throw invalid_layout(g.turbine + ": radius must be positive");
    if (g.shape == "circular") {
      const double R = g.radius;
      p.turbines.push_back(rings_from_frac(
          g.turbine, [R](double x) { return frac_circular(x, R); },
          static_cast<int>(std::ceil(R)), {R}));
    } else if (g.shape == "square") {
      const double a = g.radius;  // half-side
      p.turbines.push_back(rings_from_frac(
          g.turbine, [a](double x) { return frac_square(x, a); },
          static_cast<int>(std::ceil(a * std::sqrt(2.0))), {a, a * std::sqrt(2.0)}));
    } else if (g.shape == "RP") {
      if (!(g.padrad > 0.0 && g.roadwidth > 0.0 && g.n_road > 0))
        throw invalid_layout(g.turbine + ": RP requires positive padrad/roadwidth/n_road");
      const auto row = g;
      p.turbines.push_back(rings_from_frac(
          g.turbine,
          [row](double x) {
            return frac_rp(x, row.padrad, row.roadwidth, row.n_road, row.radius);
          },
          static_cast<int>(std::ceil(g.radius)),
          {g.padrad, 0.5 * g.roadwidth, g.radius}));
    } else {
      throw invalid_layout(g.turbine + ": unknown shape '" + g.shape + "'");
    }
  }
  pool_site(p);
  return p;
}

struct PolygonLayout {
  std::string turbine;
  std::vector<Polygon> pieces;
};

inline RingProfile build_rings_polygon(const std::vector<PolygonLayout>& layouts,
                                       const std::set<std::string>& not_searched = {},
                                       const PolygonExposureOptions& opt = {}) {
  RingProfile p;
  std::set<std::string> seen;
  bool any_class = false;
  for (const auto& lay : layouts) {
    if (!seen.insert(lay.turbine).second)
      throw invalid_layout("duplicate turbine " + lay.turbine);
    const int n = static_cast<int>(std::ceil(max_vertex_distance(lay.pieces)));
    auto byclass = polygon_ring_exposure(lay.pieces, n, opt);
    TurbineRings t;
    t.name = lay.turbine;
    for (const auto& [cls, expo] : byclass) {
      if (!cls.empty()) any_class = true;
      if (not_searched.count(cls)) continue;
      for (int r = 1; r <= n; ++r) {
        if (expo[r - 1] <= 0.0) continue;
        RingRow row;
        row.r = r;
        row.search_class = cls;
        row.exposure = expo[r - 1];
        t.rows.push_back(row);
      }
    }
    detail::finalize_turbine(t);
    p.turbines.push_back(std::move(t));
  }
  if (any_class) p.sc_var = "class";
  pool_site(p);
  return p;
}

// ---- carcass assignment

struct CarcassRecord {
  std::string turbine;
  std::optional<double> r;
  std::optional<Point> xy;
  std::string search_class;
  std::string carcass_class;
};

inline int ring_of_distance(double d) {
  // half-open rings (r-1, r]: integer distances map inward; 0 maps to ring 1
  if (d <= 0.0) return 1;
  return static_cast<int>(std::ceil(d));
}

namespace detail {

inline void place_carcass(RingProfile& p, const CarcassRecord& rec,
                          const std::vector<PolygonLayout>* layout,
                          const std::set<std::string>& not_searched) {
  TurbineRings* t = nullptr;
  for (auto& tb : p.turbines)
    if (tb.name == rec.turbine) t = &tb;
  if (!t) throw invalid_carcass("unknown turbine '" + rec.turbine + "'");

  double d;
  std::string cls = rec.search_class;
  if (rec.xy) {
    d = std::hypot(rec.xy->x, rec.xy->y);
    if (layout) {
      const PolygonLayout* lay = nullptr;
      for (const auto& l : *layout)
        if (l.turbine == rec.turbine) lay = &l;
      if (lay) {
        std::string found_cls;
        if (!classify_point(lay->pieces, rec.xy->x, rec.xy->y, &found_cls) ||
            not_searched.count(found_cls))
          throw invalid_carcass(rec.turbine + ": carcass at (" + std::to_string(rec.xy->x) +
                                ", " + std::to_string(rec.xy->y) +
                                ") lies outside the searched area");
        cls = found_cls;
      }
    }
  } else if (rec.r) {
    d = *rec.r;
    if (d < 0.0) throw invalid_carcass(rec.turbine + ": negative carcass distance");
  } else {
    throw invalid_carcass(rec.turbine + ": carcass record has neither distance nor location");
  }

  const int ring = ring_of_distance(d);
  if (ring > t->n_rings)
    throw invalid_carcass(rec.turbine + ": carcass at " + std::to_string(d) +
                          " m beyond search radius " + std::to_string(t->n_rings));
  for (auto& row : t->rows) {
    if (row.r == ring && row.search_class == cls) {
      if (row.exposure <= 0.0)
        throw invalid_carcass(rec.turbine + ": carcass in unsearched ring " +
                              std::to_string(ring));
      row.ncarc += 1;
      return;
    }
  }
  throw invalid_carcass(rec.turbine + ": carcass in unsearched ring " + std::to_string(ring) +
                        (cls.empty() ? "" : " class " + cls));
}

}  // namespace detail

inline RingProfile add_carcasses(RingProfile profile, const std::vector<CarcassRecord>& recs,
                                 const std::vector<PolygonLayout>* layout = nullptr,
                                 const std::set<std::string>& not_searched = {}) {
  for (const auto& rec : recs) detail::place_carcass(profile, rec, layout, not_searched);
  pool_site(profile);
  return profile;
}

// one profile per carcass class, all sharing the same exposures
inline std::map<std::string, RingProfile> add_carcasses_by_class(
    const RingProfile& profile, const std::vector<CarcassRecord>& recs,
    const std::vector<PolygonLayout>* layout = nullptr,
    const std::set<std::string>& not_searched = {}) {
  std::map<std::string, std::vector<CarcassRecord>> split;
  for (const auto& rec : recs) {
    if (rec.carcass_class.empty())
      throw invalid_carcass(rec.turbine + ": carcass record missing carcass class");
    split[rec.carcass_class].push_back(rec);
  }
  std::map<std::string, RingProfile> out;
  for (const auto& [cls, sub] : split)
    out.emplace(cls, add_carcasses(profile, sub, layout, not_searched));
  return out;
}

// ---- gridded layouts

struct GridCell {
  double x = 0.0, y = 0.0, r = 0.0;
  long ncarc = 0;
  double exposure = 0.0;
};

struct GridTurbine {
  std::string name;
  std::vector<GridCell> cells;
  long ncarc = 0;
};

struct GridProfile {
  std::vector<GridTurbine> turbines;
  double cell_size = 1.0;
};

struct GridCellInput {
  std::string turbine;
  double x = 0.0, y = 0.0;
  long ncarc = 0;
};

inline GridProfile build_grid(const std::vector<GridCellInput>& rows, double cell_size = 0.0) {
  if (cell_size <= 0.0) {
    // infer from the smallest coordinate gap
    std::vector<double> xs;
    for (const auto& c : rows) xs.push_back(c.x);
    std::sort(xs.begin(), xs.end());
    double gap = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const double d = xs[i] - xs[i - 1];
      if (d > 1e-9 && (gap == 0.0 || d < gap)) gap = d;
    }
    cell_size = gap > 0.0 ? gap : 1.0;
  }
  GridProfile g;
  g.cell_size = cell_size;
  std::map<std::string, std::size_t> idx;
  std::set<std::tuple<std::string, double, double>> seen;
  for (const auto& c : rows) {
    if (c.ncarc < 0) throw invalid_layout(c.turbine + ": negative carcass count");
    if (!seen.insert({c.turbine, c.x, c.y}).second)
      throw invalid_layout(c.turbine + ": duplicate grid cell (" + std::to_string(c.x) +
                           ", " + std::to_string(c.y) + ")");
    auto [it, fresh] = idx.try_emplace(c.turbine, g.turbines.size());
    if (fresh) g.turbines.push_back({c.turbine, {}, 0});
    auto& t = g.turbines[it->second];
    GridCell cell;
    cell.x = c.x;
    cell.y = c.y;
    cell.r = std::hypot(c.x, c.y);
    cell.ncarc = c.ncarc;
    cell.exposure = cell_size * cell_size;
    t.cells.push_back(cell);
    t.ncarc += c.ncarc;
  }
  std::sort(g.turbines.begin(), g.turbines.end(),
            [](const GridTurbine& a, const GridTurbine& b) { return a.name < b.name; });
  return g;
}

// ---- CSV bundle serialization (rdat.csv / rpA.csv / meta.csv)

inline void write_profile(const RingProfile& p, const std::string& dir) {
  {
    csv::Writer w(dir + "/rdat.csv", {"turbine", "r", "search_class", "exposure", "ncarc"});
    for (const auto& t : p.turbines)
      for (const auto& row : t.rows)
        w.row({t.name, std::to_string(row.r), row.search_class, csv::fmtg(row.exposure),
               std::to_string(row.ncarc)});
    for (const auto& row : p.site)
      w.row({"_site", std::to_string(row.r), row.search_class, csv::fmtg(row.exposure),
             std::to_string(row.ncarc)});
  }
  {
    csv::Writer w(dir + "/rpA.csv", {"turbine", "r", "pinc"});
    for (const auto& t : p.turbines)
      for (int r = 1; r <= t.n_rings; ++r)
        w.row({t.name, std::to_string(r), csv::fmtg(t.pinc(r))});
    for (int r = 1; r <= p.srad; ++r)
      w.row({"_site", std::to_string(r), csv::fmtg(p.site_pinc(r))});
  }
  {
    csv::Writer w(dir + "/meta.csv", {"field", "turbine", "value"});
    w.row({"layout", "", "rings"});
    w.row({"srad", "", std::to_string(p.srad)});
    w.row({"sc_var", "", p.sc_var});
    for (const auto& t : p.turbines) {
      w.row({"tcenter_x", t.name, csv::fmtg(t.center.x)});
      w.row({"tcenter_y", t.name, csv::fmtg(t.center.y)});
    }
  }
}

inline RingProfile read_profile(const std::string& dir) {
  RingProfile p;
  const auto meta = csv::read(dir + "/meta.csv");
  const int f_field = meta.require("field"), f_turb = meta.require("turbine"),
            f_val = meta.require("value");
  std::map<std::string, Point> centers;
  for (const auto& row : meta.rows) {
    const auto& key = row[f_field];
    if (key == "sc_var") p.sc_var = row[f_val];
    if (key == "tcenter_x") centers[row[f_turb]].x = std::stod(row[f_val]);
    if (key == "tcenter_y") centers[row[f_turb]].y = std::stod(row[f_val]);
  }
  const auto rdat = csv::read(dir + "/rdat.csv");
  const int c_turb = rdat.require("turbine"), c_r = rdat.require("r"),
            c_cls = rdat.require("search_class"), c_expo = rdat.require("exposure"),
            c_n = rdat.require("ncarc");
  std::map<std::string, std::size_t> idx;
  for (const auto& row : rdat.rows) {
    if (row[c_turb] == "_site") continue;  // rebuilt by pool_site
    auto [it, fresh] = idx.try_emplace(row[c_turb], p.turbines.size());
    if (fresh) {
      TurbineRings t;
      t.name = row[c_turb];
      t.center = centers.count(t.name) ? centers[t.name] : Point{};
      p.turbines.push_back(std::move(t));
    }
    RingRow rr;
    rr.r = std::stoi(row[c_r]);
    rr.search_class = row[c_cls];
    rr.exposure = std::stod(row[c_expo]);
    rr.ncarc = std::stol(row[c_n]);
    p.turbines[it->second].rows.push_back(rr);
  }
  pool_site(p);
  return p;
}

inline void write_grid(const GridProfile& g, const std::string& dir) {
  {
    csv::Writer w(dir + "/grid.csv", {"turbine", "x", "y", "r", "ncarc", "exposure"});
    for (const auto& t : g.turbines)
      for (const auto& c : t.cells)
        w.row({t.name, csv::fmtg(c.x), csv::fmtg(c.y), csv::fmtg(c.r),
               std::to_string(c.ncarc), csv::fmtg(c.exposure)});
  }
  {
    csv::Writer w(dir + "/meta.csv", {"field", "turbine", "value"});
    w.row({"layout", "", "grid"});
    w.row({"cell_size", "", csv::fmtg(g.cell_size)});
  }
}

inline GridProfile read_grid(const std::string& dir) {
  const auto tab = csv::read(dir + "/grid.csv");
  const int c_turb = tab.require("turbine"), c_x = tab.require("x"), c_y = tab.require("y"),
            c_n = tab.require("ncarc");
  std::vector<GridCellInput> rows;
  for (const auto& row : tab.rows)
    rows.push_back({row[c_turb], std::stod(row[c_x]), std::stod(row[c_y]),
                    std::stol(row[c_n])});
  double cell = 0.0;
  const auto meta = csv::read(dir + "/meta.csv");
  const int f_field = meta.require("field"), f_val = meta.require("value");
  for (const auto& row : meta.rows)
    if (row[f_field] == "cell_size") cell = std::stod(row[f_val]);
  return build_grid(rows, cell);
}

}  // namespace dwp
