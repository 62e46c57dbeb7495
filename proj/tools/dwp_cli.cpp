// dwp command line: prep ring profiles from field layouts, fit the distance
// model battery, filter/select models, estimate searched-area coverage (psi)
// and carcass dwp with uncertainty, export GenEst input, and run ballistics
// scenarios. Stages hand off through plain CSV bundles in the working
// directory so every intermediate is inspectable and re-runs are
// byte-identical for a fixed seed.
#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dwp/ballistics.hpp"
#include "dwp/coverage.hpp"
#include "dwp/distributions.hpp"
#include "dwp/model_filter.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace dwp;

// exit codes: 2 schema/input, 3 no converged model, 4 forced model not extensible
struct cli_error : std::runtime_error {
  int code;
  cli_error(int c, const std::string& m) : std::runtime_error(m), code(c) {}
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!trim(cur).empty()) out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

double to_num(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw cli_error(2, "bad numeric value '" + s + "' for " + what);
  }
}

long to_long(const std::string& s, const std::string& what) {
  const double v = to_num(s, what);
  if (v != std::floor(v)) throw cli_error(2, what + " must be an integer, got " + s);
  return static_cast<long>(v);
}

std::vector<Form> parse_models(const std::string& spec) {
  if (spec.empty() || spec == "standard") return standard_forms();
  if (spec == "all") return all_forms();
  std::vector<Form> out;
  for (const auto& name : split_list(spec)) {
    try {
      out.push_back(parse_form(name));
    } catch (const std::exception&) {
      throw cli_error(2, "unknown model '" + name + "'");
    }
  }
  if (out.empty()) throw cli_error(2, "empty model list");
  return out;
}

csv::Table read_table(const std::string& path) {
  try {
    return csv::read(path);
  } catch (const std::exception& e) {
    throw cli_error(2, e.what());
  }
}

int require_col(const csv::Table& t, const std::string& name, const std::string& path) {
  const int i = t.col(name);
  if (i < 0) throw cli_error(2, path + ": missing required column '" + name + "'");
  return i;
}

// ---- input ingestion

std::vector<CarcassRecord> read_carcasses(const std::string& path, const std::string& cc_col) {
  const auto tab = read_table(path);
  const int c_turb = require_col(tab, "turbine", path);
  int c_r = tab.col("r");
  if (c_r < 0) c_r = tab.col("distance");
  const int c_x = tab.col("x"), c_y = tab.col("y");
  const int c_sc = tab.col("search_class");
  int c_cc = -1;
  if (!cc_col.empty()) c_cc = require_col(tab, cc_col, path);
  if (c_r < 0 && (c_x < 0 || c_y < 0))
    throw cli_error(2, path + ": need an 'r' (or 'distance') column or 'x','y' columns");
  std::vector<CarcassRecord> recs;
  for (const auto& row : tab.rows) {
    CarcassRecord rec;
    rec.turbine = row[c_turb];
    if (c_x >= 0 && c_y >= 0 && !row[c_x].empty() && !row[c_y].empty()) {
      rec.xy = Point{to_num(row[c_x], "x"), to_num(row[c_y], "y")};
    } else if (c_r >= 0 && !row[c_r].empty()) {
      rec.r = to_num(row[c_r], "r");
    } else {
      throw cli_error(2, path + ": carcass row without position for " + rec.turbine);
    }
    if (c_sc >= 0) rec.search_class = row[c_sc];
    if (c_cc >= 0) rec.carcass_class = row[c_cc];
    recs.push_back(std::move(rec));
  }
  return recs;
}

std::vector<SimpleGeometryRow> read_simple_layout(const std::string& path) {
  const auto tab = read_table(path);
  const int c_turb = require_col(tab, "turbine", path);
  const int c_rad = require_col(tab, "radius", path);
  const int c_shape = require_col(tab, "shape", path);
  const int c_pad = tab.col("padrad"), c_w = tab.col("roadwidth"), c_nr = tab.col("n_road");
  std::vector<SimpleGeometryRow> out;
  for (const auto& row : tab.rows) {
    SimpleGeometryRow g;
    g.turbine = row[c_turb];
    g.radius = to_num(row[c_rad], "radius");
    g.shape = row[c_shape];
    if (c_pad >= 0 && !row[c_pad].empty()) g.padrad = to_num(row[c_pad], "padrad");
    if (c_w >= 0 && !row[c_w].empty()) g.roadwidth = to_num(row[c_w], "roadwidth");
    if (c_nr >= 0 && !row[c_nr].empty())
      g.n_road = static_cast<int>(to_long(row[c_nr], "n_road"));
    out.push_back(std::move(g));
  }
  return out;
}

bool looks_like_geojson(const std::string& path) {
  const auto ext = fs::path(path).extension().string();
  return ext == ".json" || ext == ".geojson";
}

std::vector<Point> ring_points(const json& ring) {
  std::vector<Point> v;
  for (const auto& pt : ring) {
    if (!pt.is_array() || pt.size() < 2) throw cli_error(2, "geojson: malformed coordinate");
    v.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  // rings arrive closed; the even-odd machinery wants an open vertex list
  if (v.size() > 1 && v.front().x == v.back().x && v.front().y == v.back().y) v.pop_back();
  return v;
}

std::vector<PolygonLayout> read_polygons_geojson(const std::string& path,
                                                 const std::string& sc_var) {
  std::ifstream in(path);
  if (!in) throw cli_error(2, "cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw cli_error(2, path + ": " + e.what());
  }
  if (j.value("type", "") != "FeatureCollection")
    throw cli_error(2, path + ": expected a GeoJSON FeatureCollection");
  std::map<std::string, PolygonLayout> by_turb;
  for (const auto& f : j["features"]) {
    if (!f.contains("properties") || !f["properties"].contains("turbine"))
      throw cli_error(2, path + ": feature missing required property 'turbine'");
    const auto& props = f["properties"];
    const std::string turb =
        props["turbine"].is_string() ? props["turbine"].get<std::string>()
                                     : props["turbine"].dump();
    std::string cls;
    if (!sc_var.empty() && props.contains(sc_var))
      cls = props[sc_var].is_string() ? props[sc_var].get<std::string>()
                                      : props[sc_var].dump();
    if (!f.contains("geometry") || f["geometry"].is_null())
      throw cli_error(2, path + ": feature without geometry");
    const auto& geom = f["geometry"];
    const std::string gt = geom.value("type", "");
    auto& lay = by_turb[turb];
    lay.turbine = turb;
    auto add_poly = [&](const json& rings) {
      for (const auto& ring : rings) lay.pieces.push_back({ring_points(ring), cls});
    };
    if (gt == "Polygon") {
      add_poly(geom["coordinates"]);
    } else if (gt == "MultiPolygon") {
      for (const auto& poly : geom["coordinates"]) add_poly(poly);
    } else {
      throw cli_error(2, path + ": unsupported geometry type '" + gt + "'");
    }
  }
  std::vector<PolygonLayout> out;
  for (auto& [name, lay] : by_turb) out.push_back(std::move(lay));
  return out;
}

std::vector<PolygonLayout> read_polygons_csv(const std::string& path,
                                             const std::string& sc_var) {
  const auto tab = read_table(path);
  const int c_turb = require_col(tab, "turbine", path);
  const int c_x = require_col(tab, "x", path);
  const int c_y = require_col(tab, "y", path);
  const int c_cls = sc_var.empty() ? -1 : tab.col(sc_var);
  const int c_piece = tab.col("piece");
  std::map<std::string, PolygonLayout> by_turb;
  std::string last_key;
  for (const auto& row : tab.rows) {
    const std::string cls = c_cls >= 0 ? row[c_cls] : "";
    const std::string piece = c_piece >= 0 ? row[c_piece] : "";
    const std::string key = row[c_turb] + "\x1f" + cls + "\x1f" + piece;
    auto& lay = by_turb[row[c_turb]];
    lay.turbine = row[c_turb];
    if (key != last_key) {
      lay.pieces.push_back({{}, cls});
      last_key = key;
    }
    lay.pieces.back().v.push_back({to_num(row[c_x], "x"), to_num(row[c_y], "y")});
  }
  std::vector<PolygonLayout> out;
  for (auto& [name, lay] : by_turb) out.push_back(std::move(lay));
  return out;
}

std::vector<GridCellInput> read_grid_cells(const std::string& path) {
  const auto tab = read_table(path);
  const int c_turb = require_col(tab, "turbine", path);
  const int c_x = require_col(tab, "x", path);
  const int c_y = require_col(tab, "y", path);
  const int c_n = require_col(tab, "ncarc", path);
  std::vector<GridCellInput> out;
  for (const auto& row : tab.rows)
    out.push_back({row[c_turb], to_num(row[c_x], "x"), to_num(row[c_y], "y"),
                   to_long(row[c_n], "ncarc")});
  return out;
}

// ---- stage plumbing: per-class working directories

std::vector<std::pair<std::string, std::string>> stage_dirs(const std::string& out) {
  const std::string marker = out + "/classes.txt";
  if (fs::exists(marker)) {
    std::ifstream in(marker);
    std::vector<std::pair<std::string, std::string>> dirs;
    std::string line;
    while (std::getline(in, line)) {
      line = trim(line);
      if (!line.empty()) dirs.emplace_back(line, out + "/cls_" + line);
    }
    if (dirs.empty()) throw cli_error(2, marker + " is empty");
    return dirs;
  }
  return {{"", out}};
}

std::string label_prefix(const std::string& cls) {
  return cls.empty() ? "" : "[" + cls + "] ";
}

struct LoadedProfile {
  bool grid = false;
  RingProfile rings;
  GridProfile cells;

  double srad() const {
    if (!grid) return rings.srad;
    double r = 0.0;
    for (const auto& t : cells.turbines)
      for (const auto& c : t.cells) r = std::max(r, c.r);
    return r;
  }
  std::vector<std::string> turbine_names() const {
    std::vector<std::string> v;
    if (grid)
      for (const auto& t : cells.turbines) v.push_back(t.name);
    else
      for (const auto& t : rings.turbines) v.push_back(t.name);
    return v;
  }
  std::vector<long> ncarc_by_turbine() const {
    std::vector<long> v;
    if (grid)
      for (const auto& t : cells.turbines) v.push_back(t.ncarc);
    else
      for (const auto& t : rings.turbines) v.push_back(t.ncarc);
    return v;
  }
};

LoadedProfile load_profile(const std::string& dir) {
  const std::string meta_path = dir + "/meta.csv";
  if (!fs::exists(meta_path)) throw cli_error(2, "no profile found in " + dir);
  const auto meta = read_table(meta_path);
  const int c_field = require_col(meta, "field", meta_path);
  const int c_val = require_col(meta, "value", meta_path);
  std::string layout;
  for (const auto& row : meta.rows)
    if (row[c_field] == "layout") layout = row[c_val];
  LoadedProfile p;
  try {
    if (layout == "grid") {
      p.grid = true;
      p.cells = read_grid(dir);
    } else if (layout == "rings") {
      p.rings = read_profile(dir);
    } else {
      throw cli_error(2, meta_path + ": unknown layout '" + layout + "'");
    }
  } catch (const cli_error&) {
    throw;
  } catch (const std::exception& e) {
    throw cli_error(2, dir + ": " + e.what());
  }
  return p;
}

std::vector<BatteryFit> fit_all(const LoadedProfile& p, const std::vector<Form>& forms) {
  return p.grid ? fit_battery(p.cells, forms) : fit_battery(p.rings, forms);
}

ScoreTable score_all(const std::vector<BatteryFit>& fits, const LoadedProfile& p) {
  return p.grid ? filter_models(fits, p.cells) : filter_models(fits, p.rings);
}

std::string num_or_na(double v, int digits) {
  return std::isfinite(v) ? csv::fmt(v, digits) : "NA";
}

void write_scores(const ScoreTable& st, const std::string& dir) {
  csv::Writer w(dir + "/scores.csv",
                {"model", "extensible", "rtail", "ltail", "aicc", "hin", "deltaAICc"});
  for (const auto& s : st.rows)
    w.row({form_name(s.form), std::to_string(s.extensible), std::to_string(s.rtail),
           std::to_string(s.ltail), std::to_string(s.aicc), std::to_string(s.hin),
           num_or_na(s.deltaAICc, 4)});
  std::ofstream sel(dir + "/selected.txt");
  sel << st.selected << "\n";
}

const BatteryFit* find_fit(const std::vector<BatteryFit>& fits, Form f) {
  for (const auto& bf : fits)
    if (bf.form == f) return &bf;
  return nullptr;
}

void print_fit_report(const std::string& cls, const std::vector<BatteryFit>& fits,
                      const ScoreTable& st) {
  std::string ext, next, failed;
  for (const auto& s : st.rows) {
    if (!s.fitted) continue;
    (s.extensible ? ext : next) += " " + form_name(s.form);
  }
  for (const auto& bf : fits)
    if (!bf.ok) failed += " " + form_name(bf.form);
  const std::string pre = label_prefix(cls);
  std::cout << pre << "Extensible:" << (ext.empty() ? " (none)" : ext) << "\n";
  std::cout << pre << "Not extensible:" << (next.empty() ? " (none)" : next) << "\n";
  if (!failed.empty()) std::cout << pre << "Failed:" << failed << "\n";
  std::cout << pre << "Selected: " << st.selected
            << (st.all_pass ? "" : " (no model passes every filter)") << "\n";
}

void run_fit_stage(const std::string& dir, const std::string& cls,
                   const std::vector<Form>& forms, bool full_report) {
  const LoadedProfile prof = load_profile(dir);
  const auto fits = fit_all(prof, forms);
  const ScoreTable st = score_all(fits, prof);  // throws no_viable_model -> exit 3
  write_scores(st, dir);
  if (full_report) {
    {
      csv::Writer w(dir + "/fits.csv", {"model", "converged", "k", "loglik", "AICc",
                                        "deltaAICc", "coefficients", "error"});
      double min_aicc = std::numeric_limits<double>::infinity();
      for (const auto& bf : fits)
        if (bf.ok) min_aicc = std::min(min_aicc, bf.fit.aicc);
      for (const auto& bf : fits) {
        if (!bf.ok) {
          w.row({form_name(bf.form), "0", "NA", "NA", "NA", "NA", "", bf.error});
          continue;
        }
        std::string coefs;
        const auto names = bf.fit.coef_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
          if (i) coefs += " ";
          coefs += names[i] + "=" + csv::fmt(bf.fit.beta(static_cast<int>(i)), 6);
        }
        w.row({form_name(bf.form), "1", std::to_string(bf.fit.k_params),
               csv::fmt(bf.fit.loglik, 4), csv::fmt(bf.fit.aicc, 4),
               num_or_na(bf.fit.aicc - min_aicc, 4), coefs, ""});
      }
    }
    {
      csv::Writer w(dir + "/stats.csv",
                    {"model", "median", "75%", "90%", "95%", "mode", "p_win", "deltaAICc"});
      const double srad = load_profile(dir).srad();
      for (const auto& s : st.rows) {
        if (!s.fitted || !s.extensible) continue;
        const BatteryFit* bf = find_fit(fits, s.form);
        auto dist = make_distribution(s.form, bf->fit.distance_beta());
        if (!dist) continue;
        const DistStats ds = dist->stats(srad);
        w.row({form_name(s.form), csv::fmt(ds.median, 4), csv::fmt(ds.q75, 4),
               csv::fmt(ds.q90, 4), csv::fmt(ds.q95, 4), csv::fmt(ds.mode, 4),
               csv::fmt(ds.p_win, 4), num_or_na(s.deltaAICc, 4)});
      }
    }
  }
  print_fit_report(cls, fits, st);
}

// ---- psi / dwp draw matrices on disk

void write_draws(const std::string& path, const std::vector<std::string>& turbines,
                 const Eigen::MatrixXd& draws) {
  std::vector<std::string> header{"draw"};
  header.insert(header.end(), turbines.begin(), turbines.end());
  header.push_back("total");
  csv::Writer w(path, header);
  for (int i = 0; i < draws.rows(); ++i) {
    std::vector<std::string> row{std::to_string(i + 1)};
    for (int t = 0; t < draws.cols(); ++t)
      row.push_back(std::isfinite(draws(i, t)) ? csv::fmtg(draws(i, t)) : "NA");
    w.row(row);
  }
}

std::pair<std::vector<std::string>, Eigen::MatrixXd> read_draws(const std::string& path) {
  const auto tab = read_table(path);
  if (tab.header.size() < 3 || tab.header.front() != "draw" || tab.header.back() != "total")
    throw cli_error(2, path + ": expected columns draw,<turbines...>,total");
  std::vector<std::string> turbines(tab.header.begin() + 1, tab.header.end() - 1);
  Eigen::MatrixXd draws(static_cast<int>(tab.rows.size()),
                        static_cast<int>(turbines.size()) + 1);
  for (std::size_t i = 0; i < tab.rows.size(); ++i) {
    if (tab.rows[i].size() != tab.header.size())
      throw cli_error(2, path + ": ragged row " + std::to_string(i + 2));
    for (std::size_t t = 1; t < tab.header.size(); ++t) {
      const auto& cell = tab.rows[i][t];
      draws(static_cast<int>(i), static_cast<int>(t - 1)) =
          cell == "NA" ? std::numeric_limits<double>::quiet_NaN() : to_num(cell, "draw");
    }
  }
  return {std::move(turbines), std::move(draws)};
}

void print_draw_summary(const std::string& cls, const std::string& what,
                        const std::vector<std::string>& turbines,
                        const Eigen::MatrixXd& draws) {
  const std::string pre = label_prefix(cls);
  std::cout << pre << what << " quantiles:\n";
  std::printf("%s  %-16s %10s %10s %10s\n", pre.c_str(), "turbine", "5%", "50%", "95%");
  for (int t = 0; t < draws.cols(); ++t) {
    std::vector<double> v(draws.rows());
    for (int i = 0; i < draws.rows(); ++i) v[i] = draws(i, t);
    const std::string name =
        t < static_cast<int>(turbines.size()) ? turbines[t] : std::string("total");
    std::printf("%s  %-16s %10.4f %10.4f %10.4f\n", pre.c_str(), name.c_str(),
                quantile_type7(v, 0.05), quantile_type7(v, 0.50), quantile_type7(v, 0.95));
  }
}

Form resolve_model(const std::string& forced, const std::string& dir,
                   const LoadedProfile& prof, const std::vector<Form>& forms) {
  if (!forced.empty()) {
    try {
      return parse_form(forced);
    } catch (const std::exception&) {
      throw cli_error(2, "unknown model '" + forced + "'");
    }
  }
  const std::string sel_path = dir + "/selected.txt";
  if (fs::exists(sel_path)) {
    std::ifstream in(sel_path);
    std::string name;
    std::getline(in, name);
    name = trim(name);
    if (name.empty()) throw cli_error(3, sel_path + " is empty");
    try {
      return parse_form(name);
    } catch (const std::exception&) {
      throw cli_error(2, sel_path + ": unknown model '" + name + "'");
    }
  }
  const ScoreTable st = score_all(fit_all(prof, forms), prof);
  return parse_form(st.selected);
}

FittedGLM refit(const LoadedProfile& prof, Form form) {
  FittedGLM fit =
      prof.grid ? fit_poisson(build_design(prof.cells, form))
                : fit_poisson(build_design(prof.rings, form));
  if (!fit.converged)
    throw cli_error(3, form_name(form) + " did not converge on this profile");
  return fit;
}

// ---- scenario config

struct ScenarioConfig {
  BallisticsScenario scn;
  std::string name = "scenario";
  std::uint64_t seed = 1;
  long oracle_n = 1000000;
  bool pipeline = false;
  double srad = 0.0;  // pipeline ring radius; 0 means use scn.radius
};

ScenarioConfig read_scenario_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw cli_error(2, "cannot open " + path);
  ScenarioConfig cfg;
  cfg.name = fs::path(path).stem().string();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto sep = line.find_first_of(":= \t");
    if (sep == std::string::npos)
      throw cli_error(2, path + ":" + std::to_string(lineno) + ": expected key value");
    const std::string key = trim(line.substr(0, sep));
    std::string val = trim(line.substr(sep + 1));
    if (!val.empty() && (val[0] == ':' || val[0] == '=')) val = trim(val.substr(1));
    if (val.empty())
      throw cli_error(2, path + ":" + std::to_string(lineno) + ": missing value for " + key);
    if (key == "name") {
      cfg.name = val;
    } else if (key == "species") {
      if (val != "bat" && val != "eagle")
        throw cli_error(2, path + ": unknown species '" + val + "'");
      cfg.scn.species = val;
    } else if (key == "wind") {
      try {
        cfg.scn.wind = parse_wind(val);
      } catch (const std::exception&) {
        throw cli_error(2, path + ": bad wind spec '" + val + "'");
      }
    } else if (key == "flight_mode") {
      if (val != "constant" && val != "variable")
        throw cli_error(2, path + ": flight_mode must be constant or variable");
      cfg.scn.variable_flight = val == "variable";
    } else if (key == "plot") {
      if (val != "cleared" && val != "RP")
        throw cli_error(2, path + ": plot must be cleared or RP");
      cfg.scn.plot = val;
    } else if (key == "radius") {
      cfg.scn.radius = to_num(val, "radius");
    } else if (key == "replicates") {
      cfg.scn.replicates = static_cast<int>(to_long(val, "replicates"));
    } else if (key == "m_per_replicate") {
      cfg.scn.m_per_replicate = static_cast<int>(to_long(val, "m_per_replicate"));
    } else if (key == "seed") {
      cfg.seed = static_cast<std::uint64_t>(to_long(val, "seed"));
    } else if (key == "pad_radius") {
      cfg.scn.pad_radius = to_num(val, "pad_radius");
    } else if (key == "road_width") {
      cfg.scn.road_width = to_num(val, "road_width");
    } else if (key == "n_road") {
      cfg.scn.n_road = static_cast<int>(to_long(val, "n_road"));
    } else if (key == "strike") {
      if (val != "radius" && val != "area")
        throw cli_error(2, path + ": strike must be radius or area");
      cfg.scn.strike_uniform_area = val == "area";
    } else if (key == "oracle_n") {
      cfg.oracle_n = to_long(val, "oracle_n");
    } else if (key == "pipeline") {
      cfg.pipeline = val == "1" || val == "true" || val == "yes";
    } else if (key == "srad") {
      cfg.srad = to_num(val, "srad");
    } else {
      throw cli_error(2, path + ": unknown key '" + key + "'");
    }
  }
  return cfg;
}

RingProfile pipeline_profile(const ScenarioConfig& cfg) {
  const double srad = cfg.srad > 0.0 ? cfg.srad : cfg.scn.radius;
  if (cfg.scn.plot == "RP") {
    SimpleGeometryRow row{"t1", srad, "RP", cfg.scn.pad_radius, cfg.scn.road_width,
                          cfg.scn.n_road};
    return build_rings_simple({row});
  }
  return build_rings_circular(srad, {"t1"});
}

void run_simulate(const ScenarioConfig& cfg, const std::string& out) {
  fs::create_directories(out);
  const ScenarioResult res = run_scenario(cfg.scn, cfg.seed, cfg.oracle_n);
  {
    csv::Writer w(out + "/summary.csv",
                  {"scenario", "replicate", "true_psi", "found_count", "skipped"});
    for (std::size_t i = 0; i < res.replicates.size(); ++i) {
      const auto& rep = res.replicates[i];
      w.row({cfg.name, std::to_string(i + 1), csv::fmt(res.true_psi, 6),
             std::to_string(rep.found_count), rep.skipped ? "1" : "0"});
    }
  }
  for (std::size_t i = 0; i < res.replicates.size(); ++i) {
    const auto& rep = res.replicates[i];
    char fname[32];
    std::snprintf(fname, sizeof fname, "rep_%03zu.csv", i + 1);
    csv::Writer w(out + "/" + fname, {"carcass", "x", "y", "distance", "found"});
    for (std::size_t c = 0; c < rep.carcasses.size(); ++c) {
      const auto& cc = rep.carcasses[c];
      w.row({std::to_string(c + 1), csv::fmt(cc.x, 3), csv::fmt(cc.y, 3),
             csv::fmt(cc.distance, 3), cc.found ? "1" : "0"});
    }
    if (rep.skipped)
      std::cout << "replicate " << (i + 1) << " skipped (" << rep.found_count
                << " found, need 5)\n";
  }
  std::cout << cfg.name << ": true psi " << csv::fmt(res.true_psi, 6) << ", "
            << res.replicates.size() - res.skipped_count << "/" << res.replicates.size()
            << " replicates usable\n";

  if (!cfg.pipeline) return;
  // refit the model battery on each usable replicate's found carcasses and
  // summarize psi-hat per model against the Monte Carlo truth
  const RingProfile base = pipeline_profile(cfg);
  const auto forms = standard_forms();
  std::map<std::string, std::vector<double>> psihat;
  for (const auto& rep : res.replicates) {
    if (rep.skipped) continue;
    std::vector<CarcassRecord> recs;
    for (const auto& c : rep.carcasses)
      if (c.found) recs.push_back({"t1", c.distance, std::nullopt, "", ""});
    RingProfile prof;
    try {
      prof = add_carcasses(base, recs);
    } catch (const invalid_carcass&) {
      continue;  // carcass outside the ringed area; replicate unusable
    }
    auto fits = fit_battery(prof, forms);
    std::string selected;
    try {
      selected = filter_models(fits, prof).selected;
    } catch (const no_viable_model&) {
      continue;
    }
    for (const auto& bf : fits) {
      if (!bf.ok) continue;
      try {
        const PsiDraws psi = est_psi(prof, bf.fit, 1, cfg.seed);
        const double ph = psi.draws(0, psi.n_turbines());
        psihat[form_name(bf.form)].push_back(ph);
        if (form_name(bf.form) == selected) psihat["selected"].push_back(ph);
      } catch (const estimation_failed&) {
        // not extensible at the MLE; no psi for this model
      }
    }
  }
  csv::Writer w(out + "/pipeline.csv", {"model", "n_fits", "median_psi_hat", "true_psi"});
  for (auto& [model, v] : psihat)
    w.row({model, std::to_string(v.size()), csv::fmt(quantile_type7(v, 0.5), 6),
           csv::fmt(res.true_psi, 6)});
}

// ---- prep

struct PrepOptions {
  std::string input, carcass, layout_type, out;
  std::string sc_var, cc_col, not_searched;
  double srad = 0.0, cell_size = 0.0;
};

void write_class_bundle(const std::map<std::string, RingProfile>& by_class,
                        const std::string& out) {
  std::ofstream marker(out + "/classes.txt");
  for (const auto& [cls, prof] : by_class) {
    marker << cls << "\n";
    const std::string sub = out + "/cls_" + cls;
    fs::create_directories(sub);
    write_profile(prof, sub);
  }
}

void run_prep(const PrepOptions& opt) {
  fs::create_directories(opt.out);
  std::set<std::string> not_searched;
  for (const auto& s : split_list(opt.not_searched)) not_searched.insert(s);

  if (opt.layout_type == "grid") {
    if (!opt.cc_col.empty())
      throw cli_error(2, "--cc-col is not supported for grid layouts (counts are cell totals)");
    const GridProfile g = build_grid(read_grid_cells(opt.input), opt.cell_size);
    write_grid(g, opt.out);
    long total = 0;
    for (const auto& t : g.turbines) total += t.ncarc;
    std::cout << "grid profile: " << g.turbines.size() << " turbines, " << total
              << " carcasses\n";
    return;
  }

  RingProfile base;
  std::vector<PolygonLayout> polys;
  const PolygonLayout* layout_ptr_guard = nullptr;
  (void)layout_ptr_guard;
  std::vector<CarcassRecord> recs;

  if (opt.layout_type == "distance") {
    if (opt.srad <= 0.0) throw cli_error(2, "distance layout requires --srad > 0");
    recs = read_carcasses(opt.input, opt.cc_col);
    std::set<std::string> names;
    for (const auto& r : recs) names.insert(r.turbine);
    if (names.empty()) throw cli_error(2, opt.input + ": no carcass rows");
    base = build_rings_circular(opt.srad,
                                std::vector<std::string>(names.begin(), names.end()));
  } else if (opt.layout_type == "simple") {
    base = build_rings_simple(read_simple_layout(opt.input));
    if (!opt.carcass.empty()) recs = read_carcasses(opt.carcass, opt.cc_col);
  } else if (opt.layout_type == "polygon") {
    polys = looks_like_geojson(opt.input)
                ? read_polygons_geojson(opt.input, opt.sc_var)
                : read_polygons_csv(opt.input, opt.sc_var);
    base = build_rings_polygon(polys, not_searched);
    if (!opt.carcass.empty()) recs = read_carcasses(opt.carcass, opt.cc_col);
  } else {
    throw cli_error(2, "unknown --layout-type '" + opt.layout_type +
                           "' (expected distance, simple, polygon, or grid)");
  }

  const std::vector<PolygonLayout>* layp = polys.empty() ? nullptr : &polys;
  if (!opt.cc_col.empty()) {
    const auto by_class = add_carcasses_by_class(base, recs, layp, not_searched);
    write_class_bundle(by_class, opt.out);
    std::cout << "profile: " << base.turbines.size() << " turbines, " << by_class.size()
              << " carcass classes\n";
  } else {
    const RingProfile prof = add_carcasses(base, recs, layp, not_searched);
    write_profile(prof, opt.out);
    std::cout << "profile: " << prof.turbines.size() << " turbines, srad " << prof.srad
              << ", " << prof.site_ncarc() << " carcasses\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"density-weighted proportion estimation for turbine carcass surveys"};
  app.require_subcommand(1);

  PrepOptions prep;
  auto* cmd_prep = app.add_subcommand("prep", "build a ring (or grid) profile from layout + carcasses");
  cmd_prep->add_option("--input", prep.input, "layout or carcass CSV / GeoJSON")->required();
  cmd_prep->add_option("--layout-type", prep.layout_type, "distance|simple|polygon|grid")->required();
  cmd_prep->add_option("--carcass", prep.carcass, "carcass CSV (simple/polygon layouts)");
  cmd_prep->add_option("--srad", prep.srad, "search radius for distance layouts");
  cmd_prep->add_option("--sc-var", prep.sc_var, "search-class column/property name");
  cmd_prep->add_option("--not-searched", prep.not_searched, "comma list of unsearched classes");
  cmd_prep->add_option("--cc-col", prep.cc_col, "carcass-class column for per-class profiles");
  cmd_prep->add_option("--cell-size", prep.cell_size, "grid cell size (0 = infer)");
  cmd_prep->add_option("--out", prep.out, "output directory")->required();

  std::string fit_out, fit_models;
  auto* cmd_fit = app.add_subcommand("fit", "fit the model battery; write fits/stats/scores");
  cmd_fit->add_option("--out", fit_out, "working directory with the profile")->required();
  cmd_fit->add_option("--models", fit_models, "comma list of forms, or standard|all");

  std::string filt_out, filt_models;
  auto* cmd_filter = app.add_subcommand("filter", "score + select models only");
  cmd_filter->add_option("--out", filt_out, "working directory with the profile")->required();
  cmd_filter->add_option("--models", filt_models, "comma list of forms, or standard|all");

  std::string psi_out, psi_model, psi_models;
  int psi_nsim = 10000;
  std::uint64_t psi_seed = 1;
  auto* cmd_psi = app.add_subcommand("psi", "searched-area coverage draws for the selected model");
  cmd_psi->add_option("--out", psi_out, "working directory")->required();
  cmd_psi->add_option("--model", psi_model, "force a form (exit 4 if not extensible)");
  cmd_psi->add_option("--models", psi_models, "battery used when no selection exists");
  cmd_psi->add_option("--nsim", psi_nsim, "number of coefficient draws")->check(CLI::PositiveNumber);
  cmd_psi->add_option("--seed", psi_seed, "RNG seed");

  std::string dwp_out;
  std::uint64_t dwp_seed = 1;
  auto* cmd_dwp = app.add_subcommand("dwp", "carcass dwp draws from psi + counts");
  cmd_dwp->add_option("--out", dwp_out, "working directory")->required();
  cmd_dwp->add_option("--seed", dwp_seed, "RNG seed");

  std::string exp_out, exp_mode = "simulated";
  int exp_digits = 3;
  auto* cmd_export = app.add_subcommand("export", "write the GenEst dwp table");
  cmd_export->add_option("--out", exp_out, "working directory")->required();
  cmd_export->add_option("--mode", exp_mode, "point|simulated (default simulated)");
  cmd_export->add_option("--digits", exp_digits, "rounding digits (default 3)");

  std::string sim_config, sim_out;
  bool sim_pipeline = false;
  auto* cmd_sim = app.add_subcommand("simulate", "run a ballistics deposition scenario");
  cmd_sim->add_option("--config", sim_config, "scenario config file")->required();
  cmd_sim->add_option("--out", sim_out, "output directory")->required();
  cmd_sim->add_flag("--pipeline", sim_pipeline, "also fit models per replicate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (cmd_prep->parsed()) {
      run_prep(prep);
    } else if (cmd_fit->parsed()) {
      const auto forms = parse_models(fit_models);
      for (const auto& [cls, dir] : stage_dirs(fit_out)) run_fit_stage(dir, cls, forms, true);
    } else if (cmd_filter->parsed()) {
      const auto forms = parse_models(filt_models);
      for (const auto& [cls, dir] : stage_dirs(filt_out)) run_fit_stage(dir, cls, forms, false);
    } else if (cmd_psi->parsed()) {
      const auto forms = parse_models(psi_models);
      for (const auto& [cls, dir] : stage_dirs(psi_out)) {
        const LoadedProfile prof = load_profile(dir);
        const Form form = resolve_model(psi_model, dir, prof, forms);
        const FittedGLM fit = refit(prof, form);
        const PsiDraws psi = prof.grid ? est_psi(prof.cells, fit, psi_nsim, psi_seed)
                                       : est_psi(prof.rings, fit, psi_nsim, psi_seed);
        write_draws(dir + "/psi.csv", psi.turbines, psi.draws);
        {
          csv::Writer w(dir + "/psi_meta.csv", {"field", "value"});
          w.row({"model", form_name(form)});
          w.row({"nsim", std::to_string(psi_nsim)});
          w.row({"seed", std::to_string(psi_seed)});
          w.row({"na_fraction", csv::fmtg(psi.na_fraction)});
        }
        std::cout << label_prefix(cls) << "model " << form_name(form) << ", na_fraction "
                  << csv::fmt(psi.na_fraction, 4) << "\n";
        print_draw_summary(cls, "psi", psi.turbines, psi.draws);
      }
    } else if (cmd_dwp->parsed()) {
      for (const auto& [cls, dir] : stage_dirs(dwp_out)) {
        const LoadedProfile prof = load_profile(dir);
        auto [turbines, draws] = read_draws(dir + "/psi.csv");
        PsiDraws psi;
        psi.turbines = turbines;
        psi.draws = draws;
        // counts looked up by name so psi column order is authoritative
        std::vector<long> ncarc;
        const auto names = prof.turbine_names();
        const auto counts = prof.ncarc_by_turbine();
        for (const auto& t : turbines) {
          const auto it = std::find(names.begin(), names.end(), t);
          if (it == names.end())
            throw cli_error(2, dir + "/psi.csv: turbine '" + t + "' not in profile");
          ncarc.push_back(counts[it - names.begin()]);
        }
        const DwpDraws d = est_dwp(psi, ncarc, dwp_seed);
        write_draws(dir + "/dwp.csv", d.turbines, d.draws);
        print_draw_summary(cls, "dwp", d.turbines, d.draws);
      }
    } else if (cmd_export->parsed()) {
      GenestMode mode;
      if (exp_mode == "point")
        mode = GenestMode::point;
      else if (exp_mode == "simulated")
        mode = GenestMode::simulated;
      else
        throw cli_error(2, "--mode must be point or simulated");
      const auto dirs = stage_dirs(exp_out);
      GenestTable tab;
      if (dirs.size() == 1 && dirs[0].first.empty()) {
        auto [turbines, draws] = read_draws(dirs[0].second + "/dwp.csv");
        DwpDraws d;
        d.turbines = turbines;
        d.draws = draws;
        tab = format_genest(d, mode, exp_digits);
      } else {
        std::map<std::string, DwpDraws> by_class;
        for (const auto& [cls, dir] : dirs) {
          auto [turbines, draws] = read_draws(dir + "/dwp.csv");
          DwpDraws d;
          d.turbines = turbines;
          d.draws = draws;
          by_class.emplace(cls, std::move(d));
        }
        tab = format_genest(by_class, mode, exp_digits);
      }
      export_genest(tab, exp_out + "/genest.csv");
      std::cout << "genest.csv: " << tab.rows.size() << " rows\n";
    } else if (cmd_sim->parsed()) {
      ScenarioConfig cfg = read_scenario_config(sim_config);
      if (sim_pipeline) cfg.pipeline = true;
      run_simulate(cfg, sim_out);
    }
  } catch (const cli_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const no_viable_model& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const estimation_failed& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const not_extensible& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const degenerate_input& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const singular_fit& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const simulation_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const invalid_layout& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const invalid_carcass& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
