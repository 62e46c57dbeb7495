#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include "dwp/rings.hpp"

using namespace dwp;

namespace {

std::vector<Point> square(double half, double cx = 0.0, double cy = 0.0) {
  return {{cx - half, cy - half}, {cx + half, cy - half}, {cx + half, cy + half},
          {cx - half, cy + half}};
}

std::string temp_dir(const char* tag) {
  auto d = std::filesystem::temp_directory_path() / (std::string("dwp_geo_") + tag);
  std::filesystem::create_directories(d);
  return d.string();
}

}  // namespace

TEST_CASE("coverage fraction of the basic shapes") {
  CHECK(frac_circular(50.0, 100.0) == 1.0);
  CHECK(frac_circular(100.0, 100.0) == 1.0);
  CHECK(frac_circular(100.001, 100.0) == 0.0);

  const double a = 10.0;
  CHECK(frac_square(9.99, a) == 1.0);
  CHECK(frac_square(a * std::sqrt(2.0), a) == 0.0);
  CHECK(frac_square(12.0, a) ==
        Catch::Approx(1.0 - (4.0 / M_PI) * std::acos(a / 12.0)).margin(1e-12));
  // continuity at the inscribed-circle break
  CHECK(frac_square(a + 1e-9, a) == Catch::Approx(1.0).margin(1e-4));

  CHECK(frac_rp(10.0, 15.0, 5.0, 2, 150.0) == 1.0);
  CHECK(frac_rp(151.0, 15.0, 5.0, 2, 150.0) == 0.0);
  CHECK(frac_rp(60.0, 15.0, 5.0, 2, 150.0) ==
        Catch::Approx(2.0 * std::asin(2.5 / 60.0) / M_PI).margin(1e-12));
  // road wider than the circumference chord saturates at full coverage
  CHECK(frac_rp(16.0, 15.0, 80.0, 2, 150.0) == 1.0);
}

TEST_CASE("ring exposure integrates the fraction over the annulus") {
  const double R = 2.5;
  auto frac = [R](double x) { return frac_circular(x, R); };
  CHECK(ring_exposure(frac, 2.0, 3.0, {R}) ==
        Catch::Approx(M_PI * (R * R - 4.0)).margin(1e-9));
  CHECK(ring_exposure(frac, 0.0, 1.0, {R}) == Catch::Approx(M_PI).margin(1e-9));
  CHECK(ring_exposure(frac, 3.0, 4.0, {R}) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("road-and-pad ring proportions") {
  const auto p = build_rings_simple({{"t1", 150.0, "RP", 15.0, 5.0, 2}});
  const auto& t = p.turbines.at(0);
  CHECK(t.n_rings == 150);
  CHECK(t.pinc(10) == Catch::Approx(1.0).margin(1e-12));
  // exact ring integrals of the two-road fraction, 30-digit quadrature
  CHECK(t.pinc(16) == Catch::Approx(0.103131583437).margin(1e-9));
  CHECK(t.pinc(30) == Catch::Approx(0.0540156342675).margin(1e-9));
  CHECK(t.pinc(50) == Catch::Approx(0.0321661997613).margin(1e-9));
  CHECK(t.pinc(100) == Catch::Approx(0.0159971551711).margin(1e-9));
  CHECK(t.pinc(150) == Catch::Approx(0.0106463118235).margin(1e-9));

  const auto p4 = build_rings_simple({{"t1", 150.0, "RP", 15.0, 4.0, 4}});
  CHECK(p4.turbines.at(0).pinc(50) == Catch::Approx(0.0514580306788).margin(1e-9));
}

TEST_CASE("simple circular layout equals the direct circular builder") {
  const auto a = build_rings_circular(75.0, {"t1"});
  const auto b = build_rings_simple({{"t1", 75.0, "circular"}});
  REQUIRE(a.turbines.size() == 1);
  REQUIRE(b.turbines.size() == 1);
  REQUIRE(a.turbines[0].rows.size() == b.turbines[0].rows.size());
  for (std::size_t i = 0; i < a.turbines[0].rows.size(); ++i)
    CHECK(a.turbines[0].rows[i].exposure == b.turbines[0].rows[i].exposure);
  for (int r = 1; r <= 74; ++r)
    CHECK(a.turbines[0].rows[r - 1].exposure ==
          Catch::Approx(annulus_area(r)).margin(1e-9));
  CHECK(a.srad == 75);
}

TEST_CASE("square layout covers its exact area") {
  const double half = 20.0;
  const auto p = build_rings_simple({{"sq", half, "square"}});
  double total = 0.0;
  for (const auto& row : p.turbines[0].rows) total += row.exposure;
  CHECK(total == Catch::Approx(4.0 * half * half).epsilon(1e-6));
  CHECK(p.srad == static_cast<int>(std::ceil(half * std::sqrt(2.0))));
}

TEST_CASE("point-in-polygon with holes via parity") {
  const auto outer = square(10.0);
  CHECK(point_in_polygon(outer, 0.0, 0.0));
  CHECK(point_in_polygon(outer, 9.99, -9.99));
  CHECK_FALSE(point_in_polygon(outer, 10.5, 0.0));
  CHECK_FALSE(point_in_polygon(outer, 0.0, -11.0));

  std::vector<Polygon> pieces = {{outer, "ground"}, {square(3.0), "ground"}};
  std::string cls;
  CHECK(classify_point(pieces, 5.0, 5.0, &cls));
  CHECK(cls == "ground");
  CHECK_FALSE(classify_point(pieces, 0.0, 0.0, nullptr));  // inside the hole
  CHECK_FALSE(classify_point(pieces, 20.0, 0.0, nullptr));
}

TEST_CASE("self-intersecting polygons are rejected") {
  const std::vector<Point> bowtie = {{0, 0}, {2, 2}, {2, 0}, {0, 2}};
  CHECK(polygon_self_intersects(bowtie));
  CHECK_FALSE(polygon_self_intersects(square(5.0)));
  CHECK(polygon_self_intersects({{0, 0}, {1, 1}}));  // degenerate
  CHECK_THROWS_AS(build_rings_polygon({{"t1", {{bowtie, ""}}}}), invalid_layout);
}

TEST_CASE("polygon ring exposure matches the analytic square") {
  const double half = 12.0;
  const auto p = build_rings_polygon({{"sq", {{square(half), ""}}}});
  const auto& t = p.turbines.at(0);
  CHECK(t.n_rings == static_cast<int>(std::ceil(half * std::sqrt(2.0))));
  double total = 0.0;
  for (const auto& row : t.rows) total += row.exposure;
  CHECK(total == Catch::Approx(4.0 * half * half).epsilon(1e-3));
  const auto ref = build_rings_simple({{"sq", half, "square"}});
  for (int r = 1; r <= t.n_rings; ++r)
    CHECK(t.pinc(r) == Catch::Approx(ref.turbines[0].pinc(r)).margin(5e-3));
}

TEST_CASE("polygon classes split exposure and not_searched removes it") {
  // inner searched square plus an outer annular "crops" frame
  std::vector<Polygon> pieces = {{square(8.0), "ground"},
                                 {square(16.0), "crops"},
                                 {square(8.0), "crops"}};
  const auto p = build_rings_polygon({{"t1", pieces}});
  CHECK(p.sc_var == "class");
  const auto& t = p.turbines.at(0);
  double ground = 0.0, crops = 0.0;
  for (const auto& row : t.rows)
    (row.search_class == "ground" ? ground : crops) += row.exposure;
  CHECK(ground == Catch::Approx(256.0).epsilon(2e-3));
  CHECK(crops == Catch::Approx(1024.0 - 256.0).epsilon(2e-3));

  const auto q = build_rings_polygon({{"t1", pieces}}, {"crops"});
  double qtotal = 0.0;
  for (const auto& row : q.turbines.at(0).rows) {
    CHECK(row.search_class == "ground");
    qtotal += row.exposure;
  }
  CHECK(qtotal == Catch::Approx(256.0).epsilon(2e-3));
}

TEST_CASE("max vertex distance spans all pieces") {
  const std::vector<Polygon> pieces = {{square(5.0), ""}, {square(2.0, 30.0, 40.0), ""}};
  CHECK(max_vertex_distance(pieces) == Catch::Approx(std::hypot(32.0, 42.0)).margin(1e-12));
}

TEST_CASE("distances map to half-open rings") {
  CHECK(ring_of_distance(0.0) == 1);
  CHECK(ring_of_distance(0.4) == 1);
  CHECK(ring_of_distance(1.0) == 1);
  CHECK(ring_of_distance(1.0 + 1e-9) == 2);
  CHECK(ring_of_distance(7.0) == 7);
  CHECK(ring_of_distance(99.2) == 100);
}

TEST_CASE("carcass placement and conservation") {
  auto p = build_rings_circular(10.0, {"t1", "t2"});
  std::vector<CarcassRecord> recs;
  recs.push_back({"t1", 3.2, std::nullopt, "", ""});
  recs.push_back({"t1", 3.0, std::nullopt, "", ""});
  recs.push_back({"t1", 0.0, std::nullopt, "", ""});
  recs.push_back({"t2", std::nullopt, Point{3.0, 4.0}, "", ""});
  const auto q = add_carcasses(p, recs);
  CHECK(q.site_ncarc() == 4);
  const auto* t1 = q.find("t1");
  REQUIRE(t1);
  CHECK(t1->ncarc == 3);
  CHECK(t1->rows[3].ncarc == 1);  // ring 4
  CHECK(t1->rows[2].ncarc == 1);  // ring 3
  CHECK(t1->rows[0].ncarc == 1);  // ring 1
  CHECK(q.find("t2")->rows[4].ncarc == 1);  // (3,4) -> 5 m

  CHECK_THROWS_AS(add_carcasses(p, {{"t1", 10.5, std::nullopt, "", ""}}), invalid_carcass);
  CHECK_THROWS_AS(add_carcasses(p, {{"t1", -1.0, std::nullopt, "", ""}}), invalid_carcass);
  CHECK_THROWS_AS(add_carcasses(p, {{"nope", 2.0, std::nullopt, "", ""}}), invalid_carcass);
  CHECK_THROWS_AS(add_carcasses(p, {{"t1", std::nullopt, std::nullopt, "", ""}}),
                  invalid_carcass);
}

TEST_CASE("polygon layouts classify carcasses by location") {
  const std::vector<PolygonLayout> layout = {
      {"t1", {{square(8.0), "ground"}, {square(16.0), "crops"}, {square(8.0), "crops"}}}};
  auto p = build_rings_polygon(layout);

  auto q = add_carcasses(p, {{"t1", std::nullopt, Point{2.0, 2.0}, "", ""},
                             {"t1", std::nullopt, Point{11.0, 0.0}, "", ""}},
                         &layout);
  long ground = 0, crops = 0;
  for (const auto& row : q.turbines[0].rows)
    (row.search_class == "ground" ? ground : crops) += row.ncarc;
  CHECK(ground == 1);
  CHECK(crops == 1);

  // outside every piece
  CHECK_THROWS_AS(
      add_carcasses(p, {{"t1", std::nullopt, Point{30.0, 30.0}, "", ""}}, &layout),
      invalid_carcass);
  // lands in a class that was excluded from the profile
  auto excl = build_rings_polygon(layout, {"crops"});
  CHECK_THROWS_AS(add_carcasses(excl, {{"t1", std::nullopt, Point{11.0, 0.0}, "", ""}},
                                &layout, {"crops"}),
                  invalid_carcass);
}

TEST_CASE("carcass classes split into per-class profiles") {
  auto p = build_rings_circular(20.0, {"t1"});
  std::vector<CarcassRecord> recs = {{"t1", 5.0, std::nullopt, "", "bat"},
                                     {"t1", 8.0, std::nullopt, "", "bird"},
                                     {"t1", 9.0, std::nullopt, "", "bat"}};
  const auto split = add_carcasses_by_class(p, recs);
  REQUIRE(split.size() == 2);
  CHECK(split.at("bat").site_ncarc() == 2);
  CHECK(split.at("bird").site_ncarc() == 1);

  CHECK_THROWS_AS(add_carcasses_by_class(p, {{"t1", 5.0, std::nullopt, "", ""}}),
                  invalid_carcass);
}

TEST_CASE("site pooling weights turbines equally") {
  auto p = build_rings_circular(5.0, {"small"});
  auto big = build_rings_circular(10.0, {"big"});
  p.turbines.push_back(big.turbines[0]);
  pool_site(p);
  CHECK(p.srad == 10);
  CHECK(p.site_pinc(3) == Catch::Approx(1.0).margin(1e-9));
  CHECK(p.site_pinc(7) == Catch::Approx(0.5).margin(1e-9));
  CHECK(p.find("big")->pinc(7) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("ring profile round-trips through its csv bundle") {
  const std::vector<PolygonLayout> layout = {
      {"t1", {{square(8.0), "ground"}, {square(16.0), "crops"}, {square(8.0), "crops"}}},
      {"t2", {{square(12.0), "ground"}}}};
  auto p = build_rings_polygon(layout);
  p = add_carcasses(p, {{"t1", std::nullopt, Point{2.0, 2.0}, "", ""},
                        {"t2", 4.5, std::nullopt, "ground", ""}},
                    &layout);
  const auto dir = temp_dir("roundtrip");
  write_profile(p, dir);
  const auto q = read_profile(dir);

  CHECK(q.srad == p.srad);
  CHECK(q.sc_var == p.sc_var);
  REQUIRE(q.turbines.size() == p.turbines.size());
  for (std::size_t i = 0; i < p.turbines.size(); ++i) {
    const auto& a = p.turbines[i];
    const auto& b = q.turbines[i];
    CHECK(a.name == b.name);
    CHECK(a.ncarc == b.ncarc);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t j = 0; j < a.rows.size(); ++j) {
      CHECK(a.rows[j].r == b.rows[j].r);
      CHECK(a.rows[j].search_class == b.rows[j].search_class);
      CHECK(a.rows[j].exposure == b.rows[j].exposure);  // fmtg is lossless
      CHECK(a.rows[j].ncarc == b.rows[j].ncarc);
    }
  }
  REQUIRE(q.site.size() == p.site.size());
  for (std::size_t j = 0; j < p.site.size(); ++j)
    CHECK(q.site[j].exposure == Catch::Approx(p.site[j].exposure).margin(1e-12));
}

TEST_CASE("grid profiles build, validate, and round-trip") {
  std::vector<GridCellInput> rows;
  for (int i = -2; i <= 2; ++i)
    for (int j = -2; j <= 2; ++j) rows.push_back({"g1", 5.0 * i, 5.0 * j, (i == j) ? 2L : 0L});
  const auto g = build_grid(rows);  // cell size inferred from the lattice gap
  CHECK(g.cell_size == Catch::Approx(5.0));
  REQUIRE(g.turbines.size() == 1);
  CHECK(g.turbines[0].cells.size() == 25);
  CHECK(g.turbines[0].ncarc == 10);
  for (const auto& c : g.turbines[0].cells) {
    CHECK(c.exposure == Catch::Approx(25.0));
    CHECK(c.r == Catch::Approx(std::hypot(c.x, c.y)));
  }

  auto dup = rows;
  dup.push_back(rows[0]);
  CHECK_THROWS_AS(build_grid(dup), invalid_layout);
  CHECK_THROWS_AS(build_grid({{"g1", 0.0, 0.0, -1L}}), invalid_layout);

  const auto dir = temp_dir("grid");
  write_grid(g, dir);
  const auto h = read_grid(dir);
  CHECK(h.cell_size == g.cell_size);
  REQUIRE(h.turbines.size() == 1);
  CHECK(h.turbines[0].cells.size() == 25);
  CHECK(h.turbines[0].ncarc == 10);
}

TEST_CASE("layout validation errors") {
  CHECK_THROWS_AS(build_rings_circular(0.0), invalid_layout);
  CHECK_THROWS_AS(build_rings_simple({{"t", 50.0, "hexagon"}}), invalid_layout);
  CHECK_THROWS_AS(build_rings_simple({{"t", 50.0, "RP", 0.0, 5.0, 2}}), invalid_layout);
  CHECK_THROWS_AS(
      build_rings_simple({{"t", 50.0, "circular"}, {"t", 60.0, "circular"}}),
      invalid_layout);
  CHECK_THROWS_AS(build_rings_polygon({{"t", {{square(5.0), ""}}},
                                       {"t", {{square(6.0), ""}}}}),
                  invalid_layout);
}
