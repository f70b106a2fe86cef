#include <cmath>
#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "hardylab/error.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

TEST(Domain, IntervalDistanceIsDistanceToEndpoints) {
  GridDomain g = domain(interval(8));
  ASSERT_EQ(g.dim(), 1);
  const auto& sh = g.shape();
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    const double x = sh.center(i);
    EXPECT_TRUE(g.inside(i));
    EXPECT_NEAR(g.delta()[i], std::max(g.delta_floor(), std::min(x, 1.0 - x)), 1e-12);
  }
}

TEST(Domain, HalfspaceIsAWindow) {
  GridDomain g = domain(halfspace(6));
  EXPECT_FALSE(g.collar());
  const auto& sh = g.shape();
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    const Coord c = sh.coord(i);
    const double y = sh.center(c[1]);
    EXPECT_EQ(g.inside(i), y > 0.5);
    // Distance only to the plane: the box edges are not boundary.
    if (g.inside(i)) {
      EXPECT_NEAR(g.delta()[i], std::max(g.delta_floor(), y - 0.5), 1e-12);
    }
  }
}

TEST(Domain, LShapeRemovesUpperRightQuadrant) {
  GridDomain g = domain(lshape(6));
  EXPECT_EQ(g.inside_count(), 3 * 32 * 32);
}

TEST(Domain, KochAreaApproachesSnowflakeArea) {
  GridDomain g = domain(koch(9, 4));
  const double side = 0.7;
  // Area of the snowflake after k iterations.
  double area = std::sqrt(3.0) / 4.0 * side * side;
  double add = area;
  for (int k = 1; k <= 4; ++k) {
    add *= 4.0 / 9.0;
    area += add * 3.0 / 4.0;
  }
  const double measured = g.inside_count() * g.shape().cell_volume();
  EXPECT_NEAR(measured, area, 0.01);
}

TEST(Domain, CantorComplementRemovesCantorSet) {
  GridDomain g = domain(cantor(12, 2));
  // 4 intervals of length 1/9 removed, with collar.
  const double measured = g.inside_count() * g.h();
  EXPECT_NEAR(measured, 1.0 - 4.0 / 9.0, 4.0 * 2.0 / 4096.0);
}

TEST(Domain, RejectsBadSpecs) {
  try {
    domain(R"({"kind":"nope","level":6,"parameters":{}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
  }
  EXPECT_THROW(domain(R"({"kind":"square","level":40,"parameters":{"dim":2}})"), Error);
}

TEST(Domain, SpecEchoRoundTrips) {
  DomainSpec s = spec(koch(7, 3));
  DomainSpec t = parse_domain_spec(to_json(s));
  EXPECT_EQ(to_json(s), to_json(t));
  EXPECT_EQ(domain_kind_name(t.kind), "koch-polygon");
}

TEST(Domain, FilesRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path();
  GridDomain g = domain(lshape(5));
  const std::string mpath = (dir / "hl_mask_test.grid").string();
  write_mask_file(mpath, g.shape(), g.mask());
  GridShape sh;
  EXPECT_EQ(read_mask_file(mpath, sh), g.mask());
  EXPECT_EQ(sh.level, 5);

  std::vector<double> f(g.shape().size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::sin(0.37 * i) * 1e-3 + i;
  const std::string fpath = (dir / "hl_fn_test.fn").string();
  write_function_file(fpath, g.shape(), f);
  GridShape fs;
  auto back = read_function_file(fpath, fs);
  ASSERT_EQ(back.size(), f.size());
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(back[i], f[i]);

  auto raw = parse_domain_spec(nlohmann::json{{"kind", "raw-mask"}, {"level", 5}, {"parameters", {{"path", mpath}}}});
  GridDomain r = rasterize(raw);
  EXPECT_EQ(r.inside_count(), g.inside_count());
  std::remove(mpath.c_str());
  std::remove(fpath.c_str());
}

TEST(Domain, MissingFileIsIoError) {
  GridShape sh;
  try {
    read_mask_file("/nonexistent/mask.grid", sh);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::io);
  }
}
