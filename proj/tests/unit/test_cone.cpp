#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "hardylab/cone.hpp"
#include "hardylab/error.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

TEST(Cone, CutoffProfile) {
  EXPECT_DOUBLE_EQ(CutoffFamily::profile(0.0), 1.0);
  EXPECT_DOUBLE_EQ(CutoffFamily::profile(0.5), 1.0);
  EXPECT_DOUBLE_EQ(CutoffFamily::profile(-0.5), 1.0);
  EXPECT_DOUBLE_EQ(CutoffFamily::profile(2.0 / 3.0), 0.0);
  EXPECT_DOUBLE_EQ(CutoffFamily::profile(-0.9), 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.5 + i / 600.0;
    const double v = CutoffFamily::profile(t);
    EXPECT_LE(v, prev);
    EXPECT_GE(v, 0.0);
    prev = v;
  }
  EXPECT_DOUBLE_EQ(CutoffFamily::beta, CutoffFamily::alpha * CutoffFamily::alpha);
}

TEST(Cone, MajorantDominatesPositivePart) {
  LocalPatch u;
  u.dim = 2;
  u.extent = {24, 24, 1};
  u.h = (16.0 / 9.0) / 24.0;
  u.origin = {-8.0 / 9.0 + u.h / 2, -8.0 / 9.0 + u.h / 2, 0};
  u.values.assign(u.size(), 0.0);
  for (std::int64_t j = 0; j < 24; ++j)
    for (std::int64_t i = 0; i < 24; ++i) {
      const Point x = u.center({i, j, 0});
      u.values[u.index({i, j, 0})] =
          CutoffFamily::eval(x, Point{0, 0, 0}, 4.0 / 3.0, 2) * std::sin(5.0 * x[0]) * std::cos(3.0 * x[1]);
    }
  for (int m = 1; m <= 3; ++m) {
    MajorantResult r = local_majorant(u, m, 2.0);
    for (std::int64_t i = 0; i < u.size(); ++i) {
      EXPECT_GE(r.v.values[i], std::max(u.values[i], 0.0) - 1e-14);
      EXPECT_GE(r.v.values[i], 0.0);
    }
    EXPECT_TRUE(std::isfinite(r.a0));
    EXPECT_GT(r.a0, 0.0);
  }
  EXPECT_THROW(local_majorant(u, 2, 1.0), Error);
}

class ConeDomains : public ::testing::TestWithParam<std::string> {};

TEST_P(ConeDomains, SplitInvariants) {
  GridDomain g = domain(GetParam());
  WhitneyDecomposition w = decompose(g);
  for (const auto& pr : cone_probes(g, 4, 9)) {
    for (int m : {1, 2}) {
      ConeSplit cs = cone_split(g, w, pr.values, m, 2.0, 0.0);
      EXPECT_GE(cs.min_value, 0.0);
      EXPECT_LE(cs.exactness_error, 1e-12);
      EXPECT_TRUE(cs.chain_holds);
      EXPECT_TRUE(std::isfinite(cs.norm_factor));
      for (std::int64_t i = 0; i < g.shape().size(); ++i) {
        EXPECT_GE(cs.u1[i], 0.0);
        EXPECT_GE(cs.u2[i], 0.0);
        EXPECT_NEAR(cs.u1[i] - cs.u2[i], pr.values[i], 1e-12);
        if (!g.inside(i)) {
          EXPECT_EQ(cs.u1[i], 0.0);
        }
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Domains, ConeDomains, ::testing::Values(halfspace(6), lshape(6), interval(9), koch(6)),
                         [](const auto& info) { return domain_label(info.param); });

TEST(Cone, SplitIsLocal) {
  GridDomain g = domain(lshape(6));
  WhitneyDecomposition w = decompose(g);
  const auto pr = cone_probes(g, 1, 4).front();
  ConeSplit cs = cone_split(g, w, pr.values, 2, 2.0, 0.0);
  const auto& sh = g.shape();
  std::vector<std::int64_t> support;
  for (std::int64_t i = 0; i < sh.size(); ++i)
    if (pr.values[i] != 0.0) support.push_back(i);
  ASSERT_FALSE(support.empty());
  // Every cell touched by the split lies within a few local scales of supp u.
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    if (cs.u1[i] == 0.0 && cs.u2[i] == 0.0) continue;
    const Coord c = sh.coord(i);
    bool near = false;
    for (auto j : support) {
      const Coord d = sh.coord(j);
      const double dist = std::hypot(double(c[0] - d[0]), double(c[1] - d[1])) * sh.h();
      if (dist <= 4.0 * g.delta()[j] + 4.0 * sh.h()) {
        near = true;
        break;
      }
    }
    EXPECT_TRUE(near) << "cell " << i;
  }
}

TEST(Cone, IntegralTestSeparatesBoundaryPowers) {
  GridDomain g = domain(halfspace(7));
  WhitneyDecomposition w = decompose(g);
  const int m = 2;
  const ConeProbe ok = boundary_power_probe(g, m + 1.0, 1), cusp = boundary_power_probe(g, m - 1.0, 1);
  EXPECT_TRUE(weighted_integral_test(g, w, ok.values, m, 2.0, 0.0).finite);
  EXPECT_FALSE(weighted_integral_test(g, w, cusp.values, m, 2.0, 0.0).finite);
  try {
    cone_split(g, w, cusp.values, m, 2.0, 0.0);
    FAIL() << "divergent probe was split";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::hypothesis);
  }
}

TEST(Cone, TheoremRouting) {
  EXPECT_EQ(parse_cone_theorem(cone_theorem_name(ConeTheorem::two_sided)), ConeTheorem::two_sided);
  EXPECT_EQ(routed_corollary_case(ConeTheorem::two_sided, "i"), CorollaryCase::iii);
  EXPECT_EQ(routed_corollary_case(ConeTheorem::two_sided, "iv"), CorollaryCase::viii);
  EXPECT_THROW(parse_cone_theorem("three-sided"), Error);
}

TEST(Cone, ConjectureTableCoversEveryOrder) {
  auto rows = conjecture_table({spec(lshape(6))}, {1, 2, 3}, 2.0, 3, 2);
  ASSERT_EQ(rows.size(), 3u);
  for (const auto& r : rows) {
    EXPECT_EQ(r.probes, 3);
    EXPECT_LE(r.splits, r.probes);
  }
  EXPECT_EQ(conjecture_table_json(rows).size(), 3u);
}
