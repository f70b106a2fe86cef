#include <cmath>

#include <gtest/gtest.h>

#include "hardylab/error.hpp"
#include "hardylab/random.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

class WhitneyCorpus : public ::testing::TestWithParam<std::string> {};

TEST_P(WhitneyCorpus, DecompositionIsValid) {
  GridDomain g = domain(GetParam());
  WhitneyDecomposition w = decompose(g);
  WhitneyValidity v = validate(g, w);
  EXPECT_TRUE(v.ok()) << "violations " << v.violations << " neighbour ratio " << v.max_neighbor_ratio;
  EXPECT_TRUE(v.cover_exact);
  EXPECT_NEAR(v.neighbor_bound, 5.0 * std::sqrt(static_cast<double>(g.dim())), 1e-12);
  EXPECT_EQ(v.cubes, static_cast<std::int64_t>(w.size()));
}

TEST_P(WhitneyCorpus, OwnersPartitionTheInside) {
  GridDomain g = domain(GetParam());
  WhitneyDecomposition w = decompose(g);
  const auto& sh = g.shape();
  std::vector<std::int64_t> count(w.size(), 0);
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    if (!g.inside(i)) {
      EXPECT_EQ(w.owner[i], -1);
      continue;
    }
    const auto q = w.owner[i];
    ASSERT_GE(q, 0);
    ++count[q];
    const CellBox b = w.cubes[q].cells(sh.level);
    const Coord c = sh.coord(i);
    for (int d = 0; d < sh.dim; ++d) {
      EXPECT_GE(c[d], b.lo[d]);
      EXPECT_LT(c[d], b.hi[d]);
    }
  }
  for (std::size_t q = 0; q < w.size(); ++q) EXPECT_EQ(count[q], w.cubes[q].cells(sh.level).count(sh.dim));
}

TEST_P(WhitneyCorpus, SummationBoundHoldsForRandomDensities) {
  GridDomain g = domain(GetParam());
  WhitneyDecomposition w = decompose(g);
  Rng rng(11);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> f(g.shape().size(), 0.0);
    for (std::int64_t i = 0; i < g.shape().size(); ++i)
      if (g.inside(i)) f[i] = rng.uniform() < 0.3 ? rng.uniform() : 0.0;
    for (double s : {0.25, 1.0, 2.0}) {
      SummationTerms st = summation_lemma_ratio(g, w, f, s);
      EXPECT_LE(st.lhs, st.rhs_bound);
      EXPECT_GT(st.integral, 0.0);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Corpus, WhitneyCorpus,
                         ::testing::Values(halfspace(7), interval(9), square(6), lshape(7), koch(7),
                                           cantor(9, 3)),
                         [](const auto& info) { return domain_label(info.param); });

TEST(Whitney, IntervalCubesAreSymmetric) {
  GridDomain g = domain(interval(10));
  WhitneyDecomposition w = decompose(g);
  std::vector<int> left(11, 0), right(11, 0);
  for (const auto& c : w.cubes) (c.coords[0] * 2 < (std::int64_t{1} << c.level) ? left : right)[c.level]++;
  EXPECT_EQ(left, right);
  // Cube sizes grow away from the boundary: one cube per level away from the endpoints.
  for (int l = 3; l <= 9; ++l) EXPECT_GE(left[l], 1);
}

TEST(Whitney, RescaleMapTakesEnlargedCubeToUnitCube) {
  GridDomain g = domain(lshape(6));
  WhitneyDecomposition w = decompose(g);
  for (std::size_t q = 0; q < w.size(); q += 7) {
    RescaleMap m = rescale_map(w.enlarged[q], 2);
    Point lo = m.forward(w.enlarged[q].lo(2)), hi = m.forward(w.enlarged[q].hi(2));
    EXPECT_NEAR(lo[0], 0.0, 1e-12);
    EXPECT_NEAR(hi[1], 1.0, 1e-12);
    Point x{0.3, 0.7, 0.0};
    Point y = m.inverse(m.forward(x));
    EXPECT_NEAR(y[0], x[0], 1e-12);
    EXPECT_NEAR(y[1], x[1], 1e-12);
  }
}

TEST(Whitney, PackingCountGrowsWithDimension) {
  EXPECT_GT(packing_count(1), 0);
  EXPECT_LT(packing_count(1), packing_count(2));
  EXPECT_LT(packing_count(2), packing_count(3));
}

TEST(Whitney, SvgIsPlanarOnly) {
  GridDomain g = domain(lshape(5));
  WhitneyDecomposition w = decompose(g);
  const std::string svg = decomposition_svg(w, true);
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  WhitneyDecomposition wi = decompose(domain(interval(6)));
  EXPECT_THROW(decomposition_svg(wi, false), Error);
}
