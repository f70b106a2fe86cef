#include <cmath>

#include <gtest/gtest.h>

#include "hardylab/dimension.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

TEST(Dimension, HalfspaceBoundaryIsOneDimensional) {
  GridDomain g = domain(halfspace(9));
  WhitneyDecomposition w = decompose(g);
  EXPECT_NEAR(dim_loc(g, w).value, 1.0, 0.1);
  EXPECT_NEAR(dim_mc_loc(g, w).value, 1.0, 0.1);
}

TEST(Dimension, IntervalEndpointsAreZeroDimensional) {
  GridDomain g = domain(interval(12));
  WhitneyDecomposition w = decompose(g);
  EXPECT_NEAR(dim_loc(g, w).value, 0.0, 0.1);
}

TEST(Dimension, CantorComplement) {
  GridDomain g = domain(cantor(14, 4));
  WhitneyDecomposition w = decompose(g);
  const double target = std::log(2.0) / std::log(3.0);
  const DimensionEstimate a = dim_loc(g, w), b = dim_mc_loc(g, w);
  EXPECT_NEAR(a.value, target, 0.1);
  EXPECT_NEAR(b.value, target, 0.1);
  EXPECT_LE(std::abs(a.value - b.value), 0.1);
}

TEST(Dimension, GsIsBoundedBelowTheDimensionAndGrowsAbove) {
  GridDomain g = domain(halfspace(9));
  WhitneyDecomposition w = decompose(g);
  // Per cube the integral of delta^{-s} converges for s < 1 = codimension.
  const GsResult lo = g_s(g, w, 0.5), hi = g_s(g, w, 1.5);
  EXPECT_LT(growth_slope(lo.per_level), 0.25);
  EXPECT_GT(growth_slope(hi.per_level), 0.25);
  EXPECT_LT(lo.sup_value, hi.sup_value);
}

TEST(Dimension, GrowthSlopeOfExactPowerLaw) {
  std::vector<LevelValue> pts;
  for (int l = 3; l <= 8; ++l) pts.push_back({l, std::pow(2.0, 0.7 * l), 1});
  EXPECT_NEAR(std::abs(growth_slope(pts)), 0.7, 1e-12);
}

TEST(Dimension, CsvTablesHaveHeaders) {
  GridDomain g = domain(lshape(7));
  WhitneyDecomposition w = decompose(g);
  const std::string gs = gs_table_csv({g_s(g, w, 0.5)});
  EXPECT_NE(gs.find('\n'), std::string::npos);
  const std::string bc = box_count_csv(rescaled_box_counts(g, w));
  EXPECT_NE(bc.find('\n'), std::string::npos);
  EXPECT_EQ(dim_loc(g, w).to_json().at("kind"), "loc");
}

TEST(Dimension, HalfspaceSignatureIsSelfSimilar) {
  GridDomain g = domain(halfspace(8));
  WhitneyDecomposition w = decompose(g);
  SelfSimilarityReport r = selfsimilarity_signature(g, w, 0.5);
  EXPECT_LT(r.max_discrepancy, r.threshold);
}
