#include <algorithm>
#include <atomic>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "hardylab/edt.hpp"
#include "hardylab/error.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/random.hpp"

using namespace hardylab;

TEST(DistanceTransform, MatchesBruteForce) {
  const std::array<std::int64_t, 3> ext{13, 9, 1};
  std::vector<std::uint8_t> sites(ext[0] * ext[1], 0);
  Rng rng(7);
  for (auto& s : sites) s = rng.uniform() < 0.07 ? 1 : 0;
  sites[5] = 1;
  DistanceField df = exact_distance_transform(sites, 2, ext);
  for (std::int64_t y = 0; y < ext[1]; ++y)
    for (std::int64_t x = 0; x < ext[0]; ++x) {
      std::int64_t best = -1;
      for (std::int64_t j = 0; j < ext[1]; ++j)
        for (std::int64_t i = 0; i < ext[0]; ++i)
          if (sites[j * ext[0] + i]) {
            const std::int64_t d = (i - x) * (i - x) + (j - y) * (j - y);
            if (best < 0 || d < best) best = d;
          }
      const auto idx = y * ext[0] + x;
      EXPECT_EQ(df.sq_dist[idx], best);
      const auto f = df.feature[idx];
      const std::int64_t fx = f % ext[0], fy = f / ext[0];
      EXPECT_TRUE(sites[f]);
      EXPECT_EQ((fx - x) * (fx - x) + (fy - y) * (fy - y), best);
    }
}

TEST(DistanceTransform, NoSitesGivesSentinel) {
  std::vector<std::uint8_t> sites(8, 0);
  DistanceField df = exact_distance_transform(sites, 1, {8, 1, 1});
  for (auto d : df.sq_dist) EXPECT_EQ(d, -1);
  for (auto f : df.feature) EXPECT_EQ(f, kNoSite);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(1000, [&](std::int64_t i) { hits[i]++; });
  for (auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(Parallel, RethrowsWorkerException) {
  EXPECT_THROW(parallel_for(50, [](std::int64_t i) {
                 if (i == 17) throw Error(ErrorCode::solver, "boom");
               }),
               Error);
}

TEST(Random, SeedsAreReproducibleAndDistinct) {
  Rng a(42), b(42);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.uniform(), b.uniform());
  std::set<std::uint64_t> seeds;
  for (std::uint64_t l = 0; l < 100; ++l) seeds.insert(derive_seed(3, l));
  EXPECT_EQ(seeds.size(), 100u);
  EXPECT_EQ(derive_seed(3, 9), derive_seed(3, 9));
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Errors, CarryCodeAndClause) {
  Error e(ErrorCode::precondition, "msg", "p>1");
  EXPECT_EQ(e.code(), ErrorCode::precondition);
  EXPECT_EQ(e.clause(), "p>1");
  EXPECT_STREQ(error_code_name(ErrorCode::config), "config");
}
