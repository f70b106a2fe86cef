#include <cmath>

#include <gtest/gtest.h>

#include "hardylab/error.hpp"
#include "hardylab/norms.hpp"
#include "helpers.hpp"

using namespace hardylab;
using namespace testing_util;

TEST(Norms, MultiIndexCountsAndMultiplicities) {
  EXPECT_EQ(multi_indices(2, 2).size(), 3u);
  EXPECT_EQ(multi_indices(3, 2).size(), 6u);
  EXPECT_EQ(multi_indices(3, 3).size(), 10u);
  for (int dim = 1; dim <= 3; ++dim)
    for (int k = 0; k <= 3; ++k) {
      // Multinomial coefficients sum to N^k: every ordered tuple is counted once.
      double total = 0.0;
      for (const auto& a : multi_indices(dim, k)) total += multiplicity(a, dim);
      EXPECT_DOUBLE_EQ(total, std::pow(dim, k));
    }
}

TEST(Norms, DifferencesOfPolynomialsAreExact) {
  GridShape sh{2, 5};
  std::vector<double> u(sh.size());
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    const Coord c = sh.coord(i);
    const double x = sh.center(c[0]), y = sh.center(c[1]);
    u[i] = 3.0 * x * x - 2.0 * x * y + y;
  }
  const CellBox box = position_box(sh, 2, BoundaryPolicy::none);
  const auto dxx = difference(sh, u, Coord{2, 0, 0}, BoundaryPolicy::none);
  const auto dxy = difference(sh, u, Coord{1, 1, 0}, BoundaryPolicy::none);
  for (std::int64_t y = box.lo[1]; y < box.hi[1]; ++y)
    for (std::int64_t x = box.lo[0]; x < box.hi[0]; ++x) {
      const Coord c{x, y, 0};
      if (!stencil_defined(sh, c, Coord{2, 0, 0}, BoundaryPolicy::none)) continue;
      const auto i = (y - box.lo[1]) * (box.hi[0] - box.lo[0]) + (x - box.lo[0]);
      EXPECT_NEAR(dxx[i], 6.0, 1e-8);
      if (stencil_defined(sh, c, Coord{1, 1, 0}, BoundaryPolicy::none)) {
        EXPECT_NEAR(dxy[i], -2.0, 1e-8);
      }
    }
}

TEST(Norms, DifferenceAdjointIsTheTranspose) {
  GridShape sh{2, 4};
  std::vector<double> u(sh.size()), v;
  for (std::int64_t i = 0; i < sh.size(); ++i) u[i] = std::sin(1.3 * i);
  for (auto policy : {BoundaryPolicy::none, BoundaryPolicy::zero_extension}) {
    const Coord a{1, 1, 0};
    const auto du = difference(sh, u, a, policy);
    v.resize(du.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::cos(0.7 * i);
    const auto atv = difference_adjoint(sh, v, a, policy);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < du.size(); ++i) lhs += du[i] * v[i];
    for (std::size_t i = 0; i < u.size(); ++i) rhs += u[i] * atv[i];
    EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Norms, GradientOfLinearFunction) {
  GridShape sh{2, 5};
  std::vector<double> u(sh.size());
  for (std::int64_t i = 0; i < sh.size(); ++i) {
    const Coord c = sh.coord(i);
    u[i] = 2.0 * sh.center(c[0]) - 1.0 * sh.center(c[1]);
  }
  // Without extension each direction has side-1 defined stencils per row.
  const double expected = (4.0 + 1.0) * (1.0 - sh.h());
  EXPECT_NEAR(gradient_power_integral(sh, u, 1, 2.0, BoundaryPolicy::none, WeightField{}), expected, 1e-9);
  // Homogeneous of degree p in u.
  const double base = gradient_power_integral(sh, u, 1, 3.0, BoundaryPolicy::none, WeightField{});
  for (auto& x : u) x *= 3.0;
  EXPECT_NEAR(gradient_power_integral(sh, u, 1, 3.0, BoundaryPolicy::none, WeightField{}), 27.0 * base,
              1e-9 * base);
}

TEST(Norms, ZeroExtensionRequiresVanishingOffDomain) {
  GridDomain g = domain(lshape(5));
  DiscreteFunction f{&g, std::vector<double>(g.shape().size(), 1.0), BoundaryPolicy::zero_extension};
  EXPECT_THROW(f.check(), Error);
  for (std::int64_t i = 0; i < g.shape().size(); ++i)
    if (!g.inside(i)) f.values[i] = 0.0;
  EXPECT_NO_THROW(f.check());
}

TEST(Norms, WeightedNormOfConstantOnInterval) {
  GridDomain g = domain(interval(9));
  DiscreteFunction f{&g, std::vector<double>(g.shape().size(), 1.0), BoundaryPolicy::none};
  // || 1 ||_p with weight delta^0 is the length of the interval.
  EXPECT_NEAR(gradient_seminorm(f, 0, 2.0, WeightSpec{}), 1.0, 1e-12);
  WeightSpec w;
  w.s = 1.0;
  // int_0^1 min(x, 1-x) dx = 1/4.
  EXPECT_NEAR(std::pow(gradient_seminorm(f, 0, 1.0, w), 1.0), 0.25, 2e-3);
}

TEST(Norms, ConventionsAreEquivalent) {
  GridDomain g = domain(square(5));
  std::vector<double> u(g.shape().size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.11 * i) + 0.2;
  DiscreteFunction f{&g, u, BoundaryPolicy::none};
  for (double p : {1.5, 2.0, 4.0}) {
    const auto cb = convention_bounds(2, 2, p);
    const double a = sobolev_norm(f, 2, p, NormConvention::sum_of_seminorms, WeightSpec{});
    const double b = sobolev_norm(f, 2, p, NormConvention::lp_of_gradients, WeightSpec{});
    EXPECT_LE(b, cb.lp_over_sum * a * (1 + 1e-12));
    EXPECT_LE(a, cb.sum_over_lp * b * (1 + 1e-12));
  }
}

TEST(Norms, QuasinormConstant) {
  EXPECT_DOUBLE_EQ(quasinorm_constant(2.0), 1.0);
  EXPECT_DOUBLE_EQ(quasinorm_constant(1.0), 1.0);
  EXPECT_DOUBLE_EQ(quasinorm_constant(0.5), 2.0);
}
