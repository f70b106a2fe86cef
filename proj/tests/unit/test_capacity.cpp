#include <cmath>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "hardylab/capacity.hpp"
#include "hardylab/error.hpp"
#include "hardylab/norms.hpp"

using namespace hardylab;

namespace {

// Independent p = 2 oracle: min over theta of the generalized eigenvalue of
// A/theta + B/(1 - theta) against the mass matrix on the free cells.
double dense_gamma(const ConstraintSet& c, int m, int k) {
  const GridShape& g = c.grid;
  std::vector<std::int64_t> free;
  for (std::int64_t i = 0; i < g.size(); ++i)
    if (c.K.empty() || !c.K[i]) free.push_back(i);
  const auto n = static_cast<Eigen::Index>(free.size());
  auto form = [&](int order) {
    Eigen::MatrixXd D;
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(n, n);
    for (const auto& a : multi_indices(g.dim, order)) {
      std::vector<std::vector<double>> cols;
      for (auto idx : free) {
        std::vector<double> e(g.size(), 0.0);
        e[idx] = 1.0;
        cols.push_back(difference(g, e, a, BoundaryPolicy::none));
      }
      D.resize(static_cast<Eigen::Index>(cols[0].size()), n);
      for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index r = 0; r < D.rows(); ++r) D(r, j) = cols[j][r];
      F += multiplicity(a, g.dim) * g.cell_volume() * D.transpose() * D;
    }
    return F;
  };
  const Eigen::MatrixXd A = form(k + 1), B = form(m);
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n) * g.cell_volume();
  double best = INFINITY;
  for (int i = 1; i < 2000; ++i) {
    const double th = i / 2000.0;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(A / th + B / (1 - th), M, Eigen::EigenvaluesOnly);
    best = std::min(best, ge.eigenvalues()[0]);
  }
  return best;
}

}  // namespace

TEST(Capacity, MatchesDenseOracle) {
  struct C {
    ConstraintSet c;
    int m, k;
  };
  for (const C& t : {C{ConstraintSet::face_slab(2, 3, 0, 0.25), 1, 0}, C{ConstraintSet::face_slab(2, 3, 1, 0.25), 2, 1},
                     C{ConstraintSet::face_slab(1, 4, 0, 0.125), 2, 0}}) {
    const double it = gamma_capacity(t.c, t.m, t.k, 2.0, 2.0).capacity;
    const double dn = dense_gamma(t.c, t.m, t.k);
    EXPECT_NEAR(it, dn, 1e-4 * dn);
  }
}

TEST(Capacity, FullSpaceHasZeroCapacity) {
  CapacityResult r = gamma_capacity(ConstraintSet::full_space(2, 4), 1, 0, 2.0, 2.0);
  EXPECT_EQ(r.capacity, 0.0);
  EXPECT_TRUE(admits_polynomial(ConstraintSet::full_space(2, 4), 0));
}

TEST(Capacity, MonotoneInTheZeroSet) {
  double prev = 0.0;
  for (double w : {0.0625, 0.125, 0.25, 0.5}) {
    const double c = gamma_capacity(ConstraintSet::face_slab(2, 4, 0, w), 1, 0, 2.0, 2.0).capacity;
    EXPECT_GE(c, prev * (1 - 1e-9));
    prev = c;
  }
}

TEST(Capacity, InvariantUnderCubeSymmetries) {
  ConstraintSet a = ConstraintSet::face_slab(2, 4, 0, 0.25);
  const double ca = gamma_capacity(a, 1, 0, 2.0, 2.0).capacity;
  for (bool fx : {false, true})
    for (bool swap : {false, true}) {
      std::array<int, 3> perm = swap ? std::array<int, 3>{1, 0, 2} : std::array<int, 3>{0, 1, 2};
      ConstraintSet b = transform(a, perm, {fx, false, false});
      EXPECT_EQ(b.zero_count(), a.zero_count());
      EXPECT_NEAR(gamma_capacity(b, 1, 0, 2.0, 2.0).capacity, ca, 1e-8 * ca);
    }
}

TEST(Capacity, PolynomialKernelDetection) {
  // A single column of zero cells carries the linear function x - x0.
  ConstraintSet col = ConstraintSet::face_slab(2, 4, 0, 0.0625);
  EXPECT_FALSE(admits_polynomial(col, 0));
  EXPECT_TRUE(admits_polynomial(col, 1));
  ConstraintSet two = ConstraintSet::face_slab(2, 4, 0, 0.125);
  EXPECT_FALSE(admits_polynomial(two, 1));
}

TEST(Capacity, SobolevRangeOfP1) {
  EXPECT_TRUE(p1_admissible(2, 2, 0, 2.0, 100.0));
  EXPECT_TRUE(p1_admissible(3, 2, 0, 1.0, 1.5));
  EXPECT_FALSE(p1_admissible(3, 2, 0, 1.0, 2.0));
  EXPECT_TRUE(p1_admissible(1, 2, 0, 2.0, 1e6));
}

TEST(Capacity, NonQuadraticExponentUsesDescent) {
  CapacityResult r = gamma_capacity(ConstraintSet::face_slab(2, 3, 0, 0.25), 1, 0, 3.0, 3.0);
  EXPECT_EQ(r.solver, SolverKind::descent);
  EXPECT_GT(r.capacity, 0.0);
  EXPECT_TRUE(std::isfinite(r.capacity));
  // Same seed, same answer.
  EXPECT_EQ(r.capacity, gamma_capacity(ConstraintSet::face_slab(2, 3, 0, 0.25), 1, 0, 3.0, 3.0).capacity);
}

TEST(Capacity, ThetaIsNonnegativeAndReported) {
  CapacityResult r = theta_capacity(ConstraintSet::face_slab(2, 3, 0, 0.25), 1, 0, 2.0, 2.0, -1.0);
  EXPECT_GE(r.capacity, 0.0);
  EXPECT_GT(r.alpha_A0, 0.0);
  const auto j = r.to_json();
  EXPECT_EQ(j.at("flavor"), "theta");
}

TEST(Capacity, UnconstrainedPoincareConstantOfInterval) {
  // Neumann Poincaré constant of the unit interval is 1/pi.
  EXPECT_NEAR(unconstrained_poincare_constant(1, 6, 1, 2.0), 1.0 / M_PI, 0.01);
}
