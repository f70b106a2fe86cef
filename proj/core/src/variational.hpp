#pragma once

// Shared machinery for Rayleigh-type quotients of discrete gradient norms:
// sparse difference operators on a set of free cells, the p = 2 generalized
// eigen route and a descent route for general exponents and the cone.

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "hardylab/grid.hpp"
#include "hardylab/norms.hpp"

namespace hardylab::detail {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

struct FreeMap {
  std::vector<std::int64_t> var_of_cell;  // -1 for fixed (zero) cells
  std::vector<std::int64_t> cell_of_var;
  std::int64_t size() const { return static_cast<std::int64_t>(cell_of_var.size()); }
};

FreeMap make_free_map(const std::vector<std::uint8_t>& free_mask);

// (integral of |grad^order u|^p weight)^{1/p} as a function of the free values.
struct NormTerm {
  int order = 0;
  double p = 2.0;
  std::vector<double> coeff;  // multiplicity per multi-index
  std::vector<SpMat> diff;    // positions x free variables, scaled by h^{-order}
  Vec weight;                 // per position, cell volume included
  double smoothing = 1e-9;    // F -> sqrt(F^2 + eps^2) when p < 2

  std::int64_t positions() const { return weight.size(); }
  double power(const Vec& u) const;
  double norm(const Vec& u) const;
  // g += scale * d(power)/du
  void add_power_gradient(const Vec& u, double scale, Vec& g) const;
  // Matrix of the quadratic form for p = 2.
  SpMat quadratic_form() const;
};

// position_weight has one entry per point of position_box(order); empty means 1.
// With a region, positions are the region's cells and a stencil counts only
// when it stays inside the region (the "none" policy relative to the region).
NormTerm make_term(const GridShape& shape, int order, double p, BoundaryPolicy policy,
                   const std::vector<double>& position_weight, const FreeMap& free,
                   const CellBox* region = nullptr);

// Weight of a WeightField sampled on position_box(order).
std::vector<double> position_weights(const GridShape& shape, int order, BoundaryPolicy policy,
                                     const WeightField& w);

// inf over admissible u != 0 of sum_i c_i |T_i u| / |T_0 u|.
struct RatioProblem {
  NormTerm numerator;
  std::vector<std::pair<double, NormTerm>> denominator;
  bool cone = false;  // u >= 0 on free cells
};

struct RatioSolution {
  double value = 0.0;
  Vec u;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool positive_definite = true;  // eigen route only
};

struct DescentOptions {
  int max_iterations = 3000;
  double tolerance = 1e-10;
  int memory = 8;
};

using Objective = std::function<double(const Vec& x, Vec* grad)>;

struct DescentResult {
  double f = 0.0;
  Vec x;
  double residual = 0.0;  // |grad| |x|, scale free for homogeneous objectives
  int iterations = 0;
  bool converged = false;
};

// L-BFGS with Armijo backtracking for objectives invariant under x -> c x.
DescentResult lbfgs_minimize(const Objective& obj, Vec x, const DescentOptions& opt);

double ratio_value(const RatioProblem& prob, const Vec& u);

// Best of the local minima reached from each start (values in u-space; for the
// cone the starts are made nonnegative).
RatioSolution minimize_ratio_descent(const RatioProblem& prob, const std::vector<Vec>& starts,
                                     const DescentOptions& opt);

struct EigenOptions {
  double tolerance = 1e-15;  // backward error
  int max_iterations = 2000;
};

struct EigenPair {
  double lambda = 0.0;
  Vec x;
  double residual = 0.0;
  int iterations = 0;
  bool positive_definite = true;
};

// Smallest lambda with S x = lambda M x by inverse iteration on a sparse LDLT
// of S. M must be positive semidefinite and positive on the eigenvector.
EigenPair smallest_eigenpair(const SpMat& S, const SpMat& M, const Vec* warm, const EigenOptions& opt);

// Exact route for p = 2 without the cone and at most two denominator terms,
// using (a + b)^2 = min over theta of a^2/theta + b^2/(1 - theta).
RatioSolution minimize_ratio_eigen(const RatioProblem& prob, const EigenOptions& opt, const Vec* warm = nullptr);

bool eigen_applicable(const RatioProblem& prob);

}  // namespace hardylab::detail
