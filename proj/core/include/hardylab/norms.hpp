#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/domain.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

enum class BoundaryPolicy { zero_extension, none };
enum class NormConvention { sum_of_seminorms, lp_of_gradients };

std::string policy_name(BoundaryPolicy p);
std::string convention_name(NormConvention c);

// Multi-indices alpha with |alpha| = order, in a fixed order.
std::vector<Coord> multi_indices(int dim, int order);
// Number of ordered index tuples collapsing onto alpha: |alpha|! / alpha!.
double multiplicity(const Coord& alpha, int dim);

// Base points of forward stencils of the given order. Zero extension also
// covers the layer of points below the box whose stencils reach into it.
CellBox position_box(const GridShape& shape, int order, BoundaryPolicy policy);

// True when the forward stencil of alpha based at x stays inside the box
// (always true under zero extension).
bool stencil_defined(const GridShape& shape, const Coord& x, const Coord& alpha, BoundaryPolicy policy);

// D^alpha u scaled by h^{-|alpha|} at every point of position_box(order).
// Reads outside the box are zero; undefined stencils give 0.
std::vector<double> difference(const GridShape& shape, const std::vector<double>& u, const Coord& alpha,
                               BoundaryPolicy policy);
// Adjoint of difference(): maps position values back to cell values.
std::vector<double> difference_adjoint(const GridShape& shape, const std::vector<double>& v,
                                       const Coord& alpha, BoundaryPolicy policy);

// Per-point weight on a position box: cell values inside the box and a rule for
// points below it.
struct WeightField {
  std::vector<double> cell;       // empty means 1 everywhere
  bool outside_uses_nearest = true;
  double outside_value = 1.0;     // used when outside_uses_nearest is false

  double at(const GridShape& shape, const Coord& x) const;
};

// Regularized-distance weight max(delta, clamp)^s times an optional per-cell
// multiplier.
struct WeightSpec {
  double s = 0.0;
  double clamp = -1.0;              // negative means half a cell
  std::vector<double> multiplier;   // per cell, empty means 1

  WeightField field(const GridDomain& domain) const;
};

// Sum over positions of |grad^j u|^p w dx with |.| the Frobenius norm over
// ordered j-tuples.
double gradient_power_integral(const GridShape& shape, const std::vector<double>& u, int order, double p,
                               BoundaryPolicy policy, const WeightField& w);

struct DiscreteFunction {
  const GridDomain* domain = nullptr;
  std::vector<double> values;
  BoundaryPolicy policy = BoundaryPolicy::zero_extension;

  // Throws when zero extension is requested and the values do not vanish off
  // the domain.
  void check() const;
};

double gradient_seminorm(const DiscreteFunction& u, int j, double p, const WeightSpec& w);
double sobolev_norm(const DiscreteFunction& u, int m, double p, NormConvention convention, const WeightSpec& w);

// Factors with lp <= upper * sum and sum <= lower_inverse * lp.
struct ConventionBounds {
  double lp_over_sum = 0.0;
  double sum_over_lp = 0.0;
};
ConventionBounds convention_bounds(int dim, int m, double p);

struct HolderOptions {
  double radius_cells = 2.0;
  bool cell_units = false;  // measure |x - y| in cells instead of physical length
};

double holder_quotient(const DiscreteFunction& u, int h_order, double lambda, const WeightSpec& w,
                       const HolderOptions& opt = {});

enum class Direction { le, ge };
struct SumComparison {
  double lhs = 0.0;
  double rhs = 0.0;
  Direction direction = Direction::le;
};
SumComparison elementary_sum_inequalities(const std::vector<double>& a, double r);

// A(r) = max(1, 2^{1/r - 1}) with (a^r + b^r)^{1/r} <= A(r)(a + b).
double quasinorm_constant(double r);

}  // namespace hardylab
