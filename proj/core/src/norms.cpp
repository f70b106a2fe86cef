#include "hardylab/norms.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hardylab/error.hpp"

namespace hardylab {

namespace {

struct StencilTap {
  Coord offset;
  double coeff;
};

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

std::vector<StencilTap> forward_stencil(const Coord& alpha, int dim) {
  std::vector<StencilTap> taps;
  CellBox box;
  for (int i = 0; i < dim; ++i) box.hi[i] = alpha[i] + 1;
  for_each_cell(box, dim, [&](const Coord& t) {
    double c = 1.0;
    for (int i = 0; i < dim; ++i) {
      c *= binomial(static_cast<int>(alpha[i]), static_cast<int>(t[i]));
      if ((alpha[i] - t[i]) % 2) c = -c;
    }
    taps.push_back({t, c});
  });
  return taps;
}

int order_of(const Coord& alpha, int dim) {
  int j = 0;
  for (int i = 0; i < dim; ++i) j += static_cast<int>(alpha[i]);
  return j;
}

std::int64_t box_index(const CellBox& box, const Coord& c, int dim) {
  std::int64_t idx = 0;
  for (int i = dim - 1; i >= 0; --i) idx = idx * (box.hi[i] - box.lo[i]) + (c[i] - box.lo[i]);
  return idx;
}

}  // namespace

std::string policy_name(BoundaryPolicy p) {
  return p == BoundaryPolicy::zero_extension ? "zero-extension" : "none";
}

std::string convention_name(NormConvention c) {
  return c == NormConvention::sum_of_seminorms ? "sum-of-seminorms" : "lp-of-gradients";
}

std::vector<Coord> multi_indices(int dim, int order) {
  std::vector<Coord> out;
  CellBox box;
  for (int i = 0; i < dim; ++i) box.hi[i] = order + 1;
  for_each_cell(box, dim, [&](const Coord& a) {
    if (order_of(a, dim) == order) out.push_back(a);
  });
  return out;
}

double multiplicity(const Coord& alpha, int dim) {
  int j = order_of(alpha, dim);
  double r = std::tgamma(j + 1.0);
  for (int i = 0; i < dim; ++i) r /= std::tgamma(static_cast<double>(alpha[i]) + 1.0);
  return r;
}

CellBox position_box(const GridShape& shape, int order, BoundaryPolicy policy) {
  CellBox b;
  for (int i = 0; i < shape.dim; ++i) {
    b.lo[i] = policy == BoundaryPolicy::zero_extension ? -order : 0;
    b.hi[i] = shape.side();
  }
  return b;
}

bool stencil_defined(const GridShape& shape, const Coord& x, const Coord& alpha, BoundaryPolicy policy) {
  if (policy == BoundaryPolicy::zero_extension) return true;
  for (int i = 0; i < shape.dim; ++i)
    if (x[i] < 0 || x[i] + alpha[i] >= shape.side()) return false;
  return true;
}

std::vector<double> difference(const GridShape& shape, const std::vector<double>& u, const Coord& alpha,
                               BoundaryPolicy policy) {
  const int dim = shape.dim;
  const int j = order_of(alpha, dim);
  CellBox pos = position_box(shape, j, policy);
  auto taps = forward_stencil(alpha, dim);
  const double scale = std::pow(shape.h(), -j);
  std::vector<double> out(pos.count(dim), 0.0);
  std::int64_t k = 0;
  for_each_cell(pos, dim, [&](const Coord& x) {
    double acc = 0.0;
    if (stencil_defined(shape, x, alpha, policy)) {
      for (const auto& t : taps) {
        Coord y = x;
        for (int i = 0; i < dim; ++i) y[i] += t.offset[i];
        if (shape.contains(y)) acc += t.coeff * u[shape.index(y)];
      }
    }
    out[k++] = acc * scale;
  });
  return out;
}

std::vector<double> difference_adjoint(const GridShape& shape, const std::vector<double>& v,
                                       const Coord& alpha, BoundaryPolicy policy) {
  const int dim = shape.dim;
  const int j = order_of(alpha, dim);
  CellBox pos = position_box(shape, j, policy);
  auto taps = forward_stencil(alpha, dim);
  const double scale = std::pow(shape.h(), -j);
  std::vector<double> out(shape.size(), 0.0);
  std::int64_t k = 0;
  for_each_cell(pos, dim, [&](const Coord& x) {
    double val = v[k++] * scale;
    if (val == 0.0 || !stencil_defined(shape, x, alpha, policy)) return;
    for (const auto& t : taps) {
      Coord y = x;
      for (int i = 0; i < dim; ++i) y[i] += t.offset[i];
      if (shape.contains(y)) out[shape.index(y)] += t.coeff * val;
    }
  });
  return out;
}

double WeightField::at(const GridShape& shape, const Coord& x) const {
  if (cell.empty()) return 1.0;
  if (shape.contains(x)) return cell[shape.index(x)];
  if (!outside_uses_nearest) return outside_value;
  Coord k = x;
  for (int i = 0; i < shape.dim; ++i) k[i] = std::clamp<std::int64_t>(k[i], 0, shape.side() - 1);
  return cell[shape.index(k)];
}

WeightField WeightSpec::field(const GridDomain& domain) const {
  WeightField f;
  const double c = clamp < 0.0 ? domain.delta_floor() : clamp;
  if (!(c > 0.0)) throw Error(ErrorCode::config, "weight clamp must be positive", "clamp");
  const auto& d = domain.delta();
  f.cell.resize(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    double base = s == 0.0 ? 1.0 : std::pow(std::max(d[i], c), s);
    double lam = multiplier.empty() ? 1.0 : multiplier[i];
    if (lam < 0.0) throw Error(ErrorCode::config, "weight multiplier must be nonnegative", "multiplier");
    f.cell[i] = base * lam;
  }
  f.outside_uses_nearest = !domain.collar();
  f.outside_value = s == 0.0 ? 1.0 : std::pow(c, s);
  return f;
}

double gradient_power_integral(const GridShape& shape, const std::vector<double>& u, int order, double p,
                               BoundaryPolicy policy, const WeightField& w) {
  const int dim = shape.dim;
  CellBox pos = position_box(shape, order, policy);
  std::vector<double> frob2(pos.count(dim), 0.0);
  for (const auto& alpha : multi_indices(dim, order)) {
    auto d = difference(shape, u, alpha, policy);
    const double c = multiplicity(alpha, dim);
    for (std::size_t k = 0; k < d.size(); ++k) frob2[k] += c * d[k] * d[k];
  }
  long double acc = 0.0L;
  std::int64_t k = 0;
  for_each_cell(pos, dim, [&](const Coord& x) {
    double f2 = frob2[k++];
    if (f2 == 0.0) return;
    double wx = w.at(shape, x);
    acc += static_cast<long double>(p == 2.0 ? f2 : std::pow(f2, 0.5 * p)) * wx;
  });
  return static_cast<double>(acc) * shape.cell_volume();
}

void DiscreteFunction::check() const {
  if (!domain) throw Error(ErrorCode::config, "discrete function has no domain");
  if (static_cast<std::int64_t>(values.size()) != domain->shape().size())
    throw Error(ErrorCode::config, "function size does not match the grid");
  if (policy == BoundaryPolicy::zero_extension) {
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!domain->inside(static_cast<std::int64_t>(i)) && values[i] != 0.0)
        throw Error(ErrorCode::precondition, "zero-extended function is nonzero off the domain",
                    "zero-extension");
  }
}

double gradient_seminorm(const DiscreteFunction& u, int j, double p, const WeightSpec& w) {
  if (p < 1.0) throw Error(ErrorCode::config, "p must be at least 1", "p>=1");
  if (j < 0) throw Error(ErrorCode::config, "order must be nonnegative", "j>=0");
  u.check();
  return std::pow(gradient_power_integral(u.domain->shape(), u.values, j, p, u.policy, w.field(*u.domain)),
                  1.0 / p);
}

double sobolev_norm(const DiscreteFunction& u, int m, double p, NormConvention convention, const WeightSpec& w) {
  if (p < 1.0) throw Error(ErrorCode::config, "p must be at least 1", "p>=1");
  u.check();
  const GridShape& shape = u.domain->shape();
  WeightField wf = w.field(*u.domain);
  if (convention == NormConvention::sum_of_seminorms) {
    double total = 0.0;
    for (int k = 0; k <= m; ++k)
      total += std::pow(gradient_power_integral(shape, u.values, k, p, u.policy, wf), 1.0 / p);
    return total;
  }
  long double acc = 0.0L;
  for (int k = 0; k <= m; ++k) {
    CellBox pos = position_box(shape, k, u.policy);
    for (const auto& alpha : multi_indices(shape.dim, k)) {
      auto d = difference(shape, u.values, alpha, u.policy);
      std::int64_t idx = 0;
      for_each_cell(pos, shape.dim, [&](const Coord& x) {
        double v = std::abs(d[idx++]);
        if (v != 0.0) acc += static_cast<long double>(std::pow(v, p)) * wf.at(shape, x);
      });
    }
  }
  return std::pow(static_cast<double>(acc) * shape.cell_volume(), 1.0 / p);
}

ConventionBounds convention_bounds(int dim, int m, double p) {
  ConventionBounds b;
  double total = 0.0, reverse = 0.0;
  for (int k = 0; k <= m; ++k) {
    double mk = static_cast<double>(multi_indices(dim, k).size());
    total += mk;
    reverse += std::sqrt(std::tgamma(k + 1.0)) * std::pow(mk, std::max(0.0, 0.5 - 1.0 / p));
  }
  b.lp_over_sum = std::pow(total, 1.0 / p);
  b.sum_over_lp = reverse;
  return b;
}

double holder_quotient(const DiscreteFunction& u, int h_order, double lambda, const WeightSpec& w,
                       const HolderOptions& opt) {
  if (!(lambda > 0.0 && lambda <= 1.0)) throw Error(ErrorCode::config, "lambda must lie in (0, 1]", "lambda");
  if (opt.radius_cells < 1.0) throw Error(ErrorCode::config, "radius must be at least one cell", "radius");
  u.check();
  const GridShape& shape = u.domain->shape();
  const int dim = shape.dim;
  WeightField wf = w.field(*u.domain);
  CellBox pos = position_box(shape, h_order, u.policy);
  const auto r = static_cast<std::int64_t>(std::floor(opt.radius_cells));
  std::vector<std::pair<Coord, double>> offsets;
  CellBox ob;
  for (int i = 0; i < dim; ++i) {
    ob.lo[i] = -r;
    ob.hi[i] = r + 1;
  }
  for_each_cell(ob, dim, [&](const Coord& e) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) d2 += static_cast<double>(e[i] * e[i]);
    if (d2 == 0.0 || d2 > opt.radius_cells * opt.radius_cells) return;
    double dist = std::sqrt(d2) * (opt.cell_units ? 1.0 : shape.h());
    offsets.push_back({e, std::pow(dist, -lambda)});
  });
  double best = 0.0;
  for (const auto& alpha : multi_indices(dim, h_order)) {
    auto d = difference(shape, u.values, alpha, u.policy);
    CellBox all;
    for (int i = 0; i < dim; ++i) all.hi[i] = shape.side();
    for_each_cell(all, dim, [&](const Coord& x) {
      if (!u.domain->inside(shape.index(x)) || !stencil_defined(shape, x, alpha, u.policy)) return;
      double dx = d[box_index(pos, x, dim)];
      double kappa = wf.at(shape, x);
      for (const auto& [e, inv] : offsets) {
        Coord y = x;
        bool ok = true;
        for (int i = 0; i < dim; ++i) {
          y[i] += e[i];
          if (y[i] < pos.lo[i] || y[i] >= pos.hi[i]) ok = false;
        }
        if (!ok || !stencil_defined(shape, y, alpha, u.policy)) continue;
        best = std::max(best, std::abs(dx - d[box_index(pos, y, dim)]) * inv * kappa);
      }
    });
  }
  return best;
}

SumComparison elementary_sum_inequalities(const std::vector<double>& a, double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::config, "r must be positive", "r>0");
  SumComparison c;
  double sum = 0.0, pw = 0.0;
  for (double x : a) {
    sum += std::abs(x);
    pw += std::pow(std::abs(x), r);
  }
  c.lhs = pw;
  c.rhs = std::pow(sum, r);
  c.direction = r >= 1.0 ? Direction::le : Direction::ge;
  return c;
}

double quasinorm_constant(double r) {
  if (!(r > 0.0)) throw Error(ErrorCode::config, "r must be positive", "r>0");
  return std::max(1.0, std::pow(2.0, 1.0 / r - 1.0));
}

}  // namespace hardylab
