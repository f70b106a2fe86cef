#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace hardylab {

inline constexpr int kMaxDim = 3;

using Coord = std::array<std::int64_t, kMaxDim>;

// Regular grid of 2^level cells per side over [0,1]^dim. Linear index runs
// with axis 0 fastest.
struct GridShape {
  int dim = 2;
  int level = 0;

  std::int64_t side() const { return std::int64_t{1} << level; }
  double h() const { return 1.0 / static_cast<double>(side()); }
  std::int64_t size() const {
    std::int64_t s = 1;
    for (int i = 0; i < dim; ++i) s *= side();
    return s;
  }
  double cell_volume() const {
    double v = 1.0;
    for (int i = 0; i < dim; ++i) v *= h();
    return v;
  }
  std::int64_t index(const Coord& c) const {
    std::int64_t idx = 0;
    for (int i = dim - 1; i >= 0; --i) idx = idx * side() + c[i];
    return idx;
  }
  Coord coord(std::int64_t idx) const {
    Coord c{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
      c[i] = idx % side();
      idx /= side();
    }
    return c;
  }
  bool contains(const Coord& c) const {
    for (int i = 0; i < dim; ++i)
      if (c[i] < 0 || c[i] >= side()) return false;
    return true;
  }
  double center(std::int64_t c) const { return (static_cast<double>(c) + 0.5) * h(); }
};

// Box of integer cells [lo, hi) along each axis.
struct CellBox {
  Coord lo{0, 0, 0};
  Coord hi{1, 1, 1};

  std::int64_t count(int dim) const {
    std::int64_t s = 1;
    for (int i = 0; i < dim; ++i) s *= (hi[i] > lo[i] ? hi[i] - lo[i] : 0);
    return s;
  }
  bool empty(int dim) const { return count(dim) == 0; }
};

// Calls fn(Coord) for every cell in the box, axis 0 fastest.
template <class Fn>
void for_each_cell(const CellBox& box, int dim, Fn&& fn) {
  if (box.empty(dim)) return;
  Coord c = box.lo;
  for (int i = dim; i < kMaxDim; ++i) c[i] = 0;
  while (true) {
    fn(c);
    int axis = 0;
    while (axis < dim) {
      if (++c[axis] < box.hi[axis]) break;
      c[axis] = box.lo[axis];
      ++axis;
    }
    if (axis == dim) return;
  }
}

// N-dimensional inclusive prefix sums over a dense grid of side n.
class PrefixSum {
 public:
  PrefixSum() = default;
  PrefixSum(const GridShape& shape, const std::vector<long double>& values);

  // Sum over the cell box [lo, hi), clipped to the grid.
  long double sum(const CellBox& box) const;

 private:
  GridShape shape_;
  std::int64_t stride_side_ = 0;
  std::vector<long double> table_;  // (n+1)^dim, zero row/column at index 0
};

}  // namespace hardylab
