#include "hardylab/grid.hpp"

#include <algorithm>

#include "hardylab/error.hpp"

namespace hardylab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::config: return "config";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::hypothesis: return "hypothesis";
    case ErrorCode::insufficient_levels: return "insufficient_levels";
    case ErrorCode::degenerate: return "degenerate";
    case ErrorCode::solver: return "solver";
    case ErrorCode::unbounded: return "unbounded";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

PrefixSum::PrefixSum(const GridShape& shape, const std::vector<long double>& values)
    : shape_(shape), stride_side_(shape.side() + 1) {
  std::int64_t total = 1;
  for (int i = 0; i < shape.dim; ++i) total *= stride_side_;
  table_.assign(total, 0.0L);
  CellBox all;
  for (int i = 0; i < shape.dim; ++i) all.hi[i] = shape.side();
  for_each_cell(all, shape.dim, [&](const Coord& c) {
    std::int64_t t = 0;
    for (int i = shape.dim - 1; i >= 0; --i) t = t * stride_side_ + (c[i] + 1);
    table_[t] = values[shape.index(c)];
  });
  std::int64_t stride = 1;
  for (int axis = 0; axis < shape.dim; ++axis) {
    for (std::int64_t t = 0; t < total; ++t) {
      if ((t / stride) % stride_side_ == 0) continue;
      table_[t] += table_[t - stride];
    }
    stride *= stride_side_;
  }
}

long double PrefixSum::sum(const CellBox& box) const {
  const int dim = shape_.dim;
  Coord lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    lo[i] = std::clamp<std::int64_t>(box.lo[i], 0, shape_.side());
    hi[i] = std::clamp<std::int64_t>(box.hi[i], 0, shape_.side());
    if (hi[i] <= lo[i]) return 0.0L;
  }
  long double acc = 0.0L;
  for (int corner = 0; corner < (1 << dim); ++corner) {
    std::int64_t t = 0;
    int lows = 0;
    for (int i = dim - 1; i >= 0; --i) {
      bool low = (corner >> i) & 1;
      lows += low;
      t = t * stride_side_ + (low ? lo[i] : hi[i]);
    }
    acc += (lows % 2 ? -1.0L : 1.0L) * table_[t];
  }
  return acc;
}

}  // namespace hardylab
