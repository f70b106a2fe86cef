#include "hardylab/edt.hpp"

#include <algorithm>
#include <limits>

namespace hardylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One pass of the lower envelope of parabolas y = f[q] + (x - q)^2 along a line.
// f and src are read with the given stride; results overwrite them.
void envelope_1d(std::vector<double>& f, std::vector<std::int64_t>& src, std::int64_t offset,
                 std::int64_t stride, std::int64_t n, std::vector<std::int64_t>& v,
                 std::vector<double>& z, std::vector<double>& fl,
                 std::vector<std::int64_t>& sl) {
  for (std::int64_t q = 0; q < n; ++q) {
    fl[q] = f[offset + q * stride];
    sl[q] = src[offset + q * stride];
  }
  std::int64_t k = -1;
  for (std::int64_t q = 0; q < n; ++q) {
    if (fl[q] == kInf) continue;
    double fq = fl[q] + static_cast<double>(q) * static_cast<double>(q);
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    while (true) {
      std::int64_t p = v[k];
      double fp = fl[p] + static_cast<double>(p) * static_cast<double>(p);
      double s = (fq - fp) / (2.0 * static_cast<double>(q - p));
      if (s <= z[k]) {
        if (k == 0) {
          v[0] = q;
          z[0] = -kInf;
          z[1] = kInf;
          break;
        }
        --k;
        continue;
      }
      ++k;
      v[k] = q;
      z[k] = s;
      z[k + 1] = kInf;
      break;
    }
  }
  if (k < 0) return;  // line without sites stays at infinity
  std::int64_t j = 0;
  for (std::int64_t q = 0; q < n; ++q) {
    while (z[j + 1] < static_cast<double>(q)) ++j;
    std::int64_t p = v[j];
    double d = static_cast<double>(q - p);
    f[offset + q * stride] = fl[p] + d * d;
    src[offset + q * stride] = sl[p];
  }
}

}  // namespace

DistanceField exact_distance_transform(const std::vector<std::uint8_t>& sites, int dim,
                                       const std::array<std::int64_t, 3>& extents) {
  std::int64_t total = 1;
  for (int i = 0; i < dim; ++i) total *= extents[i];
  std::vector<double> f(total, kInf);
  std::vector<std::int64_t> src(total, kNoSite);
  for (std::int64_t i = 0; i < total; ++i) {
    if (sites[i]) {
      f[i] = 0.0;
      src[i] = i;
    }
  }
  std::int64_t max_n = 1;
  for (int i = 0; i < dim; ++i) max_n = std::max(max_n, extents[i]);
  std::vector<std::int64_t> v(max_n + 1), sl(max_n);
  std::vector<double> z(max_n + 2), fl(max_n);

  std::int64_t stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    std::int64_t n = extents[axis];
    std::int64_t block = stride * n;
    for (std::int64_t base = 0; base < total; base += block) {
      for (std::int64_t inner = 0; inner < stride; ++inner) {
        envelope_1d(f, src, base + inner, stride, n, v, z, fl, sl);
      }
    }
    stride = block;
  }

  DistanceField out;
  out.sq_dist.resize(total);
  out.feature = std::move(src);
  for (std::int64_t i = 0; i < total; ++i)
    out.sq_dist[i] = f[i] == kInf ? -1 : static_cast<std::int64_t>(f[i]);
  return out;
}

}  // namespace hardylab
