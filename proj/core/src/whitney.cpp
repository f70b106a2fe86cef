#include "hardylab/whitney.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hardylab/edt.hpp"
#include "hardylab/error.hpp"

namespace hardylab {

namespace {

constexpr std::int64_t kEmpty = -1;
constexpr std::int64_t kSplit = -2;

// Node state per level of the dyadic tree: cube id, kSplit or kEmpty.
struct DyadicTree {
  int dim = 2;
  int levels = 0;
  std::vector<std::vector<std::int64_t>> state;

  std::int64_t node_index(int level, const Coord& c) const {
    std::int64_t side = std::int64_t{1} << level, idx = 0;
    for (int i = dim - 1; i >= 0; --i) idx = idx * side + c[i];
    return idx;
  }

  // Visits accepted cubes whose box [lo, hi] meets the query box. With open
  // set, intersections of measure zero are ignored.
  template <class Fn>
  void query(const Point& lo, const Point& hi, bool open, Fn&& fn) const {
    struct Item {
      int level;
      Coord c;
    };
    std::vector<Item> stack{{0, {0, 0, 0}}};
    while (!stack.empty()) {
      Item it = stack.back();
      stack.pop_back();
      std::int64_t st = state[it.level][node_index(it.level, it.c)];
      if (st == kEmpty) continue;
      double side = std::ldexp(1.0, -it.level);
      bool meets = true;
      for (int i = 0; i < dim && meets; ++i) {
        double a = it.c[i] * side, b = a + side;
        meets = open ? (a < hi[i] && lo[i] < b) : (a <= hi[i] && lo[i] <= b);
      }
      if (!meets) continue;
      if (st >= 0) {
        fn(st);
        continue;
      }
      for (int child = (1 << dim) - 1; child >= 0; --child) {
        Item ch{it.level + 1, {0, 0, 0}};
        for (int i = 0; i < dim; ++i) ch.c[i] = 2 * it.c[i] + ((child >> i) & 1);
        stack.push_back(ch);
      }
    }
  }
};

// Chebyshev dilation by one cell, separable along axes.
std::vector<std::uint8_t> dilate(const std::vector<std::uint8_t>& in, int dim,
                                 const std::array<std::int64_t, 3>& ext) {
  std::vector<std::uint8_t> cur = in, next(in.size());
  std::int64_t stride = 1;
  for (int axis = 0; axis < dim; ++axis) {
    std::int64_t n = ext[axis];
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(cur.size()); ++i) {
      std::int64_t pos = (i / stride) % n;
      std::uint8_t v = cur[i];
      if (pos > 0) v |= cur[i - stride];
      if (pos + 1 < n) v |= cur[i + stride];
      next[i] = v;
    }
    std::swap(cur, next);
    stride *= n;
  }
  return cur;
}

double box_gap_1d(double a0, double a1, double b0, double b1) {
  if (a1 < b0) return b0 - a1;
  if (b1 < a0) return a0 - b1;
  return 0.0;
}

struct GapField {
  PaddedLattice lat;
  DistanceField dilated;  // EDT from the one-cell dilation of the complement
};

GapField gap_field(const GridDomain& domain) {
  GapField g;
  g.lat = padded_complement(domain);
  auto d1 = dilate(g.lat.outside, domain.dim(), g.lat.extents);
  g.dilated = exact_distance_transform(d1, domain.dim(), g.lat.extents);
  return g;
}

}  // namespace

CellBox DyadicCube::cells(int grid_level) const {
  CellBox b;
  std::int64_t w = std::int64_t{1} << (grid_level - level);
  for (int i = 0; i < kMaxDim; ++i) {
    b.lo[i] = coords[i] * w;
    b.hi[i] = b.lo[i] + w;
  }
  return b;
}

Point EnlargedCube::lo(int dim) const {
  Point p{0, 0, 0};
  for (int i = 0; i < dim; ++i) p[i] = center[i] - 0.5 * side;
  return p;
}

Point EnlargedCube::hi(int dim) const {
  Point p{0, 0, 0};
  for (int i = 0; i < dim; ++i) p[i] = center[i] + 0.5 * side;
  return p;
}

CellBox EnlargedCube::cells(const GridShape& shape) const {
  CellBox b;
  const double inv = 1.0 / shape.h();
  for (int i = 0; i < shape.dim; ++i) {
    double lo = center[i] - 0.5 * side, hi = center[i] + 0.5 * side;
    b.lo[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(lo * inv - 0.5)), 0, shape.side());
    b.hi[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(hi * inv - 0.5)) + 1, 0, shape.side());
  }
  return b;
}

Point RescaleMap::forward(const Point& x) const {
  Point y{0, 0, 0};
  for (int i = 0; i < dim; ++i) y[i] = (x[i] - corner[i]) / gamma;
  return y;
}

Point RescaleMap::inverse(const Point& y) const {
  Point x{0, 0, 0};
  for (int i = 0; i < dim; ++i) x[i] = corner[i] + y[i] * gamma;
  return x;
}

RescaleMap rescale_map(const EnlargedCube& r, int dim) {
  RescaleMap m;
  m.dim = dim;
  m.gamma = r.side;
  m.corner = r.lo(dim);
  return m;
}

double intersection_cutoff(int dim) {
  if (dim < 1) throw Error(ErrorCode::config, "dimension must be positive");
  return 5.0 * std::sqrt(static_cast<double>(dim));
}

WhitneyDecomposition decompose(const GridDomain& domain) {
  const int dim = domain.dim();
  const int L = domain.level();
  const GridShape& shape = domain.shape();
  GapField gf = gap_field(domain);

  // Pyramid of (min gap^2, argmin cell, inside count) over dyadic blocks.
  std::vector<std::vector<std::int64_t>> gap2(L + 1), arg(L + 1), count(L + 1);
  gap2[L].resize(shape.size());
  arg[L].resize(shape.size());
  count[L].resize(shape.size());
  for (std::int64_t idx = 0; idx < shape.size(); ++idx) {
    Coord c = shape.coord(idx);
    gap2[L][idx] = gf.dilated.sq_dist[gf.lat.index(c, dim)];
    arg[L][idx] = idx;
    count[L][idx] = domain.inside(idx) ? 1 : 0;
  }
  for (int lv = L - 1; lv >= 0; --lv) {
    GridShape s{dim, lv};
    gap2[lv].assign(s.size(), std::numeric_limits<std::int64_t>::max());
    arg[lv].assign(s.size(), std::numeric_limits<std::int64_t>::max());
    count[lv].assign(s.size(), 0);
    GridShape fine{dim, lv + 1};
    for (std::int64_t f = 0; f < fine.size(); ++f) {
      Coord c = fine.coord(f);
      for (int i = 0; i < dim; ++i) c[i] >>= 1;
      std::int64_t p = s.index(c);
      count[lv][p] += count[lv + 1][f];
      if (gap2[lv + 1][f] < gap2[lv][p] ||
          (gap2[lv + 1][f] == gap2[lv][p] && arg[lv + 1][f] < arg[lv][p])) {
        gap2[lv][p] = gap2[lv + 1][f];
        arg[lv][p] = arg[lv + 1][f];
      }
    }
  }

  WhitneyDecomposition out;
  out.shape = shape;
  DyadicTree tree;
  tree.dim = dim;
  tree.levels = L + 1;
  tree.state.resize(L + 1);
  for (int lv = 0; lv <= L; ++lv) tree.state[lv].assign(GridShape{dim, lv}.size(), kEmpty);

  struct Pending {
    int level;
    Coord c;
  };
  std::vector<Pending> stack{{0, {0, 0, 0}}};
  std::vector<std::pair<DyadicCube, std::int64_t>> accepted;  // cube, argmin cell
  const double h = shape.h();
  while (!stack.empty()) {
    Pending p = stack.back();
    stack.pop_back();
    GridShape s{dim, p.level};
    std::int64_t node = s.index(p.c);
    if (count[p.level][node] == 0) continue;
    DyadicCube q;
    q.level = p.level;
    q.coords = p.c;
    double dist = std::sqrt(static_cast<double>(gap2[p.level][node])) * h;
    bool whole = count[p.level][node] == (std::int64_t{1} << (dim * (L - p.level)));
    if (whole && dist >= q.diam(dim)) {
      accepted.push_back({q, arg[p.level][node]});
      continue;
    }
    if (p.level == L) {
      q.resolution_limited = true;
      accepted.push_back({q, arg[p.level][node]});
      continue;
    }
    tree.state[p.level][node] = kSplit;
    for (int child = (1 << dim) - 1; child >= 0; --child) {
      Pending ch{p.level + 1, {0, 0, 0}};
      for (int i = 0; i < dim; ++i) ch.c[i] = 2 * p.c[i] + ((child >> i) & 1);
      stack.push_back(ch);
    }
  }
  std::sort(accepted.begin(), accepted.end(), [&](const auto& a, const auto& b) {
    if (a.first.level != b.first.level) return a.first.level < b.first.level;
    GridShape s{dim, a.first.level};
    return s.index(a.first.coords) < s.index(b.first.coords);
  });

  std::int64_t strict = 0;
  out.owner.assign(shape.size(), -1);
  out.finest_level = 0;
  out.coarsest_level = L;
  for (std::size_t id = 0; id < accepted.size(); ++id) {
    const auto& [q, argcell] = accepted[id];
    if (!q.resolution_limited) ++strict;
    out.finest_level = std::max(out.finest_level, q.level);
    out.coarsest_level = std::min(out.coarsest_level, q.level);
    tree.state[q.level][GridShape{dim, q.level}.index(q.coords)] = static_cast<std::int64_t>(id);
    CellBox cb = q.cells(L);
    for_each_cell(cb, dim, [&](const Coord& c) { out.owner[shape.index(c)] = static_cast<std::int64_t>(id); });

    // Nearest complement cell among those adjacent to the feature point.
    Coord xs = shape.coord(argcell);
    std::int64_t feat = gf.dilated.feature[gf.lat.index(xs, dim)];
    Coord f = gf.lat.box_coord(feat, dim);
    double best = std::numeric_limits<double>::infinity();
    Coord best_c{0, 0, 0};
    std::int64_t best_idx = std::numeric_limits<std::int64_t>::max();
    CellBox around;
    for (int i = 0; i < dim; ++i) {
      around.lo[i] = f[i] - 1;
      around.hi[i] = f[i] + 2;
    }
    for_each_cell(around, dim, [&](const Coord& c) {
      for (int i = 0; i < dim; ++i)
        if (c[i] + gf.lat.pad < 0 || c[i] + gf.lat.pad >= gf.lat.extents[i]) return;
      std::int64_t pidx = gf.lat.index(c, dim);
      if (!gf.lat.outside[pidx]) return;
      double d2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        double g = box_gap_1d(static_cast<double>(c[i]), static_cast<double>(c[i] + 1),
                              static_cast<double>(cb.lo[i]), static_cast<double>(cb.hi[i]));
        d2 += g * g;
      }
      if (d2 < best || (d2 == best && pidx < best_idx)) {
        best = d2;
        best_c = c;
        best_idx = pidx;
      }
    });
    if (best_idx == std::numeric_limits<std::int64_t>::max())
      throw Error(ErrorCode::degenerate, "no complement cell found near a Whitney cube");
    EnlargedCube r;
    r.parent = static_cast<std::int64_t>(id);
    double half = 0.0;
    for (int i = 0; i < dim; ++i) {
      double c0 = static_cast<double>(best_c[i]), c1 = c0 + 1.0;
      double q0 = static_cast<double>(cb.lo[i]), q1 = static_cast<double>(cb.hi[i]);
      double x;
      if (c1 <= q0) x = c1;
      else if (c0 >= q1) x = c0;
      else x = 0.5 * (std::max(c0, q0) + std::min(c1, q1));
      r.center[i] = x * h;
      half = std::max({half, std::abs(x - q0) * h, std::abs(x - q1) * h});
    }
    r.side = 2.0 * half;
    out.cubes.push_back(q);
    out.enlarged.push_back(r);
    out.distance.push_back(std::sqrt(best) * h);
  }
  if (strict == 0)
    throw Error(ErrorCode::degenerate, "no dyadic cube satisfies the Whitney condition on this raster");

  out.neighbor_offsets.assign(out.cubes.size() + 1, 0);
  for (std::size_t id = 0; id < out.cubes.size(); ++id) {
    std::vector<std::int64_t> ids;
    tree.query(out.enlarged[id].lo(dim), out.enlarged[id].hi(dim), true,
               [&](std::int64_t q) { ids.push_back(q); });
    std::sort(ids.begin(), ids.end());
    out.neighbor_ids.insert(out.neighbor_ids.end(), ids.begin(), ids.end());
    out.neighbor_offsets[id + 1] = static_cast<std::int64_t>(out.neighbor_ids.size());
  }
  return out;
}

bool WhitneyValidity::ok() const {
  return violations == 0 && cover_exact && enlarged_ok && min_touching_ratio >= 0.25 &&
         max_touching_ratio <= 4.0 && max_neighbor_ratio <= neighbor_bound;
}

WhitneyValidity validate(const GridDomain& domain, const WhitneyDecomposition& decomp) {
  const int dim = domain.dim();
  const int L = domain.level();
  const GridShape& shape = domain.shape();
  const double h = shape.h();
  WhitneyValidity v;
  v.neighbor_bound = intersection_cutoff(dim);
  v.cubes = static_cast<std::int64_t>(decomp.size());
  GapField gf = gap_field(domain);

  std::vector<std::int64_t> paint(shape.size(), 0);
  DyadicTree tree;
  tree.dim = dim;
  tree.levels = L + 1;
  tree.state.resize(L + 1);
  for (int lv = 0; lv <= L; ++lv) tree.state[lv].assign(GridShape{dim, lv}.size(), kEmpty);
  v.enlarged_ok = true;
  for (std::size_t id = 0; id < decomp.size(); ++id) {
    const auto& q = decomp.cubes[id];
    CellBox cb = q.cells(L);
    std::int64_t g2 = std::numeric_limits<std::int64_t>::max();
    for_each_cell(cb, dim, [&](const Coord& c) {
      ++paint[shape.index(c)];
      g2 = std::min(g2, gf.dilated.sq_dist[gf.lat.index(c, dim)]);
    });
    double dist = std::sqrt(static_cast<double>(g2)) * h;
    double diam = q.diam(dim);
    v.max_dist_ratio = std::max(v.max_dist_ratio, dist / diam);
    if (q.resolution_limited) {
      ++v.resolution_limited;
      if (q.level != L || dist > 4.0 * diam) ++v.violations;
      if (dist < diam) v.max_deficit_cells = std::max(v.max_deficit_cells, (diam - dist) / h);
    } else {
      ++v.strict;
      if (dist < diam || dist > 4.0 * diam) ++v.violations;
    }
    // Mark ancestors as split so the tree query can descend.
    for (int lv = 0; lv < q.level; ++lv) {
      Coord a = q.coords;
      for (int i = 0; i < dim; ++i) a[i] >>= (q.level - lv);
      tree.state[lv][tree.node_index(lv, a)] = kSplit;
    }
    tree.state[q.level][tree.node_index(q.level, q.coords)] = static_cast<std::int64_t>(id);

    const auto& r = decomp.enlarged[id];
    Point rlo = r.lo(dim), rhi = r.hi(dim);
    double center_gap2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      double q0 = cb.lo[i] * h, q1 = cb.hi[i] * h;
      if (rlo[i] > q0 + 1e-12 || rhi[i] < q1 - 1e-12) v.enlarged_ok = false;
      double g = box_gap_1d(r.center[i], r.center[i], q0, q1);
      center_gap2 += g * g;
    }
    if (r.side > 10.0 * diam + 1e-12) v.enlarged_ok = false;
    if (std::abs(std::sqrt(center_gap2) - dist) > std::sqrt(static_cast<double>(dim)) * h + 1e-12)
      v.enlarged_ok = false;
  }
  v.cover_exact = true;
  for (std::int64_t idx = 0; idx < shape.size(); ++idx) {
    std::int64_t expect = domain.inside(idx) ? 1 : 0;
    if (paint[idx] != expect) v.cover_exact = false;
  }

  for (std::size_t id = 0; id < decomp.size(); ++id) {
    const auto& q = decomp.cubes[id];
    Point lo{0, 0, 0}, hi{0, 0, 0};
    for (int i = 0; i < dim; ++i) {
      lo[i] = q.coords[i] * q.side();
      hi[i] = lo[i] + q.side();
    }
    tree.query(lo, hi, false, [&](std::int64_t other) {
      if (other <= static_cast<std::int64_t>(id)) return;
      ++v.touching_pairs;
      double ratio = decomp.cubes[other].side() / q.side();
      v.min_touching_ratio = std::min(v.min_touching_ratio, ratio);
      v.max_touching_ratio = std::max(v.max_touching_ratio, ratio);
      v.min_touching_ratio = std::min(v.min_touching_ratio, 1.0 / ratio);
      v.max_touching_ratio = std::max(v.max_touching_ratio, 1.0 / ratio);
    });
    for (auto other : decomp.neighbors(id))
      v.max_neighbor_ratio = std::max(v.max_neighbor_ratio, decomp.cubes[other].side() / q.side());
  }
  return v;
}

std::int64_t packing_count(int dim) {
  // Same-level cubes Q with R_Q meeting Q' sit in a ball of radius
  // diam R_Q + diam Q'/2 <= (10 + 5/2) sqrt(N) diam Q = 12.5 N sides around
  // the center of Q'. Their centers form a translate of the unit lattice, so
  // count lattice points within that radius plus sqrt(N)/2.
  const double radius = 12.5 * dim + 0.5 * std::sqrt(static_cast<double>(dim));
  const auto r = static_cast<std::int64_t>(std::ceil(radius));
  std::int64_t total = 0;
  CellBox box;
  for (int i = 0; i < dim; ++i) {
    box.lo[i] = -r;
    box.hi[i] = r + 1;
  }
  for_each_cell(box, dim, [&](const Coord& c) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) d2 += static_cast<double>(c[i] * c[i]);
    if (d2 <= radius * radius) ++total;
  });
  return total;
}

SummationTerms summation_lemma_ratio(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                     const std::vector<double>& f, double s) {
  if (!(s > 0.0)) throw Error(ErrorCode::precondition, "summation exponent s must be positive", "s>0");
  const GridShape& shape = domain.shape();
  const int dim = shape.dim;
  if (static_cast<std::int64_t>(f.size()) != shape.size())
    throw Error(ErrorCode::config, "function size does not match the grid");
  const double vol = shape.cell_volume();
  std::vector<long double> w(shape.size(), 0.0L);
  long double integral = 0.0L;
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    if (f[i] < 0.0) throw Error(ErrorCode::precondition, "f must be nonnegative", "f>=0");
    if (!domain.inside(i)) {
      if (f[i] != 0.0) throw Error(ErrorCode::precondition, "f must vanish on the complement", "f=0 off domain");
      continue;
    }
    w[i] = static_cast<long double>(f[i]) * std::pow(static_cast<long double>(domain.delta()[i]), s) * vol;
    integral += static_cast<long double>(f[i]) * vol;
  }
  PrefixSum ps(shape, w);
  SummationTerms t;
  long double lhs = 0.0L;
  for (std::size_t q = 0; q < decomp.size(); ++q) {
    long double part = ps.sum(decomp.enlarged[q].cells(shape));
    lhs += std::pow(static_cast<long double>(decomp.diam(q)), -s) * std::max(part, 0.0L);
    CellBox cb = decomp.cubes[q].cells(shape.level);
    for_each_cell(cb, dim, [&](const Coord& c) {
      t.delta_ratio = std::max(t.delta_ratio, domain.delta()[shape.index(c)] / decomp.diam(q));
    });
  }
  const double M = std::floor(std::log2(intersection_cutoff(dim)));
  t.constant = static_cast<double>(packing_count(dim)) * std::pow(std::max(5.0, t.delta_ratio), s) *
               std::pow(2.0, M * s) / (1.0 - std::pow(2.0, -s));
  t.lhs = static_cast<double>(lhs);
  t.integral = static_cast<double>(integral);
  t.rhs_bound = t.constant * t.integral;
  return t;
}

std::string decomposition_svg(const WhitneyDecomposition& decomp, bool overlay,
                              const std::vector<double>* field) {
  if (decomp.shape.dim != 2) throw Error(ErrorCode::config, "SVG export needs a planar decomposition");
  const double px = 512.0;
  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px << "\" height=\"" << px
     << "\" viewBox=\"0 0 " << px << ' ' << px << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << px << "\" height=\"" << px << "\" fill=\"#ffffff\"/>\n";
  double fmin = 0.0, fmax = 1.0;
  if (field && !field->empty()) {
    fmin = std::numeric_limits<double>::infinity();
    fmax = -fmin;
    for (double x : *field) {
      if (!std::isfinite(x) || x <= 0.0) continue;
      fmin = std::min(fmin, std::log(x));
      fmax = std::max(fmax, std::log(x));
    }
    if (!(fmax > fmin)) fmax = fmin + 1.0;
  }
  for (std::size_t q = 0; q < decomp.size(); ++q) {
    const auto& c = decomp.cubes[q];
    double s = c.side() * px;
    double x = c.coords[0] * s, y = px - (c.coords[1] + 1) * s;
    std::string fill = c.resolution_limited ? "#f4d6d6" : "#dde8f4";
    if (field && q < field->size()) {
      double val = (*field)[q];
      int shade = 255;
      if (std::isfinite(val) && val > 0.0) shade = static_cast<int>(255.0 - 200.0 * (std::log(val) - fmin) / (fmax - fmin));
      else if (!std::isfinite(val)) shade = 40;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "#%02x%02xff", shade, shade);
      fill = buf;
    }
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << s << "\" height=\"" << s << "\" fill=\""
       << fill << "\" stroke=\"#30405a\" stroke-width=\"0.3\"/>\n";
  }
  if (overlay) {
    for (const auto& r : decomp.enlarged) {
      double s = r.side * px;
      double x = (r.center[0] - 0.5 * r.side) * px, y = px - (r.center[1] + 0.5 * r.side) * px;
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << s << "\" height=\"" << s
         << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"0.25\" stroke-dasharray=\"2,2\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hardylab
