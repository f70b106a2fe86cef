#include "hardylab/cone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <tuple>

#include <Eigen/Dense>

#include "hardylab/error.hpp"
#include "hardylab/norms.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/random.hpp"

namespace hardylab {

namespace {

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

WeightField power_weight(const GridDomain& domain, double e) {
  WeightSpec w;
  w.s = e;
  return w.field(domain);
}

double smooth_edge(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

}  // namespace

// ---------------------------------------------------------------- cutoff

double CutoffFamily::profile(double t) {
  t = std::abs(t);
  if (t <= 0.5) return 1.0;
  if (t >= 2.0 / 3.0) return 0.0;
  const double r = (t - 0.5) * 6.0;
  const double a = smooth_edge(1.0 - r), b = smooth_edge(r);
  return a / (a + b);
}

double CutoffFamily::eval(const Point& x, const Point& center, double side, int dim) {
  double v = 1.0;
  for (int i = 0; i < dim; ++i) v *= profile((x[i] - center[i]) / side);
  return v;
}

// ---------------------------------------------------------------- patches

std::int64_t LocalPatch::size() const {
  std::int64_t s = 1;
  for (int i = 0; i < dim; ++i) s *= extent[i];
  return s;
}

std::int64_t LocalPatch::index(const Coord& c) const {
  std::int64_t idx = 0;
  for (int i = dim - 1; i >= 0; --i) idx = idx * extent[i] + c[i];
  return idx;
}

Point LocalPatch::center(const Coord& c) const {
  Point p{0, 0, 0};
  for (int i = 0; i < dim; ++i) p[i] = origin[i] + static_cast<double>(c[i]) * h;
  return p;
}

namespace {

CellBox patch_box(const LocalPatch& u) {
  CellBox b;
  for (int i = 0; i < u.dim; ++i) b.hi[i] = u.extent[i];
  return b;
}

}  // namespace

double patch_seminorm_power(const LocalPatch& u, int k, double p) {
  // Embed in a dyadic grid large enough for zero padding and rescale the cell size.
  std::int64_t n = 1;
  for (int i = 0; i < u.dim; ++i) n = std::max(n, u.extent[i]);
  int level = 0;
  while ((std::int64_t{1} << level) < n + 1) ++level;
  GridShape shape{u.dim, level};
  std::vector<double> cells(shape.size(), 0.0);
  for_each_cell(patch_box(u), u.dim, [&](const Coord& c) { cells[shape.index(c)] = u.values[u.index(c)]; });
  const double raw = gradient_power_integral(shape, cells, k, p, BoundaryPolicy::zero_extension, WeightField{});
  const double ratio = shape.h() / u.h;
  return raw * std::pow(ratio, k * p) * std::pow(1.0 / ratio, u.dim);
}

double patch_norm(const LocalPatch& u, int m, double p) {
  double acc = 0.0;
  for (int k = 0; k <= m; ++k) acc += patch_seminorm_power(u, k, p);
  return std::pow(acc, 1.0 / p);
}

// ---------------------------------------------------------------- majorant

namespace {

// Orthonormal sine basis of the Dirichlet Laplacian on n cells and its
// eigenvalues for unit spacing.
struct SineBasis {
  Eigen::MatrixXd S;  // symmetric, S * S = I
  Eigen::VectorXd mu;
};

std::shared_ptr<const SineBasis> sine_basis(std::int64_t n) {
  static std::mutex mu;
  static std::map<std::int64_t, std::shared_ptr<const SineBasis>> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
  }
  auto b = std::make_shared<SineBasis>();
  b->S.resize(n, n);
  b->mu.resize(n);
  const double c = std::sqrt(2.0 / static_cast<double>(n + 1));
  for (std::int64_t k = 0; k < n; ++k) {
    const double th = std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(n + 1);
    b->mu[k] = 2.0 - 2.0 * std::cos(th);
    for (std::int64_t i = 0; i < n; ++i) b->S(i, k) = c * std::sin(th * static_cast<double>(i + 1));
  }
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(n, b);
  return b;
}

// out = M applied along one axis of a tensor stored with axis 0 fastest.
std::vector<double> apply_axis(const std::vector<double>& t, const std::array<std::int64_t, kMaxDim>& ext, int dim,
                               int axis, const Eigen::MatrixXd& M) {
  std::int64_t inner = 1, outer = 1;
  for (int i = 0; i < axis; ++i) inner *= ext[i];
  for (int i = axis + 1; i < dim; ++i) outer *= ext[i];
  const std::int64_t n = ext[axis];
  std::vector<double> out(t.size(), 0.0);
  Eigen::VectorXd line(n);
  for (std::int64_t o = 0; o < outer; ++o)
    for (std::int64_t i = 0; i < inner; ++i) {
      const std::int64_t base = o * n * inner + i;
      for (std::int64_t a = 0; a < n; ++a) line[a] = t[base + a * inner];
      Eigen::VectorXd r = M * line;
      for (std::int64_t a = 0; a < n; ++a) out[base + a * inner] = r[a];
    }
  return out;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

MajorantResult local_majorant(const LocalPatch& u, int m, double p, const MajorantOptions& opt) {
  if (!(p > 1.0)) throw Error(ErrorCode::precondition, "the positive-kernel majorant needs p > 1", "1<p");
  if (m < 1) throw Error(ErrorCode::config, "order m must be at least 1", "m");
  if (static_cast<std::int64_t>(u.values.size()) != u.size())
    throw Error(ErrorCode::config, "patch values do not match its extent", "u");
  const int dim = u.dim;
  const double kappa = opt.kernel_scale;
  const double alpha = opt.tikhonov_scale * u.h * u.h;

  std::vector<std::shared_ptr<const SineBasis>> bs(dim);
  for (int i = 0; i < dim; ++i) bs[i] = sine_basis(u.extent[i]);
  // Symbol of G = (I - kappa^2 Laplacian)^{-m/2} on the patch.
  auto sigma_at = [&](const Coord& c) {
    double lap = 0.0;
    for (int i = 0; i < dim; ++i) lap += bs[i]->mu[c[i]];
    return std::pow(1.0 + kappa * kappa * lap / (u.h * u.h), -0.5 * m);
  };
  auto transform = [&](std::vector<double> t) {
    for (int i = 0; i < dim; ++i) t = apply_axis(t, u.extent, dim, i, bs[i]->S);
    return t;
  };

  // Regularized inverse: f = S diag(sigma / (sigma^2 + alpha)) S u.
  std::vector<double> spec = transform(u.values);
  double smin = 1.0;
  std::vector<double> fs = spec;
  for_each_cell(patch_box(u), dim, [&](const Coord& c) {
    const double sg = sigma_at(c);
    smin = std::min(smin, sg);
    fs[u.index(c)] *= sg / (sg * sg + alpha);
  });
  std::vector<double> f = transform(fs);
  for (double x : f)
    if (!std::isfinite(x))
      throw Error(ErrorCode::solver,
                  "deconvolution produced non-finite values (condition " + std::to_string(1.0 / smin) + ")");

  MajorantResult out;
  out.kernel_width = static_cast<std::int64_t>(std::llround(kappa / u.h));
  out.condition = 1.0 / smin;
  {
    std::vector<double> g = transform(f);
    for_each_cell(patch_box(u), dim, [&](const Coord& c) { g[u.index(c)] *= sigma_at(c); });
    g = transform(g);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] -= u.values[j];
    const double nu = l2(u.values);
    out.residual = nu > 0.0 ? l2(g) / nu : 0.0;
  }
  for (double& x : f) x = std::max(x, 0.0);
  f = transform(f);
  for_each_cell(patch_box(u), dim, [&](const Coord& c) { f[u.index(c)] *= sigma_at(c); });
  f = transform(f);

  out.v = u;
  const Point zero{0, 0, 0};
  for_each_cell(patch_box(u), dim, [&](const Coord& c) {
    const std::int64_t idx = u.index(c);
    double v = CutoffFamily::eval(u.center(c), zero, CutoffFamily::alpha, dim) * std::max(f[idx], 0.0);
    const double gap = u.values[idx] - v;
    if (gap > 0.0) {
      out.defect = std::max(out.defect, gap);
      v = u.values[idx];
    }
    out.v.values[idx] = std::max(v, 0.0);
  });
  const double nu = patch_norm(u, m, p);
  out.a0 = nu > 0.0 ? patch_norm(out.v, m, p) / nu : 0.0;
  return out;
}

// ---------------------------------------------------------------- integral test

IntegralTest weighted_integral_test(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const std::vector<double>& u, int m, double p, double s, double threshold) {
  const auto& shape = domain.shape();
  if (static_cast<std::int64_t>(u.size()) != shape.size())
    throw Error(ErrorCode::config, "function size does not match the grid", "u");
  std::map<int, double> shells;
  for (const auto& q : decomp.cubes) shells[q.level] = 0.0;
  const double vol = shape.cell_volume();
  const double e = s - m * p;
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    const std::int64_t q = decomp.owner[i];
    if (q < 0 || u[i] == 0.0) continue;
    shells[decomp.cubes[q].level] +=
        std::pow(std::abs(u[i]), p) * std::pow(std::max(domain.delta()[i], domain.delta_floor()), e) * vol;
  }
  IntegralTest out;
  for (const auto& [lv, v] : shells) {
    out.levels.push_back(lv);
    out.shell.push_back(v);
    out.total += v;
  }
  const std::size_t n = out.levels.size();
  const std::size_t first = n > 4 ? n - 4 : 0;
  std::vector<double> xs, ys;
  for (std::size_t i = first; i < n; ++i)
    if (out.shell[i] > 0.0) {
      xs.push_back(out.levels[i]);
      ys.push_back(std::log2(out.shell[i]));
    }
  if (n == 0 || out.shell[n - 1] == 0.0) {
    out.slope = -std::numeric_limits<double>::infinity();
    out.finite = true;
    return out;
  }
  if (xs.size() < 2) {
    // Only the finest shell carries mass: nothing decays.
    out.slope = std::numeric_limits<double>::infinity();
    out.finite = false;
    return out;
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= xs.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.slope = sxy / sxx;
  out.finite = out.slope < -threshold;
  return out;
}

// ---------------------------------------------------------------- split

nlohmann::json ConeSplit::to_json(bool with_cubes) const {
  nlohmann::json j;
  j["norm_factor"] = num(norm_factor);
  j["exactness_error"] = exactness_error;
  j["min_value"] = min_value;
  j["overlap"] = overlap;
  j["cell_overlap"] = cell_overlap;
  nlohmann::json fs = nlohmann::json::array();
  for (const auto& f : factors) fs.push_back({{"name", f.name}, {"value", num(f.value)}, {"note", f.note}});
  j["factors"] = fs;
  j["chain"] = {{"constant", num(chain_constant)}, {"lhs", chain_lhs}, {"rhs", chain_rhs}, {"holds", chain_holds}};
  j["integral"] = {{"levels", integral.levels},
                   {"shells", integral.shell},
                   {"slope", num(integral.slope)},
                   {"finite", integral.finite},
                   {"total", integral.total}};
  if (with_cubes) {
    nlohmann::json cs = nlohmann::json::array();
    for (const auto& c : per_cube_log)
      cs.push_back({{"cube", c.cube},
                    {"input_norm", c.input_norm},
                    {"majorant_norm", c.majorant_norm},
                    {"a0", c.a0},
                    {"defect", c.defect}});
    j["per_cube"] = cs;
  }
  return j;
}

namespace {

struct CubeWork {
  CellBox box;          // patch cells in grid coordinates
  LocalPatch v;
  double side = 0.0;    // physical side of the cube
  double a0 = 0.0, defect = 0.0;
  double in_norm = 0.0, out_norm = 0.0;
  double interp = 1.0;  // sum_k |grad^k u|^p over |u|^p + |grad^m u|^p, cube units
  double local = 0.0;   // l^{s+N-mp} (|u|^p + |grad^m u|^p), cube units
  double weight = 0.0;  // max over positions of w / l^s
};

}  // namespace

ConeSplit cone_split(const GridDomain& domain, const WhitneyDecomposition& decomp, const std::vector<double>& u,
                     int m, double p, double s, const MajorantOptions& opt) {
  if (!(p > 1.0)) throw Error(ErrorCode::precondition, "the cone split needs p > 1", "1<p");
  if (m < 1) throw Error(ErrorCode::config, "order m must be at least 1", "m");
  const auto& shape = domain.shape();
  const int N = shape.dim;
  if (static_cast<std::int64_t>(u.size()) != shape.size())
    throw Error(ErrorCode::config, "function size does not match the grid", "u");
  for (std::int64_t i = 0; i < shape.size(); ++i)
    if (!domain.inside(i) && u[i] != 0.0)
      throw Error(ErrorCode::precondition, "function does not vanish off the domain", "zero-extension");

  ConeSplit out;
  out.integral = weighted_integral_test(domain, decomp, u, m, p, s);
  if (!out.integral.finite)
    throw Error(ErrorCode::hypothesis,
                "integral of |u|^p delta^{-mp+s} diverges under refinement (shell slope " +
                    std::to_string(out.integral.slope) + ")",
                "integral-finite");

  const WeightField ws = power_weight(domain, s);
  const Point zero{0, 0, 0};
  std::vector<CubeWork> work(decomp.size());
  parallel_for(static_cast<std::int64_t>(decomp.size()), [&](std::int64_t q) {
    CubeWork& cw = work[q];
    const CellBox cb = decomp.cubes[q].cells(shape.level);
    const std::int64_t n = cb.hi[0] - cb.lo[0];
    const double half = 0.5 * CutoffFamily::beta * static_cast<double>(n);
    LocalPatch up;
    up.dim = N;
    up.h = 1.0 / static_cast<double>(n);
    for (int i = 0; i < N; ++i) {
      const double c0 = 0.5 * static_cast<double>(cb.lo[i] + cb.hi[i]);
      cw.box.lo[i] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(c0 - half - 0.5)));
      cw.box.hi[i] = std::min<std::int64_t>(shape.side(), static_cast<std::int64_t>(std::floor(c0 + half - 0.5)) + 1);
      up.extent[i] = cw.box.hi[i] - cw.box.lo[i];
      up.origin[i] = (static_cast<double>(cw.box.lo[i]) + 0.5 - c0) * up.h;
    }
    up.values.assign(up.size(), 0.0);
    for_each_cell(patch_box(up), N, [&](const Coord& c) {
      Coord g = c;
      for (int i = 0; i < N; ++i) g[i] += cw.box.lo[i];
      const double val = u[shape.index(g)];
      if (val != 0.0) up.values[up.index(c)] = CutoffFamily::eval(up.center(c), zero, 1.0, N) * val;
    });
    MajorantResult mr = local_majorant(up, m, p, opt);
    // The enlarged support stays inside the domain for Whitney cubes; clear any
    // cell that falls outside on the raster.
    for_each_cell(patch_box(up), N, [&](const Coord& c) {
      Coord g = c;
      for (int i = 0; i < N; ++i) g[i] += cw.box.lo[i];
      if (!domain.inside(shape.index(g))) mr.v.values[up.index(c)] = 0.0;
    });
    cw.v = std::move(mr.v);
    cw.side = static_cast<double>(n) * shape.h();
    cw.defect = mr.defect;
    double all_u = 0.0;
    for (int k = 0; k <= m; ++k) all_u += patch_seminorm_power(up, k, p);
    const double u0 = patch_seminorm_power(up, 0, p), um = patch_seminorm_power(up, m, p);
    cw.in_norm = std::pow(all_u, 1.0 / p);
    cw.out_norm = patch_norm(cw.v, m, p);
    cw.a0 = cw.in_norm > 0.0 ? cw.out_norm / cw.in_norm : 0.0;
    cw.interp = u0 + um > 0.0 ? all_u / (u0 + um) : 1.0;
    cw.local = std::pow(cw.side, s + N - m * p) * (u0 + um);
    CellBox pos = cw.box;
    for (int i = 0; i < N; ++i) pos.lo[i] -= m;
    const double ls = std::pow(cw.side, s);
    for_each_cell(pos, N, [&](const Coord& x) { cw.weight = std::max(cw.weight, ws.at(shape, x) / ls); });
  });

  // Deterministic ordered accumulation.
  std::vector<double> v(shape.size(), 0.0);
  std::vector<std::int64_t> count;
  const std::int64_t pn = shape.side() + m;
  std::int64_t psize = 1;
  for (int i = 0; i < N; ++i) psize *= pn;
  count.assign(psize, 0);
  std::vector<std::int64_t> cells(shape.size(), 0);
  auto pidx = [&](const Coord& x) {
    std::int64_t idx = 0;
    for (int i = N - 1; i >= 0; --i) idx = idx * pn + (x[i] + m);
    return idx;
  };
  double a0max = 0.0, interp = 1.0, weight = 0.0, local = 0.0;
  for (std::size_t q = 0; q < work.size(); ++q) {
    const CubeWork& cw = work[q];
    for_each_cell(patch_box(cw.v), N, [&](const Coord& c) {
      Coord g = c;
      for (int i = 0; i < N; ++i) g[i] += cw.box.lo[i];
      v[shape.index(g)] += cw.v.values[cw.v.index(c)];
    });
    for_each_cell(cw.box, N, [&](const Coord& x) { out.cell_overlap = std::max(out.cell_overlap, ++cells[shape.index(x)]); });
    CellBox pos = cw.box;
    for (int i = 0; i < N; ++i) pos.lo[i] -= m;
    for_each_cell(pos, N, [&](const Coord& x) { out.overlap = std::max(out.overlap, ++count[pidx(x)]); });
    a0max = std::max(a0max, cw.a0);
    interp = std::max(interp, cw.interp);
    weight = std::max(weight, cw.weight);
    local += cw.local;
    out.per_cube_log.push_back({static_cast<std::int64_t>(q), cw.in_norm, cw.out_norm, cw.a0, cw.defect});
  }

  out.u1 = v;
  out.u2.resize(v.size());
  out.min_value = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.u2[i] = v[i] - u[i];
    out.exactness_error = std::max(out.exactness_error, std::abs(out.u1[i] - out.u2[i] - u[i]));
    out.min_value = std::min({out.min_value, out.u1[i], out.u2[i]});
  }

  auto wnorm_p = [&](const std::vector<double>& f) {
    double acc = 0.0;
    for (int k = 0; k <= m; ++k) acc += gradient_power_integral(shape, f, k, p, BoundaryPolicy::zero_extension, ws);
    return acc;
  };
  const double nu = wnorm_p(u);
  out.chain_lhs = wnorm_p(out.u1);
  const double n2 = wnorm_p(out.u2);
  out.norm_factor = nu > 0.0 ? std::pow(std::max(out.chain_lhs, n2) / nu, 1.0 / p) : 0.0;
  out.chain_rhs =
      gradient_power_integral(shape, u, 0, p, BoundaryPolicy::zero_extension, power_weight(domain, s - m * p)) +
      gradient_power_integral(shape, u, m, p, BoundaryPolicy::zero_extension, ws);

  const double localization = out.chain_rhs > 0.0 ? local / out.chain_rhs : 0.0;
  out.factors = {
      {"overlap", std::pow(static_cast<double>(out.overlap), p - 1.0),
       "C^{p-1}, C = max supports of v_Q through a stencil position"},
      {"weight_freeze", weight, "max over Q and its positions of delta^s / l(Q)^s"},
      {"majorant", std::pow(a0max, p), "max A0^p of the local majorants"},
      {"interpolation", interp, "max over Q of sum_k |grad^k u_Q|^p / (|u_Q|^p + |grad^m u_Q|^p), cube units"},
      {"localization", localization, "sum over Q of the cube-scaled terms over the global right side, measured"},
  };
  out.chain_constant = 1.0;
  for (const auto& f : out.factors) out.chain_constant *= f.value;
  out.chain_holds = out.chain_lhs <= out.chain_constant * out.chain_rhs * (1.0 + 1e-9) + 1e-300;
  return out;
}

// ---------------------------------------------------------------- probes

namespace {

struct Modes {
  std::vector<std::array<double, 5>> terms;  // amplitude, phase, frequencies

  static Modes random(Rng& rng, int count, int max_freq) {
    Modes md;
    for (int i = 0; i < count; ++i) {
      std::array<double, 5> t{};
      t[0] = rng.uniform(-1.0, 1.0);
      t[1] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      for (int a = 0; a < 3; ++a) t[2 + a] = std::floor(rng.uniform(-max_freq, max_freq + 1.0));
      md.terms.push_back(t);
    }
    return md;
  }
  double at(const Point& x, int dim) const {
    double v = 0.0;
    for (const auto& t : terms) {
      double arg = t[1];
      for (int a = 0; a < dim; ++a) arg += 2.0 * std::numbers::pi * t[2 + a] * x[a];
      v += t[0] * std::cos(arg);
    }
    return v;
  }
};

Point cell_point(const GridShape& shape, const Coord& c) {
  Point x{0, 0, 0};
  for (int i = 0; i < shape.dim; ++i) x[i] = shape.center(c[i]);
  return x;
}

// Smooth factor vanishing within distance r0 of the boundary and equal to 1
// beyond 2 r0.
double interior_cutoff(double delta, double r0) {
  const double r = (delta - r0) / r0;
  if (r <= 0.0) return 0.0;
  if (r >= 1.0) return 1.0;
  const double a = smooth_edge(r), b = smooth_edge(1.0 - r);
  return a / (a + b);
}

}  // namespace

std::vector<ConeProbe> cone_probes(const GridDomain& domain, int count, std::uint64_t seed) {
  const auto& shape = domain.shape();
  // Fixed physical distance, pushed out past the finest Whitney layer on coarse grids.
  const double r0 = std::max(1.0 / 32.0, 6.0 * std::sqrt(static_cast<double>(shape.dim)) * shape.h());
  std::vector<ConeProbe> out;
  for (int r = 0; r < count; ++r) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
    ConeProbe pr;
    const bool osc = r % 4 == 3;
    pr.kind = osc ? ProbeKind::oscillating : ProbeKind::bump;
    pr.name = (osc ? "oscillating-" : "bump-") + std::to_string(r);
    Modes md = Modes::random(rng, osc ? 2 : 4, osc ? 8 : 3);
    pr.values.assign(shape.size(), 0.0);
    for (std::int64_t i = 0; i < shape.size(); ++i) {
      if (!domain.inside(i)) continue;
      const double chi = interior_cutoff(domain.delta()[i], r0);
      if (chi > 0.0) pr.values[i] = chi * md.at(cell_point(shape, shape.coord(i)), shape.dim);
    }
    out.push_back(std::move(pr));
  }
  return out;
}

ConeProbe boundary_power_probe(const GridDomain& domain, double exponent, std::uint64_t seed) {
  const auto& shape = domain.shape();
  Rng rng(seed);
  Modes md = Modes::random(rng, 3, 2);
  ConeProbe pr;
  pr.kind = ProbeKind::boundary_power;
  pr.exponent = exponent;
  pr.name = "boundary-power-" + std::to_string(exponent).substr(0, 4);
  pr.values.assign(shape.size(), 0.0);
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    if (!domain.inside(i)) continue;
    const double d = std::max(domain.delta()[i], domain.delta_floor());
    pr.values[i] = std::pow(d, exponent) * (1.5 + md.at(cell_point(shape, shape.coord(i)), shape.dim) / 3.0);
  }
  return pr;
}

// ---------------------------------------------------------------- generation check

std::string cone_theorem_name(ConeTheorem t) { return t == ConeTheorem::generation ? "generation" : "two-sided"; }

ConeTheorem parse_cone_theorem(const std::string& s) {
  if (s == "generation") return ConeTheorem::generation;
  if (s == "two-sided") return ConeTheorem::two_sided;
  throw Error(ErrorCode::config, "unknown cone theorem '" + s + "', expected generation or two-sided", "theorem");
}

CorollaryCase routed_corollary_case(ConeTheorem t, const std::string& c) {
  if (t == ConeTheorem::generation) {
    for (const char* ok : {"i", "ii", "v", "vi", "ix", "x"})
      if (c == ok) return parse_corollary_case(c);
    throw Error(ErrorCode::config, "generation routes corollary cases i, ii, v, vi, ix, x only", "case");
  }
  if (c == "i") return CorollaryCase::iii;
  if (c == "ii") return CorollaryCase::iv;
  if (c == "iii") return CorollaryCase::vii;
  if (c == "iv") return CorollaryCase::viii;
  throw Error(ErrorCode::config, "two-sided cases are i-iv", "case");
}

nlohmann::json ConeGenerationReport::to_json() const {
  nlohmann::json j;
  j["theorem"] = cone_theorem_name(theorem);
  j["case"] = theorem_case;
  j["corollary"] = corollary.to_json();
  nlohmann::json rs = nlohmann::json::array();
  for (const auto& r : rows)
    rs.push_back({{"probe", r.probe},
                  {"integral_finite", r.integral_finite},
                  {"split_ok", r.split_ok},
                  {"consistent", r.consistent},
                  {"norm_factor", num(r.norm_factor)},
                  {"slope", num(r.slope)},
                  {"detail", r.detail}});
  j["rows"] = rs;
  j["pass"] = pass;
  return j;
}

ConeGenerationReport cone_generation_check(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                           ConeTheorem theorem, const std::string& theorem_case,
                                           const HardyParams& params, int probes) {
  ConeGenerationReport rep;
  rep.theorem = theorem;
  rep.theorem_case = theorem_case;
  if (params.q != params.p) throw Error(ErrorCode::precondition, "the cone statements take q = p", "q=p");
  if (theorem == ConeTheorem::two_sided && params.m != 2)
    throw Error(ErrorCode::precondition, "the two-sided statement is for m = 2", "m=2");
  rep.corollary = corollary_check(domain, decomp, routed_corollary_case(theorem, theorem_case), params);
  if (!rep.corollary.hypotheses_ok) return rep;

  auto list = cone_probes(domain, probes, params.seed);
  list.push_back(boundary_power_probe(domain, params.m + 1.0, derive_seed(params.seed, 101)));
  // u ~ dist^{m-1} keeps the top-order integral comparable while the weighted
  // L^p integral diverges.
  list.push_back(boundary_power_probe(domain, params.m - 1.0, derive_seed(params.seed, 102)));
  rep.pass = true;
  for (const auto& pr : list) {
    ConeProbeRow row;
    row.probe = pr.name;
    IntegralTest it = weighted_integral_test(domain, decomp, pr.values, params.m, params.p, params.s);
    row.integral_finite = it.finite;
    row.slope = it.slope;
    try {
      ConeSplit cs = cone_split(domain, decomp, pr.values, params.m, params.p, params.s);
      row.norm_factor = cs.norm_factor;
      double scale = 0.0;
      for (double x : cs.u1) scale = std::max(scale, std::abs(x));
      row.split_ok = cs.min_value >= 0.0 && cs.exactness_error <= 1e-12 * std::max(scale, 1.0) &&
                     std::isfinite(cs.norm_factor) && cs.chain_holds;
      if (!row.split_ok) row.detail = "split invariants failed";
    } catch (const Error& e) {
      row.split_ok = false;
      row.detail = e.what();
    }
    row.consistent = row.split_ok == row.integral_finite;
    rep.pass = rep.pass && row.consistent;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------- conjecture table

std::vector<ConjectureRow> conjecture_table(const std::vector<DomainSpec>& domains, const std::vector<int>& orders,
                                            double p, int probes, std::uint64_t seed) {
  std::vector<ConjectureRow> rows;
  for (const auto& spec : domains) {
    GridDomain d = rasterize(spec);
    WhitneyDecomposition w = decompose(d);
    auto list = cone_probes(d, probes, seed);
    for (int m : orders) {
      ConjectureRow row;
      row.domain = domain_kind_name(spec.kind);
      row.m = m;
      for (const auto& pr : list) {
        ++row.probes;
        try {
          ConeSplit cs = cone_split(d, w, pr.values, m, p, 0.0);
          if (cs.min_value >= 0.0 && std::isfinite(cs.norm_factor)) ++row.splits;
          row.max_norm_factor = std::max(row.max_norm_factor, cs.norm_factor);
          for (const auto& c : cs.per_cube_log) row.max_a0 = std::max(row.max_a0, c.a0);
        } catch (const Error&) {
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

nlohmann::json conjecture_table_json(const std::vector<ConjectureRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows)
    a.push_back({{"domain", r.domain},
                 {"m", r.m},
                 {"probes", r.probes},
                 {"splits", r.splits},
                 {"max_norm_factor", num(r.max_norm_factor)},
                 {"max_a0", num(r.max_a0)}});
  return a;
}

}  // namespace hardylab
