#include "hardylab/dimension.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_set>

#include "hardylab/error.hpp"
#include "hardylab/parallel.hpp"

namespace hardylab {

namespace {

double resolved_clamp(const GridDomain& domain, double clamp) { return clamp > 0.0 ? clamp : domain.delta_floor(); }

// Per-cell log of the clamped distance, or NaN outside.
std::vector<double> log_delta(const GridDomain& domain, double clamp) {
  const auto& delta = domain.delta();
  std::vector<double> out(delta.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < delta.size(); ++i)
    if (domain.inside(static_cast<std::int64_t>(i))) out[i] = std::log(std::max(delta[i], clamp));
  return out;
}

GsResult gs_from_logs(const GridDomain& domain, const WhitneyDecomposition& decomp, const std::vector<double>& logd,
                      double s, double clamp) {
  const GridShape& shape = domain.shape();
  std::vector<long double> w(logd.size(), 0.0L);
  for (std::size_t i = 0; i < logd.size(); ++i)
    if (!std::isnan(logd[i])) w[i] = static_cast<long double>(std::exp(-s * logd[i]));
  PrefixSum table(shape, w);
  GsResult r;
  r.s = s;
  r.clamp = clamp;
  r.per_cube.resize(decomp.size());
  const double dv = shape.cell_volume();
  for (std::size_t q = 0; q < decomp.size(); ++q) {
    double integral = static_cast<double>(table.sum(decomp.enlarged[q].cells(shape))) * dv;
    r.per_cube[q] = std::pow(decomp.diam(q), s - shape.dim) * integral;
  }
  std::map<int, LevelValue> levels;
  for (std::size_t q = 0; q < decomp.size(); ++q) {
    auto& lv = levels[decomp.cubes[q].level];
    lv.level = decomp.cubes[q].level;
    lv.value = std::max(lv.value, r.per_cube[q]);
    ++lv.cubes;
    r.sup_value = std::max(r.sup_value, r.per_cube[q]);
  }
  for (const auto& [l, v] : levels) r.per_level.push_back(v);
  return r;
}

// Levels that enter the fit: some cube is not a boundary-layer single cell and,
// for pre-fractals, some enlarged cube is at least one generator piece wide.
std::vector<int> fit_window(const GridDomain& domain, const WhitneyDecomposition& decomp, const DimensionOptions& opt) {
  std::map<int, bool> ok;
  const double feature = opt.respect_feature_scale ? domain.feature_scale() : 0.0;
  for (std::size_t q = 0; q < decomp.size(); ++q) {
    const auto& c = decomp.cubes[q];
    bool good = !c.resolution_limited && decomp.enlarged[q].side >= feature;
    ok[c.level] = ok[c.level] || good;
  }
  std::vector<int> levels;
  for (auto it = ok.rbegin(); it != ok.rend(); ++it)
    if (it->second) levels.push_back(it->first);
  if (static_cast<int>(levels.size()) < opt.fit_levels)
    throw Error(ErrorCode::insufficient_levels,
                "only " + std::to_string(levels.size()) + " populated levels, the slope fit needs " +
                    std::to_string(opt.fit_levels),
                "insufficient-levels");
  levels.resize(opt.fit_levels);
  std::sort(levels.begin(), levels.end());
  return levels;
}

std::vector<LevelValue> select(const std::vector<LevelValue>& all, const std::vector<int>& levels) {
  std::vector<LevelValue> out;
  for (const auto& v : all)
    if (std::find(levels.begin(), levels.end(), v.level) != levels.end()) out.push_back(v);
  return out;
}

}  // namespace

std::string dimension_kind_name(DimensionKind k) { return k == DimensionKind::loc ? "loc" : "mc-loc"; }

GsResult g_s(const GridDomain& domain, const WhitneyDecomposition& decomp, double s, double clamp) {
  clamp = resolved_clamp(domain, clamp);
  return gs_from_logs(domain, decomp, log_delta(domain, clamp), s, clamp);
}

double growth_slope(const std::vector<LevelValue>& pts) {
  const double n = static_cast<double>(pts.size());
  if (pts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto& p : pts) {
    double x = -static_cast<double>(p.level), y = std::log2(std::max(p.value, 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

DimensionEstimate dim_loc(const GridDomain& domain, const WhitneyDecomposition& decomp, const DimensionOptions& opt) {
  if (opt.fit_levels < 2) throw Error(ErrorCode::config, "fit needs at least two levels", "fit_levels");
  const std::vector<int> levels = fit_window(domain, decomp, opt);
  const double clamp = resolved_clamp(domain, opt.clamp);
  const std::vector<double> logd = log_delta(domain, clamp);
  const double n = domain.dim();
  auto slope_at = [&](double s, GsResult* keep) {
    GsResult r = gs_from_logs(domain, decomp, logd, s, clamp);
    double sl = growth_slope(select(r.per_level, levels));
    if (keep) *keep = std::move(r);
    return sl;
  };
  DimensionEstimate est;
  est.kind = DimensionKind::loc;
  est.threshold = opt.divergence_slope;
  est.fit_levels = levels;
  // coarse scan, then bisection inside the first bracket where the fit turns divergent
  double lo = 0.0, hi = n;
  bool found = false;
  for (int i = 0; i <= opt.scan_points; ++i) {
    double s = n * i / opt.scan_points;
    double sl = slope_at(s, nullptr);
    est.slope_curve.emplace_back(s, sl);
    if (!found && sl > opt.divergence_slope) {
      found = true;
      hi = s;
      lo = i > 0 ? n * (i - 1) / opt.scan_points : 0.0;
    }
  }
  double s0;
  if (!found) {
    s0 = n;
    est.confidence_band = {0.0, 0.0};
  } else if (hi == 0.0) {
    s0 = 0.0;
    est.confidence_band = {n, n};
  } else {
    est.confidence_band = {n - hi, n - lo};
    double a = lo, b = hi;
    for (int it = 0; it < opt.bisection_steps; ++it) {
      double mid = 0.5 * (a + b);
      if (slope_at(mid, nullptr) > opt.divergence_slope)
        b = mid;
      else
        a = mid;
    }
    s0 = 0.5 * (a + b);
  }
  GsResult at;
  est.divergence_slope = slope_at(s0, &at);
  est.per_level_sups = at.per_level;
  est.s0_or_d = s0;
  est.value = n - s0;
  return est;
}

BoxCounts rescaled_box_counts(const GridDomain& domain, const WhitneyDecomposition& decomp,
                              bool respect_feature_scale) {
  const GridShape& shape = domain.shape();
  const int dim = shape.dim;
  const double h = shape.h();
  const double feature = respect_feature_scale ? domain.feature_scale() : 0.0;
  const std::vector<std::uint8_t> boundary = domain.boundary_cells();
  const int jmax = shape.level;
  std::vector<std::vector<std::int64_t>> counts(decomp.size(), std::vector<std::int64_t>(jmax + 1, -1));
  parallel_for(static_cast<std::int64_t>(decomp.size()), [&](std::int64_t q) {
    const auto& r = decomp.enlarged[q];
    const Point lo = r.lo(dim);
    CellBox box = r.cells(shape);
    std::vector<Coord> pts;
    for_each_cell(box, dim, [&](const Coord& c) {
      if (boundary[shape.index(c)]) pts.push_back(c);
    });
    for (int j = 1; j <= jmax; ++j) {
      const double eps = r.side * std::ldexp(1.0, -j);
      // boxes must hold two cells and, for pre-fractals, one generator piece
      if (eps < 2.0 * h || eps < feature) break;
      std::unordered_set<std::int64_t> seen;
      const std::int64_t per_axis = std::int64_t{1} << j;
      for (const Coord& c : pts) {
        std::int64_t key = 0;
        for (int i = dim - 1; i >= 0; --i) {
          auto b = static_cast<std::int64_t>(std::floor((shape.center(c[i]) - lo[i]) / eps));
          key = key * per_axis + std::clamp<std::int64_t>(b, 0, per_axis - 1);
        }
        seen.insert(key);
      }
      counts[q][j] = static_cast<std::int64_t>(seen.size());
    }
  });
  BoxCounts out;
  for (int j = 1; j <= jmax; ++j) {
    std::int64_t best = -1, n = 0;
    for (std::size_t q = 0; q < decomp.size(); ++q)
      if (counts[q][j] >= 0) {
        best = std::max(best, counts[q][j]);
        ++n;
      }
    if (best <= 0) continue;
    out.exponents.push_back(j);
    out.sup_counts.push_back(static_cast<double>(best));
    out.contributors.push_back(n);
  }
  return out;
}

DimensionEstimate dim_mc_loc(const GridDomain& domain, const WhitneyDecomposition& decomp,
                             const DimensionOptions& opt) {
  if (static_cast<int>(decomp.size()) == 0) throw Error(ErrorCode::degenerate, "empty decomposition");
  // the level requirement is shared with dim_loc
  (void)fit_window(domain, decomp, opt);
  BoxCounts bc = rescaled_box_counts(domain, decomp, opt.respect_feature_scale);
  if (static_cast<int>(bc.exponents.size()) < opt.fit_levels)
    throw Error(ErrorCode::insufficient_levels, "too few resolvable box-count scales", "insufficient-levels");
  const std::size_t first = bc.exponents.size() - opt.fit_levels;
  // slope of log2 N_j against j; N_j 2^{-jd} stays bounded iff d >= slope
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = opt.fit_levels;
  for (std::size_t i = first; i < bc.exponents.size(); ++i) {
    double x = bc.exponents[i], y = std::log2(bc.sup_counts[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  const double icpt = (sy - slope * sx) / m;
  double ss = 0.0;
  for (std::size_t i = first; i < bc.exponents.size(); ++i) {
    double r = std::log2(bc.sup_counts[i]) - (icpt + slope * bc.exponents[i]);
    ss += r * r;
  }
  const double se = m > 2 ? std::sqrt(ss / (m - 2) / (sxx - sx * sx / m)) : 0.0;
  DimensionEstimate est;
  est.kind = DimensionKind::mc_loc;
  est.threshold = opt.mc_slope;
  const double n = domain.dim();
  const double d = std::clamp(slope - opt.mc_slope, 0.0, n);
  est.s0_or_d = d;
  est.value = d;
  est.divergence_slope = slope - d;
  est.confidence_band = {std::clamp(d - 2.0 * se, 0.0, n), std::clamp(d + 2.0 * se, 0.0, n)};
  for (std::size_t i = first; i < bc.exponents.size(); ++i) est.fit_levels.push_back(bc.exponents[i]);
  for (std::size_t i = 0; i < bc.exponents.size(); ++i) {
    LevelValue v;
    v.level = bc.exponents[i];
    v.value = bc.sup_counts[i] * std::pow(2.0, -bc.exponents[i] * d);
    v.cubes = bc.contributors[i];
    est.per_level_sups.push_back(v);
  }
  for (int k = 0; k <= opt.scan_points; ++k) {
    double dd = n * k / opt.scan_points;
    est.slope_curve.emplace_back(dd, slope - dd);
  }
  return est;
}

nlohmann::json DimensionEstimate::to_json() const {
  nlohmann::json j;
  j["kind"] = dimension_kind_name(kind);
  j["value"] = value;
  j[kind == DimensionKind::loc ? "s0" : "d"] = s0_or_d;
  j["threshold_slope"] = threshold;
  j["fitted_slope"] = divergence_slope;
  j["confidence_band"] = {confidence_band.first, confidence_band.second};
  j["fit_levels"] = fit_levels;
  nlohmann::json lv = nlohmann::json::array();
  for (const auto& v : per_level_sups) lv.push_back({{"level", v.level}, {"sup", v.value}, {"cubes", v.cubes}});
  j["per_level_sups"] = lv;
  return j;
}

SelfSimilarityReport selfsimilarity_signature(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                              double ball_fraction, double threshold) {
  if (!(ball_fraction > 0.0 && ball_fraction <= 0.5))
    throw Error(ErrorCode::config, "ball_fraction must lie in (0, 1/2]", "ball_fraction");
  const GridShape& shape = domain.shape();
  const int dim = shape.dim;
  const double h = shape.h();
  const double feature = domain.feature_scale();
  constexpr int kScales = 3;
  SelfSimilarityReport rep;
  rep.threshold = threshold;
  rep.components = {"complement_fraction"};
  for (int j = 1; j < kScales; ++j) rep.components.push_back("box_slope_" + std::to_string(j));
  std::vector<std::vector<double>> sig(decomp.size());
  const std::vector<std::uint8_t> boundary = domain.boundary_cells();
  parallel_for(static_cast<std::int64_t>(decomp.size()), [&](std::int64_t q) {
    const auto& r = decomp.enlarged[q];
    const double radius = ball_fraction * r.side;
    // finest box of the signature must hold two cells and one generator piece
    const double finest = 2.0 * radius * std::ldexp(1.0, -kScales);
    if (finest < 2.0 * h || finest < feature) return;
    CellBox box;
    for (int i = 0; i < dim; ++i) {
      // a window onto a larger domain truncates balls reaching past the box
      if (!domain.collar() && (r.center[i] - radius < 0.0 || r.center[i] + radius > 1.0)) return;
      box.lo[i] = static_cast<std::int64_t>(std::ceil((r.center[i] - radius) / h - 0.5));
      box.hi[i] = static_cast<std::int64_t>(std::floor((r.center[i] + radius) / h - 0.5)) + 1;
    }
    std::int64_t total = 0, outside = 0;
    std::vector<std::unordered_set<std::int64_t>> boxes(kScales + 1);
    for_each_cell(box, dim, [&](const Coord& c) {
      double r2 = 0.0;
      for (int i = 0; i < dim; ++i) {
        double d = shape.center(c[i]) - r.center[i];
        r2 += d * d;
      }
      if (r2 > radius * radius) return;
      ++total;
      if (!shape.contains(c)) {
        ++outside;  // collar
        return;
      }
      const std::int64_t idx = shape.index(c);
      if (!domain.inside(idx)) ++outside;
      if (!boundary[idx]) return;
      for (int j = 1; j <= kScales; ++j) {
        const double eps = 2.0 * radius * std::ldexp(1.0, -j);
        const std::int64_t per_axis = std::int64_t{1} << j;
        std::int64_t key = 0;
        for (int i = dim - 1; i >= 0; --i) {
          auto b = static_cast<std::int64_t>(std::floor((shape.center(c[i]) - (r.center[i] - radius)) / eps));
          key = key * per_axis + std::clamp<std::int64_t>(b, 0, per_axis - 1);
        }
        boxes[j].insert(key);
      }
    });
    if (total == 0 || boxes[1].empty()) return;
    std::vector<double> v;
    v.push_back(static_cast<double>(outside) / static_cast<double>(total));
    for (int j = 1; j < kScales; ++j)
      v.push_back(std::log2(static_cast<double>(boxes[j + 1].size()) / static_cast<double>(boxes[j].size())) /
                  static_cast<double>(dim));
    sig[q] = std::move(v);
  });
  // the largest pairwise sup-norm distance is the largest per-component spread
  const std::size_t nc = rep.components.size();
  std::vector<double> mn(nc, std::numeric_limits<double>::infinity()), mx(nc, -std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> amn(nc, -1), amx(nc, -1);
  for (std::size_t q = 0; q < sig.size(); ++q) {
    if (sig[q].empty()) continue;
    ++rep.cubes_compared;
    for (std::size_t c = 0; c < nc; ++c) {
      if (sig[q][c] < mn[c]) {
        mn[c] = sig[q][c];
        amn[c] = static_cast<std::int64_t>(q);
      }
      if (sig[q][c] > mx[c]) {
        mx[c] = sig[q][c];
        amx[c] = static_cast<std::int64_t>(q);
      }
    }
  }
  if (rep.cubes_compared < 2) return rep;
  for (std::size_t c = 0; c < nc; ++c) {
    double spread = mx[c] - mn[c];
    rep.max_discrepancy = std::max(rep.max_discrepancy, spread);
    if (spread > threshold) rep.flagged_pairs.push_back({amn[c], amx[c], rep.components[c], spread});
  }
  rep.consistent = rep.max_discrepancy <= threshold;
  return rep;
}

nlohmann::json SelfSimilarityReport::to_json() const {
  nlohmann::json j;
  j["label"] = label;
  j["max_discrepancy"] = max_discrepancy;
  j["threshold"] = threshold;
  j["consistent"] = consistent;
  j["cubes_compared"] = cubes_compared;
  j["components"] = components;
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : flagged_pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"component", p.component}, {"distance", p.distance}});
  j["flagged_pairs"] = pairs;
  return j;
}

std::string gs_table_csv(const std::vector<GsResult>& rows) {
  std::ostringstream out;
  out.precision(17);
  out << "s,level,sup,cubes\n";
  for (const auto& r : rows)
    for (const auto& v : r.per_level) out << r.s << ',' << v.level << ',' << v.value << ',' << v.cubes << '\n';
  return out.str();
}

std::string box_count_csv(const BoxCounts& counts) {
  std::ostringstream out;
  out.precision(17);
  out << "j,eps,sup_count,cubes\n";
  for (std::size_t i = 0; i < counts.exponents.size(); ++i)
    out << counts.exponents[i] << ',' << std::ldexp(1.0, -counts.exponents[i]) << ',' << counts.sup_counts[i] << ','
        << counts.contributors[i] << '\n';
  return out.str();
}

}  // namespace hardylab
