#include "hardylab/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <Eigen/Dense>

#include "hardylab/dimension.hpp"
#include "hardylab/error.hpp"
#include "hardylab/norms.hpp"
#include "hardylab/parallel.hpp"
#include "hardylab/random.hpp"
#include "variational.hpp"

namespace hardylab {

namespace {

using detail::NormTerm;
using detail::RatioProblem;
using detail::Vec;

constexpr double kInf = std::numeric_limits<double>::infinity();

nlohmann::json num(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
}

double bracket(double p, double p1) { return std::max(p, p1); }

// Distance used by the quotients: the floored boundary distance plus a shift on
// inside cells, zero on complement cells. Zero-extended grid functions vanish
// at complement cell centers, half a cell beyond the boundary, so a half-cell
// shift makes weight and test space agree.
std::vector<double> weight_distance(const GridDomain& domain, double shift_cells) {
  std::vector<double> w(domain.delta().size());
  const double fl = domain.delta_floor(), sh = shift_cells * domain.h();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = domain.inside(static_cast<std::int64_t>(i)) ? std::max(domain.delta()[i], fl) + sh : 0.0;
  return w;
}

// Distance at the center of the forward-difference block x + {0..order}^N,
// which is where an order-th difference based at x lives; one value per point
// of the zero-extension position box. Base-cell distances bias the quotient
// once s != 0.
std::vector<double> stencil_distance(const GridDomain& domain, const std::vector<double>& dist, int order) {
  const auto& shape = domain.shape();
  const int dim = shape.dim;
  const CellBox pos = position_box(shape, order, BoundaryPolicy::zero_extension);
  CellBox block;
  for (int i = 0; i < dim; ++i) block.hi[i] = order + 1;
  std::vector<double> out;
  out.reserve(pos.count(dim));
  for_each_cell(pos, dim, [&](const Coord& x) {
    double acc = 0.0;
    int cnt = 0;
    for_each_cell(block, dim, [&](const Coord& o) {
      Coord y = x;
      bool in = true;
      for (int i = 0; i < dim; ++i) {
        y[i] += o[i];
        if (y[i] < 0 || y[i] >= shape.side()) in = false;
      }
      ++cnt;
      if (!in) {
        if (domain.collar()) return;  // collar cells are complement, distance 0
        for (int i = 0; i < dim; ++i) y[i] = std::clamp<std::int64_t>(y[i], 0, shape.side() - 1);
      }
      acc += dist[shape.index(y)];
    });
    out.push_back(acc / cnt);
  });
  return out;
}

std::vector<double> stencil_weights(const GridDomain& domain, const std::vector<double>& dist, int order, double e) {
  auto d = stencil_distance(domain, dist, order);
  // A block entirely in the complement carries no free values.
  for (auto& v : d) v = e == 0.0 ? 1.0 : (v > 0.0 ? std::pow(v, e) : 0.0);
  return d;
}

// Stencil distance of the positions that are grid cells, indexed like cells.
std::vector<double> cell_positions(const GridDomain& domain, const std::vector<double>& sd, int order) {
  const auto& shape = domain.shape();
  const CellBox pos = position_box(shape, order, BoundaryPolicy::zero_extension);
  std::vector<double> out(shape.size(), 0.0);
  std::int64_t r = 0;
  for_each_cell(pos, shape.dim, [&](const Coord& x) {
    if (shape.contains(x)) out[shape.index(x)] = sd[r];
    ++r;
  });
  return out;
}

}  // namespace

std::string case_name(HardyCase c) {
  switch (c) {
    case HardyCase::A: return "A";
    case HardyCase::B: return "B";
    case HardyCase::C: return "C";
    case HardyCase::D: return "D";
    case HardyCase::E: return "E";
  }
  return "?";
}

std::string form_name(HardyForm f) { return f == HardyForm::holder ? "holder" : "integral"; }

HardyCase parse_case(const std::string& s) {
  if (s == "A" || s == "a") return HardyCase::A;
  if (s == "B" || s == "b") return HardyCase::B;
  if (s == "C" || s == "c") return HardyCase::C;
  if (s == "D" || s == "d") return HardyCase::D;
  if (s == "E" || s == "e") return HardyCase::E;
  throw Error(ErrorCode::config, "unknown case '" + s + "'", "case");
}

double HardyParams::local_exponent() const {
  return (hcase == HardyCase::B || hcase == HardyCase::D) ? p0 : p;
}

nlohmann::json HardyParams::to_json() const {
  nlohmann::json j;
  j["case"] = case_name(hcase);
  j["form"] = form_name(form);
  j["m"] = m;
  j["k"] = k;
  j["h"] = h;
  j["p"] = p;
  j["p1"] = p1;
  j["q"] = q;
  j["s"] = s;
  j["lambda"] = lambda;
  j["p0"] = p0;
  j["cone"] = cone;
  j["theta_a0"] = theta_a0;
  j["capacity_level"] = capacity_level;
  j["seed"] = seed;
  return j;
}

WeightExponents weight_exponents(const HardyParams& prm, int N) {
  if (N < 1 || N > kMaxDim) throw Error(ErrorCode::config, "dimension must be 1, 2 or 3");
  if (prm.m < 1) throw Error(ErrorCode::precondition, "m must be at least 1", "m");
  if (prm.k < 0 || prm.k > prm.m - 1) throw Error(ErrorCode::precondition, "need 0 <= k <= m-1", "k");
  if (!(prm.p >= 1.0)) throw Error(ErrorCode::precondition, "need p >= 1", "p");
  if (!(prm.p1 > 0.0)) throw Error(ErrorCode::precondition, "need p1 > 0", "p1");
  const double Nd = N;
  WeightExponents e;
  e.s1 = -(prm.m - prm.k - 1) * prm.p1 - Nd + (prm.p1 / prm.p) * (prm.s + Nd);
  if (prm.form == HardyForm::holder) {
    const double mh = prm.m - prm.h;
    if (!(mh * prm.p > Nd && Nd > (mh - 1) * prm.p))
      throw Error(ErrorCode::precondition, "need (m-h)p > N > (m-h-1)p", "holder (i)");
    if (!(prm.lambda > 0.0 && prm.lambda <= mh - Nd / prm.p))
      throw Error(ErrorCode::precondition, "need 0 < lambda <= m-h-N/p", "holder (ii)");
    if (!(prm.lambda < 1.0)) throw Error(ErrorCode::precondition, "need lambda < 1", "holder (iii)");
    e.t = mh - prm.lambda - (prm.s + Nd) / prm.p;
    return e;
  }
  const double mp = prm.m * prm.p;
  if (!(prm.q > 0.0)) throw Error(ErrorCode::precondition, "need q > 0", "integral (i)");
  if (Nd > mp) {
    if (prm.q > prm.p * Nd / (Nd - mp))
      throw Error(ErrorCode::precondition, "need q <= pN/(N-mp) when N > mp", "integral (i)");
  } else if (Nd == mp) {
    if (!std::isfinite(prm.q)) throw Error(ErrorCode::precondition, "need q < inf when N = mp", "integral (iii)");
  }
  e.t = prm.m * prm.q - (prm.q / prm.p - 1.0) * Nd - (prm.q / prm.p) * prm.s;
  return e;
}

// ---------------------------------------------------------------- direct

nlohmann::json DirectEstimate::to_json() const {
  nlohmann::json j;
  j["ratio"] = num(ratio);
  j["constant"] = num(constant);
  j["residual"] = residual;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["method"] = method;
  j["level"] = level;
  return j;
}

namespace {

std::vector<Vec> direct_starts(const GridDomain& domain, const detail::FreeMap& free, int random, std::uint64_t seed,
                               bool cone) {
  const auto& shape = domain.shape();
  std::vector<Vec> starts;
  // Powers of the distance favour concentration near the boundary.
  for (double e : {0.5, 1.0, 2.0}) {
    Vec v(free.size());
    for (std::int64_t j = 0; j < free.size(); ++j)
      v[j] = std::pow(std::max(domain.delta()[free.cell_of_var[j]], domain.delta_floor()), e);
    starts.push_back(v);
  }
  Rng rng(seed);
  for (int r = 0; r < random; ++r) {
    std::vector<double> cell(shape.size(), 0.0);
    for (auto idx : free.cell_of_var) cell[idx] = rng.uniform(-1.0, 1.0);
    for (int pass = 0; pass < 4; ++pass) {
      std::vector<double> next(cell.size(), 0.0);
      for (auto idx : free.cell_of_var) {
        Coord c = shape.coord(idx);
        double sum = cell[idx];
        int cnt = 1;
        for (int i = 0; i < shape.dim; ++i)
          for (int d : {-1, 1}) {
            Coord n = c;
            n[i] += d;
            if (!shape.contains(n)) continue;
            sum += cell[shape.index(n)];
            ++cnt;
          }
        next[idx] = sum / cnt;
      }
      cell = std::move(next);
    }
    Vec v(free.size());
    for (std::int64_t j = 0; j < free.size(); ++j) v[j] = cell[free.cell_of_var[j]];
    if (cone) v = v.cwiseAbs();
    starts.push_back(v);
  }
  return starts;
}

}  // namespace

DirectEstimate direct_best_constant(const GridDomain& domain, const HardyParams& prm, const DirectOptions& opt) {
  if (prm.form != HardyForm::integral) throw Error(ErrorCode::precondition, "direct estimate needs the integral form", "form");
  if (prm.q != prm.p) throw Error(ErrorCode::precondition, "direct estimate needs q = p", "q");
  if (!(prm.p >= 1.0)) throw Error(ErrorCode::precondition, "need p >= 1", "p");
  const auto& shape = domain.shape();
  if (shape.side() < 2 * (prm.m + 1)) throw Error(ErrorCode::config, "grid too coarse for the gradient order", "level");
  detail::FreeMap free = detail::make_free_map(domain.mask());
  if (free.size() == 0) throw Error(ErrorCode::degenerate, "domain has no inside cells");

  const auto dist = weight_distance(domain, opt.distance_shift_cells);
  const auto policy = BoundaryPolicy::zero_extension;
  RatioProblem prob;
  prob.numerator = detail::make_term(shape, 0, prm.p, policy,
                                     stencil_weights(domain, dist, 0, prm.s - prm.m * prm.p), free);
  prob.denominator.emplace_back(
      1.0, detail::make_term(shape, prm.m, prm.p, policy,
                             stencil_weights(domain, dist, prm.m, prm.s), free));
  prob.cone = prm.cone;

  DirectEstimate out;
  out.level = shape.level;
  detail::RatioSolution sol;
  if (detail::eigen_applicable(prob)) {
    sol = detail::minimize_ratio_eigen(prob, {});
    out.method = "generalized-eigen";
    if (!sol.positive_definite) throw Error(ErrorCode::solver, "gradient form is not positive definite");
  } else {
    detail::DescentOptions dopt;
    dopt.max_iterations = opt.max_iterations;
    sol = detail::minimize_ratio_descent(prob, direct_starts(domain, free, opt.random_starts, prm.seed, prm.cone),
                                         dopt);
    out.method = "multistart-descent";
  }
  if (!(sol.value > 0.0) || !std::isfinite(sol.value))
    throw Error(ErrorCode::solver, "direct estimate did not produce a finite quotient");
  out.constant = 1.0 / sol.value;
  out.ratio = std::pow(out.constant, prm.p);
  out.residual = sol.residual;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.maximizer.assign(shape.size(), 0.0);
  Vec u = prm.cone ? Vec(sol.u.cwiseAbs()) : sol.u;
  const double scale = u.cwiseAbs().maxCoeff();
  for (std::int64_t j = 0; j < free.size(); ++j)
    out.maximizer[free.cell_of_var[j]] = scale > 0 ? u[j] / scale : 0.0;
  return out;
}

nlohmann::json RefinementStudy::to_json() const {
  nlohmann::json j;
  j["levels"] = levels;
  j["ratios"] = ratios;
  j["extrapolated"] = num(extrapolated);
  j["fit"] = {{"model", "1/ratio = mu + c/(L+b)^2"}, {"c", fit_c}, {"b", fit_b}, {"rms", fit_rms}};
  return j;
}

RefinementStudy refine_direct(const DomainSpec& spec, const HardyParams& prm, const std::vector<int>& levels,
                              const DirectOptions& opt) {
  RefinementStudy st;
  for (int L : levels) {
    DomainSpec sp = spec;
    sp.level = L;
    GridDomain d = rasterize(sp);
    st.levels.push_back(L);
    st.ratios.push_back(direct_best_constant(d, prm, opt).ratio);
  }
  const std::size_t n = st.levels.size();
  if (n < 3) {
    st.extrapolated = n ? st.ratios.back() : 0.0;
    return st;
  }
  // Truncating the Hardy quotient at distance eps moves the bottom of the
  // spectrum by about pi^2/log^2(eps), so 1/ratio is fitted as
  // mu + c/(L+b)^2; for fixed b the model is linear in (mu, c).
  double best = kInf;
  for (int ib = 0; ib <= 400; ++ib) {
    const double b = -0.9 * st.levels.front() + 0.1 * ib;
    Eigen::MatrixXd X(n, 2);
    Eigen::VectorXd y(n);
    bool ok = true;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = st.levels[i] + b;
      if (z <= 0.5) ok = false;
      X(i, 0) = 1.0;
      X(i, 1) = 1.0 / (z * z);
      y[i] = 1.0 / st.ratios[i];
    }
    if (!ok) continue;
    Eigen::Vector2d coef = X.colPivHouseholderQr().solve(y);
    const double rms = std::sqrt((X * coef - y).squaredNorm() / n);
    if (coef[1] >= 0.0 && coef[0] > 0.0 && rms < best) {
      best = rms;
      st.extrapolated = 1.0 / coef[0];
      st.fit_c = coef[1];
      st.fit_b = b;
      st.fit_rms = rms;
    }
  }
  if (!std::isfinite(best)) st.extrapolated = st.ratios.back();
  return st;
}


// ---------------------------------------------------------------- weights on cubes

double LsWeightFunction::norm() const {
  if (!(sequence_exponent > 0.0)) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += std::pow(std::abs(v), sequence_exponent);
  return std::pow(acc, 1.0 / sequence_exponent);
}

LsWeightFunction LsWeightFunction::equidistributed(std::size_t cubes, const std::vector<std::int64_t>& support,
                                                   const HardyParams& prm) {
  LsWeightFunction f;
  f.conjugate = bracket(prm.p, prm.p1) / prm.q;
  if (!(f.conjugate > 1.0))
    throw Error(ErrorCode::precondition, "the sequence weight is only used when q < max(p, p1)", "q<[p,p1]");
  f.sequence_exponent = f.conjugate / (f.conjugate - 1.0);
  if (support.empty()) throw Error(ErrorCode::config, "empty support for the sequence weight");
  f.values.assign(cubes, 0.0);
  const double v = std::pow(static_cast<double>(support.size()), -1.0 / f.sequence_exponent);
  for (auto q : support) {
    if (q < 0 || static_cast<std::size_t>(q) >= cubes) throw Error(ErrorCode::config, "cube index out of range");
    f.values[q] = v;
  }
  return f;
}

// ---------------------------------------------------------------- capacity field

int default_capacity_level(int dim) { return dim == 1 ? 6 : (dim == 2 ? 4 : 3); }

ConstraintSet rescaled_constraint(const GridDomain& domain, const WhitneyDecomposition& decomp, std::size_t q,
                                  int grid_level, bool cone) {
  const int dim = domain.dim();
  GridShape g{dim, grid_level};
  const RescaleMap rm = rescale_map(decomp.enlarged[q], dim);
  const double n = static_cast<double>(g.side());
  const double inv_h = 1.0 / domain.h();
  std::vector<std::uint8_t> K(g.size(), 0);
  for (std::int64_t idx = 0; idx < g.size(); ++idx) {
    Coord c = g.coord(idx);
    Point y{0, 0, 0};
    for (int i = 0; i < dim; ++i) y[i] = (static_cast<double>(c[i]) + 0.5) / n;
    Point x = rm.inverse(y);
    Coord dc{0, 0, 0};
    for (int i = 0; i < dim; ++i) dc[i] = static_cast<std::int64_t>(std::floor(x[i] * inv_h));
    K[idx] = domain.inside(dc) ? 0 : 1;
  }
  return ConstraintSet::from_mask(dim, grid_level, std::move(K), cone);
}

std::vector<double> CapacityField::values() const {
  std::vector<double> v;
  v.reserve(cubes.size());
  for (const auto& c : cubes) v.push_back(c.capacity);
  return v;
}

nlohmann::json CapacityField::to_json() const {
  nlohmann::json j;
  j["flavor"] = flavor_name(flavor);
  j["exponent"] = exponent;
  j["grid_level"] = grid_level;
  if (flavor == CapacityFlavor::theta) j["theta_a0"] = theta_a0;
  j["distinct_sets"] = distinct_sets;
  j["min_capacity"] = num(min_capacity);
  j["max_capacity"] = num(max_capacity);
  j["degenerate_cubes"] = degenerate_cubes;
  return j;
}

namespace {

struct FieldSpec {
  CapacityFlavor flavor = CapacityFlavor::gamma;
  int m = 1, k = 0;
  double p = 2.0, p1 = 2.0;
};

FieldSpec field_spec(const HardyParams& prm) {
  FieldSpec f;
  f.m = prm.m;
  f.k = prm.k;
  f.p = prm.local_exponent();
  f.p1 = prm.p1;
  switch (prm.hcase) {
    case HardyCase::A:
    case HardyCase::B: f.flavor = CapacityFlavor::gamma; break;
    case HardyCase::C:
    case HardyCase::D: f.flavor = CapacityFlavor::theta; break;
    case HardyCase::E:
      f.flavor = CapacityFlavor::gamma;
      f.k = prm.m - 1;
      f.p1 = prm.p;
      break;
  }
  return f;
}

void check_case_exponents(const HardyParams& prm) {
  if (prm.hcase == HardyCase::B || prm.hcase == HardyCase::D) {
    if (!(prm.p0 >= 1.0 && prm.p0 < prm.p))
      throw Error(ErrorCode::hypothesis, "need 1 <= p0 < p", "case " + case_name(prm.hcase) + " p0");
  }
}

// Local Poincaré constant used in the assembly: the Gamma constant, or for
// Theta max(best, A0) since ||u|| <= best ||grad^m u|| + A0 ||grad^{k+1} u||.
double local_constant(const CapacityField& field, const CubeCapacity& c) {
  if (c.status == CapacityStatus::unbounded) return kInf;
  if (field.flavor == CapacityFlavor::theta) return std::max(c.best_constant, field.theta_a0);
  return c.best_constant;
}

}  // namespace

CapacityField per_cube_capacity_field(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                      const HardyParams& prm) {
  check_case_exponents(prm);
  const FieldSpec fs = field_spec(prm);
  CapacityField field;
  field.flavor = fs.flavor;
  field.exponent = fs.p;
  field.grid_level = prm.capacity_level > 0 ? prm.capacity_level : default_capacity_level(domain.dim());
  const std::size_t n = decomp.size();
  field.cubes.resize(n);
  std::vector<ConstraintSet> sets(n);
  parallel_for(static_cast<std::int64_t>(n), [&](std::int64_t q) {
    sets[q] = rescaled_constraint(domain, decomp, static_cast<std::size_t>(q), field.grid_level, prm.cone);
  });
  // Congruent local pictures share one solve.
  std::map<std::uint64_t, std::size_t> first;
  std::vector<std::size_t> reps;
  std::vector<std::size_t> rep_of(n);
  for (std::size_t q = 0; q < n; ++q) {
    const std::uint64_t key = sets[q].hash();
    auto it = first.find(key);
    if (it == first.end()) {
      first.emplace(key, reps.size());
      rep_of[q] = reps.size();
      reps.push_back(q);
    } else {
      rep_of[q] = it->second;
    }
  }
  field.distinct_sets = static_cast<std::int64_t>(reps.size());
  std::vector<CapacityResult> results(reps.size());
  std::vector<std::uint8_t> empty(reps.size(), 0);
  SolverOptions sopt;
  sopt.seed = prm.seed;
  parallel_for(static_cast<std::int64_t>(reps.size()), [&](std::int64_t r) {
    const ConstraintSet& c = sets[reps[r]];
    if (c.zero_count() == 0) {
      empty[r] = 1;
      return;
    }
    results[r] = fs.flavor == CapacityFlavor::gamma
                     ? gamma_capacity(c, fs.m, fs.k, fs.p, fs.p1, sopt)
                     : theta_capacity(c, fs.m, fs.k, fs.p, fs.p1, prm.theta_a0, sopt);
  });
  if (fs.flavor == CapacityFlavor::theta)
    field.theta_a0 = prm.theta_a0 > 0.0 ? prm.theta_a0
                                        : default_theta_a0(domain.dim(), field.grid_level, fs.k, fs.p1);
  field.min_capacity = kInf;
  field.max_capacity = 0.0;
  std::vector<std::uint8_t> seen(reps.size(), 0);
  for (std::size_t q = 0; q < n; ++q) {
    CubeCapacity& cc = field.cubes[q];
    const std::size_t r = rep_of[q];
    cc.cube = static_cast<std::int64_t>(q);
    cc.level = decomp.cubes[q].level;
    cc.key = sets[q].hash();
    cc.zero_cells = sets[q].zero_count();
    cc.cached = seen[r] != 0;
    seen[r] = 1;
    if (empty[r]) {
      // No constraint: polynomials are admissible and the capacity vanishes.
      cc.status = CapacityStatus::unbounded;
      cc.capacity = 0.0;
      cc.best_constant = kInf;
    } else {
      cc.status = results[r].status;
      cc.capacity = results[r].capacity;
      cc.best_constant = results[r].best_constant;
    }
    cc.lambda1 = fs.flavor == CapacityFlavor::theta ? cc.capacity : 1.0;
    if (!(cc.capacity > 0.0)) ++field.degenerate_cubes;
    field.min_capacity = std::min(field.min_capacity, cc.capacity);
    field.max_capacity = std::max(field.max_capacity, cc.capacity);
  }
  if (n == 0) field.min_capacity = 0.0;
  return field;
}

// ---------------------------------------------------------------- constructive bound

void HardyBoundReport::attach_direct(double estimate) {
  direct_estimate = estimate;
  const double bound = one_term_constant ? *one_term_constant : constant_A;
  sound = bound >= estimate;
}

nlohmann::json HardyBoundReport::to_json() const {
  nlohmann::json j;
  j["case"] = case_name(hcase);
  j["form"] = form_name(form);
  j["params"] = params.to_json();
  j["exponents"] = {{"t", exponents.t}, {"s1", exponents.s1}};
  j["constant_A"] = num(constant_A);
  j["low_term_constant"] = num(low_term_constant);
  j["high_term_constant"] = num(high_term_constant);
  j["one_term_constant"] = one_term_constant ? num(*one_term_constant) : nlohmann::json(nullptr);
  j["summation_constant"] = num(summation_constant);
  j["summation_measured"] = num(summation_measured);
  j["sigma"] = sigma;
  nlohmann::json fac = nlohmann::json::array();
  for (const auto& f : factors) fac.push_back({{"name", f.name}, {"value", num(f.value)}, {"note", f.note}});
  j["factors"] = fac;
  j["capacity_field"] = field.to_json();
  nlohmann::json cubes = nlohmann::json::array();
  for (const auto& c : field.cubes)
    cubes.push_back({{"cube", c.cube},
                     {"level", c.level},
                     {"zero_cells", c.zero_cells},
                     {"status", status_name(c.status)},
                     {"lambda", num(c.capacity)},
                     {"lambda1", num(c.lambda1)},
                     {"local_constant", num(c.best_constant)},
                     {"cached", c.cached}});
  j["per_cube"] = cubes;
  j["direct_estimate"] = direct_estimate ? num(*direct_estimate) : nlohmann::json(nullptr);
  j["sound"] = sound;
  j["degenerate"] = degenerate;
  j["notes"] = notes;
  return j;
}

std::string HardyBoundReport::provenance_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind,name,value,note\n";
  for (const auto& f : factors) os << "factor," << f.name << ',' << f.value << ",\"" << f.note << "\"\n";
  os << "total,constant_A," << constant_A << ",\n";
  if (one_term_constant) os << "total,one_term_constant," << *one_term_constant << ",\n";
  os << "total,summation_measured," << summation_measured << ",\n";
  for (const auto& c : field.cubes)
    os << "cube," << c.cube << ',' << c.capacity << ",\"level " << c.level << ' ' << status_name(c.status) << "\"\n";
  return os.str();
}

namespace {

struct CubeGeometry {
  double gamma = 0.0;      // side of R_Q
  double diam = 0.0;
  double lhs_weight = 0.0; // max over Q of dist^{-t/q}
  double low_weight = 0.0; // max over Q of dist^{-s1/p1}
  double rhs_weight = 0.0; // max over R_Q of dist^{-s/p}, Hölder form
  double holder_g = 0.0;   // dist-integral of the Hölder defect, normalized
};

CellBox unit_box_of_cube(const WhitneyDecomposition& decomp, std::size_t q, int grid_level) {
  const int dim = decomp.shape.dim;
  const RescaleMap rm = rescale_map(decomp.enlarged[q], dim);
  const CellBox qb = decomp.cubes[q].cells(decomp.shape.level);
  const double h = decomp.shape.h();
  const double n = std::ldexp(1.0, grid_level);
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    lo[i] = static_cast<double>(qb.lo[i]) * h;
    hi[i] = static_cast<double>(qb.hi[i]) * h;
  }
  Point a = rm.forward(lo), b = rm.forward(hi);
  CellBox out;
  for (int i = 0; i < dim; ++i) {
    out.lo[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(a[i] * n - 0.5)), 0,
                                         static_cast<std::int64_t>(n));
    out.hi[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(b[i] * n - 0.5)) + 1, 0,
                                         static_cast<std::int64_t>(n));
    if (out.hi[i] <= out.lo[i]) {
      // Q thinner than a unit-grid cell: take the cell holding its center.
      const auto c = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(0.5 * (a[i] + b[i]) * n)), 0,
                                              static_cast<std::int64_t>(n) - 1);
      out.lo[i] = c;
      out.hi[i] = c + 1;
    }
  }
  return out;
}

// sup over admissible u of the pointwise Hölder quotient of grad^h u on the
// cells of sub, divided by 2||grad^m u||_2 on the unit grid. For p = 2 the sup
// of one difference functional l is its dual norm sqrt(l' S^{-1} l).
double holder_local_constant(const ConstraintSet& c, int m, int h, double lambda, const CellBox& sub,
                             double radius_cells) {
  if (admits_polynomial(c, m - 1)) return kInf;
  const GridShape& g = c.grid;
  const int dim = g.dim;
  std::vector<std::uint8_t> freem(g.size(), 1);
  for (std::int64_t i = 0; i < g.size(); ++i)
    if (!c.K.empty() && c.K[i]) freem[i] = 0;
  detail::FreeMap free = detail::make_free_map(freem);
  NormTerm top = detail::make_term(g, m, 2.0, BoundaryPolicy::none, {}, free);
  detail::SpMat S = top.quadratic_form();
  Eigen::SimplicialLDLT<detail::SpMat> ldlt(S);
  if (ldlt.info() != Eigen::Success) return kInf;
  NormTerm low = detail::make_term(g, h, 2.0, BoundaryPolicy::none, {}, free);
  const CellBox pos = position_box(g, h, BoundaryPolicy::none);
  auto row_of = [&](const Coord& x) {
    std::int64_t r = 0, stride = 1;
    for (int i = 0; i < dim; ++i) {
      r += (x[i] - pos.lo[i]) * stride;
      stride *= pos.hi[i] - pos.lo[i];
    }
    return r;
  };
  const auto rad = static_cast<std::int64_t>(std::floor(radius_cells));
  std::vector<Coord> offsets;
  CellBox ob;
  for (int i = 0; i < dim; ++i) {
    ob.lo[i] = -rad;
    ob.hi[i] = rad + 1;
  }
  for_each_cell(ob, dim, [&](const Coord& e) {
    double d2 = 0.0;
    for (int i = 0; i < dim; ++i) d2 += static_cast<double>(e[i] * e[i]);
    if (d2 > 0.0 && d2 <= radius_cells * radius_cells) offsets.push_back(e);
  });
  const double n = static_cast<double>(g.side());
  double best = 0.0;
  const auto alphas = multi_indices(dim, h);
  for (std::size_t a = 0; a < alphas.size(); ++a) {
    detail::SpMat rows = low.diff[a];
    Eigen::SparseMatrix<double, Eigen::RowMajor> R(rows);
    for_each_cell(sub, dim, [&](const Coord& x) {
      if (!stencil_defined(g, x, alphas[a], BoundaryPolicy::none)) return;
      for (const auto& e : offsets) {
        Coord y = x;
        double d2 = 0.0;
        for (int i = 0; i < dim; ++i) {
          y[i] += e[i];
          d2 += static_cast<double>(e[i] * e[i]);
        }
        if (!g.contains(y) || !stencil_defined(g, y, alphas[a], BoundaryPolicy::none)) continue;
        Vec l = Vec(R.row(row_of(x)).transpose()) - Vec(R.row(row_of(y)).transpose());
        if (l.squaredNorm() == 0.0) continue;
        const double dist = std::sqrt(d2) / n;
        Vec z = ldlt.solve(l);
        best = std::max(best, std::sqrt(std::max(0.0, l.dot(z))) / std::pow(dist, lambda));
      }
    });
  }
  return 0.5 * best;
}

}  // namespace

HardyBoundReport constructive_bound(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const HardyParams& prm, const BoundOptions& opt) {
  CapacityField field = per_cube_capacity_field(domain, decomp, prm);
  return constructive_bound(domain, decomp, prm, field, opt);
}

HardyBoundReport constructive_bound(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const HardyParams& prm, const CapacityField& field, const BoundOptions& opt) {
  const int N = domain.dim();
  const double Nd = N;
  if (prm.hcase == HardyCase::E)
    throw Error(ErrorCode::precondition, "Case E goes through the exponent shift", "case E");
  check_case_exponents(prm);
  if (field.cubes.size() != decomp.size()) throw Error(ErrorCode::config, "capacity field does not match the decomposition");
  HardyBoundReport rep;
  rep.hcase = prm.hcase;
  rep.form = prm.form;
  rep.params = prm;
  rep.exponents = weight_exponents(prm, N);
  rep.field = field;
  const double p = prm.p, pL = prm.local_exponent(), p1 = prm.p1, q = prm.q, s = prm.s;
  const double t = rep.exponents.t, s1 = rep.exponents.s1;
  const bool case_bd = prm.hcase == HardyCase::B || prm.hcase == HardyCase::D;

  // Case clauses.
  double a_aux = 0.0, s_prime = 0.0;
  if (!case_bd) {
    if (!(s < 0.0))
      throw Error(ErrorCode::hypothesis, "needs s < 0", "case " + case_name(prm.hcase) + " (ii)");
  } else {
    double dl = 0.0;
    if (opt.dim_loc) {
      dl = *opt.dim_loc;
    } else {
      dl = dim_loc(domain, decomp).value;
    }
    rep.notes.push_back("dim_loc = " + std::to_string(dl));
    if (!(dl < Nd)) throw Error(ErrorCode::hypothesis, "needs dim_loc < N", "case " + case_name(prm.hcase) + " dim_loc<N");
    const double slack = (p - pL) / pL * (Nd - dl) - s;
    if (!(slack > 0.0))
      throw Error(ErrorCode::hypothesis, "needs s < (p-p0)/p0 (N - dim_loc)", "case " + case_name(prm.hcase) + " s-range");
    a_aux = 0.5 * slack;
    s_prime = (s + a_aux) * pL / (p - pL);
  }
  const bool f_branch = prm.form == HardyForm::integral && q < bracket(p, p1);
  if (f_branch) {
    if (!opt.f) throw Error(ErrorCode::precondition, "q < max(p, p1) needs the sequence weight f", "f");
    if (opt.f->values.size() != decomp.size()) throw Error(ErrorCode::config, "f has the wrong number of cubes");
    if (std::abs(opt.f->norm() - 1.0) > 1e-9) throw Error(ErrorCode::precondition, "f must have unit norm", "f-norm");
    for (double v : opt.f->values)
      if (v < 0.0 || v > 1.0) throw Error(ErrorCode::precondition, "f must take values in [0,1]", "f-range");
    rep.notes.push_back("LHS weighted by f(Q); Hölder for sums with exponent max(p,p1)/q");
  }
  const int k = prm.k, m = prm.m;
  const bool merge = k == m - 1 && p1 <= pL;
  if (k == m - 1 && !merge)
    throw Error(ErrorCode::precondition, "k = m-1 with p1 above the local exponent is not assembled", "p1<=p_local");
  if (prm.form == HardyForm::holder && !(p == 2.0 && pL == 2.0 && merge))
    throw Error(ErrorCode::precondition, "the Hölder form is assembled for p = p1 = 2 and k = m-1 only", "holder p=2");

  rep.sigma = case_bd ? a_aux : -s;
  const double sigma = rep.sigma;
  const auto dist = weight_distance(domain, 0.5);
  const auto& shape = domain.shape();
  const std::size_t nq = decomp.size();
  // Gradient positions carry the stencil-center distance.
  const auto pdist = cell_positions(domain, stencil_distance(domain, dist, m), m);

  // Per-cube geometry.
  std::vector<CubeGeometry> geo(nq);
  std::vector<long double> integrand;
  PrefixSum holder_sum;
  if (case_bd) {
    integrand.assign(shape.size(), 0.0L);
    for (std::int64_t i = 0; i < shape.size(); ++i)
      if (pdist[i] > 0.0) integrand[i] = std::pow(static_cast<long double>(pdist[i]), -s_prime) * shape.cell_volume();
    holder_sum = PrefixSum(shape, integrand);
  }
  parallel_for(static_cast<std::int64_t>(nq), [&](std::int64_t qi) {
    CubeGeometry& g = geo[qi];
    g.gamma = decomp.enlarged[qi].side;
    g.diam = decomp.diam(qi);
    double lw = 0.0, low = 0.0;
    for_each_cell(decomp.cubes[qi].cells(shape.level), N, [&](const Coord& c) {
      const double d = dist[shape.index(c)];
      lw = std::max(lw, std::pow(d, -t / (prm.form == HardyForm::holder ? 1.0 : q)));
      low = std::max(low, std::pow(d, -s1 / p1));
    });
    g.lhs_weight = lw;
    g.low_weight = low;
    const CellBox rb = decomp.enlarged[qi].cells(shape);
    double rw = 0.0;
    for_each_cell(rb, N, [&](const Coord& c) {
      const double d = pdist[shape.index(c)];
      if (d > 0.0) rw = std::max(rw, std::pow(d, -s / p));
    });
    g.rhs_weight = rw;
    if (case_bd) {
      const double integral = static_cast<double>(holder_sum.sum(rb));
      g.holder_g = integral * std::pow(g.diam, s_prime - Nd);
    }
  });

  // Local constants and their maxima.
  double cap_factor = 0.0;
  for (const auto& c : field.cubes) cap_factor = std::max(cap_factor, local_constant(field, c));
  rep.degenerate = field.degenerate_cubes > 0 || !std::isfinite(cap_factor);
  if (rep.degenerate)
    rep.notes.push_back("capacity-degenerate: " + std::to_string(field.degenerate_cubes) +
                        " cubes with Lambda = 0, the weighted LHS vanishes there");

  if (prm.form == HardyForm::holder) {
    // Sup over cubes: no summation step.
    std::map<std::pair<std::uint64_t, std::array<std::int64_t, 6>>, double> cache;
    double mq = 0.0, dil = 0.0;
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const CellBox sub = unit_box_of_cube(decomp, qi, field.grid_level);
      std::array<std::int64_t, 6> key{sub.lo[0], sub.lo[1], sub.lo[2], sub.hi[0], sub.hi[1], sub.hi[2]};
      auto ck = std::make_pair(field.cubes[qi].key, key);
      auto it = cache.find(ck);
      double M = 0.0;
      if (it != cache.end()) {
        M = it->second;
      } else {
        ConstraintSet c = rescaled_constraint(domain, decomp, qi, field.grid_level, false);
        M = c.zero_count() == 0 ? kInf : holder_local_constant(c, m, prm.h, prm.lambda, sub, 2.0);
        cache.emplace(ck, M);
      }
      mq = std::max(mq, M);
      const auto& g = geo[qi];
      dil = std::max(dil, g.lhs_weight * std::pow(g.gamma, m - Nd / p - prm.h - prm.lambda) * g.rhs_weight);
    }
    rep.factors.push_back({"holder_poincare", mq, "sup over cubes of the Hölder-LHS local constant (dual norms, p = 2)"});
    rep.factors.push_back({"dilation", dil, "max over cubes of the weight and gamma powers of the dilation table"});
    rep.factors.push_back({"summation", 1.0, "sup over cubes, no summation"});
    rep.summation_constant = 1.0;
    rep.summation_measured = 1.0;
    rep.high_term_constant = mq * dil;
    rep.constant_A = rep.high_term_constant;
    rep.one_term_constant = rep.constant_A;
    rep.notes.push_back("difference quotients use radius 2 cells of the unit-cube grid");
    return rep;
  }

  // Summation: S(y) = sum over Q with y in R_Q of (dist(y)/diam Q)^sigma.
  std::vector<double> S(shape.size(), 0.0);
  for (std::size_t qi = 0; qi < nq; ++qi) {
    const double dq = geo[qi].diam;
    for_each_cell(decomp.enlarged[qi].cells(shape), N, [&](const Coord& c) {
      const auto idx = shape.index(c);
      if (pdist[idx] > 0.0) S[idx] += std::pow(pdist[idx] / dq, sigma);
    });
  }
  rep.summation_measured = nq ? *std::max_element(S.begin(), S.end()) : 0.0;
  const double spread = 5.0 * std::sqrt(Nd);
  rep.summation_constant = static_cast<double>(packing_count(N)) * std::pow(spread, sigma) /
                           (1.0 - std::pow(2.0, -sigma));
  double sum_used = rep.summation_constant;
  if (rep.summation_measured > rep.summation_constant) {
    sum_used = rep.summation_measured;
    rep.notes.push_back("measured overlap sum exceeds the packing bound; the measured value is used");
  }

  const double n_unit = std::ldexp(1.0, field.grid_level);
  const double embed = q > pL ? std::pow(n_unit, Nd * (1.0 / pL - 1.0 / q)) : 1.0;

  double holder_factor = 1.0;
  if (case_bd) {
    holder_factor = 0.0;
    for (const auto& g : geo) holder_factor = std::max(holder_factor, std::pow(g.holder_g, (p - pL) / (p * pL)));
  }
  double dil_high = 0.0, dil_low = 0.0;
  for (const auto& g : geo) {
    double e = Nd / q + m - Nd / pL;
    double v = g.lhs_weight * std::pow(g.gamma, e) * std::pow(g.diam, sigma / p);
    if (case_bd) v *= std::pow(g.diam, (Nd - s_prime) * (p - pL) / (p * pL));
    dil_high = std::max(dil_high, v);
    if (!merge)
      dil_low = std::max(dil_low, g.lhs_weight * std::pow(g.gamma, Nd / q + k + 1 - Nd / p1) * g.low_weight);
  }
  // Norm equivalence moves the (k+1)-term from R_Q to Q when k < m-1.
  double a_eq = 1.0;
  if (!merge) {
    const int cl = field.grid_level;
    const int jmax = cl - static_cast<int>(std::ceil(std::log2(std::max(2, m))));
    std::map<int, double> eq_cache;
    for (std::size_t qi = 0; qi < nq; ++qi) {
      const double ratio = geo[qi].gamma / decomp.cubes[qi].side();
      const int j = std::clamp(static_cast<int>(std::lround(std::log2(ratio))), 1, std::max(1, jmax));
      if (!eq_cache.count(j)) {
        DyadicCube sub;
        sub.level = j;
        eq_cache[j] = norm_equivalence_constant(sub, N, m, k, pL, p1, cl, prm.seed).constant;
      }
      a_eq = std::max(a_eq, eq_cache[j]);
    }
  }
  const double quasi = quasinorm_constant(std::min(p, p1));
  const double merge_high = merge ? 2.0 : 1.0 + a_eq;

  rep.factors.push_back({"capacity", cap_factor,
                         field.flavor == CapacityFlavor::gamma ? "max over cubes of Gamma^{-1/p}"
                                                               : "max over cubes of max(Theta best constant, A0)"});
  rep.factors.push_back({"term_merge", merge_high,
                         merge ? "k = m-1: both local terms bounded by the top-order norm"
                               : "1 + norm-equivalence constant moving the (k+1)-term to Q"});
  rep.factors.push_back({"embedding", embed, "unit-grid inverse estimate from L^p_local to L^q"});
  rep.factors.push_back({"holder_defect", holder_factor, "max over cubes of G^{(p-p0)/(p p0)} at s' = (s+a)p0/(p-p0)"});
  rep.factors.push_back({"dilation", dil_high, "max over cubes of the weight and gamma powers of the dilation table"});
  rep.factors.push_back({"summation", std::pow(sum_used, 1.0 / p), "(A(N)/(1-2^-sigma))^{1/p}"});
  rep.factors.push_back({"quasinorm", quasi, "A(r) for the sum of the two terms"});
  if (!merge) {
    rep.factors.push_back({"norm_equivalence", a_eq, "max over size classes"});
    rep.factors.push_back({"dilation_low", dil_low, "(k+1)-term on Q, no overlap"});
  }
  rep.high_term_constant = quasi * cap_factor * merge_high * embed * holder_factor * dil_high * std::pow(sum_used, 1.0 / p);
  rep.low_term_constant = merge ? 0.0 : quasi * cap_factor * a_eq * embed * dil_low;
  rep.constant_A = std::max(rep.high_term_constant, rep.low_term_constant);
  if (k == m - 1) rep.one_term_constant = rep.high_term_constant + rep.low_term_constant;
  return rep;
}

// ---------------------------------------------------------------- probes

namespace {

// Weighted norms of zero-extended grid functions with the quotient weights.
struct ProbeNorms {
  const GridDomain* domain = nullptr;
  detail::FreeMap free;
  std::vector<double> dist;

  explicit ProbeNorms(const GridDomain& d) : domain(&d), free(detail::make_free_map(d.mask())), dist(weight_distance(d, 0.5)) {}

  NormTerm term(int order, double p, double e) const {
    return detail::make_term(domain->shape(), order, p, BoundaryPolicy::zero_extension,
                             stencil_weights(*domain, dist, order, e), free);
  }
  Vec restrict(const std::vector<double>& cell) const {
    Vec v(free.size());
    for (std::int64_t j = 0; j < free.size(); ++j) v[j] = cell[free.cell_of_var[j]];
    return v;
  }
};

std::vector<Vec> probe_set(const GridDomain& domain, const ProbeNorms& pn, int count, std::uint64_t seed) {
  auto starts = direct_starts(domain, pn.free, count, seed, false);
  // Boundary-concentrated variants of the random fields.
  const std::size_t base = starts.size();
  for (std::size_t i = 3; i < base; ++i) {
    Vec v = starts[i];
    for (std::int64_t j = 0; j < v.size(); ++j) v[j] *= std::sqrt(pn.dist[pn.free.cell_of_var[j]]);
    starts.push_back(v);
  }
  return starts;
}

}  // namespace

ProbeCheck check_probes(const GridDomain& domain, const HardyParams& prm, double A, int probes, std::uint64_t seed) {
  HardyParams ip = prm;
  ip.form = HardyForm::integral;
  const WeightExponents e = weight_exponents(ip, domain.dim());
  ProbeNorms pn(domain);
  NormTerm lhs = pn.term(0, prm.q, -e.t);
  NormTerm rhs = pn.term(prm.m, prm.p, prm.s);
  auto all = direct_starts(domain, pn.free, probes, seed, prm.cone);
  ProbeCheck out;
  for (std::size_t i = 3; i < all.size(); ++i) {
    const Vec& u = all[i];
    const double l = lhs.norm(u), r = rhs.norm(u);
    if (!(r > 0.0)) continue;
    ++out.probes;
    const double ratio = l / (A * r);
    out.worst_ratio = std::max(out.worst_ratio, ratio);
    if (ratio <= 1.0 + 1e-12) ++out.holding;
  }
  return out;
}

// ---------------------------------------------------------------- Case E

nlohmann::json CaseEReport::to_json() const {
  nlohmann::json j;
  j["declined"] = declined;
  j["reason"] = reason;
  j["b"] = num(b);
  j["beta"] = beta;
  j["s0"] = s0;
  j["a_prime"] = num(a_prime);
  j["a_second"] = num(a_second);
  j["lower_order_transfer"] = num(lower_transfer);
  j["c"] = num(c);
  j["constant_at_s0"] = num(constant_at_s0);
  j["constant_at_half_s0"] = num(constant_at_half_s0);
  nlohmann::json scan = nlohmann::json::array();
  for (const auto& [bt, margin] : beta_scan) scan.push_back({{"beta", bt}, {"margin", margin}});
  j["beta_scan"] = scan;
  if (!declined) j["bound"] = bound.to_json();
  return j;
}

CaseEReport case_e_shift(const GridDomain& domain, const WhitneyDecomposition& decomp, const HardyParams& prm) {
  CaseEReport rep;
  if (!(prm.p > 1.0)) {
    rep.declined = true;
    rep.reason = "p = 1: the feasibility condition c >= beta^{1-1/p} carries no smallness in beta";
    return rep;
  }
  if (prm.q < prm.p) throw Error(ErrorCode::precondition, "Case E needs q >= p", "case E (iii)");
  const int m = prm.m;
  const double p = prm.p;

  // Lower-order sums need the Case A bound for every order j = 1..m.
  std::vector<CapacityField> fields(m + 1);
  for (int j = 1; j <= m; ++j) {
    HardyParams fp = prm;
    fp.hcase = HardyCase::E;
    fp.m = j;
    fields[j] = per_cube_capacity_field(domain, decomp, fp);
  }
  rep.b = fields[m].min_capacity;
  if (!(rep.b > 0.0))
    throw Error(ErrorCode::hypothesis, "Gamma_{m,m-1,p} is not bounded below by a positive b", "case E (ii)");

  auto case_a = [&](int order, double beta) {
    HardyParams ap = prm;
    ap.hcase = HardyCase::A;
    ap.form = HardyForm::integral;
    ap.m = order;
    ap.k = order - 1;
    ap.p1 = p;
    ap.q = p;
    ap.s = -beta;
    return constructive_bound(domain, decomp, ap, fields[order]);
  };
  auto lower_constant = [&](double beta) {
    double L = 0.0;
    for (int j = 1; j <= m; ++j) L += *case_a(j, beta).one_term_constant;
    return L;
  };

  ProbeNorms pn(domain);
  const auto probes = probe_set(domain, pn, 16, prm.seed);
  struct Measured {
    double a2 = 0.0, transfer = 0.0;
  };
  auto measure = [&](double beta) {
    const double g = -2.0 * beta / p;  // u' = u dist^{(beta' - beta)/p}, beta' = -beta
    NormTerm top = pn.term(m, p, -beta), top_s = pn.term(m, p, beta);
    std::vector<NormTerm> low, low_s;
    for (int k = 0; k < m; ++k) {
      low.push_back(pn.term(k, p, -beta - (m - k) * p));
      low_s.push_back(pn.term(k, p, beta - (m - k) * p));
    }
    Measured out;
    for (const auto& u : probes) {
      Vec us = u;
      for (std::int64_t j = 0; j < u.size(); ++j) us[j] *= std::pow(pn.dist[pn.free.cell_of_var[j]], g);
      double lo = 0.0, lo_s = 0.0;
      for (int k = 0; k < m; ++k) {
        lo += low[k].norm(u);
        lo_s += low_s[k].norm(us);
      }
      if (!(lo > 0.0)) continue;
      const double defect = std::max(0.0, top.norm(u) - top_s.norm(us));
      out.a2 = std::max(out.a2, defect / ((2.0 * beta / p) * lo));
      out.transfer = std::max(out.transfer, lo_s / lo);
    }
    // The product rule's leading lower-order coefficient is |grad dist| = 1.
    out.a2 = std::max(out.a2, 1.0);
    return out;
  };

  double best = 0.0;
  for (int j = 1; j <= 16; ++j) {
    const double beta = std::ldexp(1.0, -j);
    const double L = lower_constant(beta);
    const Measured ms = measure(beta);
    const double margin = 1.0 - 2.0 * ms.a2 * (2.0 * beta / p) * L;
    rep.beta_scan.push_back({beta, margin});
    if (margin >= 0.0 && beta > best) {
      best = beta;
      rep.a_second = ms.a2;
      rep.lower_transfer = ms.transfer;
      rep.a_prime = L;
      rep.c = p / (4.0 * ms.a2 * L * std::pow(beta, 1.0 / p));
      rep.constant_at_s0 = 2.0 * ms.transfer * L;
    }
  }
  if (!(best > 0.0)) {
    rep.declined = true;
    rep.reason = "no-positive-s0: the dominance condition fails down to beta = 2^-16";
    return rep;
  }
  rep.beta = best;
  rep.s0 = best;
  {
    const double half = 0.5 * best;
    const double L = lower_constant(half);
    const Measured ms = measure(half);
    rep.constant_at_half_s0 = 2.0 * ms.transfer * L;
    if (1.0 - 2.0 * ms.a2 * (2.0 * half / p) * L < 0.0) rep.reason = "dominance fails at s0/2 on the probe set";
  }
  rep.bound = case_a(m, best);
  rep.bound.hcase = HardyCase::E;
  rep.bound.notes.push_back("Case A bound at s = -beta feeding the exponent shift");
  return rep;
}

// ---------------------------------------------------------------- corollary

CorollaryCase parse_corollary_case(const std::string& s) {
  static const char* names[] = {"i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"};
  for (int i = 0; i < 10; ++i)
    if (s == names[i]) return static_cast<CorollaryCase>(i);
  throw Error(ErrorCode::config, "unknown corollary case '" + s + "'", "case");
}

std::string corollary_case_name(CorollaryCase c) {
  static const char* names[] = {"i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"};
  return names[static_cast<int>(c)];
}

nlohmann::json CorollaryReport::to_json() const {
  nlohmann::json j;
  j["case"] = corollary_case_name(ccase);
  j["hypotheses_ok"] = hypotheses_ok;
  nlohmann::json hs = nlohmann::json::array();
  for (const auto& h : hypotheses) hs.push_back({{"name", h.name}, {"ok", h.ok}, {"detail", h.detail}});
  j["hypotheses"] = hs;
  j["bound"] = bound ? bound->to_json() : nlohmann::json(nullptr);
  j["caveats"] = caveats;
  return j;
}

namespace {

// True when some choice of N-r axes projects the zero set onto an r-dim
// coordinate face containing an r-cube of side >= w cells.
bool projection_holds(const ConstraintSet& c, int r, std::int64_t w) {
  const int N = c.grid.dim;
  const std::int64_t n = c.grid.side();
  if (r < 1 || w > n) return false;
  for (int mask = 0; mask < (1 << N); ++mask) {
    if (__builtin_popcount(static_cast<unsigned>(mask)) != r) continue;
    std::vector<int> keep;
    for (int i = 0; i < N; ++i)
      if (mask & (1 << i)) keep.push_back(i);
    GridShape face{r, c.grid.level};
    std::vector<long double> proj(face.size(), 0.0L);
    for (std::int64_t idx = 0; idx < c.grid.size(); ++idx) {
      if (!c.K[idx]) continue;
      Coord x = c.grid.coord(idx), y{0, 0, 0};
      for (int a = 0; a < r; ++a) y[a] = x[keep[a]];
      proj[face.index(y)] = 1.0L;
    }
    PrefixSum ps(face, proj);
    CellBox starts;
    for (int a = 0; a < r; ++a) starts.hi[a] = n - w + 1;
    bool found = false;
    for_each_cell(starts, r, [&](const Coord& lo) {
      if (found) return;
      CellBox b;
      for (int a = 0; a < r; ++a) {
        b.lo[a] = lo[a];
        b.hi[a] = lo[a] + w;
      }
      if (ps.sum(b) == static_cast<long double>(b.count(r))) found = true;
    });
    if (found) return true;
  }
  return false;
}

// Boundary cell centers lie in one hyperplane up to half a cell.
bool boundary_in_hyperplane(const GridDomain& domain) {
  const auto bc = domain.boundary_cells();
  const auto& shape = domain.shape();
  const int N = shape.dim;
  std::vector<Eigen::VectorXd> pts;
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    if (!bc[i]) continue;
    Coord c = shape.coord(i);
    Eigen::VectorXd v(N);
    for (int a = 0; a < N; ++a) v[a] = shape.center(c[a]);
    pts.push_back(v);
  }
  if (pts.size() < 2) return true;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(N);
  for (const auto& v : pts) mean += v;
  mean /= static_cast<double>(pts.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(N, N);
  for (const auto& v : pts) cov += (v - mean) * (v - mean).transpose();
  cov /= static_cast<double>(pts.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  return std::sqrt(std::max(0.0, es.eigenvalues()[0])) <= 0.5 * shape.h();
}

}  // namespace

CorollaryReport corollary_check(const GridDomain& domain, const WhitneyDecomposition& decomp, CorollaryCase cc,
                                    const HardyParams& prm, const CorollaryOptions& opt) {
  CorollaryReport rep;
  rep.ccase = cc;
  const int N = domain.dim();
  const int id = static_cast<int>(cc) + 1;  // 1..10
  const bool cone_case = id == 3 || id == 4 || id == 7 || id == 8;
  const bool p0_case = id == 2 || id == 4 || id == 6 || id == 8 || id == 10;
  const bool projection_case = id >= 5 && id <= 8;
  const bool selfsimilar_case = id >= 9;
  auto add = [&](const std::string& name, bool ok, const std::string& detail) {
    rep.hypotheses.push_back({name, ok, detail});
  };
  rep.caveats.push_back("Sobolev capacities are proxied by unit-cube Gamma capacities; the equivalence constant is not validated");
  rep.caveats.push_back("hypotheses are checked at grid scale only");

  HardyParams base = prm;
  base.cone = cone_case;
  if (cone_case && base.m != 2) {
    add("m = 2 for the cone class", false, "m = " + std::to_string(base.m));
  }
  if (p0_case) {
    const bool strict = id == 4 || id == 8 || id == 10;
    const bool ok = strict ? (base.p0 > 1.0 && base.p0 < base.p) : (base.p0 >= 1.0 && base.p0 < base.p);
    add(strict ? "1 < p0 < p" : "1 <= p0 < p", ok, "p0 = " + std::to_string(base.p0));
  }

  // A capacity the solver cannot certify counts as a failed hypothesis.
  auto min_capacity = [&](const HardyParams& fp, bool use_max, std::string& detail) -> double {
    try {
      CapacityField f = per_cube_capacity_field(domain, decomp, fp);
      return use_max ? f.max_capacity : f.min_capacity;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::solver) throw;
      detail = std::string("capacity solver: ") + e.what();
      return 0.0;
    }
  };

  // Gamma_{m,m-1} >= b > 0.
  {
    HardyParams gp = base;
    gp.hcase = HardyCase::E;
    std::string detail;
    const double b = min_capacity(gp, false, detail);
    add("Gamma_{m,m-1} >= b > 0", b > opt.capacity_floor, detail.empty() ? "b = " + std::to_string(b) : detail);
  }

  // Capacity hypotheses (i)-(iv).
  if (id <= 4) {
    HardyParams cp = base;
    cp.m = id <= 2 ? 1 : 2;
    cp.k = cp.m - 1;
    cp.hcase = p0_case ? HardyCase::B : HardyCase::A;
    cp.p1 = cp.local_exponent();
    if (!p0_case || (cp.p0 >= 1.0 && cp.p0 < cp.p)) {
      std::string detail;
      const double c = min_capacity(cp, false, detail);
      const std::string nm = std::string("C_{") + (cp.m == 1 ? "1" : "2") + "," + (p0_case ? "p0" : "p") +
                             "}(complement in R_Q) >= const > 0";
      add(nm, c > opt.capacity_floor, detail.empty() ? "min over cubes " + std::to_string(c) : detail);
    }
  }

  const int r = opt.r < 0 ? N : opt.r;
  if (projection_case) {
    const double expo = (id == 5 || id == 7) ? base.p : base.p0;
    const double lhs = (id == 7 || id == 8) ? 2.0 * expo : expo;
    add("exponent > N - r", lhs > N - r, std::to_string(lhs) + " vs N - r = " + std::to_string(N - r));
    const int cl = base.capacity_level > 0 ? base.capacity_level : default_capacity_level(N);
    const double b = opt.projection_b > 0.0 ? opt.projection_b : 0.25;
    const auto w = static_cast<std::int64_t>(std::ceil(b * std::ldexp(1.0, cl) - 1e-9));
    std::int64_t failing = 0;
    std::map<std::uint64_t, bool> seen;
    for (std::size_t q = 0; q < decomp.size(); ++q) {
      ConstraintSet c = rescaled_constraint(domain, decomp, q, cl, false);
      auto it = seen.find(c.hash());
      bool ok = it != seen.end() ? it->second : projection_holds(c, r, w);
      seen[c.hash()] = ok;
      if (!ok) ++failing;
    }
    add("projection of the complement holds an r-cube of side >= b", failing == 0,
        "r = " + std::to_string(r) + ", b = " + std::to_string(b) + ", failing cubes " + std::to_string(failing));
    rep.caveats.push_back("projections restricted to coordinate hyperplanes");
  }

  if (selfsimilar_case) {
    add("s < 0", base.s < 0.0 || id == 10, "s = " + std::to_string(base.s));
    add("p > 1", base.p > 1.0 || id == 10, "p = " + std::to_string(base.p));
    HardyParams gp = base;
    gp.hcase = id == 10 ? HardyCase::B : HardyCase::A;
    gp.k = gp.m - 1;
    gp.p1 = gp.local_exponent();
    bool cap_ok = false;
    std::string detail = "max per-cube capacity as proxy";
    if (id != 10 || (gp.p0 >= 1.0 && gp.p0 < gp.p)) cap_ok = min_capacity(gp, true, detail) > opt.capacity_floor;
    add("C_{m,p}(complement) != 0", cap_ok, detail);
    auto sig = selfsimilarity_signature(domain, decomp, 0.5, opt.signature_threshold);
    add("complement self-similar (signature gate)", sig.consistent,
        "max discrepancy " + std::to_string(sig.max_discrepancy) + " vs " + std::to_string(sig.threshold));
    rep.caveats.push_back("self-similarity is a heuristic signature, a pass is only consistency");
    const bool planar = boundary_in_hyperplane(domain);
    add("boundary not inside a hyperplane", !planar, planar ? "boundary cells are coplanar" : "");
  }

  // Weight-range clauses and bound instantiation.
  std::optional<double> dl;
  if (p0_case) {
    try {
      dl = dim_loc(domain, decomp).value;
      const double limit = (base.p / base.p0 - 1.0) * (N - *dl);
      add("s < (p/p0 - 1)(N - dim_loc)", base.s < limit,
          "s = " + std::to_string(base.s) + ", limit " + std::to_string(limit));
    } catch (const Error& e) {
      add("s < (p/p0 - 1)(N - dim_loc)", false, e.what());
    }
  } else if (!selfsimilar_case && !(base.s < 0.0)) {
    add("p > 1 when s >= 0", base.p > 1.0, "p = " + std::to_string(base.p));
  }

  rep.hypotheses_ok = std::all_of(rep.hypotheses.begin(), rep.hypotheses.end(), [](const auto& h) { return h.ok; });
  if (!rep.hypotheses_ok) return rep;

  HardyParams bp = base;
  bp.k = bp.m - 1;
  bp.form = HardyForm::integral;
  BoundOptions bo;
  bo.dim_loc = dl;
  if (p0_case) {
    bp.hcase = HardyCase::B;
    bp.p1 = bp.p0;
  } else {
    bp.hcase = HardyCase::A;
    bp.p1 = bp.p;
  }
  if (bp.q < bracket(bp.p, bp.p1)) {
    std::vector<std::int64_t> all(decomp.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<std::int64_t>(i);
    bo.f = LsWeightFunction::equidistributed(decomp.size(), all, bp);
  }
  if (p0_case || bp.s < 0.0) {
    rep.bound = constructive_bound(domain, decomp, bp, bo);
    return rep;
  }
  // 0 <= s: through the exponent shift, valid for s < s0.
  CaseEReport e = case_e_shift(domain, decomp, bp);
  if (e.declined || !(bp.s < e.s0)) {
    rep.hypotheses.push_back({"s < s0", false, e.declined ? e.reason : "s0 = " + std::to_string(e.s0)});
    rep.hypotheses_ok = false;
    return rep;
  }
  rep.hypotheses.push_back({"s < s0", true, "s0 = " + std::to_string(e.s0)});
  HardyBoundReport b = e.bound;
  b.params = bp;
  b.constant_A = e.constant_at_s0;
  b.one_term_constant = e.constant_at_s0;
  b.notes.push_back("constant from the exponent shift at beta = s0");
  rep.bound = b;
  return rep;
}

}  // namespace hardylab
