#include "hardylab/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "hardylab/error.hpp"
#include "hardylab/norms.hpp"
#include "hardylab/random.hpp"
#include "variational.hpp"

namespace hardylab {

using detail::FreeMap;
using detail::NormTerm;
using detail::RatioProblem;
using detail::RatioSolution;
using detail::Vec;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<Coord> monomials(int dim, int degree) {
  std::vector<Coord> out;
  for (int d = 0; d <= degree; ++d)
    for (const auto& a : multi_indices(dim, d)) out.push_back(a);
  return out;
}

double monomial_at(const GridShape& g, const Coord& cell, const Coord& a) {
  double v = 1.0;
  for (int i = 0; i < g.dim; ++i) v *= std::pow(2.0 * g.center(cell[i]) - 1.0, static_cast<double>(a[i]));
  return v;
}

// Cells x monomials evaluated at cell centers.
Eigen::MatrixXd poly_matrix(const GridShape& g, const std::vector<std::int64_t>& cells, int degree) {
  auto mons = monomials(g.dim, degree);
  Eigen::MatrixXd V(cells.size(), mons.size());
  for (std::size_t r = 0; r < cells.size(); ++r) {
    Coord c = g.coord(cells[r]);
    for (std::size_t j = 0; j < mons.size(); ++j) V(r, j) = monomial_at(g, c, mons[j]);
  }
  return V;
}

// Orthonormal basis of the coefficient vectors of polynomials of degree
// <= degree vanishing at the K cell centers.
Eigen::MatrixXd vanishing_polynomials(const ConstraintSet& c, int degree) {
  const auto n_mon = monomials(c.grid.dim, degree).size();
  std::vector<std::int64_t> kcells;
  if (c.has_zero_set())
    for (std::size_t i = 0; i < c.K.size(); ++i)
      if (c.K[i]) kcells.push_back(static_cast<std::int64_t>(i));
  if (kcells.empty()) return Eigen::MatrixXd::Identity(n_mon, n_mon);
  Eigen::MatrixXd V = poly_matrix(c.grid, kcells, degree);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double tol = 1e-9 * std::max(1.0, sv.size() ? sv[0] : 0.0);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > tol) ++rank;
  return svd.matrixV().rightCols(static_cast<Eigen::Index>(n_mon) - rank);
}

std::vector<std::int64_t> corner_cells(const GridShape& g) {
  std::vector<std::int64_t> out;
  for (int mask = 0; mask < (1 << g.dim); ++mask) {
    Coord c{0, 0, 0};
    for (int i = 0; i < g.dim; ++i) c[i] = (mask >> i) & 1 ? g.side() - 1 : 0;
    out.push_back(g.index(c));
  }
  return out;
}

// Nonzero z with C z >= 0, for a pointed cone in at most four dimensions:
// enumerate candidate extreme rays from rank-deficient row subsets.
bool cone_has_ray(const Eigen::MatrixXd& C) {
  const Eigen::Index r = C.cols();
  const double tol = 1e-9 * std::max(1.0, C.cwiseAbs().maxCoeff());
  auto feasible = [&](const Eigen::VectorXd& z) {
    if (z.norm() < 1e-12) return false;
    Eigen::VectorXd v = C * (z / z.norm());
    return v.minCoeff() >= -tol;
  };
  if (r == 0) return false;
  Eigen::FullPivLU<Eigen::MatrixXd> lu_all(C);
  if (lu_all.rank() < r) return true;  // C z = 0 for some z != 0
  if (r == 1) return feasible(Eigen::VectorXd::Ones(1)) || feasible(-Eigen::VectorXd::Ones(1));
  const Eigen::Index rows = C.rows();
  std::vector<int> pick(r - 1);
  // iterate over subsets of r-1 rows
  std::function<bool(int, int)> rec = [&](int start, int depth) -> bool {
    if (depth == r - 1) {
      Eigen::MatrixXd S(r - 1, r);
      for (Eigen::Index i = 0; i < r - 1; ++i) S.row(i) = C.row(pick[i]);
      Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
      if (lu.rank() != r - 1) return false;
      Eigen::VectorXd z = lu.kernel().col(0);
      return feasible(z) || feasible(-z);
    }
    for (int i = start; i < rows; ++i) {
      pick[depth] = i;
      if (rec(i + 1, depth + 1)) return true;
    }
    return false;
  };
  return rec(0, 0);
}

std::vector<std::uint8_t> free_mask(const ConstraintSet& c) {
  std::vector<std::uint8_t> f(c.grid.size(), 1);
  if (c.has_zero_set())
    for (std::size_t i = 0; i < c.K.size(); ++i)
      if (c.K[i]) f[i] = 0;
  return f;
}

void check_orders(int m, int k, double p, double p1) {
  if (m < 1) throw Error(ErrorCode::config, "m must be positive", "m>=1");
  if (k < 0 || k > m - 1) throw Error(ErrorCode::config, "k must satisfy 0 <= k <= m-1", "0<=k<=m-1");
  if (p < 1.0) throw Error(ErrorCode::config, "p must be at least 1", "p>=1");
  if (!(p1 >= 1.0) || !std::isfinite(p1)) throw Error(ErrorCode::config, "p1 must be finite and at least 1", "p1");
}

void check_grid(const ConstraintSet& c, int m) {
  if (c.grid.dim < 1 || c.grid.dim > kMaxDim) throw Error(ErrorCode::config, "dimension must be 1, 2 or 3");
  if (c.grid.side() < 2 * (m + 1))
    throw Error(ErrorCode::config, "unit-cube grid too coarse for the gradient order", "grid_level");
  if (c.has_zero_set() && !c.K.empty() && static_cast<std::int64_t>(c.K.size()) != c.grid.size())
    throw Error(ErrorCode::config, "zero set does not match the unit-cube grid");
}

struct Setup {
  FreeMap free;
  NormTerm n0, ta, tb;
};

Setup make_setup(const ConstraintSet& c, int m, int k, double p, double p1) {
  Setup s;
  s.free = detail::make_free_map(free_mask(c));
  s.n0 = detail::make_term(c.grid, 0, p, BoundaryPolicy::none, {}, s.free);
  s.ta = detail::make_term(c.grid, k + 1, p1, BoundaryPolicy::none, {}, s.free);
  s.tb = detail::make_term(c.grid, m, p, BoundaryPolicy::none, {}, s.free);
  return s;
}

Vec smooth_random(const GridShape& g, const FreeMap& free, Rng& rng) {
  std::vector<double> cell(g.size(), 0.0);
  for (auto idx : free.cell_of_var) cell[idx] = rng.uniform(-1.0, 1.0);
  for (int pass = 0; pass < 3; ++pass) {
    std::vector<double> next(cell.size(), 0.0);
    for (auto idx : free.cell_of_var) {
      Coord c = g.coord(idx);
      double sum = cell[idx];
      int cnt = 1;
      for (int i = 0; i < g.dim; ++i)
        for (int d : {-1, 1}) {
          Coord n = c;
          n[i] += d;
          if (!g.contains(n)) continue;
          sum += cell[g.index(n)];
          ++cnt;
        }
      next[idx] = sum / cnt;
    }
    cell = std::move(next);
  }
  Vec v(free.size());
  for (std::int64_t j = 0; j < free.size(); ++j) v[j] = cell[free.cell_of_var[j]];
  return v;
}

std::vector<Vec> make_starts(const GridShape& g, const FreeMap& free, int max_degree, int random, std::uint64_t seed,
                             bool cone) {
  std::vector<Vec> starts;
  for (const auto& a : monomials(g.dim, max_degree)) {
    Vec v(free.size());
    for (std::int64_t j = 0; j < free.size(); ++j) v[j] = monomial_at(g, g.coord(free.cell_of_var[j]), a);
    if (cone) v = v.array() + 1.5;  // shifted copies stay strictly positive
    starts.push_back(v);
  }
  Rng rng(seed);
  for (int r = 0; r < random; ++r) {
    Vec v = smooth_random(g, free, rng);
    if (cone) v = v.cwiseAbs();
    starts.push_back(v);
  }
  return starts;
}

// inf over admissible u of (wa ||grad^{k+1}u|| + wb ||grad^m u||) / ||u||.
struct WeightedInf {
  double value = 0.0;
  double a = 0.0, b = 0.0, n = 0.0;  // norms at the minimizer
  double residual = 0.0;
  int iterations = 0;
  bool converged = true;
  bool positive_definite = true;
  Vec u;
};

WeightedInf weighted_inf(const Setup& s, const ConstraintSet& c, double wa, double wb, SolverKind solver,
                         const SolverOptions& opt, int m, const Vec* warm) {
  RatioProblem prob;
  prob.numerator = s.n0;
  if (wa > 0.0) prob.denominator.emplace_back(wa, s.ta);
  if (wb > 0.0) prob.denominator.emplace_back(wb, s.tb);
  prob.cone = c.has_cone();
  WeightedInf out;
  RatioSolution sol;
  if (solver == SolverKind::eigen_exact) {
    sol = detail::minimize_ratio_eigen(prob, {}, warm);
    out.positive_definite = sol.positive_definite;
    if (!sol.positive_definite) return out;
  } else {
    auto starts = make_starts(c.grid, s.free, m, opt.random_starts, opt.seed, prob.cone);
    if (warm && warm->size() == s.free.size()) starts.insert(starts.begin(), prob.cone ? Vec(warm->cwiseAbs()) : *warm);
    detail::DescentOptions dopt;
    dopt.max_iterations = opt.max_iterations;
    sol = detail::minimize_ratio_descent(prob, starts, dopt);
  }
  out.value = sol.value;
  out.u = sol.u;
  out.a = s.ta.norm(sol.u);
  out.b = s.tb.norm(sol.u);
  out.n = s.n0.norm(sol.u);
  out.residual = sol.residual;
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  return out;
}

SolverKind pick_solver(const ConstraintSet& c, double p, double p1, const SolverOptions& opt) {
  const bool exact_ok = p == 2.0 && p1 == 2.0 && !c.has_cone();
  if (opt.solver) {
    if (*opt.solver == SolverKind::eigen_exact && !exact_ok)
      throw Error(ErrorCode::config, "the eigen solver needs p = p1 = 2 and no cone", "solver");
    return *opt.solver;
  }
  return exact_ok ? SolverKind::eigen_exact : SolverKind::descent;
}

CapacityResult base_result(CapacityFlavor f, const ConstraintSet& c, int m, int k, double p, double p1,
                           const SolverOptions& opt) {
  CapacityResult r;
  r.flavor = f;
  r.dim = c.grid.dim;
  r.grid_level = c.grid.level;
  r.m = m;
  r.k = k;
  r.p = p;
  r.p1 = p1;
  r.seed = opt.seed;
  r.constraint = constraint_kind_name(c.kind);
  return r;
}

void set_unbounded(CapacityResult& r) {
  r.status = CapacityStatus::unbounded;
  r.best_constant = kInf;
  r.capacity = 0.0;
}

void set_saturated(CapacityResult& r) {
  r.status = CapacityStatus::saturated;
  r.best_constant = 0.0;
  r.capacity = kInf;
}

// Largest ||P||_p / ||grad^{k+1} P||_p1 over admissible polynomials of degree
// <= degree: the p = 2 optimum over the subspace plus basis and random probes.
double polynomial_ratio_sup(const ConstraintSet& c, const Setup& s, int degree) {
  Eigen::MatrixXd Z = vanishing_polynomials(c, degree);
  if (Z.cols() == 0) return 0.0;
  Eigen::MatrixXd B = poly_matrix(c.grid, s.free.cell_of_var, degree) * Z;
  std::vector<Vec> candidates;
  for (Eigen::Index j = 0; j < B.cols(); ++j) candidates.push_back(B.col(j));
  {
    NormTerm n2 = detail::make_term(c.grid, 0, 2.0, BoundaryPolicy::none, {}, s.free);
    NormTerm a2 = detail::make_term(c.grid, s.ta.order, 2.0, BoundaryPolicy::none, {}, s.free);
    Eigen::MatrixXd G0 = B.transpose() * (n2.quadratic_form() * B);
    Eigen::MatrixXd G1 = B.transpose() * (a2.quadratic_form() * B);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e1(G1);
    if (e1.eigenvalues().minCoeff() <= 1e-12 * std::max(1.0, e1.eigenvalues().maxCoeff())) return kInf;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ge(G1, G0);
    if (ge.info() == Eigen::Success) candidates.push_back(B * ge.eigenvectors().col(0));
  }
  Rng rng(derive_seed(7, static_cast<std::uint64_t>(degree)));
  for (int r = 0; r < 64; ++r) {
    Vec coef(B.cols());
    for (Eigen::Index j = 0; j < coef.size(); ++j) coef[j] = rng.uniform(-1.0, 1.0);
    candidates.push_back(B * coef);
  }
  double best = 0.0;
  for (auto v : candidates) {
    if (c.has_cone()) {
      const double scale = v.cwiseAbs().maxCoeff();
      if (v.minCoeff() < -1e-9 * scale) v = -v;
      if (v.minCoeff() < -1e-9 * scale) continue;
    }
    double a = s.ta.norm(v);
    double n = s.n0.norm(v);
    if (a <= 1e-12 * n) return kInf;
    best = std::max(best, n / a);
  }
  return best;
}

}  // namespace

std::string constraint_kind_name(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::zero_on_compact: return "zero-on-compact";
    case ConstraintKind::nonnegative_cone: return "nonnegative-cone";
    case ConstraintKind::zero_on_compact_and_nonnegative: return "zero-on-compact-and-nonnegative";
    case ConstraintKind::full_space: return "full-space";
  }
  return "unknown";
}

std::string flavor_name(CapacityFlavor f) { return f == CapacityFlavor::gamma ? "gamma" : "theta"; }
std::string solver_name(SolverKind s) { return s == SolverKind::eigen_exact ? "eigen-exact" : "descent"; }
std::string status_name(CapacityStatus s) {
  switch (s) {
    case CapacityStatus::finite: return "finite";
    case CapacityStatus::unbounded: return "unbounded";
    case CapacityStatus::saturated: return "saturated";
  }
  return "unknown";
}

std::int64_t ConstraintSet::zero_count() const {
  if (!has_zero_set()) return 0;
  return std::count(K.begin(), K.end(), std::uint8_t{1});
}

std::uint64_t ConstraintSet::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t v) {
    h ^= v;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(kind));
  mix(static_cast<std::uint64_t>(grid.dim));
  mix(static_cast<std::uint64_t>(grid.level));
  for (auto b : K) mix(b);
  return h;
}

ConstraintSet ConstraintSet::full_space(int dim, int level) {
  ConstraintSet c;
  c.kind = ConstraintKind::full_space;
  c.grid = GridShape{dim, level};
  return c;
}

ConstraintSet ConstraintSet::face_slab(int dim, int level, int axis, double width, bool cone) {
  ConstraintSet c;
  c.kind = cone ? ConstraintKind::zero_on_compact_and_nonnegative : ConstraintKind::zero_on_compact;
  c.grid = GridShape{dim, level};
  c.K.assign(c.grid.size(), 0);
  for (std::int64_t i = 0; i < c.grid.size(); ++i)
    if (c.grid.center(c.grid.coord(i)[axis]) < width) c.K[i] = 1;
  return c;
}

ConstraintSet ConstraintSet::from_mask(int dim, int level, std::vector<std::uint8_t> zero_cells, bool cone) {
  ConstraintSet c;
  c.grid = GridShape{dim, level};
  if (static_cast<std::int64_t>(zero_cells.size()) != c.grid.size())
    throw Error(ErrorCode::config, "zero-cell mask does not match the unit-cube grid");
  c.K = std::move(zero_cells);
  c.kind = cone ? ConstraintKind::zero_on_compact_and_nonnegative : ConstraintKind::zero_on_compact;
  return c;
}

ConstraintSet transform(const ConstraintSet& c, const std::array<int, 3>& perm, const std::array<bool, 3>& flip) {
  ConstraintSet out = c;
  if (c.K.empty()) return out;
  const GridShape& g = c.grid;
  out.K.assign(c.K.size(), 0);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (!c.K[i]) continue;
    Coord a = g.coord(i), b{0, 0, 0};
    for (int j = 0; j < g.dim; ++j) {
      b[j] = a[perm[j]];
      if (flip[j]) b[j] = g.side() - 1 - b[j];
    }
    out.K[g.index(b)] = 1;
  }
  return out;
}

bool p1_admissible(int dim, int m, int k, double p, double p1) {
  if (!(p1 > 0.0)) return false;
  const double d = static_cast<double>(m - k - 1);
  const double n = static_cast<double>(dim);
  if (n > d * p) return p1 <= n * p / (n - d * p) + 1e-12;
  if (n == d * p) return std::isfinite(p1);
  return true;
}

bool admits_polynomial(const ConstraintSet& c, int degree) {
  if (degree < 0) return false;
  Eigen::MatrixXd Z = vanishing_polynomials(c, degree);
  if (Z.cols() == 0) return false;
  if (!c.has_cone()) return true;
  if (degree == 0) return true;  // a positive constant (K is empty here)
  if (degree > 1)
    throw Error(ErrorCode::config, "cone constraints support polynomial kernels of degree <= 1 only", "cone-degree");
  // affine functions: nonnegative on the cube iff nonnegative at its corner cells
  Eigen::MatrixXd C = poly_matrix(c.grid, corner_cells(c.grid), degree) * Z;
  return cone_has_ray(C);
}

CapacityResult gamma_capacity(const ConstraintSet& c, int m, int k, double p, double p1, const SolverOptions& opt) {
  check_orders(m, k, p, p1);
  check_grid(c, m);
  CapacityResult r = base_result(CapacityFlavor::gamma, c, m, k, p, p1, opt);
  r.solver = pick_solver(c, p, p1, opt);
  if (c.zero_count() == c.grid.size()) {
    set_saturated(r);
    return r;
  }
  if (admits_polynomial(c, k)) {
    set_unbounded(r);
    return r;
  }
  Setup s = make_setup(c, m, k, p, p1);
  WeightedInf w = weighted_inf(s, c, 1.0, 1.0, r.solver, opt, m, nullptr);
  if (!w.positive_definite || !(w.value > 0.0)) {
    set_unbounded(r);
    return r;
  }
  if (!w.converged && r.solver == SolverKind::descent)
    throw Error(ErrorCode::solver, "descent did not stabilize within the iteration budget", "max_iterations");
  r.best_constant = 1.0 / w.value;
  r.capacity = std::pow(w.value, p);
  r.residual = w.residual;
  r.iterations = w.iterations;
  return r;
}

CapacityResult theta_capacity(const ConstraintSet& c, int m, int k, double p, double p1, double A0,
                              const SolverOptions& opt) {
  check_orders(m, k, p, p1);
  check_grid(c, m);
  CapacityResult r = base_result(CapacityFlavor::theta, c, m, k, p, p1, opt);
  r.solver = pick_solver(c, p, p1, opt);
  r.alpha_A0 = A0 > 0.0 ? A0 : default_theta_a0(c.grid.dim, c.grid.level, k, p1);
  A0 = r.alpha_A0;
  if (c.zero_count() == c.grid.size()) {
    set_saturated(r);
    return r;
  }
  if (admits_polynomial(c, k)) {
    set_unbounded(r);
    return r;
  }
  Setup s = make_setup(c, m, k, p, p1);
  // Polynomials of degree < m carry no m-th gradient: if one beats A0 the sup is infinite.
  if (m - 1 > k && polynomial_ratio_sup(c, s, m - 1) >= A0) {
    set_unbounded(r);
    r.a0_too_small = true;
    return r;
  }
  // C2 <= c iff inf (A0 a + c b)/n >= 1; G(c) is concave and increasing.
  WeightedInf g0 = weighted_inf(s, c, A0, 0.0, r.solver, opt, m, nullptr);
  if (!g0.positive_definite) {
    set_unbounded(r);
    return r;
  }
  int total = g0.iterations;
  if (g0.value >= 1.0) {
    set_saturated(r);
    r.iterations = total;
    return r;
  }
  double lo = 0.0, hi = kInf, cval = 0.0;
  WeightedInf cur = g0, last = g0;
  for (int it = 0; it < 200; ++it) {
    double next;
    if (std::isinf(hi)) {
      double slope = cur.b / cur.n;
      next = slope > 0.0 ? cval + (1.0 - cur.value) / slope : std::max(1.0, 2.0 * cval);
      next = std::max(next, cval * (1.0 + 1e-12) + 1e-300);
    } else {
      next = 0.5 * (lo + hi);
    }
    WeightedInf g = weighted_inf(s, c, A0, next, r.solver, opt, m, cur.u.size() ? &cur.u : nullptr);
    total += g.iterations;
    last = g;
    if (g.value >= 1.0) {
      hi = next;
    } else {
      lo = next;
      cur = g;
      cval = next;
    }
    if (!std::isinf(hi) && hi - lo <= 1e-10 * hi) break;
    if (std::abs(g.value - 1.0) < 1e-13) {
      lo = hi = next;
      break;
    }
  }
  if (std::isinf(hi)) throw Error(ErrorCode::solver, "theta search did not bracket the constant", "theta");
  r.best_constant = hi;
  r.capacity = std::pow(hi, -p);
  r.residual = last.residual;
  r.iterations = total;
  return r;
}

double unconstrained_poincare_constant(int dim, int level, int order, double p, std::uint64_t seed) {
  GridShape g{dim, level};
  if (g.side() < 2 * (order + 1)) throw Error(ErrorCode::config, "grid too coarse for the gradient order");
  std::vector<std::uint8_t> all(g.size(), 1);
  FreeMap free = detail::make_free_map(all);
  NormTerm n0 = detail::make_term(g, 0, p, BoundaryPolicy::none, {}, free);
  NormTerm t = detail::make_term(g, order, p, BoundaryPolicy::none, {}, free);
  // orthonormal basis of polynomials of degree < order (the cell volume is uniform)
  Eigen::MatrixXd P = poly_matrix(g, free.cell_of_var, order - 1);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(P);
  Eigen::MatrixXd Z = qr.householderQ() * Eigen::MatrixXd::Identity(P.rows(), P.cols());
  auto project = [&](const Vec& x) { return Vec(x - Z * (Z.transpose() * x)); };
  if (p == 2.0) {
    // projected inverse iteration on A + M
    detail::SpMat A = t.quadratic_form();
    detail::SpMat M = n0.quadratic_form();
    detail::SpMat S = A + M;
    Eigen::SimplicialLDLT<detail::SpMat> ldlt(S);
    if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::solver, "factorization failed");
    Vec x = project(Vec::LinSpaced(free.size(), -1.0, 1.0).array().cube().matrix() + Vec::Ones(free.size()) * 0.1);
    double lambda = 0.0, prev = kInf;
    for (int it = 0; it < 5000; ++it) {
      x = project(x);
      x /= std::sqrt(x.dot(M * x));
      lambda = x.dot(A * x);
      if (std::abs(prev - lambda) <= 1e-13 * lambda) break;
      prev = lambda;
      x = ldlt.solve(Vec(M * x));
    }
    return 1.0 / std::sqrt(lambda);
  }
  detail::Objective obj = [&](const Vec& x, Vec* grad) {
    Vec u = project(x);
    double a = t.norm(x);
    double n = n0.norm(u);
    if (!(n > 0.0)) return kInf;
    if (grad) {
      Vec ga = Vec::Zero(x.size()), gn = Vec::Zero(x.size());
      t.add_power_gradient(x, std::pow(a, 1.0 - p) / p / a, ga);
      n0.add_power_gradient(u, std::pow(n, 1.0 - p) / p / n, gn);
      *grad = ga - project(gn);
    }
    return std::log(a) - std::log(n);
  };
  double best = 0.0;
  std::vector<Vec> starts = make_starts(g, free, order, 8, seed, false);
  for (auto& s0 : starts) {
    Vec s1 = project(s0);
    if (s1.norm() < 1e-9 * std::max(1.0, s0.norm())) continue;
    detail::DescentResult res = detail::lbfgs_minimize(obj, s1, {});
    if (std::isfinite(res.f)) best = std::max(best, std::exp(-res.f));
  }
  return best;
}

double default_theta_a0(int dim, int level, int k, double p1) {
  return 2.0 * unconstrained_poincare_constant(dim, level, k + 1, p1);
}

NormEquivalence norm_equivalence_constant(const DyadicCube& sub, int dim, int m, int k, double p, double p1,
                                          int grid_level, std::uint64_t seed) {
  if (m <= k + 1) throw Error(ErrorCode::precondition, "norm equivalence needs m > k + 1", "m>k+1");
  if (k < 0 || p < 1.0 || !(p1 >= 1.0)) throw Error(ErrorCode::config, "invalid exponents");
  if (!p1_admissible(dim, m, k, p, p1))
    throw Error(ErrorCode::precondition, "p1 outside the admissible range for this (N, m, k, p)", "p1-range");
  GridShape g{dim, grid_level};
  const std::int64_t cells = static_cast<std::int64_t>(std::ldexp(1.0, grid_level - sub.level));
  if (sub.level < 0 || cells < 2 || cells < m)
    throw Error(ErrorCode::precondition, "sub-cube must span at least two cells (and m cells)", "side>=2cells");
  // Every term kills polynomials of degree <= k, so u can be shifted to vanish
  // on a unisolvent corner set of cells; pinning those removes the kernel.
  std::vector<std::uint8_t> mask(g.size(), 1);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    Coord c = g.coord(i);
    std::int64_t sum = 0;
    for (int d = 0; d < dim; ++d) sum += c[d];
    if (sum <= k) mask[i] = 0;
  }
  FreeMap free = detail::make_free_map(mask);
  auto box_at = [&](const Coord& coords) {
    CellBox b;
    for (int i = 0; i < dim; ++i) {
      b.lo[i] = coords[i] * cells;
      b.hi[i] = b.lo[i] + cells;
    }
    return b;
  };
  Coord other = sub.coords;
  const std::int64_t n_sub = std::int64_t{1} << sub.level;
  for (int i = 0; i < dim; ++i) other[i] = n_sub - 1 - sub.coords[i];
  if (other == sub.coords) other[0] = sub.coords[0] > 0 ? sub.coords[0] - 1 : std::min<std::int64_t>(1, n_sub - 1);
  auto solve = [&](const Coord& coords, double& resid) {
    CellBox b = box_at(coords);
    RatioProblem prob;
    prob.numerator = detail::make_term(g, k + 1, p1, BoundaryPolicy::none, {}, free);
    prob.denominator.emplace_back(1.0, detail::make_term(g, k + 1, p1, BoundaryPolicy::none, {}, free, &b));
    prob.denominator.emplace_back(1.0, detail::make_term(g, m, p, BoundaryPolicy::none, {}, free));
    RatioSolution sol;
    if (detail::eigen_applicable(prob)) {
      sol = detail::minimize_ratio_eigen(prob, {});
      if (!sol.positive_definite) throw Error(ErrorCode::solver, "norm-equivalence form is singular");
    } else {
      auto starts = make_starts(g, free, m, 8, seed, false);
      detail::DescentOptions dopt;
      dopt.max_iterations = 6000;
      sol = detail::minimize_ratio_descent(prob, starts, dopt);
    }
    resid = sol.residual;
    return sol.value > 0.0 ? 1.0 / sol.value : kInf;
  };
  NormEquivalence out;
  double r2 = 0.0;
  out.constant = solve(sub.coords, out.residual);
  out.constant_translated = solve(other, r2);
  out.residual = std::max(out.residual, r2);
  return out;
}

std::vector<ThetaGammaRow> theta_gamma_comparison(
    const std::vector<std::pair<std::string, ConstraintSet>>& corpus, int m, int k, double p, double p1,
    const SolverOptions& opt) {
  std::vector<ThetaGammaRow> rows;
  for (const auto& [label, c] : corpus) {
    ThetaGammaRow row;
    row.label = label;
    row.gamma = gamma_capacity(c, m, k, p, p1, opt);
    row.theta = theta_capacity(c, m, k, p, p1, 0.0, opt);
    if (row.gamma.status == CapacityStatus::finite && row.theta.status == CapacityStatus::finite &&
        row.gamma.capacity > 0.0)
      row.ratio = row.theta.capacity / row.gamma.capacity;
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {
nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
}  // namespace

nlohmann::json CapacityResult::to_json() const {
  nlohmann::json j;
  j["flavor"] = flavor_name(flavor);
  j["dim"] = dim;
  j["grid_level"] = grid_level;
  j["m"] = m;
  j["k"] = k;
  j["p"] = p;
  j["p1"] = p1;
  j["alpha_A0"] = alpha_A0;
  j["best_constant"] = finite_or_null(best_constant);
  j["capacity"] = finite_or_null(capacity);
  j["status"] = status_name(status);
  j["a0_too_small"] = a0_too_small;
  j["solver"] = solver_name(solver);
  j["residual"] = residual;
  j["iterations"] = iterations;
  j["seed"] = seed;
  j["constraint"] = constraint;
  return j;
}

nlohmann::json to_json(const std::vector<ThetaGammaRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["label"] = r.label;
    j["gamma"] = r.gamma.to_json();
    j["theta"] = r.theta.to_json();
    j["ratio"] = r.ratio ? nlohmann::json(*r.ratio) : nlohmann::json(nullptr);
    j["ratio_note"] = r.ratio ? "theta/gamma" : "undefined";
    out.push_back(j);
  }
  return out;
}

}  // namespace hardylab
