#include "variational.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "hardylab/error.hpp"

namespace hardylab::detail {

FreeMap make_free_map(const std::vector<std::uint8_t>& free_mask) {
  FreeMap f;
  f.var_of_cell.assign(free_mask.size(), -1);
  for (std::size_t i = 0; i < free_mask.size(); ++i) {
    if (!free_mask[i]) continue;
    f.var_of_cell[i] = static_cast<std::int64_t>(f.cell_of_var.size());
    f.cell_of_var.push_back(static_cast<std::int64_t>(i));
  }
  return f;
}

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

Vec frob2(const NormTerm& t, const Vec& u, std::vector<Vec>* parts) {
  Vec f = Vec::Zero(t.positions());
  if (parts) parts->resize(t.diff.size());
  for (std::size_t a = 0; a < t.diff.size(); ++a) {
    Vec d = t.diff[a] * u;
    f += t.coeff[a] * d.cwiseAbs2();
    if (parts) (*parts)[a] = std::move(d);
  }
  return f;
}

}  // namespace

double NormTerm::power(const Vec& u) const {
  Vec f = frob2(*this, u, nullptr);
  if (p == 2.0) return weight.dot(f);
  long double acc = 0.0L;
  const double e2 = p < 2.0 ? smoothing * smoothing : 0.0;
  const double ep = p < 2.0 ? std::pow(smoothing, p) : 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    if (weight[i] == 0.0) continue;
    acc += static_cast<long double>(weight[i] * (std::pow(f[i] + e2, 0.5 * p) - ep));
  }
  return static_cast<double>(acc);
}

double NormTerm::norm(const Vec& u) const { return std::pow(std::max(0.0, power(u)), 1.0 / p); }

void NormTerm::add_power_gradient(const Vec& u, double scale, Vec& g) const {
  std::vector<Vec> parts;
  Vec f = frob2(*this, u, &parts);
  Vec factor(f.size());
  const double e2 = p < 2.0 ? smoothing * smoothing : 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i)
    factor[i] = p == 2.0 ? 2.0 * weight[i] : weight[i] * p * std::pow(f[i] + e2, 0.5 * p - 1.0);
  for (std::size_t a = 0; a < diff.size(); ++a)
    g += scale * coeff[a] * (diff[a].transpose() * factor.cwiseProduct(parts[a]));
}

SpMat NormTerm::quadratic_form() const {
  SpMat out(diff.empty() ? 0 : diff[0].cols(), diff.empty() ? 0 : diff[0].cols());
  for (std::size_t a = 0; a < diff.size(); ++a) {
    SpMat wd = (coeff[a] * weight).asDiagonal() * diff[a];
    SpMat q = SpMat(diff[a].transpose()) * wd;
    out += q;
  }
  return out;
}

NormTerm make_term(const GridShape& shape, int order, double p, BoundaryPolicy policy,
                   const std::vector<double>& position_weight, const FreeMap& free, const CellBox* region) {
  NormTerm t;
  t.order = order;
  t.p = p;
  const int dim = shape.dim;
  CellBox pos = region ? *region : position_box(shape, order, policy);
  auto defined = [&](const Coord& x, const Coord& alpha) {
    if (!region) return stencil_defined(shape, x, alpha, policy);
    for (int i = 0; i < dim; ++i)
      if (x[i] + alpha[i] >= region->hi[i]) return false;
    return true;
  };
  const std::int64_t npos = pos.count(dim);
  if (!position_weight.empty() && static_cast<std::int64_t>(position_weight.size()) != npos)
    throw Error(ErrorCode::config, "position weight size mismatch");
  t.weight = Vec::Constant(npos, shape.cell_volume());
  if (!position_weight.empty())
    for (std::int64_t i = 0; i < npos; ++i) t.weight[i] *= position_weight[i];
  const double scale = std::pow(shape.h(), -order);
  for (const auto& alpha : multi_indices(dim, order)) {
    std::vector<std::pair<Coord, double>> taps;
    CellBox tb;
    for (int i = 0; i < dim; ++i) tb.hi[i] = alpha[i] + 1;
    for_each_cell(tb, dim, [&](const Coord& o) {
      double c = scale;
      for (int i = 0; i < dim; ++i) {
        c *= binom(static_cast<int>(alpha[i]), static_cast<int>(o[i]));
        if ((alpha[i] - o[i]) % 2) c = -c;
      }
      taps.push_back({o, c});
    });
    std::vector<Eigen::Triplet<double>> trip;
    std::int64_t row = 0;
    for_each_cell(pos, dim, [&](const Coord& x) {
      if (defined(x, alpha)) {
        for (const auto& [o, c] : taps) {
          Coord y = x;
          for (int i = 0; i < dim; ++i) y[i] += o[i];
          if (!shape.contains(y)) continue;
          std::int64_t v = free.var_of_cell[shape.index(y)];
          if (v >= 0) trip.emplace_back(row, v, c);
        }
      }
      ++row;
    });
    SpMat d(npos, free.size());
    d.setFromTriplets(trip.begin(), trip.end());
    t.diff.push_back(std::move(d));
    t.coeff.push_back(multiplicity(alpha, dim));
  }
  return t;
}

std::vector<double> position_weights(const GridShape& shape, int order, BoundaryPolicy policy,
                                     const WeightField& w) {
  CellBox pos = position_box(shape, order, policy);
  std::vector<double> out;
  out.reserve(pos.count(shape.dim));
  for_each_cell(pos, shape.dim, [&](const Coord& x) { out.push_back(w.at(shape, x)); });
  return out;
}

double ratio_value(const RatioProblem& prob, const Vec& u) {
  double den = 0.0;
  for (const auto& [c, t] : prob.denominator) den += c * t.norm(u);
  double num = prob.numerator.norm(u);
  return num > 0.0 ? den / num : std::numeric_limits<double>::infinity();
}

namespace {

// J(x) = log(sum c_i N_i(u)) - log N_0(u), with u = x or u = x^2 on the cone.
double objective(const RatioProblem& prob, const Vec& x, Vec* grad) {
  Vec u = prob.cone ? Vec(x.cwiseAbs2()) : x;
  const double n0p = prob.numerator.power(u);
  if (!(n0p > 0.0)) return std::numeric_limits<double>::infinity();
  const double n0 = std::pow(n0p, 1.0 / prob.numerator.p);
  double den = 0.0;
  std::vector<double> ni(prob.denominator.size());
  for (std::size_t i = 0; i < prob.denominator.size(); ++i) {
    const auto& [c, t] = prob.denominator[i];
    ni[i] = t.norm(u);
    den += c * ni[i];
  }
  if (!(den > 0.0)) return -std::numeric_limits<double>::infinity();
  if (grad) {
    Vec g = Vec::Zero(x.size());
    for (std::size_t i = 0; i < prob.denominator.size(); ++i) {
      const auto& [c, t] = prob.denominator[i];
      double pw = std::pow(ni[i], t.p);
      if (pw <= 0.0) continue;
      // d N / du = N^{1-p} / p * d(N^p)/du
      t.add_power_gradient(u, c * std::pow(ni[i], 1.0 - t.p) / t.p / den, g);
    }
    prob.numerator.add_power_gradient(u, -std::pow(n0, 1.0 - prob.numerator.p) / prob.numerator.p / n0, g);
    if (prob.cone) g = 2.0 * x.cwiseProduct(g);
    *grad = std::move(g);
  }
  return std::log(den) - std::log(n0);
}

}  // namespace

DescentResult lbfgs_minimize(const Objective& obj, Vec x, const DescentOptions& opt) {
  DescentResult res;
  x /= x.norm();
  Vec g;
  double f = obj(x, &g);
  res.f = f;
  res.x = x;
  if (!std::isfinite(f)) return res;
  std::deque<std::pair<Vec, Vec>> mem;
  std::vector<double> history{f};
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    // two-loop recursion
    Vec q = g;
    std::vector<double> alpha(mem.size());
    for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
      const auto& [s, y] = mem[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    double gamma = mem.empty() ? 0.05 / std::max(g.norm(), 1e-300)
                               : mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
    Vec d = gamma * q;
    for (std::size_t i = 0; i < mem.size(); ++i) {
      const auto& [s, y] = mem[i];
      double beta = y.dot(d) / y.dot(s);
      d += (alpha[i] - beta) * s;
    }
    d = -d;
    double gd = g.dot(d);
    if (!(gd < 0.0)) {
      mem.clear();
      d = -0.05 / std::max(g.norm(), 1e-300) * g;
      gd = g.dot(d);
    }
    double t = 1.0;
    Vec xn, gn;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      xn = x + t * d;
      fn = obj(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * t * gd) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      if (!mem.empty()) {
        mem.clear();
        continue;
      }
      res.converged = true;  // no descent left at machine precision
      break;
    }
    Vec s = xn - x, y = gn - g;
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
    if (s.dot(y) > 1e-14 * s.norm() * y.norm()) {
      mem.emplace_back(std::move(s), std::move(y));
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    double xnorm = x.norm();
    if (xnorm > 2.0 || xnorm < 0.5) {
      x /= xnorm;
      g *= xnorm;
      mem.clear();
    }
    history.push_back(f);
    if (g.norm() * x.norm() < opt.tolerance) {
      res.converged = true;
      break;
    }
    const std::size_t win = 20;
    if (history.size() > win && history[history.size() - 1 - win] - f < opt.tolerance * std::max(1.0, std::abs(f))) {
      res.converged = true;
      break;
    }
  }
  res.iterations = it;
  res.f = f;
  res.x = x;
  res.residual = g.norm() * x.norm();
  return res;
}

namespace {

RatioSolution lbfgs(const RatioProblem& prob, const Vec& x0, const DescentOptions& opt) {
  DescentResult r = lbfgs_minimize([&](const Vec& x, Vec* g) { return objective(prob, x, g); }, x0, opt);
  RatioSolution sol;
  sol.value = std::isfinite(r.f) ? std::exp(r.f) : (r.f < 0 ? 0.0 : std::numeric_limits<double>::infinity());
  sol.u = prob.cone ? Vec(r.x.cwiseAbs2()) : r.x;
  sol.residual = r.residual;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  return sol;
}

}  // namespace

RatioSolution minimize_ratio_descent(const RatioProblem& prob, const std::vector<Vec>& starts,
                                     const DescentOptions& opt) {
  RatioSolution best;
  best.value = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& s0 : starts) {
    if (s0.size() == 0 || s0.norm() == 0.0) continue;
    Vec x = prob.cone ? Vec(s0.cwiseAbs().cwiseSqrt()) : s0;
    if (x.norm() == 0.0) continue;
    RatioSolution sol = lbfgs(prob, x, opt);
    if (!any || sol.value < best.value) {
      best = std::move(sol);
      any = true;
    }
  }
  if (!any) throw Error(ErrorCode::solver, "descent received no usable starting point");
  return best;
}

EigenPair smallest_eigenpair(const SpMat& S, const SpMat& M, const Vec* warm, const EigenOptions& opt) {
  EigenPair out;
  const Eigen::Index n = S.rows();
  if (n == 0) {
    out.positive_definite = false;
    return out;
  }
  Eigen::SimplicialLDLT<SpMat> ldlt(S);
  if (ldlt.info() != Eigen::Success) {
    out.positive_definite = false;
    return out;
  }
  const Vec diag = ldlt.vectorD();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (!(diag.minCoeff() > 1e-13 * dmax)) {
    out.positive_definite = false;
    return out;
  }
  // Subspace iteration with Rayleigh-Ritz: the lowest Ritz pair converges at
  // rate lambda_1 / lambda_{b+1}, robust to clustered low eigenvalues.
  const Eigen::Index bsz = std::min<Eigen::Index>(n, 6);
  Eigen::MatrixXd X(n, bsz);
  for (Eigen::Index j = 0; j < bsz; ++j)
    for (Eigen::Index i = 0; i < n; ++i)
      X(i, j) = (j == 0 ? 1.0 : 0.0) + std::sin(1.0 + 0.7 * static_cast<double>(i) * static_cast<double>(j + 1));
  if (warm && warm->size() == n && warm->norm() > 0.0) X.col(0) = *warm;
  Vec x = X.col(0);
  const double s_norm = S.norm(), m_norm = M.norm();
  double lambda = 0.0, prev = std::numeric_limits<double>::infinity();
  int stable = 0;
  double best_res = std::numeric_limits<double>::infinity();
  int best_it = 0;
  for (int it = 1; it <= opt.max_iterations; ++it) {
    Eigen::MatrixXd MX = M * X;
    Eigen::MatrixXd Y(n, bsz);
    for (Eigen::Index j = 0; j < bsz; ++j) Y.col(j) = ldlt.solve(Vec(MX.col(j)));
    // M-orthonormalize Y through the Ritz problem
    Eigen::MatrixXd SY = S * Y, MY = M * Y;
    Eigen::MatrixXd Ks = Y.transpose() * SY, Km = Y.transpose() * MY;
    Ks = 0.5 * (Ks + Ks.transpose());
    Km = 0.5 * (Km + Km.transpose());
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(Ks, Km);
    if (rr.info() != Eigen::Success) {
      // the block lost rank; fall back to the leading vector alone
      Y.conservativeResize(n, 1);
      Ks = Y.transpose() * (S * Y);
      Km = Y.transpose() * (M * Y);
      Eigen::MatrixXd V = Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(Km(0, 0)));
      X = Y * V;
    } else {
      X = Y * rr.eigenvectors();
    }
    x = X.col(0);
    Vec mx = M * x, sx = S * x;
    const double mn = x.dot(mx);
    if (!(mn > 0.0)) throw Error(ErrorCode::solver, "inverse iteration lost the mass norm");
    lambda = x.dot(sx) / mn;
    // backward error, so the rounding floor does not depend on the scaling of S
    out.residual = (sx - lambda * mx).norm() / std::max(1e-300, (s_norm + lambda * m_norm) * x.norm());
    out.iterations = it;
    if (out.residual < opt.tolerance) break;
    // residual at its rounding floor: no halving in 30 iterations
    if (out.residual < 0.5 * best_res) {
      best_res = out.residual;
      best_it = it;
    } else if (it - best_it >= 30) {
      break;
    }
    if (std::abs(prev - lambda) <= 1e-10 * lambda) {
      if (++stable >= 3) break;
    } else {
      stable = 0;
    }
    prev = lambda;
  }
  x /= std::sqrt(x.dot(M * x));
  out.lambda = lambda;
  out.x = std::move(x);
  return out;
}

bool eigen_applicable(const RatioProblem& prob) {
  if (prob.cone || prob.numerator.p != 2.0 || prob.denominator.empty() || prob.denominator.size() > 2) return false;
  for (const auto& [c, t] : prob.denominator)
    if (t.p != 2.0) return false;
  return true;
}

RatioSolution minimize_ratio_eigen(const RatioProblem& prob, const EigenOptions& opt, const Vec* warm) {
  if (!eigen_applicable(prob)) throw Error(ErrorCode::config, "eigen route needs p = 2 and no cone");
  RatioSolution sol;
  const SpMat M = prob.numerator.quadratic_form();
  const double c1 = prob.denominator[0].first;
  const SpMat A = prob.denominator[0].second.quadratic_form();
  if (prob.denominator.size() == 1) {
    EigenPair e = smallest_eigenpair(c1 * c1 * A, M, warm, opt);
    sol.positive_definite = e.positive_definite;
    if (!e.positive_definite) return sol;
    sol.value = std::sqrt(std::max(0.0, e.lambda));
    sol.u = e.x;
    sol.residual = e.residual;
    sol.iterations = e.iterations;
    sol.converged = e.residual < 1e-11;
    return sol;
  }
  const double c2 = prob.denominator[1].first;
  const SpMat B = prob.denominator[1].second.quadratic_form();
  auto solve_at = [&](double theta, const Vec* start) {
    SpMat S = (c1 * c1 / theta) * A + (c2 * c2 / (1.0 - theta)) * B;
    return smallest_eigenpair(S, M, start, opt);
  };
  double best_t = 0.0;
  EigenPair best;
  best.lambda = std::numeric_limits<double>::infinity();
  Vec start = warm ? *warm : Vec();
  int total = 0;
  auto scan = [&](int j) {
    EigenPair e = solve_at(1.0 / (1.0 + std::exp(-static_cast<double>(j))), start.size() ? &start : nullptr);
    total += e.iterations;
    if (!e.positive_definite) return false;
    if (!std::isfinite(e.lambda) || e.x.size() == 0)
      throw Error(ErrorCode::solver, "inverse iteration produced no eigenpair");
    start = e.x;
    if (e.lambda < best.lambda) {
      best = e;
      best_t = j;
    }
    return true;
  };
  for (int j = -4; j <= 4; ++j)
    if (!scan(j)) {
      sol.positive_definite = false;
      return sol;
    }
  // the optimum can sit far toward either end when one term nearly vanishes
  for (int j = 5; j <= 20 && best_t == j - 1; ++j)
    if (!scan(j)) break;
  for (int j = -5; j >= -20 && best_t == j + 1; --j)
    if (!scan(j)) break;
  // lambda(theta) is minimized by golden section in logit(theta) around the
  // best scan point; each solve is warm-started from the previous vector
  auto value_of = [&](const Vec& u) {
    double a = std::sqrt(std::max(0.0, u.dot(A * u)));
    double b = std::sqrt(std::max(0.0, u.dot(B * u)));
    double n = std::sqrt(std::max(0.0, u.dot(M * u)));
    return (c1 * a + c2 * b) / n;
  };
  double value = value_of(best.x);
  Vec u = best.x;
  double resid = best.residual;
  auto eval = [&](double t) {
    EigenPair e = solve_at(1.0 / (1.0 + std::exp(-t)), &u);
    total += e.iterations;
    if (!e.positive_definite || e.x.size() == 0 || !std::isfinite(e.lambda))
      return std::numeric_limits<double>::infinity();
    double v = value_of(e.x);
    if (v < value) {
      value = v;
      u = e.x;
      resid = e.residual;
    }
    return v;
  };
  const double t0 = best_t;
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = t0 - 1.0, hi = t0 + 1.0;
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = eval(x1), f2 = eval(x2);
  for (int it = 0; it < 60 && hi - lo > 1e-7; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = eval(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = eval(x2);
    }
    if (std::abs(f1 - f2) <= 1e-13 * value) break;
  }
  sol.value = value;
  sol.u = u;
  sol.residual = resid;
  sol.iterations = total;
  sol.converged = resid < 1e-11;
  return sol;
}

}  // namespace hardylab::detail
