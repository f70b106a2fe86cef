#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardylab/grid.hpp"
#include "hardylab/whitney.hpp"

namespace hardylab {

enum class ConstraintKind { zero_on_compact, nonnegative_cone, zero_on_compact_and_nonnegative, full_space };
std::string constraint_kind_name(ConstraintKind kind);

// Admissible class on the unit-cube grid. K holds the cells forced to zero.
struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::full_space;
  GridShape grid{2, 4};
  std::vector<std::uint8_t> K;  // empty means no zero cells

  bool has_zero_set() const {
    return kind == ConstraintKind::zero_on_compact || kind == ConstraintKind::zero_on_compact_and_nonnegative;
  }
  bool has_cone() const {
    return kind == ConstraintKind::nonnegative_cone || kind == ConstraintKind::zero_on_compact_and_nonnegative;
  }
  std::int64_t zero_count() const;
  std::uint64_t hash() const;

  static ConstraintSet full_space(int dim, int level);
  // K = cells with center coordinate along axis below width.
  static ConstraintSet face_slab(int dim, int level, int axis, double width, bool cone = false);
  static ConstraintSet from_mask(int dim, int level, std::vector<std::uint8_t> zero_cells, bool cone = false);
};

// Image of K under a symmetry of the cube: axis permutation then reflections.
ConstraintSet transform(const ConstraintSet& c, const std::array<int, 3>& perm, const std::array<bool, 3>& flip);

enum class CapacityFlavor { gamma, theta };
enum class SolverKind { eigen_exact, descent };
enum class CapacityStatus { finite, unbounded, saturated };

std::string flavor_name(CapacityFlavor f);
std::string solver_name(SolverKind s);
std::string status_name(CapacityStatus s);

struct SolverOptions {
  std::optional<SolverKind> solver;  // unset: eigen when p = p1 = 2 without the cone
  std::uint64_t seed = 1;
  int random_starts = 8;
  int max_iterations = 3000;
};

struct CapacityResult {
  CapacityFlavor flavor = CapacityFlavor::gamma;
  int dim = 2;
  int grid_level = 4;
  int m = 1;
  int k = 0;
  double p = 2.0;
  double p1 = 2.0;
  double alpha_A0 = 0.0;       // Theta only
  double best_constant = 0.0;  // +inf when unbounded
  double capacity = 0.0;       // +inf when saturated
  CapacityStatus status = CapacityStatus::finite;
  bool a0_too_small = false;
  SolverKind solver = SolverKind::eigen_exact;
  double residual = 0.0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string constraint;

  nlohmann::json to_json() const;
};

// Ranges of p1 for which the (k+1)-term is controlled, with d = m - k - 1:
// p1 <= Np/(N - dp) when N > dp, p1 < inf when N = dp, any p1 otherwise.
bool p1_admissible(int dim, int m, int k, double p, double p1);

// True when a nonzero polynomial of degree <= degree vanishes on K (and is
// nonnegative on every cell when the cone is imposed).
bool admits_polynomial(const ConstraintSet& c, int degree);

// sup ||u||_p / (||grad^{k+1} u||_p1 + ||grad^m u||_p) over the admissible class.
CapacityResult gamma_capacity(const ConstraintSet& c, int m, int k, double p, double p1,
                              const SolverOptions& opt = {});

// sup (||u||_p - A0 ||grad^{k+1} u||_p1)_+ / ||grad^m u||_p. A0 <= 0 selects the default.
CapacityResult theta_capacity(const ConstraintSet& c, int m, int k, double p, double p1, double A0,
                              const SolverOptions& opt = {});

// sup over u of inf over polynomials P of degree < order of ||u - P||_p / ||grad^order u||_p
// on the full unit-cube grid (p = 2 exact; otherwise the L2 projection is used,
// which can only enlarge the value).
double unconstrained_poincare_constant(int dim, int level, int order, double p, std::uint64_t seed = 1);
double default_theta_a0(int dim, int level, int k, double p1);

struct NormEquivalence {
  double constant = 0.0;             // estimate at the given position
  double constant_translated = 0.0;  // same cube size, other position
  double residual = 0.0;
};

// Smallest A with ||grad^{k+1}u||_{p1,Q0} <= A(||grad^{k+1}u||_{p1,Q} + ||grad^m u||_{p,Q0})
// over probes (polynomials up to degree m and random fields), maximized by descent.
NormEquivalence norm_equivalence_constant(const DyadicCube& sub, int dim, int m, int k, double p, double p1,
                                          int grid_level, std::uint64_t seed = 1);

struct ThetaGammaRow {
  std::string label;
  CapacityResult gamma;
  CapacityResult theta;
  std::optional<double> ratio;  // theta / gamma capacity when both are finite and positive
};

std::vector<ThetaGammaRow> theta_gamma_comparison(
    const std::vector<std::pair<std::string, ConstraintSet>>& corpus, int m, int k, double p, double p1,
    const SolverOptions& opt = {});

nlohmann::json to_json(const std::vector<ThetaGammaRow>& rows);

}  // namespace hardylab
