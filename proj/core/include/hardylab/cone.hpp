#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardylab/domain.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/whitney.hpp"

namespace hardylab {

// Product cutoff eta(x) = prod phi(x_i) on the unit cube centered at 0: phi is
// 1 on [-1/2, 1/2], vanishes outside (-2/3, 2/3) and is smooth in between.
struct CutoffFamily {
  static constexpr double alpha = 4.0 / 3.0;
  static constexpr double beta = 16.0 / 9.0;

  static double profile(double t);
  // eta((x - center) / side), x and center in the same units.
  static double eval(const Point& x, const Point& center, double side, int dim);
};

// Values on a rectangular block of cells, lengths measured in units of the
// owning cube's side. Zero outside the block.
struct LocalPatch {
  int dim = 1;
  std::array<std::int64_t, kMaxDim> extent{1, 1, 1};
  double h = 1.0;               // cell size in cube units
  std::array<double, kMaxDim> origin{0, 0, 0};  // center of the first cell relative to the cube center
  std::vector<double> values;   // axis 0 fastest

  std::int64_t size() const;
  std::int64_t index(const Coord& c) const;
  Point center(const Coord& c) const;
};

// (sum_{k<=m} ||grad^k u||_p^p)^{1/p} on the patch with zero extension.
double patch_norm(const LocalPatch& u, int m, double p);
double patch_seminorm_power(const LocalPatch& u, int k, double p);

// The kernel is G = (I - kappa^2 Laplacian)^{-m/2} with Dirichlet conditions
// on the patch: the inverse of an M-matrix power, so entrywise positive.
struct MajorantOptions {
  double kernel_scale = 0.25;     // kappa in cube units
  double tikhonov_scale = 1e-6;   // Tikhonov parameter is this times h^2 (cube units)
};

struct MajorantResult {
  LocalPatch v;
  double a0 = 0.0;              // patch_norm(v) / patch_norm(u), 0 when u = 0
  double defect = 0.0;          // max (u - v)_+ before repair
  double residual = 0.0;        // ||G f - u|| / ||u|| of the regularized deconvolution
  double condition = 1.0;       // largest over smallest singular value of G
  std::int64_t kernel_width = 1;  // kappa in cells
};

// v >= max(u, 0) on the patch from a positive-kernel representation u ~ G f:
// v = eta_{(4/3)Q} (G f_+) plus the positive part of any remaining defect.
// The patch is taken as the (16/9)Q block with the cube centered at 0.
MajorantResult local_majorant(const LocalPatch& u, int m, double p, const MajorantOptions& opt = {});

struct CubeSplitLog {
  std::int64_t cube = -1;
  double input_norm = 0.0;     // patch_norm of eta_Q u
  double majorant_norm = 0.0;  // patch_norm of v_Q
  double a0 = 0.0;
  double defect = 0.0;
};

struct IntegralTest {
  std::vector<int> levels;       // Whitney levels, finest last
  std::vector<double> shell;     // int over cubes of that level of |u|^p delta^{-mp+s}
  double slope = 0.0;            // log2 shell against level over the finest populated levels
  bool finite = true;
  double total = 0.0;
};

// Level-shell version of the refinement test: the weighted integral is finite
// when the finest shells decay at least like 2^{-threshold j}.
IntegralTest weighted_integral_test(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const std::vector<double>& u, int m, double p, double s,
                                    double threshold = 0.25);

struct ConeSplit {
  std::vector<double> u1, u2;
  double norm_factor = 0.0;      // max_i ||u_i|| / ||u|| in W^{m,p}(delta^s)
  double exactness_error = 0.0;  // max |u1 - u2 - u|
  double min_value = 0.0;        // min over cells of min(u1, u2)
  std::int64_t overlap = 0;       // max number of v_Q whose stencil positions reach a point
  std::int64_t cell_overlap = 0;  // max number of (16/9)Q patches through a cell
  std::vector<BoundFactor> factors;
  double chain_constant = 0.0;   // product of the factors
  double chain_lhs = 0.0;        // ||v||^p
  double chain_rhs = 0.0;        // ||u||^p_{L^p(delta^{-mp+s})} + ||grad^m u||^p_{L^p(delta^s)}
  bool chain_holds = false;
  IntegralTest integral;
  std::vector<CubeSplitLog> per_cube_log;

  nlohmann::json to_json(bool with_cubes = false) const;
};

// u = u1 - u2 with u1, u2 >= 0. Throws a hypothesis error when the weighted
// integral of |u|^p delta^{-mp+s} diverges under the shell test.
ConeSplit cone_split(const GridDomain& domain, const WhitneyDecomposition& decomp, const std::vector<double>& u,
                     int m, double p, double s, const MajorantOptions& opt = {});

// Probe families used by the generation checks.
enum class ProbeKind { bump, oscillating, boundary_power };
struct ConeProbe {
  std::string name;
  ProbeKind kind = ProbeKind::bump;
  double exponent = 0.0;  // boundary_power: u = dist^exponent times a smooth profile
  std::vector<double> values;
};

std::vector<ConeProbe> cone_probes(const GridDomain& domain, int count, std::uint64_t seed);
ConeProbe boundary_power_probe(const GridDomain& domain, double exponent, std::uint64_t seed);

// Which theorem the hypotheses are routed for: the generation statement for
// W^{m,p}_0(delta^s) (corollary cases i, ii, v, vi, ix, x) or the two-sided
// statement for m = 2 (its cases i-iv map to corollary cases iii, iv, vii, viii).
enum class ConeTheorem { generation, two_sided };
std::string cone_theorem_name(ConeTheorem t);
ConeTheorem parse_cone_theorem(const std::string& s);
CorollaryCase routed_corollary_case(ConeTheorem t, const std::string& theorem_case);

struct ConeProbeRow {
  std::string probe;
  bool integral_finite = false;
  bool split_ok = false;
  bool consistent = false;
  double norm_factor = 0.0;
  double slope = 0.0;
  std::string detail;
};

struct ConeGenerationReport {
  ConeTheorem theorem = ConeTheorem::generation;
  std::string theorem_case;
  CorollaryReport corollary;
  std::vector<ConeProbeRow> rows;
  bool pass = false;

  nlohmann::json to_json() const;
};

ConeGenerationReport cone_generation_check(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                           ConeTheorem theorem, const std::string& theorem_case,
                                           const HardyParams& params, int probes = 8);

// Evidence table for the odd/even conjecture on unweighted spaces: split
// success and norm factors on a probe set, no assertion.
struct ConjectureRow {
  std::string domain;
  int m = 1;
  int probes = 0;
  int splits = 0;
  double max_norm_factor = 0.0;
  double max_a0 = 0.0;
};

std::vector<ConjectureRow> conjecture_table(const std::vector<DomainSpec>& domains, const std::vector<int>& orders,
                                            double p, int probes, std::uint64_t seed);
nlohmann::json conjecture_table_json(const std::vector<ConjectureRow>& rows);

}  // namespace hardylab
