#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardylab/capacity.hpp"
#include "hardylab/domain.hpp"
#include "hardylab/whitney.hpp"

namespace hardylab {

enum class HardyCase { A, B, C, D, E };
enum class HardyForm { holder, integral };

std::string case_name(HardyCase c);
std::string form_name(HardyForm f);
HardyCase parse_case(const std::string& s);

struct HardyParams {
  int m = 1;
  int k = 0;
  int h = 0;         // Hölder form: order of the differentiated function
  double p = 2.0;
  double p1 = 2.0;
  double q = 2.0;
  double s = -1.0;
  double lambda = 0.5;
  double p0 = 0.0;   // Cases B and D
  HardyCase hcase = HardyCase::A;
  HardyForm form = HardyForm::integral;
  bool cone = false;          // admissible class restricted to u >= 0
  double theta_a0 = -1.0;     // <= 0 selects the default A0
  int capacity_level = -1;    // unit-cube grid for the per-cube capacities, -1 picks by dimension
  std::uint64_t seed = 1;

  // Exponent of the capacity and of the local L^p norm: p, or p0 in B and D.
  double local_exponent() const;
  nlohmann::json to_json() const;
};

struct WeightExponents {
  double t = 0.0;
  double s1 = 0.0;
};

// t for the chosen form and s1 = -(m-k-1)p1 - N + (p1/p)(s+N). Throws a
// precondition error naming the clause when the form's preconditions fail.
WeightExponents weight_exponents(const HardyParams& params, int N);

// f(Q) in [0,1] with unit l^sigma norm, sigma = r'/(r'-1) and r' = max(p,p1)/q.
struct LsWeightFunction {
  std::vector<double> values;  // per Whitney cube
  double sequence_exponent = 0.0;
  double conjugate = 0.0;      // max(p,p1)/q

  double norm() const;
  // Equal weight on the listed cubes, zero elsewhere.
  static LsWeightFunction equidistributed(std::size_t cubes, const std::vector<std::int64_t>& support,
                                          const HardyParams& params);
};

struct CubeCapacity {
  std::int64_t cube = -1;
  int level = 0;
  std::uint64_t key = 0;          // hash of the rescaled zero set
  std::int64_t zero_cells = 0;
  CapacityStatus status = CapacityStatus::finite;
  double capacity = 0.0;          // Lambda(x) on the cube
  double best_constant = 0.0;     // local Poincaré constant, +inf when unbounded
  double lambda1 = 1.0;           // Lambda_1(x): 1 for Gamma, the Theta value for Theta
  bool cached = false;
};

struct CapacityField {
  CapacityFlavor flavor = CapacityFlavor::gamma;
  double exponent = 2.0;
  int grid_level = 4;
  double theta_a0 = 0.0;
  std::vector<CubeCapacity> cubes;
  std::int64_t distinct_sets = 0;
  double min_capacity = 0.0;
  double max_capacity = 0.0;
  std::int64_t degenerate_cubes = 0;  // Lambda = 0: empty zero set or polynomial kernel

  std::vector<double> values() const;
  nlohmann::json to_json() const;
};

// Zero set of the admissible class on the rescaled R_Q, sampled at cell centers
// of the unit-cube grid.
ConstraintSet rescaled_constraint(const GridDomain& domain, const WhitneyDecomposition& decomp, std::size_t q,
                                  int grid_level, bool cone);

int default_capacity_level(int dim);

// Gamma in Cases A/B, Theta in C/D, exponent p or p0. Case E uses Gamma with k = m-1.
CapacityField per_cube_capacity_field(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                      const HardyParams& params);

struct BoundFactor {
  std::string name;
  double value = 0.0;
  std::string note;
};

struct HardyBoundReport {
  HardyCase hcase = HardyCase::A;
  HardyForm form = HardyForm::integral;
  HardyParams params;
  WeightExponents exponents;
  // Constant of the two-term inequality with unweighted LHS (Lambda folded in).
  double constant_A = 0.0;
  // Constants of the two RHS terms separately; their sum bounds the one-term
  // inequality when k = m-1 and p1 = p.
  double low_term_constant = 0.0;
  double high_term_constant = 0.0;
  std::optional<double> one_term_constant;
  // A(N)/(1-2^-sigma) with sigma the decay exponent of the summation step.
  double summation_constant = 0.0;
  double summation_measured = 0.0;
  double sigma = 0.0;
  std::vector<BoundFactor> factors;
  CapacityField field;
  std::optional<double> direct_estimate;  // best constant A (root of the ratio)
  bool sound = true;
  bool degenerate = false;
  std::vector<std::string> notes;

  // Re-evaluates soundness against a direct estimate.
  void attach_direct(double estimate);
  nlohmann::json to_json() const;
  std::string provenance_csv() const;
};

struct BoundOptions {
  std::optional<LsWeightFunction> f;
  std::optional<double> dim_loc;  // B/D: skips the estimate when given
};

HardyBoundReport constructive_bound(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const HardyParams& params, const BoundOptions& opt = {});

// Same assembly with a capacity field computed elsewhere (shared across s).
HardyBoundReport constructive_bound(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    const HardyParams& params, const CapacityField& field,
                                    const BoundOptions& opt = {});

struct DirectOptions {
  int random_starts = 6;
  int max_iterations = 3000;
  // Weight distance is max(delta, floor) + shift * h; see weight_distance in the source.
  double distance_shift_cells = 0.5;
};

struct DirectEstimate {
  double ratio = 0.0;     // sup of int |u|^p delta^{s-mp} / int |grad^m u|^p delta^s
  double constant = 0.0;  // ratio^{1/p}
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string method;
  int level = 0;
  std::vector<double> maximizer;  // per cell, zero off the domain

  nlohmann::json to_json() const;
};

DirectEstimate direct_best_constant(const GridDomain& domain, const HardyParams& params,
                                    const DirectOptions& opt = {});

struct RefinementStudy {
  std::vector<int> levels;
  std::vector<double> ratios;
  // Fit of 1/ratio(L) = mu + c/(L + b)^2, the rate of truncated Hardy quotients;
  // extrapolated = 1/mu.
  double extrapolated = 0.0;
  double fit_c = 0.0;
  double fit_b = 0.0;
  double fit_rms = 0.0;

  nlohmann::json to_json() const;
};

RefinementStudy refine_direct(const DomainSpec& spec, const HardyParams& params, const std::vector<int>& levels,
                              const DirectOptions& opt = {});

struct CaseEReport {
  bool declined = false;
  std::string reason;
  double b = 0.0;        // min over cubes of Gamma_{m,m-1,p}
  double beta = 0.0;     // auxiliary exponent, s = -beta on the Case A side
  double s0 = 0.0;
  double a_prime = 0.0;  // one-term constant at s = -beta
  double a_second = 0.0; // measured operator norm of the lower-order map
  double lower_transfer = 0.0;  // measured bound of the lower-order sum of u' by that of u
  double c = 0.0;        // feasibility constant of c >= beta^{1-1/p}
  double constant_at_s0 = 0.0;       // one-term constant at s = s0
  double constant_at_half_s0 = 0.0;  // one-term constant at s = s0/2
  std::vector<std::pair<double, double>> beta_scan;  // (beta, dominance margin)
  HardyBoundReport bound;  // at s = -beta

  nlohmann::json to_json() const;
};

// Shift of the weight exponent through u' = u delta^{(beta'-beta)/p} with beta' = -beta.
CaseEReport case_e_shift(const GridDomain& domain, const WhitneyDecomposition& decomp, const HardyParams& params);

struct ProbeCheck {
  int probes = 0;
  int holding = 0;
  double worst_ratio = 0.0;  // max lhs / (A rhs)
};

// Evaluates the one-term integral inequality with constant A on random
// smooth probes supported in the domain.
ProbeCheck check_probes(const GridDomain& domain, const HardyParams& params, double A, int probes,
                        std::uint64_t seed);

enum class CorollaryCase { i, ii, iii, iv, v, vi, vii, viii, ix, x };
CorollaryCase parse_corollary_case(const std::string& s);
std::string corollary_case_name(CorollaryCase c);

struct HypothesisLine {
  std::string name;
  bool ok = false;
  std::string detail;
};

struct CorollaryReport {
  CorollaryCase ccase = CorollaryCase::i;
  bool hypotheses_ok = false;
  std::vector<HypothesisLine> hypotheses;
  std::optional<HardyBoundReport> bound;
  std::vector<std::string> caveats;

  nlohmann::json to_json() const;
};

struct CorollaryOptions {
  double capacity_floor = 1e-6;  // grid proxy of "capacity >= const > 0"
  int r = -1;                    // projection dimension for (v)-(viii), -1 means N
  double projection_b = -1.0;    // minimal side, negative means half the smallest R_Q side
  double signature_threshold = 0.15;
};

CorollaryReport corollary_check(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                    CorollaryCase ccase, const HardyParams& params,
                                    const CorollaryOptions& opt = {});

}  // namespace hardylab
