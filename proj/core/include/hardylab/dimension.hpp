#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardylab/domain.hpp"
#include "hardylab/whitney.hpp"

namespace hardylab {

struct LevelValue {
  int level = 0;
  double value = 0.0;
  std::int64_t cubes = 0;
};

struct GsResult {
  double s = 0.0;
  double clamp = 0.0;
  double sup_value = 0.0;
  std::vector<LevelValue> per_level;  // coarse to fine
  std::vector<double> per_cube;
};

// Per cube (diam Q)^{s-N} * integral over R_Q of the domain of max(delta, clamp)^{-s}.
// A negative clamp means the domain's floor (half a cell by default).
GsResult g_s(const GridDomain& domain, const WhitneyDecomposition& decomp, double s, double clamp = -1.0);

enum class DimensionKind { loc, mc_loc };
std::string dimension_kind_name(DimensionKind k);

struct DimensionOptions {
  int fit_levels = 4;
  double divergence_slope = 0.25;  // per-level log2 growth that counts as divergent
  double mc_slope = 0.0;           // same role for box counts, which carry no log correction
  int scan_points = 40;            // coarse s grid before bisection
  int bisection_steps = 14;
  double clamp = -1.0;
  // Levels whose enlarged cubes cannot hold one generator piece of a
  // pre-fractal are left out of the fit (they only see a polygon).
  bool respect_feature_scale = true;
};

struct DimensionEstimate {
  DimensionKind kind = DimensionKind::loc;
  double value = 0.0;
  double s0_or_d = 0.0;
  std::vector<LevelValue> per_level_sups;  // at the threshold parameter
  std::vector<int> fit_levels;             // levels (or box-count exponents) used in the fit
  double divergence_slope = 0.0;           // fitted slope at the threshold parameter
  double threshold = 0.0;
  std::pair<double, double> confidence_band{0.0, 0.0};
  std::vector<std::pair<double, double>> slope_curve;  // (parameter, fitted slope) on the scan grid

  nlohmann::json to_json() const;
};

// Least-squares slope of log2(value) against coarsening (minus level).
double growth_slope(const std::vector<LevelValue>& pts);

DimensionEstimate dim_loc(const GridDomain& domain, const WhitneyDecomposition& decomp,
                          const DimensionOptions& opt = {});

// Box counts of the rescaled boundary pieces R_Q with dyadic boxes of side
// 2^-j relative to R_Q; the upper content is the sup over cubes.
struct BoxCounts {
  std::vector<int> exponents;            // j
  std::vector<double> sup_counts;        // sup over cubes of N_j
  std::vector<std::int64_t> contributors;
};
BoxCounts rescaled_box_counts(const GridDomain& domain, const WhitneyDecomposition& decomp,
                              bool respect_feature_scale = true);

DimensionEstimate dim_mc_loc(const GridDomain& domain, const WhitneyDecomposition& decomp,
                             const DimensionOptions& opt = {});

struct SignaturePair {
  std::int64_t a = -1;
  std::int64_t b = -1;
  std::string component;
  double distance = 0.0;
};

struct SelfSimilarityReport {
  double max_discrepancy = 0.0;
  double threshold = 0.0;
  bool consistent = true;  // max_discrepancy <= threshold
  std::int64_t cubes_compared = 0;
  std::vector<std::string> components;
  std::vector<SignaturePair> flagged_pairs;
  std::string label = "heuristic";

  nlohmann::json to_json() const;
};

// Compares a scale- and rotation-free signature of the complement inside a
// ball of radius ball_fraction * side(R_Q) centered at the R_Q center. Only a
// necessary condition for similarity: a large discrepancy refutes it at grid
// scale, a small one is merely consistent with it.
SelfSimilarityReport selfsimilarity_signature(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                              double ball_fraction, double threshold = 0.15);

// CSV tables for external plotting.
std::string gs_table_csv(const std::vector<GsResult>& rows);
std::string box_count_csv(const BoxCounts& counts);

}  // namespace hardylab
