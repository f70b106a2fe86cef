#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hardylab/domain.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

using Point = std::array<double, kMaxDim>;

struct DyadicCube {
  int level = 0;
  Coord coords{0, 0, 0};
  // Accepted at the grid level although its distance to the complement is
  // below its diameter (boundary layer of single cells).
  bool resolution_limited = false;

  double side() const { return std::ldexp(1.0, -level); }
  double diam(int dim) const { return std::sqrt(static_cast<double>(dim)) * side(); }
  CellBox cells(int grid_level) const;
};

struct EnlargedCube {
  Point center{0, 0, 0};  // point of the complement boundary nearest to Q
  double side = 0.0;      // nominal side, may extend past the box
  std::int64_t parent = -1;

  Point lo(int dim) const;
  Point hi(int dim) const;
  // Cells whose centers lie in R_Q, clipped to the grid.
  CellBox cells(const GridShape& shape) const;
};

// Affine map x -> (x - corner) / gamma taking R_Q onto the unit cube.
struct RescaleMap {
  Point corner{0, 0, 0};
  double gamma = 1.0;
  int dim = 2;

  Point forward(const Point& x) const;
  Point inverse(const Point& y) const;
};

RescaleMap rescale_map(const EnlargedCube& r, int dim);

struct WhitneyDecomposition {
  GridShape shape;
  std::vector<DyadicCube> cubes;
  std::vector<EnlargedCube> enlarged;
  std::vector<double> distance;            // grid-measured dist(complement, Q)
  std::vector<std::int64_t> owner;         // cube id per cell, -1 outside
  std::vector<std::int64_t> neighbor_offsets;
  std::vector<std::int64_t> neighbor_ids;  // {Q' : Q' meets R_Q}, CSR layout
  int finest_level = 0;
  int coarsest_level = 0;

  std::size_t size() const { return cubes.size(); }
  std::vector<std::int64_t> neighbors(std::size_t q) const {
    return {neighbor_ids.begin() + neighbor_offsets[q], neighbor_ids.begin() + neighbor_offsets[q + 1]};
  }
  double diam(std::size_t q) const { return cubes[q].diam(shape.dim); }
};

WhitneyDecomposition decompose(const GridDomain& domain);

// Largest admissible diameter ratio diam Q' / diam Q for Q' meeting R_Q.
double intersection_cutoff(int dim);

// Exhaustive check of the decomposition invariants.
struct WhitneyValidity {
  std::int64_t cubes = 0;
  std::int64_t strict = 0;              // diam <= dist <= 4 diam exactly
  std::int64_t resolution_limited = 0;  // single cells with dist < diam
  std::int64_t violations = 0;          // cubes failing their applicable condition
  double max_deficit_cells = 0.0;       // largest (diam - dist)/h on limited cells
  double max_dist_ratio = 0.0;          // max dist/diam
  bool cover_exact = false;
  std::int64_t touching_pairs = 0;
  double min_touching_ratio = 1.0;
  double max_touching_ratio = 1.0;
  double max_neighbor_ratio = 0.0;      // over the neighbor index
  double neighbor_bound = 0.0;          // 5 sqrt(N)
  bool enlarged_ok = false;             // R_Q covers Q and side <= 10 diam
  bool ok() const;
};

WhitneyValidity validate(const GridDomain& domain, const WhitneyDecomposition& decomp);

// Packing count of the summation bound: lattice cubes of one level whose
// enlarged cube can meet a fixed cube.
std::int64_t packing_count(int dim);

struct SummationTerms {
  double lhs = 0.0;
  double rhs_bound = 0.0;
  double integral = 0.0;     // integral of f over the domain
  double constant = 0.0;     // rhs_bound / integral
  double delta_ratio = 0.0;  // max delta/diam over cube cells
};

SummationTerms summation_lemma_ratio(const GridDomain& domain, const WhitneyDecomposition& decomp,
                                     const std::vector<double>& f, double s);

// SVG of a planar decomposition; R_Q outlines are drawn when overlay is set.
// Optional per-cube field values shade the cubes.
std::string decomposition_svg(const WhitneyDecomposition& decomp, bool overlay,
                              const std::vector<double>* field = nullptr);

}  // namespace hardylab
