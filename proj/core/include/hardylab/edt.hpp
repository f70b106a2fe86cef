#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace hardylab {

inline constexpr std::int64_t kNoSite = -1;

// Exact squared Euclidean distance transform on an integer lattice together
// with the feature transform (index of a nearest site). Separable lower-envelope
// algorithm, linear in the number of cells.
struct DistanceField {
  std::vector<std::int64_t> sq_dist;  // squared lattice distance, -1 when no site exists
  std::vector<std::int64_t> feature;  // linear index of a nearest site, kNoSite when none
};

// extents[i] cells along axis i, axis 0 fastest in the linear index.
DistanceField exact_distance_transform(const std::vector<std::uint8_t>& sites, int dim,
                                       const std::array<std::int64_t, 3>& extents);

}  // namespace hardylab
