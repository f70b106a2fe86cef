#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hardylab/grid.hpp"

namespace hardylab {

enum class DomainKind {
  halfspace,
  interval,
  square,
  lshape,
  cube_minus_compact,
  koch_polygon,
  cantor_complement,
  raw_mask
};

struct BoxSet {
  std::array<double, kMaxDim> lo{0, 0, 0};
  std::array<double, kMaxDim> hi{0, 0, 0};
};

// Declarative description of a domain. Every field carries its default so the
// echo of a parsed spec is complete.
struct DomainSpec {
  DomainKind kind = DomainKind::square;
  int level = 8;
  int dim = 2;
  // halfspace
  int axis = -1;        // -1 means dim-1
  double offset = 0.5;  // boundary plane position along the axis
  // pre-fractals
  int iterations = 4;
  double ratio = 1.0 / 3.0;
  // cube-minus-compact
  std::vector<BoxSet> boxes;
  // raw-mask
  std::string path;
  // Outside ring of cells around the box. When false the box is a window
  // onto a domain that continues past it.
  int collar = -1;  // -1 means kind default
  double delta_floor_cells = 0.5;

  bool has_collar() const;
};

std::string domain_kind_name(DomainKind kind);
DomainSpec parse_domain_spec(const nlohmann::json& doc);
nlohmann::json to_json(const DomainSpec& spec);

inline constexpr std::int64_t kCellBudget = std::int64_t{1} << 24;

// Rasterized domain on [0,1]^dim.
class GridDomain {
 public:
  GridDomain() = default;

  const DomainSpec& spec() const { return spec_; }
  const GridShape& shape() const { return shape_; }
  int dim() const { return shape_.dim; }
  int level() const { return shape_.level; }
  double h() const { return shape_.h(); }
  bool collar() const { return collar_; }

  bool inside(std::int64_t idx) const { return mask_[idx] != 0; }
  bool inside(const Coord& c) const;  // out-of-box coordinates follow the collar/window rule
  const std::vector<std::uint8_t>& mask() const { return mask_; }

  // Distance from each cell center to the complement (cell-center metric,
  // corrected by half a cell); zero on outside cells.
  const std::vector<double>& delta() const { return delta_; }
  double delta_floor() const { return spec_.delta_floor_cells * h(); }

  // Smallest length of the generating construction (0 for smooth kinds).
  double feature_scale() const { return feature_scale_; }
  std::int64_t inside_count() const { return inside_count_; }

  // Inside cells face-adjacent to a complement cell (collar included).
  std::vector<std::uint8_t> boundary_cells() const;

  friend GridDomain rasterize(const DomainSpec& spec);
  friend GridDomain from_mask(const DomainSpec& spec, GridShape shape,
                              std::vector<std::uint8_t> mask);

 private:
  void finish();

  DomainSpec spec_;
  GridShape shape_;
  bool collar_ = true;
  std::vector<std::uint8_t> mask_;
  std::vector<double> delta_;
  double feature_scale_ = 0.0;
  std::int64_t inside_count_ = 0;
};

GridDomain rasterize(const DomainSpec& spec);
GridDomain from_mask(const DomainSpec& spec, GridShape shape, std::vector<std::uint8_t> mask);

// Squared lattice distance to the complement for a padded lattice that holds
// the collar ring when the domain has one. Exposed for the decomposition.
struct PaddedLattice {
  int pad = 0;
  std::array<std::int64_t, 3> extents{1, 1, 1};
  std::vector<std::uint8_t> outside;

  std::int64_t index(const Coord& c, int dim) const;  // c in box coordinates
  Coord box_coord(std::int64_t padded_idx, int dim) const;
};

PaddedLattice padded_complement(const GridDomain& domain);

// Text formats. Masks: header "NDGRID v1 <N> <L>" then one 0/1 character per
// cell (1 = inside), whitespace ignored. Functions: header "NDFN v1 <N> <L>"
// then one real per cell.
std::vector<std::uint8_t> read_mask_file(const std::string& path, GridShape& shape);
void write_mask_file(const std::string& path, const GridShape& shape,
                     const std::vector<std::uint8_t>& mask);
std::vector<double> read_function_file(const std::string& path, GridShape& shape);
void write_function_file(const std::string& path, const GridShape& shape,
                         const std::vector<double>& values);

}  // namespace hardylab
