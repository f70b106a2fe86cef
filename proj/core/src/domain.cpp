#include "hardylab/domain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "hardylab/edt.hpp"
#include "hardylab/error.hpp"

namespace hardylab {

namespace {

struct KindEntry {
  DomainKind kind;
  const char* name;
  std::set<std::string> keys;
};

const std::vector<KindEntry>& kind_table() {
  static const std::vector<KindEntry> table = {
      {DomainKind::halfspace, "halfspace", {"dim", "axis", "offset", "collar", "delta_floor_cells"}},
      {DomainKind::interval, "interval", {"collar", "delta_floor_cells"}},
      {DomainKind::square, "square", {"dim", "collar", "delta_floor_cells"}},
      {DomainKind::lshape, "lshape", {"collar", "delta_floor_cells"}},
      {DomainKind::cube_minus_compact, "cube-minus-compact", {"dim", "boxes", "collar", "delta_floor_cells"}},
      {DomainKind::koch_polygon, "koch-polygon", {"iterations", "collar", "delta_floor_cells"}},
      {DomainKind::cantor_complement, "cantor-complement", {"iterations", "ratio", "collar", "delta_floor_cells"}},
      {DomainKind::raw_mask, "raw-mask", {"path", "collar", "delta_floor_cells"}},
  };
  return table;
}

const KindEntry& entry_for(DomainKind kind) {
  for (const auto& e : kind_table())
    if (e.kind == kind) return e;
  throw Error(ErrorCode::config, "unknown domain kind");
}

template <class T>
T get_typed(const nlohmann::json& obj, const char* key) {
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, std::string("parameter '") + key + "': " + e.what(), key);
  }
}

constexpr double kKochSide = 0.7;

std::vector<std::array<double, 2>> koch_vertices(int iterations) {
  const double r = kKochSide / std::sqrt(3.0);
  std::vector<std::array<double, 2>> pts;
  for (int i = 0; i < 3; ++i) {
    double a = std::numbers::pi / 2.0 + i * 2.0 * std::numbers::pi / 3.0;
    pts.push_back({0.5 + r * std::cos(a), 0.5 + r * std::sin(a)});
  }
  const double c = std::cos(-std::numbers::pi / 3.0), s = std::sin(-std::numbers::pi / 3.0);
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::array<double, 2>> next;
    next.reserve(pts.size() * 4);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      auto p = pts[i];
      auto q = pts[(i + 1) % pts.size()];
      std::array<double, 2> d{(q[0] - p[0]) / 3.0, (q[1] - p[1]) / 3.0};
      std::array<double, 2> a{p[0] + d[0], p[1] + d[1]};
      std::array<double, 2> b{p[0] + 2 * d[0], p[1] + 2 * d[1]};
      std::array<double, 2> tip{a[0] + c * d[0] - s * d[1], a[1] + s * d[0] + c * d[1]};
      next.push_back(p);
      next.push_back(a);
      next.push_back(tip);
      next.push_back(b);
    }
    pts = std::move(next);
  }
  return pts;
}

std::vector<std::array<double, 2>> cantor_intervals(int iterations, double ratio) {
  std::vector<std::array<double, 2>> iv{{0.0, 1.0}};
  for (int it = 0; it < iterations; ++it) {
    std::vector<std::array<double, 2>> next;
    next.reserve(iv.size() * 2);
    for (auto [a, b] : iv) {
      double len = (b - a) * ratio;
      next.push_back({a, a + len});
      next.push_back({b - len, b});
    }
    iv = std::move(next);
  }
  return iv;
}

void mark_boxes(const GridShape& shape, const std::vector<BoxSet>& boxes,
                std::vector<std::uint8_t>& mask) {
  const double h = shape.h();
  for (const auto& b : boxes) {
    CellBox cells;
    bool any = true;
    for (int i = 0; i < shape.dim; ++i) {
      cells.lo[i] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(b.lo[i] / h - 0.5)));
      cells.hi[i] = std::min<std::int64_t>(shape.side(),
                                           static_cast<std::int64_t>(std::floor(b.hi[i] / h - 0.5)) + 1);
      if (cells.hi[i] <= cells.lo[i]) any = false;
    }
    if (any) {
      for_each_cell(cells, shape.dim, [&](const Coord& c) { mask[shape.index(c)] = 0; });
    } else {
      // Set thinner than a cell: remove the cell holding its center.
      Coord c{0, 0, 0};
      for (int i = 0; i < shape.dim; ++i) {
        double mid = 0.5 * (b.lo[i] + b.hi[i]);
        c[i] = std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(mid / h)), 0, shape.side() - 1);
      }
      mask[shape.index(c)] = 0;
    }
  }
}

void fill_polygon(const GridShape& shape, const std::vector<std::array<double, 2>>& poly,
                  std::vector<std::uint8_t>& mask) {
  const std::int64_t n = shape.side();
  std::vector<double> xs;
  for (std::int64_t row = 0; row < n; ++row) {
    double y = shape.center(row);
    xs.clear();
    for (std::size_t i = 0; i < poly.size(); ++i) {
      auto p = poly[i];
      auto q = poly[(i + 1) % poly.size()];
      if ((p[1] <= y && q[1] > y) || (q[1] <= y && p[1] > y)) {
        double t = (y - p[1]) / (q[1] - p[1]);
        xs.push_back(p[0] + t * (q[0] - p[0]));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      auto c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(xs[k] / shape.h() - 0.5)));
      auto c1 = std::min<std::int64_t>(n - 1, static_cast<std::int64_t>(std::floor(xs[k + 1] / shape.h() - 0.5)));
      for (std::int64_t col = c0; col <= c1; ++col) {
        double x = shape.center(col);
        if (x > xs[k] && x < xs[k + 1]) mask[row * n + col] = 1;
      }
    }
  }
}

}  // namespace

std::string domain_kind_name(DomainKind kind) { return entry_for(kind).name; }

bool DomainSpec::has_collar() const {
  if (collar >= 0) return collar != 0;
  return !(kind == DomainKind::halfspace || kind == DomainKind::cantor_complement);
}

DomainSpec parse_domain_spec(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::config, "domain spec must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.key() != "kind" && it.key() != "level" && it.key() != "parameters")
      throw Error(ErrorCode::config, "unknown domain spec field '" + it.key() + "'", it.key());
  }
  if (!doc.contains("kind") || !doc["kind"].is_string())
    throw Error(ErrorCode::config, "domain spec needs a string 'kind'", "kind");
  std::string kind_name = doc["kind"];
  const KindEntry* entry = nullptr;
  for (const auto& e : kind_table())
    if (kind_name == e.name) entry = &e;
  if (!entry) throw Error(ErrorCode::config, "unknown domain kind '" + kind_name + "'", "kind");

  DomainSpec spec;
  spec.kind = entry->kind;
  nlohmann::json params = doc.value("parameters", nlohmann::json::object());
  if (!params.is_object()) throw Error(ErrorCode::config, "'parameters' must be an object", "parameters");
  for (auto it = params.begin(); it != params.end(); ++it) {
    if (!entry->keys.count(it.key()))
      throw Error(ErrorCode::config,
                  "parameter '" + it.key() + "' is not valid for kind '" + kind_name + "'", it.key());
  }

  if (spec.kind == DomainKind::interval || spec.kind == DomainKind::cantor_complement) spec.dim = 1;
  if (params.contains("dim")) spec.dim = get_typed<int>(params, "dim");
  if (spec.dim < 1 || spec.dim > kMaxDim)
    throw Error(ErrorCode::config, "dim must lie in [1, 3]", "dim");
  if (params.contains("axis")) spec.axis = get_typed<int>(params, "axis");
  if (spec.kind == DomainKind::halfspace) {
    if (spec.axis < 0) spec.axis = spec.dim - 1;
    if (spec.axis >= spec.dim) throw Error(ErrorCode::config, "axis must be below dim", "axis");
  }
  if (params.contains("offset")) spec.offset = get_typed<double>(params, "offset");
  if (spec.offset <= 0.0 || spec.offset >= 1.0)
    throw Error(ErrorCode::config, "offset must lie in (0, 1)", "offset");
  if (spec.kind == DomainKind::koch_polygon) spec.iterations = 4;
  if (spec.kind == DomainKind::cantor_complement) spec.iterations = 4;
  if (params.contains("iterations")) spec.iterations = get_typed<int>(params, "iterations");
  if (spec.iterations < 0) throw Error(ErrorCode::config, "iterations must be >= 0", "iterations");
  if (spec.kind == DomainKind::koch_polygon && spec.iterations > 8)
    throw Error(ErrorCode::config, "koch iterations above 8 exceed the vertex budget", "iterations");
  if (spec.kind == DomainKind::cantor_complement && spec.iterations > 20)
    throw Error(ErrorCode::config, "cantor iterations above 20 exceed the interval budget", "iterations");
  if (params.contains("ratio")) spec.ratio = get_typed<double>(params, "ratio");
  if (!(spec.ratio > 0.0 && spec.ratio < 0.5))
    throw Error(ErrorCode::config, "ratio must lie in (0, 1/2)", "ratio");
  if (spec.kind == DomainKind::lshape || spec.kind == DomainKind::koch_polygon) spec.dim = 2;
  if (params.contains("boxes")) {
    const auto& arr = params["boxes"];
    if (!arr.is_array()) throw Error(ErrorCode::config, "boxes must be an array", "boxes");
    for (const auto& b : arr) {
      if (!b.is_array() || b.size() != 2 || !b[0].is_array() || !b[1].is_array() ||
          static_cast<int>(b[0].size()) != spec.dim || static_cast<int>(b[1].size()) != spec.dim)
        throw Error(ErrorCode::config, "each box is [[lo...], [hi...]] with dim entries", "boxes");
      BoxSet box;
      for (int i = 0; i < spec.dim; ++i) {
        box.lo[i] = b[0][i].get<double>();
        box.hi[i] = b[1][i].get<double>();
        if (box.lo[i] > box.hi[i] || box.lo[i] < 0.0 || box.hi[i] > 1.0)
          throw Error(ErrorCode::config, "box corners must satisfy 0 <= lo <= hi <= 1", "boxes");
      }
      spec.boxes.push_back(box);
    }
  }
  if (spec.kind == DomainKind::cube_minus_compact && spec.boxes.empty())
    throw Error(ErrorCode::config, "cube-minus-compact needs at least one box", "boxes");
  if (params.contains("path")) spec.path = get_typed<std::string>(params, "path");
  if (spec.kind == DomainKind::raw_mask && spec.path.empty())
    throw Error(ErrorCode::config, "raw-mask needs a 'path'", "path");
  if (params.contains("collar")) spec.collar = get_typed<bool>(params, "collar") ? 1 : 0;
  if (params.contains("delta_floor_cells")) spec.delta_floor_cells = get_typed<double>(params, "delta_floor_cells");
  if (!(spec.delta_floor_cells > 0.0 && spec.delta_floor_cells <= 0.5))
    throw Error(ErrorCode::config, "delta_floor_cells must lie in (0, 1/2]", "delta_floor_cells");

  if (doc.contains("level")) {
    if (!doc["level"].is_number_integer()) throw Error(ErrorCode::config, "level must be an integer", "level");
    spec.level = doc["level"];
  } else if (spec.kind == DomainKind::raw_mask) {
    spec.level = -1;  // taken from the file
  }
  if (spec.level != -1 && (spec.level < 4 || spec.level > 14))
    throw Error(ErrorCode::config, "level must lie in [4, 14]", "level");
  if (spec.level != -1) {
    GridShape shape{spec.dim, spec.level};
    if (static_cast<double>(spec.level) * spec.dim > 24.0 || shape.size() > kCellBudget)
      throw Error(ErrorCode::config, "grid exceeds the cell budget of 2^24 cells", "level");
  }
  return spec;
}

nlohmann::json to_json(const DomainSpec& spec) {
  nlohmann::json p = nlohmann::json::object();
  const auto& keys = entry_for(spec.kind).keys;
  if (keys.count("dim")) p["dim"] = spec.dim;
  if (keys.count("axis")) p["axis"] = spec.axis;
  if (keys.count("offset")) p["offset"] = spec.offset;
  if (keys.count("iterations")) p["iterations"] = spec.iterations;
  if (keys.count("ratio")) p["ratio"] = spec.ratio;
  if (keys.count("boxes")) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& b : spec.boxes) {
      nlohmann::json lo = nlohmann::json::array(), hi = nlohmann::json::array();
      for (int i = 0; i < spec.dim; ++i) {
        lo.push_back(b.lo[i]);
        hi.push_back(b.hi[i]);
      }
      arr.push_back({lo, hi});
    }
    p["boxes"] = arr;
  }
  if (keys.count("path")) p["path"] = spec.path;
  p["collar"] = spec.has_collar();
  p["delta_floor_cells"] = spec.delta_floor_cells;
  return {{"kind", domain_kind_name(spec.kind)}, {"level", spec.level}, {"parameters", p}};
}

bool GridDomain::inside(const Coord& c) const {
  if (shape_.contains(c)) return mask_[shape_.index(c)] != 0;
  if (collar_) return false;
  Coord k = c;
  for (int i = 0; i < shape_.dim; ++i) k[i] = std::clamp<std::int64_t>(k[i], 0, shape_.side() - 1);
  return mask_[shape_.index(k)] != 0;
}

std::vector<std::uint8_t> GridDomain::boundary_cells() const {
  std::vector<std::uint8_t> out(mask_.size(), 0);
  CellBox all;
  for (int i = 0; i < dim(); ++i) {
    all.lo[i] = 0;
    all.hi[i] = shape_.side();
  }
  for_each_cell(all, dim(), [&](const Coord& c) {
    auto idx = shape_.index(c);
    if (!mask_[idx]) return;
    for (int i = 0; i < dim(); ++i) {
      for (int d : {-1, 1}) {
        Coord nb = c;
        nb[i] += d;
        if (!shape_.contains(nb) && !collar_) continue;
        if (!inside(nb)) {
          out[idx] = 1;
          return;
        }
      }
    }
  });
  return out;
}

std::int64_t PaddedLattice::index(const Coord& c, int dim) const {
  std::int64_t idx = 0;
  for (int i = dim - 1; i >= 0; --i) idx = idx * extents[i] + (c[i] + pad);
  return idx;
}

Coord PaddedLattice::box_coord(std::int64_t padded_idx, int dim) const {
  Coord c{0, 0, 0};
  for (int i = 0; i < dim; ++i) {
    c[i] = padded_idx % extents[i] - pad;
    padded_idx /= extents[i];
  }
  return c;
}

PaddedLattice padded_complement(const GridDomain& domain) {
  PaddedLattice lat;
  const int dim = domain.dim();
  const auto n = domain.shape().side();
  lat.pad = domain.collar() ? 1 : 0;
  std::int64_t total = 1;
  for (int i = 0; i < dim; ++i) {
    lat.extents[i] = n + 2 * lat.pad;
    total *= lat.extents[i];
  }
  lat.outside.assign(total, lat.pad ? 1 : 0);
  CellBox all;
  for (int i = 0; i < dim; ++i) all.hi[i] = n;
  for_each_cell(all, dim, [&](const Coord& c) {
    lat.outside[lat.index(c, dim)] = domain.inside(domain.shape().index(c)) ? 0 : 1;
  });
  return lat;
}

void GridDomain::finish() {
  inside_count_ = std::count(mask_.begin(), mask_.end(), std::uint8_t{1});
  if (inside_count_ == 0) throw Error(ErrorCode::degenerate, "the domain has no inside cells");
  if (!collar_ && inside_count_ == shape_.size())
    throw Error(ErrorCode::precondition, "complement is empty: no outside cell in the box and no collar",
                "complement_nonempty");
  PaddedLattice lat = padded_complement(*this);
  DistanceField df = exact_distance_transform(lat.outside, dim(), lat.extents);
  delta_.assign(mask_.size(), 0.0);
  CellBox all;
  for (int i = 0; i < dim(); ++i) all.hi[i] = shape_.side();
  const double floor = delta_floor();
  for_each_cell(all, dim(), [&](const Coord& c) {
    auto idx = shape_.index(c);
    if (!mask_[idx]) return;
    double d = std::sqrt(static_cast<double>(df.sq_dist[lat.index(c, dim())])) - 0.5;
    delta_[idx] = std::max(floor, d * h());
  });
}

GridDomain from_mask(const DomainSpec& spec, GridShape shape, std::vector<std::uint8_t> mask) {
  GridDomain d;
  d.spec_ = spec;
  d.spec_.dim = shape.dim;
  d.spec_.level = shape.level;
  d.shape_ = shape;
  d.collar_ = spec.has_collar();
  d.mask_ = std::move(mask);
  d.finish();
  return d;
}

GridDomain rasterize(const DomainSpec& spec) {
  GridShape shape{spec.dim, spec.level};
  std::vector<std::uint8_t> mask;
  double feature = 0.0;
  auto all_box = [&] {
    CellBox b;
    for (int i = 0; i < shape.dim; ++i) b.hi[i] = shape.side();
    return b;
  };
  switch (spec.kind) {
    case DomainKind::halfspace: {
      mask.assign(shape.size(), 0);
      for_each_cell(all_box(), shape.dim, [&](const Coord& c) {
        if (shape.center(c[spec.axis]) > spec.offset) mask[shape.index(c)] = 1;
      });
      break;
    }
    case DomainKind::interval:
    case DomainKind::square:
      mask.assign(shape.size(), 1);
      break;
    case DomainKind::lshape: {
      mask.assign(shape.size(), 1);
      for_each_cell(all_box(), shape.dim, [&](const Coord& c) {
        if (shape.center(c[0]) > 0.5 && shape.center(c[1]) > 0.5) mask[shape.index(c)] = 0;
      });
      break;
    }
    case DomainKind::cube_minus_compact:
      mask.assign(shape.size(), 1);
      mark_boxes(shape, spec.boxes, mask);
      break;
    case DomainKind::koch_polygon:
      mask.assign(shape.size(), 0);
      fill_polygon(shape, koch_vertices(spec.iterations), mask);
      feature = kKochSide * std::pow(3.0, -spec.iterations);
      break;
    case DomainKind::cantor_complement: {
      mask.assign(shape.size(), 1);
      std::vector<BoxSet> boxes;
      for (auto [a, b] : cantor_intervals(spec.iterations, spec.ratio)) {
        BoxSet box;
        box.lo[0] = a;
        box.hi[0] = b;
        boxes.push_back(box);
      }
      mark_boxes(shape, boxes, mask);
      feature = std::pow(spec.ratio, spec.iterations);
      break;
    }
    case DomainKind::raw_mask: {
      GridShape file_shape;
      mask = read_mask_file(spec.path, file_shape);
      if (spec.level != -1 && (file_shape.level != spec.level))
        throw Error(ErrorCode::config, "raw mask level differs from the spec level", "level");
      DomainSpec s = spec;
      return from_mask(s, file_shape, std::move(mask));
    }
  }
  GridDomain d = from_mask(spec, shape, std::move(mask));
  d.feature_scale_ = feature;
  return d;
}

std::vector<std::uint8_t> read_mask_file(const std::string& path, GridShape& shape) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open mask file '" + path + "'", "path");
  std::string magic, version;
  int dim = 0, level = 0;
  if (!(in >> magic >> version >> dim >> level) || magic != "NDGRID" || version != "v1")
    throw Error(ErrorCode::config, "mask file lacks the 'NDGRID v1 <N> <L>' header", "path");
  if (dim < 1 || dim > kMaxDim || level < 4 || level > 14)
    throw Error(ErrorCode::config, "mask header dimension or level out of range", "path");
  shape = GridShape{dim, level};
  if (shape.size() > kCellBudget || static_cast<double>(dim) * level > 24.0)
    throw Error(ErrorCode::config, "mask exceeds the cell budget", "path");
  std::vector<std::uint8_t> mask;
  mask.reserve(shape.size());
  char ch;
  while (in.get(ch)) {
    if (std::isspace(static_cast<unsigned char>(ch))) continue;
    if (ch != '0' && ch != '1')
      throw Error(ErrorCode::config, std::string("unexpected character in mask: '") + ch + "'", "path");
    if (static_cast<std::int64_t>(mask.size()) == shape.size())
      throw Error(ErrorCode::config, "mask has more cells than 2^(N*L)", "path");
    mask.push_back(ch == '1');
  }
  if (static_cast<std::int64_t>(mask.size()) != shape.size())
    throw Error(ErrorCode::config, "mask has fewer cells than 2^(N*L)", "path");
  return mask;
}

void write_mask_file(const std::string& path, const GridShape& shape,
                     const std::vector<std::uint8_t>& mask) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "NDGRID v1 " << shape.dim << ' ' << shape.level << '\n';
  const auto n = shape.side();
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    out << (mask[i] ? '1' : '0');
    if ((i + 1) % n == 0) out << '\n';
  }
}

std::vector<double> read_function_file(const std::string& path, GridShape& shape) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open function file '" + path + "'", "path");
  std::string magic, version;
  int dim = 0, level = 0;
  if (!(in >> magic >> version >> dim >> level) || magic != "NDFN" || version != "v1")
    throw Error(ErrorCode::config, "function file lacks the 'NDFN v1 <N> <L>' header", "path");
  if (dim < 1 || dim > kMaxDim || level < 0 || level > 14)
    throw Error(ErrorCode::config, "function header dimension or level out of range", "path");
  shape = GridShape{dim, level};
  if (shape.size() > kCellBudget) throw Error(ErrorCode::config, "function exceeds the cell budget", "path");
  std::vector<double> values;
  values.reserve(shape.size());
  std::string tok;
  while (in >> tok) {
    if (static_cast<std::int64_t>(values.size()) == shape.size())
      throw Error(ErrorCode::config, "function file has more values than cells", "path");
    try {
      std::size_t used = 0;
      double v = std::stod(tok, &used);
      if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
      values.push_back(v);
    } catch (const std::exception&) {
      throw Error(ErrorCode::config, "non-numeric value '" + tok + "' in function file", "path");
    }
  }
  if (static_cast<std::int64_t>(values.size()) != shape.size())
    throw Error(ErrorCode::config, "function file has fewer values than cells", "path");
  return values;
}

void write_function_file(const std::string& path, const GridShape& shape,
                         const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
  out << "NDFN v1 " << shape.dim << ' ' << shape.level << '\n';
  out.precision(17);
  const auto n = shape.side();
  for (std::int64_t i = 0; i < shape.size(); ++i) {
    out << values[i] << (((i + 1) % n == 0) ? '\n' : ' ');
  }
}

}  // namespace hardylab
