#pragma once

// Terrain: a single-valued heightfield paired with convex foothold polygons,
// a grid index for nearest-foothold projection, and upper-convex-hull scans
// along swing corridors.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "lipnav/common.hpp"
#include "lipnav/piecewise.hpp"

namespace lipnav {

// ---------------------------------------------------------------------------
// Heightfield

class Heightfield {
 public:
  Heightfield() = default;
  Heightfield(double origin_x, double origin_y, double resolution, int nx, int ny)
      : origin_x_(origin_x), origin_y_(origin_y), resolution_(resolution), nx_(nx), ny_(ny),
        z_(static_cast<std::size_t>(nx) * ny, 0.0) {
    if (!(resolution > 0.0) || nx < 2 || ny < 2) throw InvalidSpec("heightfield needs resolution > 0 and >= 2x2 samples");
  }

  double origin_x() const { return origin_x_; }
  double origin_y() const { return origin_y_; }
  double resolution() const { return resolution_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double max_x() const { return origin_x_ + (nx_ - 1) * resolution_; }
  double max_y() const { return origin_y_ + (ny_ - 1) * resolution_; }
  double sample_x(int ix) const { return origin_x_ + ix * resolution_; }
  double sample_y(int iy) const { return origin_y_ + iy * resolution_; }

  double& at_index(int ix, int iy) { return z_[static_cast<std::size_t>(iy) * nx_ + ix]; }
  double at_index(int ix, int iy) const { return z_[static_cast<std::size_t>(iy) * nx_ + ix]; }
  const std::vector<double>& values() const { return z_; }

  bool contains(double x, double y, double tol = 1e-9) const {
    return x >= origin_x_ - tol && x <= max_x() + tol && y >= origin_y_ - tol && y <= max_y() + tol;
  }

  /// Bilinear interpolation of the grid.
  double height_at(double x, double y) const {
    if (!contains(x, y)) throw OutOfBounds("query (" + std::to_string(x) + ", " + std::to_string(y) + ") outside heightfield");
    const double fx = std::clamp((x - origin_x_) / resolution_, 0.0, double(nx_ - 1));
    const double fy = std::clamp((y - origin_y_) / resolution_, 0.0, double(ny_ - 1));
    const int ix = std::min(static_cast<int>(fx), nx_ - 2);
    const int iy = std::min(static_cast<int>(fy), ny_ - 2);
    const double ax = fx - ix, ay = fy - iy;
    const double z00 = at_index(ix, iy), z10 = at_index(ix + 1, iy);
    const double z01 = at_index(ix, iy + 1), z11 = at_index(ix + 1, iy + 1);
    return (1.0 - ay) * ((1.0 - ax) * z00 + ax * z10) + ay * ((1.0 - ax) * z01 + ax * z11);
  }

 private:
  double origin_x_ = 0.0, origin_y_ = 0.0, resolution_ = 1.0;
  int nx_ = 0, ny_ = 0;
  std::vector<double> z_;
};

// ---------------------------------------------------------------------------
// Planar 2D helpers

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

inline Vec2 closest_on_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 <= 0.0) return a;
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + s * ab;
}

/// Point-in-convex-polygon for CCW vertices, inclusive of the boundary within `tol`.
inline bool convex_contains(const std::vector<Vec2>& poly, const Vec2& p, double tol = 0.0) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2 e = b - a;
    if (cross2(e, p - a) < -tol * e.norm()) return false;
  }
  return true;
}

/// Closest point of a CCW convex polygon (interior included) to p.
inline Vec2 convex_closest_point(const std::vector<Vec2>& poly, const Vec2& p) {
  if (convex_contains(poly, p)) return p;
  Vec2 best = poly.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 q = closest_on_segment(p, poly[i], poly[(i + 1) % poly.size()]);
    const double d = (q - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

inline bool segments_intersect(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
  const double d1 = cross2(b - a, c - a), d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c), d4 = cross2(d - c, b - c);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

/// Distance between two convex CCW polygons (0 when they overlap).
inline double convex_distance(const std::vector<Vec2>& a, const std::vector<Vec2>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (segments_intersect(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (const Vec2& v : a) best = std::min(best, (convex_closest_point(b, v) - v).norm());
  for (const Vec2& v : b) best = std::min(best, (convex_closest_point(a, v) - v).norm());
  return best;
}

// ---------------------------------------------------------------------------
// Foothold polygons

/// Convex planar foothold region. roll/pitch are the surface inclinations along
/// world y and x respectively (positive when the surface rises toward +y / +x).
struct FootholdPolygon {
  int id = 0;
  std::vector<Vec3> vertices;  // CCW from +z
  Vec3 plane_normal = Vec3::UnitZ();
  double roll = 0.0;
  double pitch = 0.0;

  std::vector<Vec2> footprint() const {
    std::vector<Vec2> out;
    out.reserve(vertices.size());
    for (const Vec3& v : vertices) out.emplace_back(v.x(), v.y());
    return out;
  }

  double plane_z(double x, double y) const {
    const Vec3& p0 = vertices.front();
    return p0.z() - (plane_normal.x() * (x - p0.x()) + plane_normal.y() * (y - p0.y())) / plane_normal.z();
  }
};

/// Builds a polygon from a CCW footprint lying on z = z_ref + gx (x - x_ref) + gy (y - y_ref).
inline FootholdPolygon make_planar_polygon(int id, const std::vector<Vec2>& footprint, const Vec3& ref, double gx,
                                           double gy) {
  FootholdPolygon poly;
  poly.id = id;
  for (const Vec2& v : footprint)
    poly.vertices.emplace_back(v.x(), v.y(), ref.z() + gx * (v.x() - ref.x()) + gy * (v.y() - ref.y()));
  poly.plane_normal = Vec3(-gx, -gy, 1.0).normalized();
  poly.roll = std::atan(gy);
  poly.pitch = std::atan(gx);
  return poly;
}

/// Builds a polygon from explicit 3D vertices (normal by Newell's method). Validates the invariants.
inline FootholdPolygon make_polygon(int id, std::vector<Vec3> vertices) {
  if (vertices.size() < 3) throw InvalidSpec("foothold polygon needs >= 3 vertices");
  Vec3 n = Vec3::Zero();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    const Vec3& a = vertices[i];
    const Vec3& b = vertices[(i + 1) % vertices.size()];
    n += Vec3((a.y() - b.y()) * (a.z() + b.z()), (a.z() - b.z()) * (a.x() + b.x()), (a.x() - b.x()) * (a.y() + b.y()));
  }
  if (n.norm() < 1e-12 || n.z() <= 0.0) throw InvalidSpec("foothold polygon must be CCW from +z with upward normal");
  n.normalize();
  FootholdPolygon poly;
  poly.id = id;
  poly.vertices = std::move(vertices);
  poly.plane_normal = n;
  poly.roll = std::atan2(-n.y(), n.z());
  poly.pitch = std::atan2(-n.x(), n.z());
  for (const Vec3& v : poly.vertices)
    if (std::abs((v - poly.vertices.front()).dot(n)) > 1e-9) throw InvalidSpec("foothold polygon is not coplanar");
  const auto fp = poly.footprint();
  for (std::size_t i = 0; i < fp.size(); ++i)
    if (cross2(fp[(i + 1) % fp.size()] - fp[i], fp[(i + 2) % fp.size()] - fp[(i + 1) % fp.size()]) < -1e-12)
      throw InvalidSpec("foothold polygon is not convex");
  return poly;
}

inline std::vector<Vec2> rectangle(double x0, double y0, double x1, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

// ---------------------------------------------------------------------------
// Grid index

class FootholdIndex {
 public:
  FootholdIndex() = default;
  FootholdIndex(double cell_size, double max_radius) : cell_size_(cell_size), max_radius_(max_radius) {}

  double cell_size() const { return cell_size_; }
  double max_radius() const { return max_radius_; }

  std::int64_t cell_of(double x, double y) const { return key(cell_coord(x), cell_coord(y)); }
  std::int64_t cell_coord(double v) const { return static_cast<std::int64_t>(std::floor(v / cell_size_)); }
  static std::int64_t key(std::int64_t ix, std::int64_t iy) { return (ix << 32) ^ (iy & 0xffffffffLL); }

  const std::vector<int>& cell(std::int64_t ix, std::int64_t iy) const {
    static const std::vector<int> kEmpty;
    auto it = cells_.find(key(ix, iy));
    return it == cells_.end() ? kEmpty : it->second;
  }

  void add(std::int64_t ix, std::int64_t iy, int id) { cells_[key(ix, iy)].push_back(id); }
  std::size_t num_cells() const { return cells_.size(); }

 private:
  double cell_size_ = 0.5;
  double max_radius_ = 0.5;
  std::unordered_map<std::int64_t, std::vector<int>> cells_;
};

/// Lists each polygon in every cell whose max_radius-expanded bounds touch its footprint.
inline FootholdIndex build_foothold_index(const std::vector<FootholdPolygon>& polygons, double cell_size,
                                          double max_radius) {
  if (!(cell_size > 0.0) || !(max_radius > 0.0)) throw InvalidSpec("index needs cell_size > 0 and max_radius > 0");
  FootholdIndex index(cell_size, max_radius);
  for (const FootholdPolygon& poly : polygons) {
    const auto fp = poly.footprint();
    double x0 = fp[0].x(), x1 = x0, y0 = fp[0].y(), y1 = y0;
    for (const Vec2& v : fp) {
      x0 = std::min(x0, v.x()); x1 = std::max(x1, v.x());
      y0 = std::min(y0, v.y()); y1 = std::max(y1, v.y());
    }
    const auto cx0 = index.cell_coord(x0 - max_radius), cx1 = index.cell_coord(x1 + max_radius);
    const auto cy0 = index.cell_coord(y0 - max_radius), cy1 = index.cell_coord(y1 + max_radius);
    for (auto ix = cx0; ix <= cx1; ++ix) {
      for (auto iy = cy0; iy <= cy1; ++iy) {
        const auto rect = rectangle(ix * cell_size, iy * cell_size, (ix + 1) * cell_size, (iy + 1) * cell_size);
        if (convex_distance(rect, fp) <= max_radius) index.add(ix, iy, poly.id);
      }
    }
  }
  return index;
}

// ---------------------------------------------------------------------------
// Terrain specification and generation

struct FlatSpec {
  double length = 12.0, width = 8.0, x_min = -2.0;
  bool operator==(const FlatSpec&) const = default;
};

struct SlopeSpec {
  double grade = 0.2, length = 12.0, width = 8.0, x_min = -2.0;
  bool operator==(const SlopeSpec&) const = default;
};

struct StairsSpec {
  double rise = 0.17, run = 0.29;
  int count = 15;
  double width = 2.0;
  double start = 1.0;    // x of the first riser
  double landing = 2.0;  // flat length beyond the last riser
  double x_min = -1.0;
  bool operator==(const StairsSpec&) const = default;
};

struct BlocksSpec {
  double block_size = 0.4, gap = 0.1, jitter = 0.05;
  std::uint64_t seed = 1;
  int rows = 5, cols = 12;
  double pit_depth = 0.5;
  bool operator==(const BlocksSpec&) const = default;
};

struct TerrainOptions {
  double resolution = 0.05;
  double edge_inset = 0.03;
  double cell_size = 0.5;
  double max_radius = 0.5;
  bool operator==(const TerrainOptions&) const = default;
};

struct TerrainSpec {
  std::variant<FlatSpec, SlopeSpec, StairsSpec, BlocksSpec> shape = FlatSpec{};
  TerrainOptions options;
  bool operator==(const TerrainSpec&) const = default;
};

inline std::string terrain_kind(const TerrainSpec& spec) {
  static const char* names[] = {"flat", "slope", "stairs", "blocks"};
  return names[spec.shape.index()];
}

struct FootholdTarget {
  Vec3 position = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  int polygon_id = -1;
  double projection_distance = 0.0;
};

struct Terrain {
  TerrainSpec spec;
  Heightfield heightfield;
  std::vector<FootholdPolygon> polygons;  // polygons[i].id == i
  FootholdIndex index;

  double height_at(double x, double y) const { return heightfield.height_at(x, y); }
  const FootholdPolygon& polygon(int id) const { return polygons.at(static_cast<std::size_t>(id)); }
};

inline double height_at(const Terrain& terrain, double x, double y) { return terrain.height_at(x, y); }

/// Finalizes a terrain from a heightfield and polygons: checks ids and rebuilds the index.
inline Terrain assemble_terrain(TerrainSpec spec, Heightfield hf, std::vector<FootholdPolygon> polygons) {
  for (std::size_t i = 0; i < polygons.size(); ++i)
    if (polygons[i].id != static_cast<int>(i)) throw InvalidSpec("polygon ids must be 0..n-1 in order");
  Terrain t;
  t.index = build_foothold_index(polygons, spec.options.cell_size, spec.options.max_radius);
  t.spec = std::move(spec);
  t.heightfield = std::move(hf);
  t.polygons = std::move(polygons);
  return t;
}

namespace detail {

inline int cells_for(double length, double res) { return static_cast<int>(std::ceil(length / res - 1e-9)); }

/// Largest resolution <= limit that divides every length (within 1e-9).
inline double aligned_resolution(std::initializer_list<double> lengths, double limit) {
  const double base = *lengths.begin();
  for (int n = 1; n < 100000; ++n) {
    const double res = base / n;
    if (res > limit + 1e-12) continue;
    bool ok = true;
    for (double len : lengths) {
      const double k = len / res;
      if (std::abs(k - std::round(k)) > 1e-6) ok = false;
    }
    if (ok) return res;
  }
  throw InvalidSpec("no grid resolution aligns with the terrain dimensions");
}

inline Terrain generate_flat(const FlatSpec& s, const TerrainSpec& spec) {
  if (!(s.length > 0.0) || !(s.width > 0.0)) throw InvalidSpec("flat terrain needs positive length and width");
  const double res = spec.options.resolution;
  Heightfield hf(s.x_min, -0.5 * s.width, res, cells_for(s.length, res) + 1, cells_for(s.width, res) + 1);
  auto poly = make_planar_polygon(0, rectangle(s.x_min, -0.5 * s.width, s.x_min + s.length, 0.5 * s.width),
                                  Vec3::Zero(), 0.0, 0.0);
  return assemble_terrain(spec, std::move(hf), {poly});
}

inline Terrain generate_slope(const SlopeSpec& s, const TerrainSpec& spec) {
  if (!(s.length > 0.0) || !(s.width > 0.0)) throw InvalidSpec("slope terrain needs positive length and width");
  if (!std::isfinite(s.grade)) throw InvalidSpec("slope grade must be finite");
  const double res = spec.options.resolution;
  Heightfield hf(s.x_min, -0.5 * s.width, res, cells_for(s.length, res) + 1, cells_for(s.width, res) + 1);
  for (int iy = 0; iy < hf.ny(); ++iy)
    for (int ix = 0; ix < hf.nx(); ++ix) hf.at_index(ix, iy) = s.grade * hf.sample_x(ix);
  auto poly = make_planar_polygon(0, rectangle(s.x_min, -0.5 * s.width, s.x_min + s.length, 0.5 * s.width),
                                  Vec3::Zero(), s.grade, 0.0);
  return assemble_terrain(spec, std::move(hf), {poly});
}

inline Terrain generate_stairs(const StairsSpec& s, const TerrainSpec& spec) {
  const double inset = spec.options.edge_inset;
  if (!(s.rise > 0.0) || !(s.run > 0.0) || s.count < 1 || !(s.width > 0.0) || !(s.landing > 0.0) ||
      !(s.start > s.x_min))
    throw InvalidSpec("stairs need positive rise, run, count, width, landing and start > x_min");
  if (!(inset > 0.0) || 2.0 * inset >= s.run) throw InvalidSpec("stairs need 0 < edge_inset < run/2");

  // Risers sit on grid lines and each cell is no wider than the inset, so every
  // tread polygon covers only samples at its own height.
  const double res = s.run / cells_for(s.run, std::min(spec.options.resolution, inset));
  const int before = cells_for(s.start - s.x_min, res);
  const int per_run = static_cast<int>(std::lround(s.run / res));
  const int after = cells_for(s.count * s.run + s.landing, res);
  const double origin_x = s.start - before * res;
  Heightfield hf(origin_x, -0.5 * s.width, res, before + after + 1, cells_for(s.width, res) + 1);
  for (int ix = 0; ix < hf.nx(); ++ix) {
    const int rel = ix - before;
    const int k = rel < 0 ? 0 : std::min(s.count, rel / per_run + 1);
    for (int iy = 0; iy < hf.ny(); ++iy) hf.at_index(ix, iy) = k * s.rise;
  }

  const double y0 = -0.5 * s.width + inset, y1 = 0.5 * s.width - inset;
  const double end_x = s.start + s.count * s.run + s.landing;
  std::vector<FootholdPolygon> polys;
  polys.push_back(make_planar_polygon(0, rectangle(origin_x + inset, y0, s.start - inset, y1), Vec3::Zero(), 0, 0));
  for (int k = 1; k <= s.count; ++k) {
    const double x0 = s.start + (k - 1) * s.run + inset;
    const double x1 = (k == s.count ? end_x : s.start + k * s.run) - inset;
    polys.push_back(make_planar_polygon(k, rectangle(x0, y0, x1, y1), Vec3(0, 0, k * s.rise), 0, 0));
  }
  return assemble_terrain(spec, std::move(hf), std::move(polys));
}

inline Terrain generate_blocks(const BlocksSpec& s, const TerrainSpec& spec) {
  const double inset = spec.options.edge_inset;
  if (!(s.block_size > 0.0) || !(s.gap > 0.0) || s.rows < 1 || s.cols < 1 || s.jitter < 0.0 || !(s.pit_depth > 0.0))
    throw InvalidSpec("blocks need positive block_size, gap, rows, cols, pit_depth and jitter >= 0");
  if (!(inset > 0.0) || 2.0 * inset >= s.block_size) throw InvalidSpec("blocks need 0 < edge_inset < block_size/2");

  const double res = aligned_resolution({s.gap, s.block_size}, std::min(spec.options.resolution, inset));
  const double pitch = s.block_size + s.gap;
  const int per_block = static_cast<int>(std::lround(s.block_size / res));
  const int per_gap = static_cast<int>(std::lround(s.gap / res));
  const int per_pitch = per_block + per_gap;
  // Block (0, 0) is centred on the origin; the field has one gap of border on every side.
  const double x_first = -0.5 * s.block_size;
  const double y_first = -0.5 * s.block_size - 0.5 * (s.rows - 1) * pitch;
  const double origin_x = x_first - s.gap, origin_y = y_first - s.gap;
  const int nx = s.cols * per_pitch + per_gap + 1;
  const int ny = s.rows * per_pitch + per_gap + 1;
  Heightfield hf(origin_x, origin_y, res, nx, ny);

  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> jitter(0.0, s.jitter);
  std::vector<double> heights(static_cast<std::size_t>(s.rows * s.cols));
  for (double& h : heights) h = s.jitter > 0.0 ? jitter(rng) : 0.0;

  auto block_of = [&](int i) {  // sample index -> block index, or -1 in a gap
    const int rel = i - per_gap;
    if (rel < 0) return -1;
    const int b = rel / per_pitch;
    return rel - b * per_pitch <= per_block ? b : -1;
  };
  for (int iy = 0; iy < ny; ++iy) {
    const int r = block_of(iy);
    for (int ix = 0; ix < nx; ++ix) {
      const int c = block_of(ix);
      const bool on_block = r >= 0 && r < s.rows && c >= 0 && c < s.cols;
      hf.at_index(ix, iy) = on_block ? heights[static_cast<std::size_t>(r * s.cols + c)] : -s.pit_depth;
    }
  }

  std::vector<FootholdPolygon> polys;
  for (int r = 0; r < s.rows; ++r) {
    for (int c = 0; c < s.cols; ++c) {
      const double x0 = x_first + c * pitch, y0 = y_first + r * pitch;
      const double h = heights[static_cast<std::size_t>(r * s.cols + c)];
      polys.push_back(make_planar_polygon(static_cast<int>(polys.size()),
                                          rectangle(x0 + inset, y0 + inset, x0 + s.block_size - inset,
                                                    y0 + s.block_size - inset),
                                          Vec3(0, 0, h), 0, 0));
    }
  }
  return assemble_terrain(spec, std::move(hf), std::move(polys));
}

}  // namespace detail

inline Terrain generate_terrain(const TerrainSpec& spec) {
  const auto& o = spec.options;
  if (!(o.resolution > 0.0) || !(o.cell_size > 0.0) || !(o.max_radius > 0.0) || o.edge_inset < 0.0)
    throw InvalidSpec("terrain options need positive resolution, cell_size, max_radius and edge_inset >= 0");
  return std::visit(
      [&](const auto& shape) -> Terrain {
        using S = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<S, FlatSpec>) return detail::generate_flat(shape, spec);
        else if constexpr (std::is_same_v<S, SlopeSpec>) return detail::generate_slope(shape, spec);
        else if constexpr (std::is_same_v<S, StairsSpec>) return detail::generate_stairs(shape, spec);
        else return detail::generate_blocks(shape, spec);
      },
      spec.shape);
}

// ---------------------------------------------------------------------------
// Projection

/// Nearest point of one polygon (plan-view metric), lifted onto its plane.
inline FootholdTarget project_onto_polygon(const FootholdPolygon& poly, const Vec2& p) {
  const Vec2 q = convex_closest_point(poly.footprint(), p);
  FootholdTarget t;
  t.position = Vec3(q.x(), q.y(), poly.plane_z(q.x(), q.y()));
  t.roll = poly.roll;
  t.pitch = poly.pitch;
  t.polygon_id = poly.id;
  t.projection_distance = (q - p).norm();
  return t;
}

/// Projects a world point onto the nearest foothold among the candidates of its cell,
/// widening to rings of neighbouring cells when the cell lists nothing.
inline FootholdTarget project_footstep(const Terrain& terrain, const Vec2& p) {
  const FootholdIndex& index = terrain.index;
  const auto cx = index.cell_coord(p.x()), cy = index.cell_coord(p.y());
  std::vector<int> candidates = index.cell(cx, cy);
  const int max_ring = static_cast<int>(std::ceil(index.max_radius() / index.cell_size()));
  for (int ring = 1; candidates.empty() && ring <= max_ring; ++ring) {
    for (int dx = -ring; dx <= ring; ++dx)
      for (int dy = -ring; dy <= ring; ++dy)
        if (std::max(std::abs(dx), std::abs(dy)) == ring) {
          const auto& c = index.cell(cx + dx, cy + dy);
          candidates.insert(candidates.end(), c.begin(), c.end());
        }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  FootholdTarget best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int id : candidates) {
    FootholdTarget t = project_onto_polygon(terrain.polygon(id), p);
    if (t.projection_distance < best_d) {
      best_d = t.projection_distance;
      best = t;
    }
  }
  if (best.polygon_id < 0 || best_d > index.max_radius())
    throw NoFoothold("no foothold within " + std::to_string(index.max_radius()) + " m of (" + std::to_string(p.x()) +
                     ", " + std::to_string(p.y()) + ")");
  return best;
}

// ---------------------------------------------------------------------------
// Upper convex hull

/// Upper convex envelope of (s, h) samples with strictly increasing s.
inline PiecewiseLinear upper_convex_hull(const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2) throw TooFewSamples("upper convex hull needs at least 2 samples");
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].first > samples[i - 1].first))
      throw ValidationError("upper convex hull needs strictly increasing abscissae");

  std::vector<std::pair<double, double>> hull;
  auto turn = [](const auto& o, const auto& a, const auto& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  for (const auto& p : samples) {
    while (hull.size() >= 2 && turn(hull[hull.size() - 2], hull.back(), p) >= 0.0) hull.pop_back();
    hull.push_back(p);
  }
  return PiecewiseLinear(std::move(hull));
}

/// Scans terrain height along a planar path at n uniform phases and returns the
/// upper hull over arc length, re-parameterized by phase.
template <class Path>
PhaseEnvelope swing_corridor_hull(const Terrain& terrain, const Path& xy_path, double T, int n_samples,
                                  double margin = 0.0) {
  if (n_samples < 2) throw TooFewSamples("corridor scan needs at least 2 samples");
  std::vector<double> phase(static_cast<std::size_t>(n_samples)), arc(phase.size()), height(phase.size());
  Vec2 prev = Vec2::Zero();
  for (int i = 0; i < n_samples; ++i) {
    const double t = (i == n_samples - 1) ? T : T * i / (n_samples - 1);
    const Vec2 p = xy_path(t);
    phase[i] = t;
    height[i] = terrain.height_at(p.x(), p.y());
    arc[i] = i == 0 ? 0.0 : arc[i - 1] + (p - prev).norm();
    prev = p;
  }
  bool increasing = true;
  for (std::size_t i = 1; i < arc.size(); ++i)
    if (!(arc[i] > arc[i - 1] + 1e-12)) increasing = false;
  const std::vector<double>& abscissa = increasing ? arc : phase;

  std::vector<std::pair<double, double>> map, samples;
  for (std::size_t i = 0; i < phase.size(); ++i) {
    map.emplace_back(phase[i], abscissa[i]);
    samples.emplace_back(abscissa[i], height[i]);
  }
  return {PiecewiseLinear(std::move(map)), upper_convex_hull(samples), margin};
}

}  // namespace lipnav
