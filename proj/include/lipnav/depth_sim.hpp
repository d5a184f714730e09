#pragma once

// Pinhole Z-depth camera over triangle meshes. Each mesh is cast in its own
// local frame, the ray carried in by the inverse of the instance transform.

#include <algorithm>
#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "lipnav/common.hpp"
#include "lipnav/terrain.hpp"

namespace lipnav {

struct CameraIntrinsics {
  double fx = 15.0, fy = 15.0;
  double cx = 15.0, cy = 13.0;
  int width = 30, height = 26;
  double max_range = 5.0;

  void validate() const {
    if (!(fx > 0 && fy > 0) || width < 1 || height < 1 || !(cx > 0 && cx < width) || !(cy > 0 && cy < height) ||
        !(max_range > 0))
      throw ValidationError("camera intrinsics need fx, fy > 0, principal point inside the image, max_range > 0");
  }
};

struct DepthImage {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, NaN = no return

  DepthImage() = default;
  DepthImage(int w, int h, double fill = std::numeric_limits<double>::quiet_NaN())
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
};

/// Unit ray directions in the camera frame (x right, y down, z along the optical axis), row-major.
inline std::vector<Vec3> pixel_rays(const CameraIntrinsics& intr) {
  intr.validate();
  std::vector<Vec3> rays;
  rays.reserve(static_cast<std::size_t>(intr.width) * intr.height);
  for (int v = 0; v < intr.height; ++v)
    for (int u = 0; u < intr.width; ++u)
      rays.push_back(Vec3((u + 0.5 - intr.cx) / intr.fx, (v + 0.5 - intr.cy) / intr.fy, 1.0).normalized());
  return rays;
}

// ---------------------------------------------------------------------------
// Meshes

struct Aabb {
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void grow(const Vec3& p) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  void grow(const Aabb& b) {
    lo = lo.cwiseMin(b.lo);
    hi = hi.cwiseMax(b.hi);
  }

  /// Slab test; returns the entry distance if the ray meets the box before t_max.
  bool hit(const Vec3& o, const Vec3& inv_d, double t_max) const {
    double t0 = 0.0, t1 = t_max;
    for (int a = 0; a < 3; ++a) {
      double ta = (lo[a] - o[a]) * inv_d[a];
      double tb = (hi[a] - o[a]) * inv_d[a];
      if (ta > tb) std::swap(ta, tb);
      if (std::isnan(ta) || std::isnan(tb)) {
        if (o[a] < lo[a] || o[a] > hi[a]) return false;
        continue;
      }
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return false;
    }
    return true;
  }
};

/// Moller-Trumbore, both faces. Returns the ray parameter of a hit with t > eps.
inline std::optional<double> ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  constexpr double kEps = 1e-12;
  const Vec3 e1 = b - a, e2 = c - a;
  const Vec3 pv = d.cross(e2);
  const double det = e1.dot(pv);
  if (std::abs(det) < kEps) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3 tv = o - a;
  const double u = tv.dot(pv) * inv;
  if (u < 0.0 || u > 1.0) return std::nullopt;
  const Vec3 qv = tv.cross(e1);
  const double v = d.dot(qv) * inv;
  if (v < 0.0 || u + v > 1.0) return std::nullopt;
  const double t = e2.dot(qv) * inv;
  if (t <= kEps) return std::nullopt;
  return t;
}

class Mesh {
 public:
  Mesh() = default;
  Mesh(std::vector<Vec3> vertices, std::vector<std::array<int, 3>> triangles)
      : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
    for (const auto& t : triangles_)
      for (int i : t)
        if (i < 0 || i >= static_cast<int>(vertices_.size())) throw ValidationError("triangle index out of range");
    build();
  }

  const std::vector<Vec3>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }

  /// Nearest hit parameter along o + t d, t in (0, t_max).
  std::optional<double> raycast(const Vec3& o, const Vec3& d,
                                double t_max = std::numeric_limits<double>::infinity()) const {
    if (nodes_.empty()) return std::nullopt;
    const Vec3 inv_d(1.0 / d.x(), 1.0 / d.y(), 1.0 / d.z());
    double best = t_max;
    bool found = false;
    int stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& n = nodes_[stack[--top]];
      if (!n.box.hit(o, inv_d, best)) continue;
      if (n.count > 0) {
        for (int i = n.first; i < n.first + n.count; ++i) {
          const auto& t = triangles_[order_[i]];
          if (auto h = ray_triangle(o, d, vertices_[t[0]], vertices_[t[1]], vertices_[t[2]]); h && *h < best) {
            best = *h;
            found = true;
          }
        }
      } else {
        stack[top++] = n.left;
        stack[top++] = n.left + 1;
      }
    }
    return found ? std::optional<double>(best) : std::nullopt;
  }

 private:
  struct Node {
    Aabb box;
    int left = -1;   // children at left, left + 1
    int first = 0;
    int count = 0;   // > 0 for leaves
  };

  void build() {
    order_.resize(triangles_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
    if (triangles_.empty()) return;
    centroids_.resize(triangles_.size());
    for (std::size_t i = 0; i < triangles_.size(); ++i) {
      const auto& t = triangles_[i];
      centroids_[i] = (vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0;
    }
    nodes_.reserve(2 * triangles_.size());
    nodes_.push_back({});
    split(0, 0, static_cast<int>(order_.size()), 0);
    centroids_.clear();
  }

  void split(int node, int first, int count, int depth) {
    Aabb box, cbox;
    for (int i = first; i < first + count; ++i) {
      const auto& t = triangles_[order_[i]];
      for (int k : t) box.grow(vertices_[k]);
      cbox.grow(centroids_[order_[i]]);
    }
    nodes_[node].box = box;
    if (count <= 4 || depth > 40) {
      nodes_[node].first = first;
      nodes_[node].count = count;
      return;
    }
    int axis = 0;
    const Vec3 ext = cbox.hi - cbox.lo;
    if (ext.y() > ext[axis]) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count,
                     [&](int a, int b) { return centroids_[a][axis] < centroids_[b][axis]; });
    const int left = static_cast<int>(nodes_.size());
    nodes_[node].left = left;
    nodes_.push_back({});
    nodes_.push_back({});
    split(left, first, mid - first, depth + 1);
    split(left + 1, mid, first + count - mid, depth + 1);
  }

  std::vector<Vec3> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<int> order_;
  std::vector<Vec3> centroids_;
  std::vector<Node> nodes_;
};

inline Mesh box_mesh(const Vec3& half_extents) {
  const Vec3& h = half_extents;
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1 ? h.x() : -h.x(), i & 2 ? h.y() : -h.y(), i & 4 ? h.z() : -h.z());
  std::vector<std::array<int, 3>> t{{0, 2, 1}, {1, 2, 3}, {4, 5, 6}, {5, 7, 6}, {0, 1, 4}, {1, 5, 4},
                                    {2, 6, 3}, {3, 6, 7}, {0, 4, 2}, {2, 4, 6}, {1, 3, 5}, {3, 7, 5}};
  return Mesh(std::move(v), std::move(t));
}

/// Two triangles per heightfield cell.
inline Mesh heightfield_mesh(const Heightfield& hf) {
  std::vector<Vec3> v;
  v.reserve(static_cast<std::size_t>(hf.nx()) * hf.ny());
  for (int iy = 0; iy < hf.ny(); ++iy)
    for (int ix = 0; ix < hf.nx(); ++ix) v.emplace_back(hf.sample_x(ix), hf.sample_y(iy), hf.at_index(ix, iy));
  std::vector<std::array<int, 3>> t;
  t.reserve(2 * static_cast<std::size_t>(hf.nx() - 1) * (hf.ny() - 1));
  for (int iy = 0; iy + 1 < hf.ny(); ++iy) {
    for (int ix = 0; ix + 1 < hf.nx(); ++ix) {
      const int a = iy * hf.nx() + ix, b = a + 1, c = a + hf.nx(), d = c + 1;
      t.push_back({a, b, d});
      t.push_back({a, d, c});
    }
  }
  return Mesh(std::move(v), std::move(t));
}

/// A shared mesh placed in the world by a rigid transform x_world = R x_local + p.
struct MeshInstance {
  std::shared_ptr<const Mesh> mesh;
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  void validate() const {
    if (!mesh) throw ValidationError("mesh instance without a mesh");
    if (!(R.transpose() * R).isApprox(Mat3::Identity(), 1e-9) || std::abs(R.determinant() - 1.0) > 1e-9)
      throw ValidationError("mesh instance rotation must be orthonormal with det +1");
  }

  /// raycast(T M, o, d) = raycast(M, T^-1 o, R^-1 d); rigid transforms keep the ray parameter.
  std::optional<double> raycast(const Vec3& o, const Vec3& d,
                                double t_max = std::numeric_limits<double>::infinity()) const {
    return mesh->raycast(R.transpose() * (o - p), R.transpose() * d, t_max);
  }
};

/// The mesh with the instance transform baked into its vertices.
inline Mesh transformed_mesh(const MeshInstance& inst) {
  std::vector<Vec3> v;
  v.reserve(inst.mesh->vertices().size());
  for (const Vec3& x : inst.mesh->vertices()) v.push_back(inst.R * x + inst.p);
  return Mesh(std::move(v), inst.mesh->triangles());
}

/// World-from-camera transform with the camera frame convention of pixel_rays.
struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 p = Vec3::Zero();

  static CameraPose from_pose(const Pose3& pose) { return {pose.rotation(), pose.position()}; }
};

/// Camera on the torso: `height` above the base, looking along base +x, tilted down by `pitch_down`.
inline CameraPose torso_camera(double x, double y, double base_z, double yaw, double height = 1.0,
                               double pitch_down = kPi / 3) {
  const Vec3 forward(std::cos(pitch_down), 0.0, -std::sin(pitch_down));
  const Vec3 right(0.0, -1.0, 0.0);
  const Vec3 down = forward.cross(right);
  Mat3 base;
  base.col(0) = right;
  base.col(1) = down;
  base.col(2) = forward;
  return {Eigen::AngleAxisd(yaw, Vec3::UnitZ()).toRotationMatrix() * base, Vec3(x, y, base_z + height)};
}

inline DepthImage raycast_depth(const std::vector<MeshInstance>& meshes, const CameraPose& cam,
                                const CameraIntrinsics& intr) {
  for (const auto& m : meshes) m.validate();
  const auto rays = pixel_rays(intr);
  DepthImage img(intr.width, intr.height);
  for (int v = 0; v < intr.height; ++v) {
    for (int u = 0; u < intr.width; ++u) {
      const Vec3& dc = rays[static_cast<std::size_t>(v) * intr.width + u];
      const Vec3 dw = cam.R * dc;
      double best = std::numeric_limits<double>::infinity();
      for (const auto& m : meshes)
        if (auto h = m.raycast(cam.p, dw, best)) best = std::min(best, *h);
      const double z = best * dc.z();
      if (std::isfinite(best) && z <= intr.max_range) img.at(u, v) = z;
    }
  }
  return img;
}

inline DepthImage raycast_depth(const MeshInstance& terrain_mesh, const std::vector<MeshInstance>& dynamic,
                                const CameraPose& cam, const CameraIntrinsics& intr) {
  std::vector<MeshInstance> all{terrain_mesh};
  all.insert(all.end(), dynamic.begin(), dynamic.end());
  return raycast_depth(all, cam, intr);
}

/// Block mean over finite entries; blocks past the image edge are padded with NaN.
inline DepthImage nan_aware_downsample(const DepthImage& img, int fy, int fx) {
  if (fy < 1 || fx < 1) throw ValidationError("downsample factors must be >= 1");
  DepthImage out((img.width + fx - 1) / fx, (img.height + fy - 1) / fy);
  for (int V = 0; V < out.height; ++V) {
    for (int U = 0; U < out.width; ++U) {
      double sum = 0.0;
      int n = 0;
      for (int v = V * fy; v < std::min(img.height, (V + 1) * fy); ++v)
        for (int u = U * fx; u < std::min(img.width, (U + 1) * fx); ++u)
          if (const double z = img.at(u, v); !std::isnan(z)) {
            sum += z;
            ++n;
          }
      if (n > 0) out.at(U, V) = sum / n;
    }
  }
  return out;
}

struct DepthNoise {
  double bias_amplitude = 0.03;
  double uniform_halfwidth = 0.01;
  std::uint64_t seed = 0;
};

struct BiasPlane {
  double a = 0.0, b = 0.0, c = 0.0;
};

/// Bias plane a + b u/W + c v/H drawn once per image, then per-pixel uniform noise in row-major order.
inline DepthImage apply_noise(const DepthImage& img, const DepthNoise& noise, BiasPlane* drawn = nullptr) {
  if (noise.bias_amplitude < 0 || noise.uniform_halfwidth < 0) throw ValidationError("noise amplitudes must be >= 0");
  std::mt19937_64 rng(noise.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  BiasPlane plane{noise.bias_amplitude * unit(rng), noise.bias_amplitude * unit(rng), noise.bias_amplitude * unit(rng)};
  if (drawn) *drawn = plane;
  DepthImage out = img;
  for (int v = 0; v < img.height; ++v) {
    for (int u = 0; u < img.width; ++u) {
      const double e = noise.uniform_halfwidth * unit(rng);
      double& z = out.at(u, v);
      if (std::isnan(z)) continue;
      z += plane.a + plane.b * u / img.width + plane.c * v / img.height + e;
    }
  }
  return out;
}

}  // namespace lipnav
