#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "scancad/geometry.hpp"

namespace scancad {

struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;
};

// Pinhole camera, x right / y down / z forward. A camera-space point
// (x, y, z) projects to continuous image coordinates
// (fx*x/z + cx, fy*y/z + cy); pixel (u, v) is sampled at (u+0.5, v+0.5).
struct Camera {
  Intrinsics intrinsics;
  Quat world_to_camera_rotation = Quat::Identity();
  Vec3 world_to_camera_translation = Vec3::Zero();

  static Camera from_camera_to_world(const Intrinsics& k, const Mat4& camera_to_world);
  Mat4 camera_to_world() const;

  Vec3 to_camera(const Vec3& world) const {
    return world_to_camera_rotation * world + world_to_camera_translation;
  }
  Eigen::Vector2d project(const Vec3& camera_point) const {
    return {intrinsics.fx * camera_point.x() / camera_point.z() + intrinsics.cx,
            intrinsics.fy * camera_point.y() / camera_point.z() + intrinsics.cy};
  }
  // Camera-space point at depth z through the centre of pixel (u, v).
  Vec3 unproject(int u, int v, double z) const {
    return {(u + 0.5 - intrinsics.cx) / intrinsics.fx * z, (v + 0.5 - intrinsics.cy) / intrinsics.fy * z, z};
  }
  // Same view at 1/factor resolution.
  Camera downsampled(int factor) const;
  void validate() const;
};

// Row-major camera-space z in meters; <= 0 or non-finite means invalid.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
  static bool is_valid(double z) { return std::isfinite(z) && z > 0.0; }
  std::size_t valid_count() const;
};

struct Mask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> values;

  Mask() = default;
  Mask(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0) {}

  bool at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u] != 0; }
  std::size_t count() const;
};

struct PosedMesh {
  const TriMesh* mesh = nullptr;
  Pose9 pose;

  PosedMesh(const TriMesh& m, const Pose9& p = Pose9::identity()) : mesh(&m), pose(p) {}
};

// Nearest camera-space z per pixel centre over all triangles; no culling,
// geometry in front of the near plane is clipped away. Ties keep the earlier
// triangle (mesh order, then face order).
DepthMap render_depth(std::span<const PosedMesh> meshes, const Camera& camera);

// Pixels where the target is the front-most surface. With
// `visible_only = false` the occluders are ignored (free projection).
Mask render_mask(const PosedMesh& target, std::span<const PosedMesh> occluders, const Camera& camera,
                 bool visible_only = true);

// Target pixels not hidden by the occluder depth (ties go to the target).
Mask visible_mask(const DepthMap& target, const DepthMap& occluders);

// Per-pixel minimum over valid entries. Throws kDimensionMismatch.
DepthMap fuse_depth(const DepthMap& a, const DepthMap& b);

namespace reference {

// Tests every triangle at every pixel; must match render_depth bit for bit.
DepthMap render_depth_naive(std::span<const PosedMesh> meshes, const Camera& camera);

}  // namespace reference

}  // namespace scancad
