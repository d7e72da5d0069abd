#include "scancad/raster.hpp"

#include <algorithm>
#include <array>
#include <limits>

#include "scancad/error.hpp"

namespace scancad {

Camera Camera::from_camera_to_world(const Intrinsics& k, const Mat4& camera_to_world) {
  Camera cam;
  cam.intrinsics = k;
  const Mat3 rot = camera_to_world.topLeftCorner<3, 3>();
  const Vec3 pos = camera_to_world.topRightCorner<3, 1>();
  cam.world_to_camera_rotation = Quat(rot.transpose()).normalized();
  cam.world_to_camera_translation = -(cam.world_to_camera_rotation * pos);
  return cam;
}

Mat4 Camera::camera_to_world() const {
  Mat4 m = Mat4::Identity();
  const Quat inv = world_to_camera_rotation.conjugate();
  m.topLeftCorner<3, 3>() = inv.toRotationMatrix();
  m.topRightCorner<3, 1>() = -(inv * world_to_camera_translation);
  return m;
}

Camera Camera::downsampled(int factor) const {
  if (factor <= 1) return *this;
  Camera out = *this;
  const double f = factor;
  out.intrinsics.fx /= f;
  out.intrinsics.fy /= f;
  out.intrinsics.cx /= f;
  out.intrinsics.cy /= f;
  out.intrinsics.width = std::max(1, intrinsics.width / factor);
  out.intrinsics.height = std::max(1, intrinsics.height / factor);
  return out;
}

void Camera::validate() const {
  if (!(intrinsics.fx > 0.0 && intrinsics.fy > 0.0) || intrinsics.width <= 0 || intrinsics.height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "camera intrinsics must be positive");
  }
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), is_valid));
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](auto v) { return v != 0; }));
}

namespace {

constexpr double kNearPlane = 1e-4;
constexpr int kBandRows = 8;

using Vec2 = Eigen::Vector2d;

// Lexicographically canonical edge function: E(a,b,p) == -E(b,a,p) exactly,
// so two triangles sharing an edge leave no uncovered pixel centres on it.
double edge_fn(const Vec2& a, const Vec2& b, const Vec2& p) {
  const bool ordered = a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  const Vec2& s = ordered ? a : b;
  const Vec2& t = ordered ? b : a;
  const double e = (t.x() - s.x()) * (p.y() - s.y()) - (t.y() - s.y()) * (p.x() - s.x());
  return ordered ? e : -e;
}

// edge_fn with the canonical ordering resolved once per edge.
struct Edge {
  double sx = 0.0, sy = 0.0, dx = 0.0, dy = 0.0, sign = 1.0;

  static Edge make(const Vec2& a, const Vec2& b) {
    const bool ordered = a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    const Vec2& s = ordered ? a : b;
    const Vec2& t = ordered ? b : a;
    return {s.x(), s.y(), t.x() - s.x(), t.y() - s.y(), ordered ? 1.0 : -1.0};
  }
  double operator()(double px, double py) const {
    const double e = dx * (py - sy) - dy * (px - sx);
    return sign > 0.0 ? e : -e;
  }
};

struct ScreenTriangle {
  std::array<Vec2, 3> v;
  std::array<Edge, 3> edges;  // (v1, v2), (v2, v0), (v0, v1)
  double area = 0.0;
  // Plane of the source triangle in camera space: n . x = nd.
  Vec3 normal;
  double nd = 0.0;
  int u0 = 0, u1 = -1, v0 = 0, v1 = -1;  // inclusive pixel bounds
};

// Camera-space triangles clipped to z >= near and projected.
class TrianglePrep {
 public:
  TrianglePrep(std::span<const PosedMesh> meshes, const Camera& cam) : cam_(cam) {
    cam.validate();
    const Mat3 rc = cam.world_to_camera_rotation.toRotationMatrix();
    for (const auto& posed : meshes) {
      const Mat3 linear = rc * posed.pose.rotation.toRotationMatrix() * posed.pose.scale.asDiagonal();
      const Vec3 offset = rc * posed.pose.translation + cam.world_to_camera_translation;
      cam_vertices_.resize(posed.mesh->vertices.size());
      for (std::size_t i = 0; i < cam_vertices_.size(); ++i) {
        cam_vertices_[i] = linear * posed.mesh->vertices[i] + offset;
      }
      for (const auto& f : posed.mesh->faces) add_face(cam_vertices_[f[0]], cam_vertices_[f[1]], cam_vertices_[f[2]]);
    }
    const double w = cam.intrinsics.width;
    const double h = cam.intrinsics.height;
    ray_x_.resize(cam.intrinsics.width);
    ray_y_.resize(cam.intrinsics.height);
    for (int u = 0; u < w; ++u) ray_x_[u] = (u + 0.5 - cam.intrinsics.cx) / cam.intrinsics.fx;
    for (int v = 0; v < h; ++v) ray_y_[v] = (v + 0.5 - cam.intrinsics.cy) / cam.intrinsics.fy;
  }

  const std::vector<ScreenTriangle>& triangles() const { return tris_; }

  // Depth of `tri` at pixel (u, v), or +inf when the centre is not covered.
  double sample(const ScreenTriangle& tri, int u, int v) const {
    const double px = u + 0.5;
    const double py = v + 0.5;
    const double w0 = tri.edges[0](px, py);
    const double w1 = tri.edges[1](px, py);
    const double w2 = tri.edges[2](px, py);
    const bool inside = tri.area > 0.0 ? (w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0)
                                       : (w0 <= 0.0 && w1 <= 0.0 && w2 <= 0.0);
    if (!inside) return std::numeric_limits<double>::infinity();
    const double denom = tri.normal.x() * ray_x_[u] + tri.normal.y() * ray_y_[v] + tri.normal.z();
    if (denom == 0.0) return std::numeric_limits<double>::infinity();
    const double z = tri.nd / denom;
    return z > 0.0 ? z : std::numeric_limits<double>::infinity();
  }

 private:
  void add_face(const Vec3& a, const Vec3& b, const Vec3& c) {
    if (a.z() < kNearPlane && b.z() < kNearPlane && c.z() < kNearPlane) return;
    const Vec3 normal = (b - a).cross(c - a);
    if (normal.z() == 0.0 && normal.x() == 0.0 && normal.y() == 0.0) return;

    // Sutherland-Hodgman against z >= near.
    std::array<Vec3, 4> poly;
    int count = 0;
    const std::array<Vec3, 3> in{a, b, c};
    for (int i = 0; i < 3; ++i) {
      const Vec3& cur = in[i];
      const Vec3& nxt = in[(i + 1) % 3];
      const bool cur_in = cur.z() >= kNearPlane;
      const bool nxt_in = nxt.z() >= kNearPlane;
      if (cur_in) poly[count++] = cur;
      if (cur_in != nxt_in) {
        const double t = (kNearPlane - cur.z()) / (nxt.z() - cur.z());
        poly[count++] = cur + t * (nxt - cur);
      }
    }
    if (count < 3) return;

    std::array<Vec2, 4> screen;
    for (int i = 0; i < count; ++i) screen[i] = cam_.project(poly[i]);
    for (int i = 1; i + 1 < count; ++i) {
      ScreenTriangle tri;
      tri.v = {screen[0], screen[i], screen[i + 1]};
      tri.area = edge_fn(tri.v[0], tri.v[1], tri.v[2]);
      if (tri.area == 0.0 || !std::isfinite(tri.area)) continue;
      tri.edges = {Edge::make(tri.v[1], tri.v[2]), Edge::make(tri.v[2], tri.v[0]), Edge::make(tri.v[0], tri.v[1])};
      tri.normal = normal;
      tri.nd = normal.dot(a);
      const double min_x = std::min({tri.v[0].x(), tri.v[1].x(), tri.v[2].x()});
      const double max_x = std::max({tri.v[0].x(), tri.v[1].x(), tri.v[2].x()});
      const double min_y = std::min({tri.v[0].y(), tri.v[1].y(), tri.v[2].y()});
      const double max_y = std::max({tri.v[0].y(), tri.v[1].y(), tri.v[2].y()});
      // pixel u is sampled at u + 0.5
      tri.u0 = static_cast<int>(std::max(0.0, std::ceil(min_x - 0.5)));
      tri.u1 = static_cast<int>(std::min<double>(cam_.intrinsics.width - 1, std::floor(max_x - 0.5)));
      tri.v0 = static_cast<int>(std::max(0.0, std::ceil(min_y - 0.5)));
      tri.v1 = static_cast<int>(std::min<double>(cam_.intrinsics.height - 1, std::floor(max_y - 0.5)));
      if (tri.u0 > tri.u1 || tri.v0 > tri.v1) continue;
      tris_.push_back(tri);
    }
  }

  const Camera& cam_;
  std::vector<Vec3> cam_vertices_;
  std::vector<ScreenTriangle> tris_;
  std::vector<double> ray_x_;
  std::vector<double> ray_y_;
};

void resolve_infinite(DepthMap& map) {
  for (auto& z : map.values) {
    if (!std::isfinite(z)) z = 0.0;
  }
}

}  // namespace

DepthMap render_depth(std::span<const PosedMesh> meshes, const Camera& camera) {
  const TrianglePrep prep(meshes, camera);
  const int width = camera.intrinsics.width;
  const int height = camera.intrinsics.height;
  DepthMap out(width, height);
  std::fill(out.values.begin(), out.values.end(), std::numeric_limits<double>::infinity());

  const auto& tris = prep.triangles();
  const int bands = (height + kBandRows - 1) / kBandRows;
  // Each band owns its rows and walks triangles in index order, so the
  // result is independent of the band schedule.
#pragma omp parallel for schedule(dynamic) if (static_cast<long>(width) * height >= 160 * 120)
  for (int band = 0; band < bands; ++band) {
    const int row_lo = band * kBandRows;
    const int row_hi = std::min(height - 1, row_lo + kBandRows - 1);
    for (const auto& tri : tris) {
      const int r0 = std::max(row_lo, tri.v0);
      const int r1 = std::min(row_hi, tri.v1);
      for (int v = r0; v <= r1; ++v) {
        for (int u = tri.u0; u <= tri.u1; ++u) {
          const double z = prep.sample(tri, u, v);
          double& cur = out.at(u, v);
          if (z < cur) cur = z;
        }
      }
    }
  }
  resolve_infinite(out);
  return out;
}

Mask visible_mask(const DepthMap& target, const DepthMap& occluders) {
  if (target.width != occluders.width || target.height != occluders.height) {
    throw Error(ErrorCode::kDimensionMismatch, "mask inputs differ in size");
  }
  Mask out(target.width, target.height);
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    const double t = target.values[i];
    const double o = occluders.values[i];
    out.values[i] = DepthMap::is_valid(t) && (!DepthMap::is_valid(o) || t <= o) ? 1 : 0;
  }
  return out;
}

Mask render_mask(const PosedMesh& target, std::span<const PosedMesh> occluders, const Camera& camera,
                 bool visible_only) {
  const DepthMap target_depth = render_depth(std::span(&target, 1), camera);
  const DepthMap occluder_depth = visible_only
                                      ? render_depth(occluders, camera)
                                      : DepthMap(camera.intrinsics.width, camera.intrinsics.height);
  return visible_mask(target_depth, occluder_depth);
}

DepthMap fuse_depth(const DepthMap& a, const DepthMap& b) {
  if (a.width != b.width || a.height != b.height) {
    throw Error(ErrorCode::kDimensionMismatch, "cannot fuse depth maps of different size");
  }
  DepthMap out(a.width, a.height);
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double x = a.values[i];
    const double y = b.values[i];
    const bool xv = DepthMap::is_valid(x);
    const bool yv = DepthMap::is_valid(y);
    out.values[i] = xv && yv ? std::min(x, y) : xv ? x : yv ? y : 0.0;
  }
  return out;
}

namespace reference {

DepthMap render_depth_naive(std::span<const PosedMesh> meshes, const Camera& camera) {
  const TrianglePrep prep(meshes, camera);
  DepthMap out(camera.intrinsics.width, camera.intrinsics.height);
  for (int v = 0; v < out.height; ++v) {
    for (int u = 0; u < out.width; ++u) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& tri : prep.triangles()) {
        best = std::min(best, prep.sample(tri, u, v));
      }
      out.at(u, v) = best;
    }
  }
  resolve_infinite(out);
  return out;
}

}  // namespace reference

}  // namespace scancad
