#include "scancad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "scancad/error.hpp"

namespace scancad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kZeroAreaMesh: return "ZeroAreaMesh";
    case ErrorCode::kEmptyCloud: return "EmptyCloud";
    case ErrorCode::kDegenerateCloud: return "DegenerateCloud";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kManifestInvalid: return "ManifestInvalid";
    case ErrorCode::kMissingAsset: return "MissingAsset";
    case ErrorCode::kDepthDecodeError: return "DepthDecodeError";
    case ErrorCode::kMeshParseError: return "MeshParseError";
    case ErrorCode::kNoVisibleFrames: return "NoVisibleFrames";
    case ErrorCode::kEmptySegmentation: return "EmptySegmentation";
    case ErrorCode::kUnknownClass: return "UnknownClass";
    case ErrorCode::kUnknownModel: return "UnknownModel";
    case ErrorCode::kDegenerateModel: return "DegenerateModel";
    case ErrorCode::kEmptySelection: return "EmptySelection";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Axis parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::kX;
  if (name == "y" || name == "Y") return Axis::kY;
  if (name == "z" || name == "Z") return Axis::kZ;
  throw Error(ErrorCode::kInvalidArgument, "unknown axis '" + std::string(name) + "'");
}

char axis_name(Axis axis) { return "xyz"[static_cast<int>(axis)]; }

std::array<int, 2> plane_axes(Axis up) {
  const int u = static_cast<int>(up);
  return {(u + 1) % 3, (u + 2) % 3};
}

double TriMesh::surface_area() const {
  double area = 0.0;
  for (const auto& f : faces) {
    area += 0.5 * (vertices[f[1]] - vertices[f[0]]).cross(vertices[f[2]] - vertices[f[0]]).norm();
  }
  return area;
}

void TriMesh::validate() const {
  const auto n = vertices.size();
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto& f = faces[i];
    if (f[0] >= n || f[1] >= n || f[2] >= n) {
      throw Error(ErrorCode::kInvalidArgument, "face " + std::to_string(i) + " index out of range");
    }
    if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
      throw Error(ErrorCode::kInvalidArgument, "face " + std::to_string(i) + " repeats a vertex");
    }
  }
  if (!instance_ids.empty() && instance_ids.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "instance_ids length does not match vertex count");
  }
}

Mat4 Pose9::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.toRotationMatrix() * scale.asDiagonal();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void Pose9::validate() const {
  if (!(scale.array() > 0.0).all() || !scale.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose scale must be positive");
  }
  if (std::abs(rotation.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "pose rotation must be a unit quaternion");
  }
  if (!translation.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "pose translation must be finite");
  }
}

std::array<Vec3, 8> Obb::corners() const {
  std::array<Vec3, 8> out;
  for (int i = 0; i < 8; ++i) {
    const Vec3 sign((i & 1) ? 1.0 : -1.0, (i & 2) ? 1.0 : -1.0, (i & 4) ? 1.0 : -1.0);
    out[i] = center + rotation * sign.cwiseProduct(half_extents);
  }
  return out;
}

void Obb::validate() const {
  if (!(half_extents.array() > 0.0).all()) {
    throw Error(ErrorCode::kInvalidArgument, "obb half extents must be positive");
  }
  if (std::abs(rotation.norm() - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArgument, "obb rotation must be a unit quaternion");
  }
}

PointCloud transform_points(const Pose9& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  const Mat3 rot = pose.rotation.toRotationMatrix();
  for (const auto& p : cloud.points) {
    out.points.push_back(pose.translation + rot * pose.scale.cwiseProduct(p));
  }
  return out;
}

PointCloud inverse_transform_points(const Pose9& pose, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  const Mat3 rot_t = pose.rotation.toRotationMatrix().transpose();
  for (const auto& p : cloud.points) {
    out.points.push_back((rot_t * (p - pose.translation)).cwiseQuotient(pose.scale));
  }
  return out;
}

Quat axis_rotation(Axis axis, double angle) {
  Vec3 dir = Vec3::Zero();
  dir[static_cast<int>(axis)] = 1.0;
  return Quat(Eigen::AngleAxisd(angle, dir));
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  const double d = std::min(1.0, std::abs(a.normalized().dot(b.normalized())));
  return 2.0 * std::acos(d);
}

std::vector<std::size_t> points_in_obb(const Obb& box, const PointCloud& cloud, double margin) {
  if (margin < 0.0) throw Error(ErrorCode::kInvalidArgument, "margin must be non-negative");
  const Mat3 rot_t = box.rotation.toRotationMatrix().transpose();
  const Vec3 limit = box.half_extents.array() + margin;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 local = rot_t * (cloud.points[i] - box.center);
    if ((local.cwiseAbs().array() <= limit.array()).all()) out.push_back(i);
  }
  return out;
}

namespace {

using Vec2 = Eigen::Vector2d;

double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; collinear points are dropped.
std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

Obb fit_obb_gravity_aligned(const PointCloud& cloud, Axis up_axis) {
  const auto [a0, a1] = plane_axes(up_axis);
  const int up = static_cast<int>(up_axis);

  std::vector<Vec2> projected;
  projected.reserve(cloud.size());
  double up_min = std::numeric_limits<double>::infinity();
  double up_max = -up_min;
  for (const auto& p : cloud.points) {
    projected.emplace_back(p[a0], p[a1]);
    up_min = std::min(up_min, p[up]);
    up_max = std::max(up_max, p[up]);
  }

  const auto hull = convex_hull(std::move(projected));
  double hull_area = 0.0;
  double span = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& p = hull[i];
    const auto& q = hull[(i + 1) % hull.size()];
    hull_area += p.x() * q.y() - q.x() * p.y();
    span = std::max(span, (q - hull[0]).norm());
  }
  if (hull.size() < 3 || std::abs(hull_area) <= 1e-12 * span * span) {
    throw Error(ErrorCode::kDegenerateCloud, "cloud projection is collinear");
  }

  // Calipers: the minimum-area rectangle has one side flush with a hull edge.
  constexpr double kQuarter = std::numbers::pi / 2.0;
  double best_area = std::numeric_limits<double>::infinity();
  double best_yaw = 0.0;
  Vec2 best_lo;
  Vec2 best_hi;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Vec2 edge = hull[(i + 1) % hull.size()] - hull[i];
    double yaw = std::fmod(std::atan2(edge.y(), edge.x()), kQuarter);
    if (yaw < 0.0) yaw += kQuarter;
    const Vec2 u(std::cos(yaw), std::sin(yaw));
    const Vec2 v(-u.y(), u.x());
    Vec2 lo = Vec2::Constant(std::numeric_limits<double>::infinity());
    Vec2 hi = -lo;
    for (const auto& p : hull) {
      const Vec2 c(p.dot(u), p.dot(v));
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
    const double area = (hi.x() - lo.x()) * (hi.y() - lo.y());
    if (area < best_area) {
      best_area = area;
      best_yaw = yaw;
      best_lo = lo;
      best_hi = hi;
    }
  }

  const Vec2 u(std::cos(best_yaw), std::sin(best_yaw));
  const Vec2 v(-u.y(), u.x());
  const Vec2 mid = 0.5 * (best_lo + best_hi);
  const Vec2 center2 = mid.x() * u + mid.y() * v;

  Obb box;
  box.center[a0] = center2.x();
  box.center[a1] = center2.y();
  box.center[up] = 0.5 * (up_min + up_max);
  box.half_extents[a0] = 0.5 * (best_hi.x() - best_lo.x());
  box.half_extents[a1] = 0.5 * (best_hi.y() - best_lo.y());
  box.half_extents[up] = 0.5 * (up_max - up_min);
  box.rotation = axis_rotation(up_axis, best_yaw);
  return box;
}

}  // namespace scancad
