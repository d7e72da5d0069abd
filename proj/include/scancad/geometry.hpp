#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace scancad {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Quat = Eigen::Quaterniond;
using Face = std::array<std::uint32_t, 3>;

enum class Axis : int { kX = 0, kY = 1, kZ = 2 };

Axis parse_axis(std::string_view name);
char axis_name(Axis axis);

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  // Either empty or one entry per vertex; -1 marks unlabeled vertices.
  std::vector<std::int32_t> instance_ids;

  bool has_instance_ids() const { return !instance_ids.empty(); }
  double surface_area() const;
  // Throws kInvalidArgument when an index is out of range, a face repeats a
  // vertex, or instance_ids has the wrong length.
  void validate() const;
};

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

// world = translation + rotation * (scale .* canonical)
struct Pose9 {
  Vec3 scale = Vec3::Ones();
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose9 identity() { return {}; }

  Vec3 apply(const Vec3& canonical) const {
    return translation + rotation * scale.cwiseProduct(canonical);
  }
  Vec3 inverse_apply(const Vec3& world) const {
    return (rotation.conjugate() * (world - translation)).cwiseQuotient(scale);
  }
  Mat4 matrix() const;
  void validate() const;
};

struct Obb {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();
  Quat rotation = Quat::Identity();

  std::array<Vec3, 8> corners() const;
  // Coordinates of a world point in the box frame (origin at the center).
  Vec3 to_local(const Vec3& world) const { return rotation.conjugate() * (world - center); }
  void validate() const;
};

PointCloud transform_points(const Pose9& pose, const PointCloud& cloud);
PointCloud inverse_transform_points(const Pose9& pose, const PointCloud& cloud);

// Rotation by `angle` radians about a coordinate axis.
Quat axis_rotation(Axis axis, double angle);

// Geodesic angle in radians between two rotations.
double rotation_angle_between(const Quat& a, const Quat& b);

// Indices of points whose box-frame coordinates satisfy
// |c_k| <= half_extents_k + margin on every axis (closed box).
std::vector<std::size_t> points_in_obb(const Obb& box, const PointCloud& cloud, double margin);

// Minimum-area yaw-only box about `up_axis` (rotating calipers over the 2D
// hull of the projected cloud), extruded to the cloud's extent along up.
Obb fit_obb_gravity_aligned(const PointCloud& cloud, Axis up_axis);

// The two in-plane axes orthogonal to `up` in cyclic order, so that a
// positive rotation about `up` carries the first toward the second.
std::array<int, 2> plane_axes(Axis up);

}  // namespace scancad
