#include "scancad/json_util.hpp"

#include <cmath>

namespace scancad {

namespace {

Eigen::VectorXd numbers(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) {
    throw Error(ErrorCode::kManifestInvalid, what + ": expected an array of " + std::to_string(n) + " numbers");
  }
  Eigen::VectorXd out(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!j[i].is_number()) throw Error(ErrorCode::kManifestInvalid, what + ": non-numeric entry");
    out[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  if (!out.allFinite()) throw Error(ErrorCode::kManifestInvalid, what + ": non-finite entry");
  return out;
}

}  // namespace

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j, const std::string& what) { return numbers(j, 3, what); }

json quat_to_json(const Quat& q) { return json::array({q.w(), q.x(), q.y(), q.z()}); }

Quat quat_from_json(const json& j, const std::string& what) {
  const auto v = numbers(j, 4, what);
  Quat q(v[0], v[1], v[2], v[3]);
  const double n = q.norm();
  if (!(n > 0.0)) throw Error(ErrorCode::kManifestInvalid, what + ": zero quaternion");
  // Tolerate serialization rounding, reject anything that is not a rotation.
  if (std::abs(n - 1.0) > 1e-6) throw Error(ErrorCode::kManifestInvalid, what + ": quaternion is not unit length");
  if (std::abs(n - 1.0) > 1e-12) q.normalize();
  return q;
}

json pose_to_json(const Pose9& pose) {
  return json{{"translation", vec3_to_json(pose.translation)},
              {"rotation_wxyz", quat_to_json(pose.rotation)},
              {"scale", vec3_to_json(pose.scale)}};
}

Pose9 pose_from_json(const json& j, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorCode::kManifestInvalid, what + ": pose must be an object");
  Pose9 pose;
  pose.translation = vec3_from_json(require_field<json>(j, "translation", what), what + ".translation");
  pose.rotation = quat_from_json(require_field<json>(j, "rotation_wxyz", what), what + ".rotation_wxyz");
  pose.scale = vec3_from_json(require_field<json>(j, "scale", what), what + ".scale");
  if (!(pose.scale.array() > 0.0).all()) throw Error(ErrorCode::kManifestInvalid, what + ": scale must be positive");
  return pose;
}

json obb_to_json(const Obb& box) {
  return json{{"center", vec3_to_json(box.center)},
              {"half_extents", vec3_to_json(box.half_extents)},
              {"rotation_wxyz", quat_to_json(box.rotation)}};
}

Obb obb_from_json(const json& j, const std::string& what) {
  Obb box;
  box.center = vec3_from_json(require_field<json>(j, "center", what), what + ".center");
  box.half_extents = vec3_from_json(require_field<json>(j, "half_extents", what), what + ".half_extents");
  box.rotation = quat_from_json(require_field<json>(j, "rotation_wxyz", what), what + ".rotation_wxyz");
  if (!(box.half_extents.array() > 0.0).all()) {
    throw Error(ErrorCode::kManifestInvalid, what + ": half_extents must be positive");
  }
  return box;
}

json intrinsics_to_json(const Intrinsics& k) {
  return json{{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const json& j, const std::string& what) {
  Intrinsics k;
  k.fx = require_field<double>(j, "fx", what);
  k.fy = require_field<double>(j, "fy", what);
  k.cx = require_field<double>(j, "cx", what);
  k.cy = require_field<double>(j, "cy", what);
  k.width = require_field<int>(j, "width", what);
  k.height = require_field<int>(j, "height", what);
  if (!(k.fx > 0.0 && k.fy > 0.0) || k.width <= 0 || k.height <= 0) {
    throw Error(ErrorCode::kManifestInvalid, what + ": intrinsics must be positive");
  }
  return k;
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kManifestInvalid, what + ": " + e.what());
  }
}

}  // namespace scancad
