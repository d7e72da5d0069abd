#pragma once

#include <string>

#include <json.hpp>

#include "scancad/error.hpp"
#include "scancad/geometry.hpp"
#include "scancad/raster.hpp"

namespace scancad {

using json = nlohmann::json;

json vec3_to_json(const Vec3& v);
Vec3 vec3_from_json(const json& j, const std::string& what);

// Quaternions are serialized as [w, x, y, z].
json quat_to_json(const Quat& q);
Quat quat_from_json(const json& j, const std::string& what);

json pose_to_json(const Pose9& pose);
Pose9 pose_from_json(const json& j, const std::string& what);

json obb_to_json(const Obb& box);
Obb obb_from_json(const json& j, const std::string& what);

json intrinsics_to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const json& j, const std::string& what);

// Parses text, rethrowing syntax errors as kManifestInvalid naming `what`.
json parse_json(const std::string& text, const std::string& what);

// Typed field access that reports missing/mistyped fields as kManifestInvalid.
template <typename T>
T require_field(const json& j, const char* key, const std::string& what) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::kManifestInvalid, what + ": missing field '" + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestInvalid, what + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace scancad
