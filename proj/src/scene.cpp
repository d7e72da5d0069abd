#include "scancad/scene.hpp"

#include <algorithm>

#include "scancad/error.hpp"
#include "scancad/io.hpp"
#include "scancad/json_util.hpp"

namespace scancad {

namespace fs = std::filesystem;

namespace {

Mat4 mat4_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 16) {
    throw Error(ErrorCode::kManifestInvalid, what + ": camera_to_world must be 16 numbers (row-major)");
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const auto& v = j[static_cast<std::size_t>(4 * r + c)];
      if (!v.is_number()) throw Error(ErrorCode::kManifestInvalid, what + ": non-numeric pose entry");
      m(r, c) = v.get<double>();
    }
  }
  const Mat3 rot = m.topLeftCorner<3, 3>();
  if (!m.allFinite() || (rot.transpose() * rot - Mat3::Identity()).norm() > 1e-6 || rot.determinant() < 0.0) {
    throw Error(ErrorCode::kManifestInvalid, what + ": camera_to_world is not a rigid transform");
  }
  return m;
}

json mat4_to_json(const Mat4& m) {
  json out = json::array();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) out.push_back(m(r, c));
  }
  return out;
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

const std::vector<std::uint32_t>& require_segmentation(const ObjectAnnotation& ann) {
  if (!ann.segmentation) {
    throw Error(ErrorCode::kInvalidArgument,
                "object " + std::to_string(ann.object_id) + " has no segmentation; derive it first");
  }
  return *ann.segmentation;
}

}  // namespace

std::vector<std::uint32_t> vertices_with_instance(const TriMesh& mesh, int instance_id) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < mesh.instance_ids.size(); ++i) {
    if (mesh.instance_ids[i] == instance_id) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

namespace {

RgbdScan load_scan_impl(const fs::path& manifest_path) {
  if (!fs::exists(manifest_path)) throw Error(ErrorCode::kMissingAsset, manifest_path.string());
  const json doc = parse_json(read_text_file(manifest_path), manifest_path.string());
  const fs::path base = manifest_path.parent_path();
  const std::string where = manifest_path.filename().string();

  RgbdScan scan;
  scan.scene_id = doc.value("scene_id", manifest_path.parent_path().filename().string());
  try {
    scan.gravity_axis = parse_axis(require_field<std::string>(doc, "gravity_axis", where));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kManifestInvalid) throw;
    throw Error(ErrorCode::kManifestInvalid, where + ": " + e.what());
  }

  scan.mesh_file = require_field<std::string>(doc, "mesh", where);
  const fs::path mesh_path = base / scan.mesh_file;
  if (!fs::exists(mesh_path)) throw Error(ErrorCode::kMissingAsset, "mesh " + mesh_path.string());
  scan.scene_mesh = read_mesh(mesh_path);
  try {
    scan.scene_mesh.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kManifestInvalid, "mesh " + mesh_path.string() + ": " + e.what());
  }

  const auto frames = require_field<json>(doc, "frames", where);
  if (!frames.is_array()) throw Error(ErrorCode::kManifestInvalid, where + ": frames must be an array");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string what = where + ": frames[" + std::to_string(i) + "]";
    const json& f = frames[i];
    ScanFrame frame;
    const Intrinsics k = intrinsics_from_json(require_field<json>(f, "intrinsics", what), what + ".intrinsics");
    frame.camera = Camera::from_camera_to_world(k, mat4_from_json(require_field<json>(f, "camera_to_world", what), what));
    frame.depth_file = require_field<std::string>(f, "depth", what);
    frame.depth_scale = f.value("depth_scale", 0.001);
    if (!(frame.depth_scale > 0.0)) throw Error(ErrorCode::kManifestInvalid, what + ": depth_scale must be positive");
    if (f.contains("rgb")) frame.rgb_file = f.at("rgb").get<std::string>();
    const fs::path depth_path = base / frame.depth_file;
    if (!fs::exists(depth_path)) throw Error(ErrorCode::kMissingAsset, "depth file " + depth_path.string());
    frame.depth = read_depth_png(depth_path, frame.depth_scale);
    if (frame.depth.width != k.width || frame.depth.height != k.height) {
      throw Error(ErrorCode::kDepthDecodeError, depth_path.string() + ": size does not match intrinsics");
    }
    scan.frames.push_back(std::move(frame));
  }

  const auto anns = doc.value("annotations", json::array());
  for (std::size_t i = 0; i < anns.size(); ++i) {
    const std::string what = where + ": annotations[" + std::to_string(i) + "]";
    const json& a = anns[i];
    ObjectAnnotation ann;
    ann.object_id = require_field<int>(a, "object_id", what);
    ann.class_label = require_field<std::string>(a, "class", what);
    if (a.contains("obb") && !a.at("obb").is_null()) {
      ann.obb = obb_from_json(a.at("obb"), what + ".obb");
      ann.obb_supplied = true;
    }
    if (a.contains("instance_id") && !a.at("instance_id").is_null()) {
      ann.instance_id = a.at("instance_id").get<int>();
      if (!scan.scene_mesh.has_instance_ids()) {
        throw Error(ErrorCode::kManifestInvalid, what + ": instance_id given but mesh has no instance labels");
      }
      ann.segmentation = vertices_with_instance(scan.scene_mesh, *ann.instance_id);
      ann.segmentation_supplied = true;
    } else if (a.contains("segmentation") && !a.at("segmentation").is_null()) {
      auto seg = sorted_unique(a.at("segmentation").get<std::vector<std::uint32_t>>());
      if (!seg.empty() && seg.back() >= scan.scene_mesh.vertices.size()) {
        throw Error(ErrorCode::kManifestInvalid, what + ": segmentation index out of range");
      }
      ann.segmentation = std::move(seg);
      ann.segmentation_supplied = true;
    }
    if (!ann.obb && !ann.segmentation) {
      throw Error(ErrorCode::kManifestInvalid, what + ": needs an obb or a segmentation");
    }
    scan.annotations.push_back(std::move(ann));
  }
  return scan;
}

}  // namespace

RgbdScan load_scan(const fs::path& manifest_path) {
  try {
    return load_scan_impl(manifest_path);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kManifestInvalid, manifest_path.string() + ": " + e.what());
  }
}

void save_scan(const RgbdScan& scan, const fs::path& dir) {
  fs::create_directories(dir);
  write_ply(dir / scan.mesh_file, scan.scene_mesh);
  json doc;
  doc["scene_id"] = scan.scene_id;
  doc["gravity_axis"] = std::string(1, axis_name(scan.gravity_axis));
  doc["mesh"] = scan.mesh_file;
  json frames = json::array();
  for (const auto& f : scan.frames) {
    const fs::path depth_path = dir / f.depth_file;
    fs::create_directories(depth_path.parent_path());
    write_depth_png(depth_path, f.depth, f.depth_scale);
    json jf{{"intrinsics", intrinsics_to_json(f.camera.intrinsics)},
            {"camera_to_world", mat4_to_json(f.camera.camera_to_world())},
            {"depth", f.depth_file},
            {"depth_scale", f.depth_scale}};
    if (f.rgb_file) jf["rgb"] = *f.rgb_file;
    frames.push_back(std::move(jf));
  }
  doc["frames"] = std::move(frames);
  json anns = json::array();
  for (const auto& a : scan.annotations) {
    json ja{{"object_id", a.object_id}, {"class", a.class_label}};
    if (a.obb && a.obb_supplied) ja["obb"] = obb_to_json(*a.obb);
    if (a.segmentation_supplied) {
      if (a.instance_id) ja["instance_id"] = *a.instance_id;
      else if (a.segmentation) ja["segmentation"] = *a.segmentation;
    }
    anns.push_back(std::move(ja));
  }
  doc["annotations"] = std::move(anns);
  write_file_atomic(dir / "manifest.json", doc.dump(2) + "\n");
}

FrameSelection select_frames(const RgbdScan& scan, const Obb& obb, std::size_t n_t, FrameSpacing spacing,
                             int object_id) {
  if (n_t < 1) throw Error(ErrorCode::kInvalidArgument, "n_t must be at least 1");
  const auto corners = obb.corners();
  std::vector<std::size_t> qualifying;
  for (std::size_t i = 0; i < scan.frames.size(); ++i) {
    const Camera& cam = scan.frames[i].camera;
    const bool visible = std::any_of(corners.begin(), corners.end(), [&](const Vec3& c) {
      const Vec3 pc = cam.to_camera(c);
      if (!(pc.z() > 0.0)) return false;
      const auto uv = cam.project(pc);
      return uv.x() >= 0.0 && uv.x() < cam.intrinsics.width && uv.y() >= 0.0 && uv.y() < cam.intrinsics.height;
    });
    if (visible) qualifying.push_back(i);
  }
  if (qualifying.empty()) {
    throw Error(ErrorCode::kNoVisibleFrames, "object " + std::to_string(object_id) + " is not in view of any frame");
  }

  FrameSelection sel;
  sel.object_id = object_id;
  sel.n_t = n_t;
  const std::size_t q = qualifying.size();
  if (n_t >= q) {
    sel.frame_indices = qualifying;
  } else if (n_t == 1) {
    sel.frame_indices = {qualifying.front()};
  } else if (spacing == FrameSpacing::kEven) {
    for (std::size_t i = 0; i < n_t; ++i) sel.frame_indices.push_back(qualifying[i * (q - 1) / (n_t - 1)]);
  } else {
    const std::size_t stride = (q + n_t - 1) / n_t;
    for (std::size_t i = 0; i < q && sel.frame_indices.size() < n_t; i += stride) {
      sel.frame_indices.push_back(qualifying[i]);
    }
  }
  return sel;
}

ObjectAnnotation derive_missing_supervision(const RgbdScan& scan, const ObjectAnnotation& ann, double margin) {
  ObjectAnnotation out = ann;
  if (ann.obb && ann.segmentation) return out;
  if (!ann.obb && !ann.segmentation) {
    throw Error(ErrorCode::kInvalidArgument,
                "object " + std::to_string(ann.object_id) + " has neither an obb nor a segmentation");
  }
  PointCloud verts;
  verts.points = scan.scene_mesh.vertices;
  if (!ann.obb) {
    PointCloud seg;
    for (auto idx : *ann.segmentation) seg.points.push_back(scan.scene_mesh.vertices[idx]);
    out.obb = fit_obb_gravity_aligned(seg, scan.gravity_axis);
    out.obb_supplied = false;
  } else {
    const auto idx = points_in_obb(*ann.obb, verts, margin);
    out.segmentation = std::vector<std::uint32_t>(idx.begin(), idx.end());
    out.segmentation_supplied = false;
  }
  return out;
}

TriMesh remove_vertices(const TriMesh& mesh, const std::vector<std::uint32_t>& sorted_indices) {
  if (sorted_indices.empty()) return mesh;
  constexpr std::uint32_t kRemoved = ~0u;
  std::vector<std::uint32_t> remap(mesh.vertices.size(), 0);
  for (auto idx : sorted_indices) remap[idx] = kRemoved;
  TriMesh out;
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    if (remap[i] == kRemoved) continue;
    remap[i] = static_cast<std::uint32_t>(out.vertices.size());
    out.vertices.push_back(mesh.vertices[i]);
    if (mesh.has_instance_ids()) out.instance_ids.push_back(mesh.instance_ids[i]);
  }
  for (const auto& f : mesh.faces) {
    if (remap[f[0]] == kRemoved || remap[f[1]] == kRemoved || remap[f[2]] == kRemoved) continue;
    out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  }
  return out;
}

TriMesh remove_object(const RgbdScan& scan, const ObjectAnnotation& ann) {
  return remove_vertices(scan.scene_mesh, require_segmentation(ann));
}

PointCloud object_point_cloud(const RgbdScan& scan, const ObjectAnnotation& ann) {
  const auto& seg = require_segmentation(ann);
  if (seg.empty()) {
    throw Error(ErrorCode::kEmptySegmentation, "object " + std::to_string(ann.object_id) + " has no vertices");
  }
  PointCloud out;
  out.points.reserve(seg.size());
  for (auto idx : seg) out.points.push_back(scan.scene_mesh.vertices[idx]);
  return out;
}

ObjectSplit split_object_faces(const TriMesh& mesh, const std::vector<std::uint32_t>& sorted_indices) {
  std::vector<char> in_object(mesh.vertices.size(), 0);
  for (auto idx : sorted_indices) in_object[idx] = 1;
  ObjectSplit out;
  out.object.vertices = mesh.vertices;
  out.rest.vertices = mesh.vertices;
  for (const auto& f : mesh.faces) {
    const bool all = in_object[f[0]] && in_object[f[1]] && in_object[f[2]];
    (all ? out.object : out.rest).faces.push_back(f);
  }
  return out;
}

}  // namespace scancad
