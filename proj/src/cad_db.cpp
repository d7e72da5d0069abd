#include "scancad/cad_db.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string_view>

#include "scancad/error.hpp"
#include "scancad/io.hpp"
#include "scancad/json_util.hpp"
#include "scancad/sampling.hpp"

namespace scancad {

namespace fs = std::filesystem;

namespace {

// Cyclic coordinate shift taking axis `from` onto axis `to`; a proper rotation.
Vec3 rotate_up(const Vec3& p, Axis from, Axis to) {
  const int k = (static_cast<int>(to) - static_cast<int>(from) + 3) % 3;
  if (k == 0) return p;
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[(i + k) % 3] = p[i];
  return out;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::optional<PointCloud> read_cached_samples(const fs::path& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  PointCloud cloud;
  cloud.points.resize(n);
  for (auto& p : cloud.points) {
    double xyz[3];
    if (!in.read(reinterpret_cast<char*>(xyz), sizeof(xyz))) return std::nullopt;
    p = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  if (in.peek() != std::char_traits<char>::eof()) return std::nullopt;
  return cloud;
}

void write_cached_samples(const fs::path& path, const PointCloud& cloud) {
  std::string bytes;
  bytes.reserve(cloud.size() * 24);
  for (const auto& p : cloud.points) {
    const double xyz[3] = {p.x(), p.y(), p.z()};
    bytes.append(reinterpret_cast<const char*>(xyz), sizeof(xyz));
  }
  write_file_atomic(path, bytes);
}

}  // namespace

std::uint64_t mesh_content_hash(const TriMesh& mesh) {
  const std::string_view verts(reinterpret_cast<const char*>(mesh.vertices.data()),
                               mesh.vertices.size() * sizeof(Vec3));
  const std::string_view faces(reinterpret_cast<const char*>(mesh.faces.data()), mesh.faces.size() * sizeof(Face));
  const std::uint64_t a = std::hash<std::string_view>{}(verts);
  const std::uint64_t b = std::hash<std::string_view>{}(faces);
  return a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
}

CadDatabase CadDatabase::load(const fs::path& manifest, Axis target_up) {
  if (!fs::exists(manifest)) throw Error(ErrorCode::kManifestInvalid, "database manifest " + manifest.string() + " not found");
  std::istringstream lines(read_text_file(manifest));
  const fs::path base = manifest.parent_path();
  CadDatabase db;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string what = manifest.filename().string() + ":" + std::to_string(line_no);
    const json row = parse_json(line, what);
    const auto id = require_field<std::string>(row, "id", what);
    const auto category = require_field<std::string>(row, "category", what);
    const auto mesh_path = require_field<std::string>(row, "mesh_path", what);
    Axis up = Axis::kZ;
    if (row.contains("up_axis")) {
      try {
        up = parse_axis(row.at("up_axis").get<std::string>());
      } catch (const std::exception& e) {
        throw Error(ErrorCode::kManifestInvalid, what + ": bad up_axis");
      }
    }
    if (db.contains(id)) throw Error(ErrorCode::kManifestInvalid, what + ": duplicate model id '" + id + "'");
    TriMesh mesh;
    try {
      mesh = read_mesh(base / mesh_path);
      mesh.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::kMeshParseError, "model '" + id + "': " + e.what());
    }
    db.add_model(id, category, std::move(mesh), up, target_up);
    db.models_.at(id).source = mesh_path;
  }
  return db;
}

const CadModel& CadDatabase::add_model(const std::string& id, const std::string& category, TriMesh mesh, Axis mesh_up,
                                       Axis target_up) {
  if (contains(id)) throw Error(ErrorCode::kManifestInvalid, "duplicate model id '" + id + "'");
  if (mesh.vertices.empty()) throw Error(ErrorCode::kMeshParseError, "model '" + id + "' has no vertices");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (auto& v : mesh.vertices) {
    v = rotate_up(v, mesh_up, target_up);
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  const Vec3 center = 0.5 * (lo + hi);
  CadModel model;
  model.id = id;
  model.category = category;
  for (auto& v : mesh.vertices) v -= center;
  model.bounds_min = lo - center;
  model.bounds_max = hi - center;
  model.original_center = center;
  model.mesh = std::move(mesh);
  model.mesh.instance_ids.clear();

  auto& ids = index_[category];
  ids.insert(std::lower_bound(ids.begin(), ids.end(), id), id);
  return models_.emplace(id, std::move(model)).first->second;
}

const CadModel& CadDatabase::model(const std::string& id) const {
  const auto it = models_.find(id);
  if (it == models_.end()) throw Error(ErrorCode::kUnknownModel, "no model '" + id + "'");
  return it->second;
}

std::vector<std::string> CadDatabase::categories() const {
  std::vector<std::string> out;
  for (const auto& [cat, ids] : index_) out.push_back(cat);
  return out;
}

std::string CadDatabase::category_for(const std::string& label) const {
  const auto it = class_map_.find(label);
  return it == class_map_.end() ? label : it->second;
}

const std::vector<std::string>& CadDatabase::candidates_for_class(const std::string& label) const {
  const auto it = index_.find(category_for(label));
  if (it == index_.end()) {
    std::string known;
    for (const auto& [cat, ids] : index_) known += (known.empty() ? "" : ", ") + cat;
    throw Error(ErrorCode::kUnknownClass, "class '" + label + "' maps to no category (available: " + known + ")");
  }
  return it->second;
}

std::shared_ptr<const PointCloud> CadDatabase::sampled_points(const std::string& id, std::size_t n,
                                                              std::uint64_t seed) const {
  const CadModel& m = model(id);
  const SampleKey key{id, n, seed};
  if (memoize_) {
    std::lock_guard lock(*mutex_);
    if (const auto it = samples_.find(key); it != samples_.end()) return it->second;
  }

  std::optional<PointCloud> cloud;
  fs::path cache_file;
  if (cache_dir_) {
    cache_file = *cache_dir_ / (hex64(mesh_content_hash(m.mesh)) + "_" + std::to_string(n) + "_" +
                                std::to_string(seed) + ".pts");
    cloud = read_cached_samples(cache_file, n);
  }
  if (!cloud) {
    cloud = sample_surface(m.mesh, n, seed);
    if (cache_dir_) write_cached_samples(cache_file, *cloud);
  }
  auto shared = std::make_shared<const PointCloud>(std::move(*cloud));
  if (!memoize_) return shared;
  std::lock_guard lock(*mutex_);
  // A concurrent first computation may have won; both values are equal.
  return samples_.emplace(key, std::move(shared)).first->second;
}

Pose9 initial_pose_from_obb(const Obb& obb, const CadModel& model) {
  const Vec3 half = model.half_extents();
  if (!(half.array() > 0.0).all()) {
    throw Error(ErrorCode::kDegenerateModel, "model '" + model.id + "' has a zero-extent axis");
  }
  Pose9 pose;
  pose.translation = obb.center;
  pose.rotation = obb.rotation;
  pose.scale = obb.half_extents.cwiseQuotient(half);
  return pose;
}

}  // namespace scancad
