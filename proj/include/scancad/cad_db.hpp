#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "scancad/geometry.hpp"

namespace scancad {

struct CadModel {
  std::string id;
  std::string category;
  TriMesh mesh;  // canonical frame: bounds centred on the origin, up = database up axis
  Vec3 bounds_min = Vec3::Zero();
  Vec3 bounds_max = Vec3::Zero();
  Vec3 original_center = Vec3::Zero();  // subtracted at load
  std::string source;

  Vec3 half_extents() const { return 0.5 * (bounds_max - bounds_min); }
};

// Category-indexed model set. Immutable after construction apart from the
// sample memo table, which is safe to use from concurrent evaluators.
//
// On-disk sample cache (optional): one file per (mesh content hash, n, seed)
// named `<hash>_<n>_<seed>.pts`, holding n little-endian xyz doubles in the
// canonical frame. Nothing is ever evicted; the directory can be deleted at
// any time and is rebuilt on demand.
class CadDatabase {
 public:
  CadDatabase() = default;
  CadDatabase(const CadDatabase&) = delete;
  CadDatabase& operator=(const CadDatabase&) = delete;
  CadDatabase(CadDatabase&&) = default;
  CadDatabase& operator=(CadDatabase&&) = default;

  // JSON lines of {id, category, mesh_path, up_axis?}; mesh paths are
  // relative to the manifest. Models are rotated so their up axis becomes
  // `target_up`. Throws kManifestInvalid or kMeshParseError.
  static CadDatabase load(const std::filesystem::path& manifest, Axis target_up = Axis::kZ);

  // Re-centres the mesh; throws kManifestInvalid on a duplicate id.
  const CadModel& add_model(const std::string& id, const std::string& category, TriMesh mesh,
                            Axis mesh_up = Axis::kZ, Axis target_up = Axis::kZ);

  const CadModel& model(const std::string& id) const;
  bool contains(const std::string& id) const { return models_.count(id) != 0; }
  std::size_t size() const { return models_.size(); }
  std::vector<std::string> categories() const;

  // Maps a class label to a category (identity when unmapped).
  void set_class_map(std::map<std::string, std::string> class_map) { class_map_ = std::move(class_map); }
  std::string category_for(const std::string& label) const;

  // Lexicographically sorted ids. Throws kUnknownClass listing categories.
  const std::vector<std::string>& candidates_for_class(const std::string& label) const;

  // Memoized sample_surface over the canonical mesh. Throws kUnknownModel.
  std::shared_ptr<const PointCloud> sampled_points(const std::string& id, std::size_t n, std::uint64_t seed) const;

  void set_cache_dir(std::optional<std::filesystem::path> dir) { cache_dir_ = std::move(dir); }
  void set_memoization(bool enabled) { memoize_ = enabled; }

 private:
  using SampleKey = std::tuple<std::string, std::size_t, std::uint64_t>;

  std::map<std::string, CadModel> models_;
  std::map<std::string, std::vector<std::string>> index_;
  std::map<std::string, std::string> class_map_;
  std::optional<std::filesystem::path> cache_dir_;
  bool memoize_ = true;
  mutable std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
  mutable std::map<SampleKey, std::shared_ptr<const PointCloud>> samples_;
};

// Pose that maps the model's canonical bounds exactly onto `obb`.
// Throws kDegenerateModel when a canonical extent is zero.
Pose9 initial_pose_from_obb(const Obb& obb, const CadModel& model);

// Content hash of a mesh (vertices and faces), used to key the disk cache.
std::uint64_t mesh_content_hash(const TriMesh& mesh);

}  // namespace scancad
