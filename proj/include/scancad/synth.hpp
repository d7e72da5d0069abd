#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scancad/cad_db.hpp"
#include "scancad/json_util.hpp"
#include "scancad/pipeline.hpp"
#include "scancad/scene.hpp"

namespace scancad {

// Closed box surface with outward faces, each side subdivided so that vertex
// spacing is at most `spacing`.
TriMesh box_mesh(const Vec3& min, const Vec3& max, double spacing);

// Concatenates meshes; instance ids are kept when every part has them.
TriMesh merge_meshes(std::span<const TriMesh> parts);

struct ProceduralModel {
  std::string id;
  std::string category;
  TriMesh mesh;
};

// Chairs and tables assembled from boxes with seed-dependent proportions and
// structure (arms, stretchers, pedestal bases, slatted backs). Deterministic
// in (index, seed).
TriMesh make_chair(std::uint64_t seed, double spacing = 0.04);
TriMesh make_table(std::uint64_t seed, double spacing = 0.04);

// Ids are "chair_000", ..., "table_000", ...
std::vector<ProceduralModel> procedural_models(int n_chairs, int n_tables, std::uint64_t seed, double spacing = 0.04);

CadDatabase database_from_models(const std::vector<ProceduralModel>& models);

// Writes meshes/<id>.ply and db.jsonl under `dir`; returns the manifest path.
std::filesystem::path write_database(const std::vector<ProceduralModel>& models, const std::filesystem::path& dir);

struct PlacedObject {
  int object_id = 0;
  std::string model_id;
  std::string class_label;
  Pose9 pose;
};

struct CameraOrbit {
  int count = 8;
  double radius = 2.5;
  double height = 1.6;     // eye height above the floor
  Vec3 target = Vec3(0.0, 0.0, 0.4);
  double phase = 0.0;      // radians
  Intrinsics intrinsics{130.0, 130.0, 80.0, 60.0, 160, 120};
};

// z is up; the room spans [-x/2, x/2] x [-y/2, y/2] x [0, z].
struct SyntheticSceneSpec {
  std::string scene_id = "synthetic";
  Vec3 room = Vec3(6.0, 6.0, 3.0);
  std::vector<PlacedObject> objects;
  CameraOrbit orbit;
  double noise_std = 0.0;  // meters, Gaussian on valid depth
  std::uint64_t seed = 0;
  bool supply_obb = true;  // annotate exact model boxes; otherwise left to box fitting

  // Throws kInvalidArgument: no cameras, or an object outside the shell.
  void validate(const CadDatabase& db) const;
};

json synth_spec_to_json(const SyntheticSceneSpec& spec);
SyntheticSceneSpec synth_spec_from_json(const json& j);

struct SyntheticScene {
  RgbdScan scan;  // depth already passed through 16-bit quantization
  SceneAnnotation ground_truth;
};

SyntheticScene generate_scene(const SyntheticSceneSpec& spec, const CadDatabase& db);

// manifest.json, scene.ply, depth/NNNN.png and ground_truth.json under `dir`.
void write_synthetic_scene(const SyntheticScene& scene, const std::filesystem::path& dir);

// Camera at `eye` looking at `target` with z up.
Camera look_at(const Intrinsics& k, const Vec3& eye, const Vec3& target);

// Default demo: planted models on the floor of a 6 x 6 x 3 m room.
SyntheticSceneSpec floor_scene(const std::vector<std::pair<std::string, std::string>>& models_and_classes,
                               const CadDatabase& db, std::uint64_t seed);

}  // namespace scancad
