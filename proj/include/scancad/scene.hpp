#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scancad/geometry.hpp"
#include "scancad/raster.hpp"

namespace scancad {

struct ScanFrame {
  Camera camera;
  DepthMap depth;  // meters, decoded from the 16-bit PNG
  std::string depth_file;  // relative to the manifest directory
  double depth_scale = 0.001;  // meters per PNG unit
  std::optional<std::string> rgb_file;
};

struct ObjectAnnotation {
  int object_id = 0;
  std::string class_label;
  std::optional<Obb> obb;
  // Sorted, unique indices into the scene mesh vertices.
  std::optional<std::vector<std::uint32_t>> segmentation;
  // When the segmentation came from the mesh's instance labels.
  std::optional<int> instance_id;
  bool obb_supplied = false;
  bool segmentation_supplied = false;
};

struct RgbdScan {
  std::string scene_id;
  Axis gravity_axis = Axis::kZ;
  std::vector<ScanFrame> frames;
  TriMesh scene_mesh;
  std::string mesh_file = "scene.ply";
  std::vector<ObjectAnnotation> annotations;
};

struct FrameSelection {
  int object_id = 0;
  std::vector<std::size_t> frame_indices;  // strictly increasing scan frame indices
  std::size_t n_t = 0;
};

enum class FrameSpacing {
  kEven,    // round-down of i*(q-1)/(n_t-1): first and last qualifying frames kept
  kStride,  // every ceil(q/n_t)-th qualifying frame starting at the first
};

// Throws kManifestInvalid, kMissingAsset, kDepthDecodeError; each message
// names the offending entry.
RgbdScan load_scan(const std::filesystem::path& manifest_path);

// Writes manifest.json, the mesh and the depth PNGs under `dir`.
void save_scan(const RgbdScan& scan, const std::filesystem::path& dir);

// A frame qualifies when at least one OBB corner projects inside the image
// with positive depth. Throws kNoVisibleFrames.
FrameSelection select_frames(const RgbdScan& scan, const Obb& obb, std::size_t n_t,
                             FrameSpacing spacing = FrameSpacing::kEven, int object_id = 0);

// Fills whichever of obb / segmentation is missing. Annotations that already
// carry both are returned unchanged.
ObjectAnnotation derive_missing_supervision(const RgbdScan& scan, const ObjectAnnotation& ann, double margin);

// Scene mesh without the segmented vertices and every face touching them.
TriMesh remove_object(const RgbdScan& scan, const ObjectAnnotation& ann);
TriMesh remove_vertices(const TriMesh& mesh, const std::vector<std::uint32_t>& sorted_indices);

// Positions of the segmented vertices. Throws kEmptySegmentation.
PointCloud object_point_cloud(const RgbdScan& scan, const ObjectAnnotation& ann);

// Splits the scene into faces whose three vertices are all segmented and the
// remaining faces; used for the visible object silhouette.
struct ObjectSplit {
  TriMesh object;
  TriMesh rest;
};
ObjectSplit split_object_faces(const TriMesh& mesh, const std::vector<std::uint32_t>& sorted_indices);

std::vector<std::uint32_t> vertices_with_instance(const TriMesh& mesh, int instance_id);

}  // namespace scancad
