#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scancad/geometry.hpp"
#include "scancad/raster.hpp"

namespace scancad {

namespace fs = std::filesystem;

// ---- meshes ---------------------------------------------------------------

// PLY (ascii or binary, either endianness) with optional int vertex property
// `instance_id`, or OBJ. Polygons are fan-triangulated. Throws kMeshParseError
// or kMissingAsset.
TriMesh read_mesh(const fs::path& path);
TriMesh read_ply(const fs::path& path);
TriMesh read_obj(const fs::path& path);

// Binary little-endian PLY with double coordinates (lossless round trip).
void write_ply(const fs::path& path, const TriMesh& mesh);

// ---- images ---------------------------------------------------------------

struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> pixels;
};

struct Image8 {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;
};

Image16 read_png16(const fs::path& path);
void write_png16(const fs::path& path, const Image16& image);
void write_png8(const fs::path& path, const Image8& image);

// Quantizes at `meters_per_unit` (round to nearest, 0 = invalid, clamped).
Image16 quantize_depth(const DepthMap& depth, double meters_per_unit = 0.001);
DepthMap dequantize_depth(const Image16& image, double meters_per_unit);

// Debug exports: depth at 1 mm per unit; masks as 0 / 65535.
void write_depth_png(const fs::path& path, const DepthMap& depth, double meters_per_unit = 0.001);
DepthMap read_depth_png(const fs::path& path, double meters_per_unit);
void write_mask_png(const fs::path& path, const Mask& mask);

// ---- files ----------------------------------------------------------------

std::string read_text_file(const fs::path& path);
// Writes to a sibling temporary and renames over the target.
void write_file_atomic(const fs::path& path, const std::string& contents);

}  // namespace scancad
