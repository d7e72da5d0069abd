#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "scancad/geometry.hpp"

namespace testutil {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("scancad_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline scancad::PointCloud random_cloud(std::mt19937_64& gen, std::size_t n, double extent = 1.0) {
  std::uniform_real_distribution<double> u(-extent, extent);
  scancad::PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(gen), u(gen), u(gen));
  return c;
}

inline scancad::Quat random_rotation(std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  scancad::Quat q(n(gen), n(gen), n(gen), n(gen));
  return q.normalized();
}

// Axis-aligned quad at depth z in camera space covering [x0,x1] x [y0,y1].
inline scancad::TriMesh quad(double x0, double x1, double y0, double y1, double z) {
  scancad::TriMesh m;
  m.vertices = {{x0, y0, z}, {x1, y0, z}, {x1, y1, z}, {x0, y1, z}};
  m.faces = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

}  // namespace testutil
