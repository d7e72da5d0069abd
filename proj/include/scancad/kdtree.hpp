#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "scancad/geometry.hpp"

namespace scancad {

// Exact nearest-neighbor index over a fixed 3D point set.
//
// Queries may apply a positive per-axis scale to the indexed points without
// rebuilding: positive scaling preserves the ordering along every split
// axis, so the same tree answers queries over {scale .* p}.
class KdTree {
 public:
  struct Nearest {
    std::size_t index = 0;  // into the constructor's input order
    double squared_distance = 0.0;
  };

  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  Nearest nearest(const Vec3& query) const;
  Nearest nearest_scaled(const Vec3& query, const Vec3& scale) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    int axis = 0;
    double split = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  template <bool Scaled>
  void search(std::int32_t node, const Vec3& query, const Vec3& scale, Vec3& offsets, double cell_distance,
              Nearest& best) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace scancad
