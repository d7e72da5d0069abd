#pragma once

#include <vector>

#include "scancad/geometry.hpp"
#include "scancad/kdtree.hpp"

namespace scancad {

// Chamfer distances use the plain Euclidean norm ||p - q||, not its square.

// Distance from every query to its nearest indexed point, in query order.
std::vector<double> nearest_distances(const KdTree& tree, const PointCloud& queries);

// (1/|P|) * sum_{p in P} min_{q in Q} ||p - q||. Throws kEmptyCloud.
double chamfer_one_way(const PointCloud& p, const PointCloud& q);

// chamfer_one_way(a, b) + chamfer_one_way(b, a).
double chamfer_symmetric(const PointCloud& a, const PointCloud& b);

// Gradient of t -> chamfer_one_way(p, q + t) at t = 0, with nearest
// neighbours held fixed.
Vec3 chamfer_translation_gradient(const PointCloud& p, const PointCloud& q);

// One-way Chamfer from world points to posed canonical samples, reusing a
// single tree over the canonical samples for every pose.
class PosedChamfer {
 public:
  explicit PosedChamfer(const PointCloud& canonical_samples);

  // Equals chamfer_one_way(world, transform_points(pose, samples)).
  double from_world(const PointCloud& world, const Pose9& pose) const;

  std::size_t size() const { return tree_.size(); }

 private:
  KdTree tree_;
};

// Rescales a centered cloud so its axis-aligned bounding box has unit diagonal.
PointCloud normalize_unit_diagonal(const PointCloud& cloud);

namespace reference {

// O(|P|*|Q|) scan; the oracle the accelerated path is tested against.
double chamfer_one_way_brute(const PointCloud& p, const PointCloud& q);

}  // namespace reference

}  // namespace scancad
