#include "scancad/chamfer.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "scancad/error.hpp"

namespace scancad {

namespace {

void require_nonempty(const PointCloud& p, const PointCloud& q) {
  if (p.empty() || q.empty()) throw Error(ErrorCode::kEmptyCloud, "chamfer needs two non-empty clouds");
}

double mean(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v;  // fixed order, independent of thread count
  return sum / static_cast<double>(values.size());
}

}  // namespace

std::vector<double> nearest_distances(const KdTree& tree, const PointCloud& queries) {
  std::vector<double> out(queries.size());
  const auto n = static_cast<std::int64_t>(queries.size());
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::int64_t i = 0; i < n; ++i) {
    out[i] = std::sqrt(tree.nearest(queries.points[i]).squared_distance);
  }
  return out;
}

double chamfer_one_way(const PointCloud& p, const PointCloud& q) {
  require_nonempty(p, q);
  const KdTree tree(q.points);
  return mean(nearest_distances(tree, p));
}

double chamfer_symmetric(const PointCloud& a, const PointCloud& b) {
  return chamfer_one_way(a, b) + chamfer_one_way(b, a);
}

Vec3 chamfer_translation_gradient(const PointCloud& p, const PointCloud& q) {
  require_nonempty(p, q);
  const KdTree tree(q.points);
  Vec3 grad = Vec3::Zero();
  for (const auto& point : p.points) {
    const auto nn = tree.nearest(point);
    const Vec3 diff = point - q.points[nn.index];
    const double d = diff.norm();
    if (d > 0.0) grad -= diff / d;
  }
  return grad / static_cast<double>(p.size());
}

PosedChamfer::PosedChamfer(const PointCloud& canonical_samples) : tree_(canonical_samples.points) {
  if (canonical_samples.empty()) throw Error(ErrorCode::kEmptyCloud, "no canonical samples");
}

double PosedChamfer::from_world(const PointCloud& world, const Pose9& pose) const {
  if (world.empty()) throw Error(ErrorCode::kEmptyCloud, "object cloud is empty");
  // ||R(s.*q) + t - p|| = ||s.*q - R^T(p - t)||
  const Mat3 rot_t = pose.rotation.toRotationMatrix().transpose();
  std::vector<double> dist(world.size());
  const auto n = static_cast<std::int64_t>(world.size());
#pragma omp parallel for schedule(static) if (n > 2048)
  for (std::int64_t i = 0; i < n; ++i) {
    const Vec3 local = rot_t * (world.points[i] - pose.translation);
    dist[i] = std::sqrt(tree_.nearest_scaled(local, pose.scale).squared_distance);
  }
  return mean(dist);
}

PointCloud normalize_unit_diagonal(const PointCloud& cloud) {
  if (cloud.empty()) return cloud;
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (const auto& p : cloud.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double diag = (hi - lo).norm();
  if (!(diag > 0.0)) return cloud;
  const Vec3 center = 0.5 * (lo + hi);
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) out.points.push_back((p - center) / diag);
  return out;
}

namespace reference {

double chamfer_one_way_brute(const PointCloud& p, const PointCloud& q) {
  require_nonempty(p, q);
  double sum = 0.0;
  for (const auto& a : p.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : q.points) best = std::min(best, (a - b).squaredNorm());
    sum += std::sqrt(best);
  }
  return sum / static_cast<double>(p.size());
}

}  // namespace reference

}  // namespace scancad
