#include "scancad/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace scancad {

namespace {
constexpr std::uint32_t kLeafSize = 10;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
  // Store points in leaf order so leaf scans are contiguous.
  std::vector<Vec3> sorted(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) sorted[i] = points_[order_[i]];
  points_ = std::move(sorted);
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(Node{begin, end});
  if (end - begin <= kLeafSize) return id;

  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

// `offsets` holds the per-axis distance from the query to the current cell
// and `cell_distance` its squared norm, so a far child is pruned against its
// full box distance rather than only the splitting plane.
template <bool Scaled>
void KdTree::search(std::int32_t node_id, const Vec3& query, const Vec3& scale, Vec3& offsets, double cell_distance,
                    Nearest& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const Vec3 p = Scaled ? Vec3(points_[i].cwiseProduct(scale)) : points_[i];
      const double d = (p - query).squaredNorm();
      if (d < best.squared_distance) {
        best.squared_distance = d;
        best.index = i;
      }
    }
    return;
  }
  const double split = Scaled ? node.split * scale[node.axis] : node.split;
  const double diff = query[node.axis] - split;
  const std::int32_t near_child = diff < 0.0 ? node.left : node.right;
  const std::int32_t far_child = diff < 0.0 ? node.right : node.left;
  search<Scaled>(near_child, query, scale, offsets, cell_distance, best);
  const double old = offsets[node.axis];
  const double far_distance = cell_distance - old * old + diff * diff;
  if (far_distance < best.squared_distance) {
    offsets[node.axis] = diff;
    search<Scaled>(far_child, query, scale, offsets, far_distance, best);
    offsets[node.axis] = old;
  }
}

KdTree::Nearest KdTree::nearest(const Vec3& query) const {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  if (!nodes_.empty()) {
    Vec3 offsets = Vec3::Zero();
    search<false>(0, query, Vec3::Ones(), offsets, 0.0, best);
  }
  best.index = order_[best.index];
  return best;
}

KdTree::Nearest KdTree::nearest_scaled(const Vec3& query, const Vec3& scale) const {
  Nearest best{0, std::numeric_limits<double>::infinity()};
  if (!nodes_.empty()) {
    Vec3 offsets = Vec3::Zero();
    search<true>(0, query, scale, offsets, 0.0, best);
  }
  best.index = order_[best.index];
  return best;
}

}  // namespace scancad
