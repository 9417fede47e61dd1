#include "staticmap/spatial_index.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace staticmap {

KdTree::KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end});
  if (end - begin <= leaf_size_) return id;

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (auto i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all points coincide

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double pa = points_[a][axis];
                     const double pb = points_[b][axis];
                     return pa < pb || (pa == pb && a < b);
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

std::optional<KdTree::Neighbor> KdTree::nearest(const Eigen::Vector3d& query, double max_distance) const {
  if (nodes_.empty()) return std::nullopt;
  Neighbor best{std::numeric_limits<std::size_t>::max(), max_distance * max_distance};
  nearest_in(0, query, best);
  if (best.index == std::numeric_limits<std::size_t>::max()) return std::nullopt;
  return best;
}

void KdTree::nearest_in(std::int32_t id, const Eigen::Vector3d& q, Neighbor& best) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      const double d2 = (points_[idx] - q).squaredNorm();
      if (d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
        best = {idx, d2};
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0.0 ? node.left : node.right;
  const std::int32_t far = diff < 0.0 ? node.right : node.left;
  nearest_in(near, q, best);
  if (diff * diff <= best.squared_distance) nearest_in(far, q, best);
}

std::vector<std::size_t> KdTree::radius_search(const Eigen::Vector3d& query, double radius) const {
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  radius_in(0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdTree::radius_in(std::int32_t id, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const {
  const Node& node = nodes_[id];
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      if ((points_[order_[i]] - q).squaredNorm() <= r2) out.push_back(order_[i]);
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  if (diff <= 0.0 || diff * diff <= r2) radius_in(node.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) radius_in(node.right, q, r2, out);
}

}  // namespace staticmap
