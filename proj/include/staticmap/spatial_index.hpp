#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

namespace staticmap {

/// Static 3D kd-tree for nearest-neighbor and radius queries. Query results
/// are deterministic: ties break toward the lower point index.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double squared_distance;
  };

  KdTree() = default;
  explicit KdTree(std::vector<Eigen::Vector3d> points, std::size_t leaf_size = 12);

  /// Closest point within max_distance, if any.
  std::optional<Neighbor> nearest(const Eigen::Vector3d& query, double max_distance) const;

  /// Indices of all points within radius, ascending.
  std::vector<std::size_t> radius_search(const Eigen::Vector3d& query, double radius) const;

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

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
  void nearest_in(std::int32_t node, const Eigen::Vector3d& q, Neighbor& best) const;
  void radius_in(std::int32_t node, const Eigen::Vector3d& q, double r2, std::vector<std::size_t>& out) const;

  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_ = 12;
};

}  // namespace staticmap
