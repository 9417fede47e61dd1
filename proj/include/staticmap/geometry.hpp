#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "staticmap/core_types.hpp"

namespace staticmap {

/// Axis-aligned crop box, closed on both ends.
struct RangeSpec {
  Eigen::Vector3d min_bound = Eigen::Vector3d::Constant(-80.0);
  Eigen::Vector3d max_bound = Eigen::Vector3d::Constant(80.0);

  /// Throws ValueError unless min_bound < max_bound on every axis.
  void validate() const;
  bool contains(const Eigen::Vector3d& p) const;
};

struct VoxelGridSpec {
  RangeSpec range;
  Eigen::Vector3d voxel_size = Eigen::Vector3d::Constant(0.1);

  void validate() const;
  /// Cells per axis, ceil(extent / voxel_size).
  std::array<std::int64_t, 3> dimensions() const;
};

struct VoxelIndex {
  std::int64_t i = 0;
  std::int64_t j = 0;
  std::int64_t k = 0;

  auto operator<=>(const VoxelIndex&) const = default;
};

struct VoxelIndexHash {
  std::size_t operator()(const VoxelIndex& v) const noexcept;
};

/// A detected object's 3D box. Size is (w, l, h) along the box-frame x, y, z
/// axes; yaw rotates the box frame about +z.
struct OrientedBox {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw = 0.0;
  std::string class_label;
  double score = 1.0;

  void validate() const;
};

struct RangeFilterResult {
  PointCloud cloud;
  std::vector<std::size_t> kept_indices;
};

RangeFilterResult range_filter(const PointCloud& cloud, const RangeSpec& range);

/// Throws OutOfRange for points outside the grid range. Points on the upper
/// bound land in the last cell.
VoxelIndex voxel_index(const Point3& point, const VoxelGridSpec& grid);

/// One centroid per occupied voxel, in lexicographic (i, j, k) order. Points
/// outside the grid range are dropped.
PointCloud voxel_downsample(const PointCloud& cloud, const VoxelGridSpec& grid);

/// Unbounded variant: cubic cells of edge `leaf` anchored at the origin.
PointCloud voxel_downsample(const PointCloud& cloud, double leaf);

/// Corners = center + R(yaw)·(±w/2, ±l/2, ±h/2) in sign order
/// (---, --+, -+-, -++, +--, +-+, ++-, +++).
std::array<Eigen::Vector3d, 8> obb_vertices(const OrientedBox& box);

bool point_in_obb(const Eigen::Vector3d& point, const OrientedBox& box, double margin = 0.0);
bool point_in_obb(const Point3& point, const OrientedBox& box, double margin = 0.0);

/// Precomputed containment test for evaluating one box against many points.
class BoxContainment {
 public:
  BoxContainment(const OrientedBox& box, double margin);
  bool contains(const Eigen::Vector3d& p) const;

 private:
  Eigen::Vector3d center_;
  Eigen::Vector3d half_;
  double cos_;
  double sin_;
};

}  // namespace staticmap
