#pragma once

#include "staticmap/core_types.hpp"
#include "staticmap/spatial_index.hpp"

namespace staticmap {

struct IcpParams {
  double max_correspondence_dist = 1.0;  // m
  int max_iterations = 50;
  double translation_eps = 1e-4;  // m
  double rotation_eps = 1e-4;     // rad
  double map_voxel = 0.4;         // m
  double scan_voxel = 0.2;        // m

  void validate() const;
};

struct IcpResult {
  PoseSE3 pose;
  double fitness = 0.0;      // matched fraction of the source
  double inlier_rmse = 0.0;  // m, over matched pairs at the final pose
  int iterations = 0;
  bool converged = false;
};

/// Point-to-point ICP of `source` onto the indexed target, starting from
/// `initial`. Each iteration pairs every transformed source point with its
/// nearest target within max_correspondence_dist and solves the rigid update
/// in closed form. Throws NoCorrespondences when nothing matches at the
/// initial pose.
IcpResult icp_register(const PointCloud& source, const KdTree& target, const PoseSE3& initial,
                       const IcpParams& params = {});

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const PoseSE3& initial,
                       const IcpParams& params = {});

/// Least-squares rigid transform T minimizing Σ|T·src_i − dst_i|² (SVD,
/// reflection-corrected). Needs at least one pair.
PoseSE3 best_rigid_transform(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst);

}  // namespace staticmap
