#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "staticmap/core_types.hpp"

namespace staticmap {

struct GroundParams {
  double seed_fraction = 0.1;   // share of lowest-z points averaged for the seed height
  double seed_margin = 0.4;     // meters above that average still accepted as seeds
  double dist_threshold = 0.2;  // plane inlier distance, meters
  int iterations = 3;
  std::size_t min_seed_points = 50;

  void validate() const;
};

/// Plane n·p + offset = 0 with a unit, upward normal.
struct GroundPlane {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

/// Ground / non-ground partition of one frame plus its mean ground height.
struct GroundModel {
  std::vector<std::size_t> ground_indices;     // ascending
  std::vector<std::size_t> nonground_indices;  // ascending complement
  double mean_z = 0.0;
  GroundPlane plane;
};

/// Deterministic seeded plane fit. Throws DegenerateGround when the cloud is
/// too small, the inlier set collapses, or the fitted normal tilts past
/// |n_z| <= 0.7.
GroundModel segment_ground(const PointCloud& cloud, const GroundParams& params = {});

/// Arithmetic mean of z over the index set. Throws EmptyGround for an empty
/// set and IndexOutOfRange for a bad index.
double ground_mean_z(const PointCloud& cloud, const std::vector<std::size_t>& ground_indices);

}  // namespace staticmap
