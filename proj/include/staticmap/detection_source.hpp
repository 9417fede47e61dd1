#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/ground_segmentation.hpp"
#include "staticmap/io_formats.hpp"

namespace staticmap {

/// Class tokens treated as dynamic, matched case-insensitively.
struct DynamicClassSet {
  std::vector<std::string> labels{"car", "pedestrian", "cyclist", "truck", "van"};
  double min_score = 0.5;

  void validate() const;
  bool contains(const std::string& label) const;
};

/// Records of `frame_id` whose class is dynamic and whose score reaches
/// min_score, in file order.
std::vector<OrientedBox> boxes_for_frame(const DetectionMap& detections, FrameId frame_id,
                                         const DynamicClassSet& classes);

struct ClusterParams {
  double cluster_radius = 0.5;
  std::size_t min_cluster_points = 30;
  double min_footprint = 0.3;  // m^2
  double max_footprint = 20.0;
  double min_height = 0.5;  // m
  double max_height = 3.0;

  void validate() const;
};

/// Euclidean clustering of the non-ground points with a yaw-aligned box fit
/// per cluster that passes the size gates. Boxes carry class "cluster" and
/// score 1. Output order follows each cluster's lowest point index.
std::vector<OrientedBox> cluster_detect(const PointCloud& cloud, const GroundModel& ground,
                                        const ClusterParams& params = {});

/// Fits the yaw-aligned box to a set of points: yaw from the principal axis
/// of the xy covariance, extents from the rotated min/max.
OrientedBox fit_yaw_box(const PointCloud& cloud, const std::vector<std::size_t>& indices);

}  // namespace staticmap
