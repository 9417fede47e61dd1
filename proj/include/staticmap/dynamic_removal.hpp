#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/detection_source.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/ground_segmentation.hpp"

namespace staticmap {

enum class DegenerateGroundPolicy { SkipProjection, Abort };

std::string to_string(DegenerateGroundPolicy policy);
DegenerateGroundPolicy parse_degenerate_policy(const std::string& text);

struct RemovalConfig {
  bool enabled = true;  // false reproduces the no-removal arm
  RangeSpec range{Eigen::Vector3d(-80.0, -80.0, -5.0), Eigen::Vector3d(80.0, 80.0, 10.0)};
  double box_margin = 0.1;
  DynamicClassSet classes;
  bool fallback_detector = false;
  ClusterParams cluster;
  GroundParams ground;
  DegenerateGroundPolicy degenerate_policy = DegenerateGroundPolicy::SkipProjection;

  void validate() const;
};

/// Output of the per-frame removal stage, indexed like the range-filtered
/// input cloud.
struct FrameResult {
  PointCloud cleaned;
  std::vector<std::size_t> dynamic_indices;
  std::optional<GroundModel> ground;
  std::vector<OrientedBox> boxes;
  bool ground_degenerate = false;
};

/// Ascending indices of points inside at least one box (with margin).
std::vector<std::size_t> label_dynamic_points(const PointCloud& cloud, const std::vector<OrientedBox>& boxes,
                                              double margin);

/// Replaces z with mean_z at each listed index and copies everything else.
/// Throws IndexOutOfRange for an index past the cloud.
PointCloud project_dynamic(const PointCloud& cloud, const std::vector<std::size_t>& dynamic_indices, double mean_z);

/// Range filter, ground segmentation, box acquisition, labelling and ground
/// projection for one scan. `file_boxes` holds the detections of this frame
/// when the detection file lists it; without them the clustering fallback runs
/// if enabled. Labelled points are moved out of the ground set before the
/// projection height is taken. With the Abort policy DegenerateGround
/// propagates.
FrameResult process_frame(const PointCloud& cloud, const std::optional<std::vector<OrientedBox>>& file_boxes,
                          const RemovalConfig& config);

}  // namespace staticmap
