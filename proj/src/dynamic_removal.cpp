#include "staticmap/dynamic_removal.hpp"

#include <algorithm>
#include <iterator>

#include "staticmap/errors.hpp"

namespace staticmap {

std::string to_string(DegenerateGroundPolicy policy) {
  return policy == DegenerateGroundPolicy::Abort ? "abort" : "skip-projection";
}

DegenerateGroundPolicy parse_degenerate_policy(const std::string& text) {
  if (text == "skip-projection") return DegenerateGroundPolicy::SkipProjection;
  if (text == "abort") return DegenerateGroundPolicy::Abort;
  throw ValueError("unknown degenerate-ground policy '" + text + "'");
}

void RemovalConfig::validate() const {
  range.validate();
  if (!(box_margin >= 0.0)) throw ValueError("box_margin must be non-negative");
  classes.validate();
  cluster.validate();
  ground.validate();
}

std::vector<std::size_t> label_dynamic_points(const PointCloud& cloud, const std::vector<OrientedBox>& boxes,
                                              double margin) {
  std::vector<std::size_t> out;
  if (boxes.empty()) return out;
  std::vector<BoxContainment> tests;
  tests.reserve(boxes.size());
  for (const auto& b : boxes) tests.emplace_back(b, margin);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Eigen::Vector3d p = cloud[i].position();
    if (std::any_of(tests.begin(), tests.end(), [&](const BoxContainment& t) { return t.contains(p); })) {
      out.push_back(i);
    }
  }
  return out;
}

PointCloud project_dynamic(const PointCloud& cloud, const std::vector<std::size_t>& dynamic_indices, double mean_z) {
  PointCloud out = cloud;
  for (auto i : dynamic_indices) {
    if (i >= out.size()) throw IndexOutOfRange("dynamic index " + std::to_string(i) + " out of range");
    out[i].z = mean_z;
  }
  return out;
}

FrameResult process_frame(const PointCloud& cloud, const std::optional<std::vector<OrientedBox>>& file_boxes,
                          const RemovalConfig& config) {
  FrameResult result;
  result.cleaned = range_filter(cloud, config.range).cloud;
  if (!config.enabled) return result;

  try {
    result.ground = segment_ground(result.cleaned, config.ground);
  } catch (const DegenerateGround&) {
    if (config.degenerate_policy == DegenerateGroundPolicy::Abort) throw;
    result.ground_degenerate = true;
    return result;
  }

  if (file_boxes) {
    result.boxes = *file_boxes;
  } else if (config.fallback_detector) {
    result.boxes = cluster_detect(result.cleaned, *result.ground, config.cluster);
  }
  result.dynamic_indices = label_dynamic_points(result.cleaned, result.boxes, config.box_margin);
  if (result.dynamic_indices.empty()) return result;

  // Object points close to the plane (wheels, bumpers) are not ground; the
  // projection height comes from the remaining ground points only.
  GroundModel& ground = *result.ground;
  std::vector<std::size_t> kept;
  kept.reserve(ground.ground_indices.size());
  std::set_difference(ground.ground_indices.begin(), ground.ground_indices.end(), result.dynamic_indices.begin(),
                      result.dynamic_indices.end(), std::back_inserter(kept));
  if (kept.size() != ground.ground_indices.size()) {
    if (kept.empty()) {
      if (config.degenerate_policy == DegenerateGroundPolicy::Abort) {
        throw DegenerateGround("every ground point lies inside a dynamic box");
      }
      result.ground_degenerate = true;
      result.dynamic_indices.clear();
      return result;
    }
    std::vector<std::size_t> nonground;
    nonground.reserve(result.cleaned.size() - kept.size());
    std::set_difference(ground.ground_indices.begin(), ground.ground_indices.end(), kept.begin(), kept.end(),
                        std::back_inserter(nonground));
    std::vector<std::size_t> merged;
    merged.reserve(result.cleaned.size() - kept.size());
    std::merge(ground.nonground_indices.begin(), ground.nonground_indices.end(), nonground.begin(), nonground.end(),
               std::back_inserter(merged));
    ground.ground_indices = std::move(kept);
    ground.nonground_indices = std::move(merged);
    ground.mean_z = ground_mean_z(result.cleaned, ground.ground_indices);
  }
  result.cleaned = project_dynamic(result.cleaned, result.dynamic_indices, ground.mean_z);
  return result;
}

}  // namespace staticmap
