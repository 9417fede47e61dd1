#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/io_formats.hpp"

namespace staticmap {

/// Axis-aligned building block; walls and roof are sampled.
struct StaticStructure {
  Eigen::Vector3d min_corner = Eigen::Vector3d::Zero();
  Eigen::Vector3d max_corner = Eigen::Vector3d::Ones();
};

enum class Pass { First, Second };
enum class Presence { First, Second, Both };

struct DynamicObject {
  OrientedBox box;
  Presence presence = Presence::Both;
};

/// Deterministic synthetic survey scene. Surfaces are sampled directly (no
/// ray casting); the ground under an object present in a pass is left
/// unsampled, as it would be hidden from the sensor.
struct SceneSpec {
  std::uint64_t seed = 7;
  double ground_z = 0.0;
  Eigen::Vector2d ground_center = Eigen::Vector2d::Zero();
  double ground_extent = 60.0;  // half-width of the square ground patch, m
  double ground_noise_sigma = 0.02;
  std::vector<StaticStructure> static_structures;
  std::vector<DynamicObject> dynamic_objects;
  std::vector<PoseSE3> sensor_path;
  double points_per_surface = 3.0;  // points per m^2
  double sensor_range = 40.0;       // horizontal, m
  double occlusion_clearance = 0.3;
  // Beyond this horizontal range a point enters a scan with probability
  // (falloff_range / r)^2, as LiDAR density drops with distance. 0 disables.
  double falloff_range = 0.0;

  void validate() const;
};

struct SyntheticPass {
  std::vector<PointCloud> scans;  // sensor frame
  Trajectory gt_poses;            // world frame sensor poses
  std::vector<std::vector<std::size_t>> dynamic_labels;
  DetectionMap detections;  // true boxes in each sensor frame
  PointCloud world;         // every sampled surface point of the pass
  std::vector<int> world_object;  // dynamic object index per world point, -1 if static
};

SyntheticPass generate_pass(const SceneSpec& spec, Pass pass);

bool present_in(Presence presence, Pass pass);

/// Straight street with parked cars on both kerbs. In the second pass some
/// cars are gone and others parked elsewhere.
SceneSpec make_street_scene(std::uint64_t seed = 7, int frames = 50, double step = 1.0);

/// Closed drive along a square with rounded corners around randomly placed
/// blocks; the last pose repeats the first.
SceneSpec make_loop_scene(std::uint64_t seed = 11, double side = 40.0, double step = 0.5);

/// Adds a translation drift growing linearly from zero at the first pose to
/// `total` at the last (plus an optional yaw drift).
Trajectory inject_drift(const Trajectory& poses, const Eigen::Vector3d& total, double total_yaw = 0.0);

/// Re-expresses every pose relative to `anchor`.
Trajectory relative_to(const Trajectory& poses, const PoseSE3& anchor);

// Scene specs as JSON; unknown keys are rejected.
SceneSpec read_scene_spec(const std::filesystem::path& path);
void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path);
std::string scene_spec_to_json(const SceneSpec& spec);
SceneSpec scene_spec_from_json(const std::string& text);

/// Writes one pass in the on-disk layout the CLI consumes:
/// velodyne/<frame>.bin, poses.txt (relative to `anchor`), detections.jsonl
/// and labels.jsonl.
void write_pass(const SyntheticPass& pass, const PoseSE3& anchor, const std::filesystem::path& dir);

}  // namespace staticmap
