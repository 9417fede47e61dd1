#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <unordered_map>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/dynamic_removal.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/registration.hpp"
#include "staticmap/scan_context.hpp"
#include "staticmap/spatial_index.hpp"

namespace staticmap {

struct LoopConfig {
  bool enabled = true;
  FrameId exclusion_window = 50;
  int ring_key_candidates = 10;
  double loop_threshold = 0.2;
};

struct MappingConfig {
  IcpParams icp;
  double min_fitness = 0.3;
  // When false the odometry hint (or the constant-velocity prediction) is
  // taken as the pose without scan-to-map registration.
  bool use_registration = true;
  bool keep_frames = true;
  ScanContextConfig scan_context;
  LoopConfig loop;

  void validate() const;
};

/// Running per-voxel centroids; the map cloud is the centroid of every point
/// ever inserted into each occupied cell.
class VoxelAccumulator {
 public:
  explicit VoxelAccumulator(double leaf = 0.4) : leaf_(leaf) {}

  void insert(const PointCloud& world_cloud);
  void clear() { cells_.clear(); }
  /// Centroids in lexicographic voxel order.
  PointCloud cloud() const;
  std::size_t size() const { return cells_.size(); }
  double leaf() const { return leaf_; }

 private:
  struct Cell {
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double intensity = 0.0;
    std::size_t count = 0;
  };
  double leaf_;
  std::unordered_map<VoxelIndex, Cell, VoxelIndexHash> cells_;
};

struct DescriptorEntry {
  FrameId frame_id;
  ScanContext descriptor;
};

struct LoopCandidate {
  FrameId matched_frame = 0;
  double distance = 1.0;
  int best_shift = 0;
};

struct LoopEvent {
  FrameId current_frame = 0;
  FrameId matched_frame = 0;
  double distance = 0.0;
  int best_shift = 0;
  double fitness = 0.0;
  double residual_translation = 0.0;  // m
  double residual_yaw = 0.0;          // rad
  bool accepted = false;
};

/// Accumulated static map plus everything needed to re-place frames after a
/// loop correction.
struct MapState {
  explicit MapState(double map_voxel = 0.4) : voxels(map_voxel) {}

  PointCloud map_cloud;  // world frame, one point per map voxel
  Trajectory trajectory;
  std::vector<DescriptorEntry> descriptor_db;
  std::vector<FrameId> flagged_frames;  // degenerate ground
  std::vector<FrameId> failed_frames;   // registration rejected
  std::map<FrameId, PointCloud> stored_frames;  // cleaned, sensor frame
  std::vector<LoopEvent> loop_log;

  VoxelAccumulator voxels;
  KdTree map_index;

  /// Re-derives map_cloud and map_index from the voxel accumulator.
  void refresh_map();
  /// Rebuilds the voxel map from stored frames under the current trajectory.
  void rebuild_from_frames();
};

struct AccumulateResult {
  PoseSE3 pose;
  double fitness = 1.0;
};

/// Registers the frame against the map (initial guess: hint, else
/// constant-velocity prediction), merges it in world frame and extends the
/// trajectory and descriptor database. The first frame anchors at identity.
/// Throws RegistrationFailed when fitness falls below min_fitness; the frame
/// is then only recorded in failed_frames.
AccumulateResult accumulate(MapState& state, const FrameResult& frame, const std::optional<PoseSE3>& odometry_hint,
                            const MappingConfig& config);

/// Best older frame (outside the exclusion window) by scan-context distance,
/// preselected by ring-key distance, if it falls under the loop threshold.
std::optional<LoopCandidate> detect_loop(const MapState& state, const ScanContext& current, FrameId current_frame,
                                         const LoopConfig& config);

/// Refines the loop transform by ICP against the matched frame's stored scan,
/// spreads the pose residual linearly in translation and yaw over frames
/// matched..current and rebuilds the map. Throws RegistrationFailed (state
/// untouched) when the loop ICP is rejected.
LoopEvent apply_loop_correction(MapState& state, FrameId current_frame, const LoopCandidate& loop,
                                const PointCloud& current_scan, const MappingConfig& config);

/// Sequential mapper: accumulate, then loop detection and correction, frame
/// by frame.
class MapBuilder {
 public:
  explicit MapBuilder(MappingConfig config);

  /// Returns false when the frame was rejected by registration.
  bool add(const FrameResult& frame, const std::optional<PoseSE3>& odometry_hint = std::nullopt);

  const MapState& state() const { return state_; }
  MapState& state() { return state_; }
  const MappingConfig& config() const { return config_; }

 private:
  MappingConfig config_;
  MapState state_;
};

}  // namespace staticmap
