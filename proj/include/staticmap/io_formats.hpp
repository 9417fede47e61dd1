#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/geometry.hpp"

namespace staticmap {

/// One detected box as serialized in a detections file (LiDAR frame).
struct DetectionRecord {
  FrameId frame_id = 0;
  std::string class_label;
  double score = 0.0;
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();  // (w, l, h)
  double yaw = 0.0;

  OrientedBox to_box() const;
  static DetectionRecord from_box(FrameId frame_id, const OrientedBox& box);
};

using DetectionMap = std::map<FrameId, std::vector<DetectionRecord>>;

// Velodyne scans: little-endian float32 (x, y, z, intensity) records.
PointCloud read_scan_binary(const std::filesystem::path& path);
void write_scan_binary(const PointCloud& cloud, const std::filesystem::path& path);

/// Lists `*.bin` files in a directory in lexicographic order.
std::vector<std::filesystem::path> list_scan_files(const std::filesystem::path& dir);

/// Formats a frame id as the conventional six-digit file stem.
std::string scan_file_name(FrameId frame_id);

// Pose files: one row-major 3x4 transform per line; line i is frame i.
Trajectory read_poses(const std::filesystem::path& path);
/// Writes poses in trajectory order, one line each; frame ids are not stored.
void write_poses(const Trajectory& trajectory, const std::filesystem::path& path);

// Detections: one JSON object per line with keys
// frame, class, score, center[3], size[3], yaw.
DetectionMap read_detections(const std::filesystem::path& path);
void write_detections(const DetectionMap& detections, const std::filesystem::path& path);

/// Binary little-endian PLY with float x, y, z (plus float intensity when the
/// cloud carries it).
void write_cloud_ply(const PointCloud& cloud, const std::filesystem::path& path);
PointCloud read_cloud_ply(const std::filesystem::path& path);

/// Rounds every coordinate to float32, as a write/read through the scan
/// format would.
PointCloud quantize_to_float32(const PointCloud& cloud);

}  // namespace staticmap
