#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace staticmap {

using FrameId = std::uint32_t;

/// A single LiDAR return. Intensity is carried through every stage and never
/// consumed.
struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  float intensity = 0.0f;

  Eigen::Vector3d position() const { return {x, y, z}; }
  bool finite() const;

  static Point3 from(const Eigen::Vector3d& p, float intensity = 0.0f) {
    return {p.x(), p.y(), p.z(), intensity};
  }
};

/// Index-stable sequence of points. Operations that relabel or project points
/// keep point i at position i.
struct PointCloud {
  std::vector<Point3> points;
  FrameId frame_id = 0;
  bool has_intensity = false;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Point3& operator[](std::size_t i) const { return points[i]; }
  Point3& operator[](std::size_t i) { return points[i]; }

  std::vector<Eigen::Vector3d> positions() const;
};

/// Rigid body transform. The rotation is kept orthonormal with det +1; inputs
/// that drift further than 1e-9 from SO(3) are projected back onto it.
class PoseSE3 {
 public:
  PoseSE3();
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static PoseSE3 identity() { return {}; }
  static PoseSE3 from_yaw(double yaw, const Eigen::Vector3d& translation = Eigen::Vector3d::Zero());
  static PoseSE3 from_translation(const Eigen::Vector3d& translation);
  /// Builds from the top three rows of a homogeneous transform.
  static PoseSE3 from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  /// Heading about +z, read from the first column of the rotation.
  double yaw() const;
  /// Angle of the rotation in [0, pi].
  double rotation_angle() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }
  PoseSE3 inverse() const;
  /// this ∘ other: applies `other` first.
  PoseSE3 operator*(const PoseSE3& other) const;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

PoseSE3 compose_pose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 invert_pose(const PoseSE3& p);

/// Maps every point through p ↦ R·p + t, keeping order, count and intensity.
PointCloud transform_cloud(const PointCloud& cloud, const PoseSE3& pose);

Eigen::Matrix3d yaw_rotation(double yaw);

/// Nearest proper rotation in the Frobenius sense.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

/// Max-abs deviation of Rᵀ·R from identity.
double orthonormality_error(const Eigen::Matrix3d& r);

/// Wraps an angle into (-pi, pi].
double wrap_angle(double angle);

struct TrajectoryEntry {
  FrameId frame_id;
  PoseSE3 pose;
};

/// Poses ordered by strictly increasing frame id.
class Trajectory {
 public:
  /// Throws ValueError if frame_id does not exceed the last frame id.
  void push_back(FrameId frame_id, const PoseSE3& pose);

  const PoseSE3* find(FrameId frame_id) const;
  PoseSE3* find(FrameId frame_id);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const TrajectoryEntry& operator[](std::size_t i) const { return entries_[i]; }
  TrajectoryEntry& operator[](std::size_t i) { return entries_[i]; }
  const TrajectoryEntry& back() const { return entries_.back(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }

 private:
  std::vector<TrajectoryEntry> entries_;
};

}  // namespace staticmap
