#include "staticmap/core_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include <Eigen/SVD>

#include "staticmap/errors.hpp"

namespace staticmap {

namespace {

constexpr double kOrthonormalTolerance = 1e-9;

Eigen::Matrix3d sanitize_rotation(const Eigen::Matrix3d& r) {
  if (orthonormality_error(r) > kOrthonormalTolerance ||
      std::abs(r.determinant() - 1.0) > kOrthonormalTolerance) {
    return nearest_rotation(r);
  }
  return r;
}

}  // namespace

bool Point3::finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }

std::vector<Eigen::Vector3d> PointCloud::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.position());
  return out;
}

PoseSE3::PoseSE3() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

PoseSE3::PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(sanitize_rotation(rotation)), translation_(translation) {}

PoseSE3 PoseSE3::from_yaw(double yaw, const Eigen::Vector3d& translation) {
  return {yaw_rotation(yaw), translation};
}

PoseSE3 PoseSE3::from_translation(const Eigen::Vector3d& translation) {
  return {Eigen::Matrix3d::Identity(), translation};
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

double PoseSE3::yaw() const { return std::atan2(rotation_(1, 0), rotation_(0, 0)); }

double PoseSE3::rotation_angle() const {
  const double c = std::clamp((rotation_.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

PoseSE3 PoseSE3::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return {rt, -(rt * translation_)};
}

PoseSE3 PoseSE3::operator*(const PoseSE3& other) const {
  return {rotation_ * other.rotation_, rotation_ * other.translation_ + translation_};
}

PoseSE3 compose_pose(const PoseSE3& a, const PoseSE3& b) { return a * b; }

PoseSE3 invert_pose(const PoseSE3& p) { return p.inverse(); }

PointCloud transform_cloud(const PointCloud& cloud, const PoseSE3& pose) {
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.has_intensity = cloud.has_intensity;
  out.points.reserve(cloud.size());
  for (const auto& p : cloud.points) {
    out.points.push_back(Point3::from(pose.apply(p.position()), p.intensity));
  }
  return out;
}

Eigen::Matrix3d yaw_rotation(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  r << c, -s, 0.0,  //
      s, c, 0.0,    //
      0.0, 0.0, 1.0;
  return r;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

double orthonormality_error(const Eigen::Matrix3d& r) {
  return (r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
}

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

void Trajectory::push_back(FrameId frame_id, const PoseSE3& pose) {
  if (!entries_.empty() && frame_id <= entries_.back().frame_id) {
    throw ValueError("trajectory frame ids must be strictly increasing (got " + std::to_string(frame_id) +
                     " after " + std::to_string(entries_.back().frame_id) + ")");
  }
  entries_.push_back({frame_id, pose});
}

const PoseSE3* Trajectory::find(FrameId frame_id) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), frame_id,
                             [](const TrajectoryEntry& e, FrameId f) { return e.frame_id < f; });
  if (it == entries_.end() || it->frame_id != frame_id) return nullptr;
  return &it->pose;
}

PoseSE3* Trajectory::find(FrameId frame_id) {
  return const_cast<PoseSE3*>(std::as_const(*this).find(frame_id));
}

}  // namespace staticmap
