#include "staticmap/registration.hpp"

#include <cmath>

#include <Eigen/SVD>

#include "staticmap/errors.hpp"

namespace staticmap {

void IcpParams::validate() const {
  if (!(max_correspondence_dist > 0.0 && max_iterations > 0 && translation_eps > 0.0 && rotation_eps > 0.0 &&
        map_voxel > 0.0 && scan_voxel > 0.0)) {
    throw ValueError("ICP parameters must all be positive");
  }
}

PoseSE3 best_rigid_transform(const std::vector<Eigen::Vector3d>& src, const std::vector<Eigen::Vector3d>& dst) {
  if (src.empty() || src.size() != dst.size()) throw ValueError("rigid alignment needs matched, nonempty sets");
  const auto n = static_cast<double>(src.size());
  Eigen::Vector3d cs = Eigen::Vector3d::Zero();
  Eigen::Vector3d cd = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    cs += src[i];
    cd += dst[i];
  }
  cs /= n;
  cd /= n;
  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Eigen::Matrix3d r = v * d * u.transpose();
  return {r, cd - r * cs};
}

namespace {

struct Matches {
  std::vector<Eigen::Vector3d> src;
  std::vector<Eigen::Vector3d> dst;
  double sum_sq = 0.0;
};

Matches correspond(const std::vector<Eigen::Vector3d>& source, const KdTree& target, const PoseSE3& pose,
                   double max_dist) {
  Matches m;
  m.src.reserve(source.size());
  m.dst.reserve(source.size());
  for (const auto& s : source) {
    const Eigen::Vector3d p = pose.apply(s);
    if (const auto nn = target.nearest(p, max_dist)) {
      m.src.push_back(p);
      m.dst.push_back(target.points()[nn->index]);
      m.sum_sq += nn->squared_distance;
    }
  }
  return m;
}

}  // namespace

IcpResult icp_register(const PointCloud& source, const KdTree& target, const PoseSE3& initial,
                       const IcpParams& params) {
  params.validate();
  if (source.empty()) throw ValueError("ICP source cloud is empty");
  if (target.empty()) throw ValueError("ICP target is empty");
  const std::vector<Eigen::Vector3d> src = source.positions();

  IcpResult result;
  result.pose = initial;
  for (int it = 0; it < params.max_iterations; ++it) {
    const Matches m = correspond(src, target, result.pose, params.max_correspondence_dist);
    if (m.src.empty()) {
      if (it == 0) throw NoCorrespondences("no target point within max_correspondence_dist at the initial pose");
      break;
    }
    const PoseSE3 delta = best_rigid_transform(m.src, m.dst);
    result.pose = delta * result.pose;
    result.iterations = it + 1;
    if (delta.translation().norm() < params.translation_eps && delta.rotation_angle() < params.rotation_eps) {
      result.converged = true;
      break;
    }
  }

  const Matches final_matches = correspond(src, target, result.pose, params.max_correspondence_dist);
  result.fitness = static_cast<double>(final_matches.src.size()) / static_cast<double>(src.size());
  result.inlier_rmse =
      final_matches.src.empty() ? 0.0 : std::sqrt(final_matches.sum_sq / static_cast<double>(final_matches.src.size()));
  return result;
}

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const PoseSE3& initial,
                       const IcpParams& params) {
  if (target.empty()) throw ValueError("ICP target is empty");
  const KdTree index(target.positions());
  return icp_register(source, index, initial, params);
}

}  // namespace staticmap
