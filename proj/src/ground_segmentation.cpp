#include "staticmap/ground_segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "staticmap/errors.hpp"

namespace staticmap {

namespace {

constexpr double kMinNormalZ = 0.7;

GroundPlane fit_plane(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (auto i : indices) centroid += cloud[i].position();
  centroid /= static_cast<double>(indices.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (auto i : indices) {
    const Eigen::Vector3d d = cloud[i].position() - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(indices.size());

  // Eigenvalues come sorted ascending; the first eigenvector is the normal.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Vector3d normal = solver.eigenvectors().col(0).normalized();
  if (normal.z() < 0.0) normal = -normal;
  return {normal, -normal.dot(centroid)};
}

}  // namespace

void GroundParams::validate() const {
  if (!(seed_fraction > 0.0 && seed_fraction <= 1.0)) throw ValueError("ground seed_fraction must lie in (0, 1]");
  if (!(seed_margin >= 0.0)) throw ValueError("ground seed_margin must be non-negative");
  if (!(dist_threshold > 0.0)) throw ValueError("ground dist_threshold must be positive");
  if (iterations < 1) throw ValueError("ground iterations must be at least 1");
  if (min_seed_points < 3) throw ValueError("ground min_seed_points must be at least 3");
}

GroundModel segment_ground(const PointCloud& cloud, const GroundParams& params) {
  params.validate();
  const std::size_t n = cloud.size();
  if (n < params.min_seed_points) {
    throw DegenerateGround("cloud has " + std::to_string(n) + " points, fewer than min_seed_points");
  }

  std::vector<double> zs;
  zs.reserve(n);
  for (const auto& p : cloud.points) zs.push_back(p.z);
  const auto lowest = std::max<std::size_t>(1, static_cast<std::size_t>(static_cast<double>(n) * params.seed_fraction));
  std::partial_sort(zs.begin(), zs.begin() + static_cast<std::ptrdiff_t>(lowest), zs.end());
  double low_mean = 0.0;
  for (std::size_t i = 0; i < lowest; ++i) low_mean += zs[i];
  low_mean /= static_cast<double>(lowest);

  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < n; ++i) {
    if (cloud[i].z <= low_mean + params.seed_margin) inliers.push_back(i);
  }

  GroundPlane plane;
  for (int it = 0; it < params.iterations; ++it) {
    if (inliers.size() < params.min_seed_points) {
      throw DegenerateGround("ground inlier set shrank to " + std::to_string(inliers.size()) + " points");
    }
    plane = fit_plane(cloud, inliers);
    inliers.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(plane.normal.dot(cloud[i].position()) + plane.offset) <= params.dist_threshold) {
        inliers.push_back(i);
      }
    }
  }
  if (plane.normal.z() <= kMinNormalZ) {
    throw DegenerateGround("fitted ground normal is too steep (n_z = " + std::to_string(plane.normal.z()) + ")");
  }
  if (inliers.size() < params.min_seed_points) {
    throw DegenerateGround("ground inlier set shrank to " + std::to_string(inliers.size()) + " points");
  }

  GroundModel model;
  model.plane = plane;
  model.ground_indices = std::move(inliers);
  model.nonground_indices.reserve(n - model.ground_indices.size());
  std::size_t g = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g < model.ground_indices.size() && model.ground_indices[g] == i) {
      ++g;
    } else {
      model.nonground_indices.push_back(i);
    }
  }
  model.mean_z = ground_mean_z(cloud, model.ground_indices);
  return model;
}

double ground_mean_z(const PointCloud& cloud, const std::vector<std::size_t>& ground_indices) {
  if (ground_indices.empty()) throw EmptyGround("ground index set is empty");
  double sum = 0.0;
  for (auto i : ground_indices) {
    if (i >= cloud.size()) throw IndexOutOfRange("ground index " + std::to_string(i) + " out of range");
    sum += cloud[i].z;
  }
  return sum / static_cast<double>(ground_indices.size());
}

}  // namespace staticmap
