#include "staticmap/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "staticmap/errors.hpp"

namespace staticmap {

void RangeSpec::validate() const {
  if (!(min_bound.array() < max_bound.array()).all()) {
    throw ValueError("range min_bound must be below max_bound on every axis");
  }
}

bool RangeSpec::contains(const Eigen::Vector3d& p) const {
  return (p.array() >= min_bound.array()).all() && (p.array() <= max_bound.array()).all();
}

void VoxelGridSpec::validate() const {
  range.validate();
  if (!(voxel_size.array() > 0.0).all()) throw ValueError("voxel size must be positive");
}

std::array<std::int64_t, 3> VoxelGridSpec::dimensions() const {
  std::array<std::int64_t, 3> dims{};
  for (int a = 0; a < 3; ++a) {
    const double extent = range.max_bound[a] - range.min_bound[a];
    dims[a] = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(extent / voxel_size[a])));
  }
  return dims;
}

std::size_t VoxelIndexHash::operator()(const VoxelIndex& v) const noexcept {
  auto h = static_cast<std::size_t>(v.i) * 73856093u;
  h ^= static_cast<std::size_t>(v.j) * 19349669u;
  h ^= static_cast<std::size_t>(v.k) * 83492791u;
  return h;
}

void OrientedBox::validate() const {
  if (!(size.array() > 0.0).all()) throw ValueError("box size must be strictly positive");
  if (!(yaw > -std::numbers::pi && yaw <= std::numbers::pi)) throw ValueError("box yaw must lie in (-pi, pi]");
  if (!(score >= 0.0 && score <= 1.0)) throw ValueError("box score must lie in [0, 1]");
}

RangeFilterResult range_filter(const PointCloud& cloud, const RangeSpec& range) {
  RangeFilterResult out;
  out.cloud.frame_id = cloud.frame_id;
  out.cloud.has_intensity = cloud.has_intensity;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (range.contains(cloud[i].position())) {
      out.cloud.points.push_back(cloud[i]);
      out.kept_indices.push_back(i);
    }
  }
  return out;
}

VoxelIndex voxel_index(const Point3& point, const VoxelGridSpec& grid) {
  const Eigen::Vector3d p = point.position();
  if (!grid.range.contains(p)) throw OutOfRange("point lies outside the voxel grid range");
  const auto dims = grid.dimensions();
  std::array<std::int64_t, 3> idx{};
  for (int a = 0; a < 3; ++a) {
    const auto raw = static_cast<std::int64_t>(std::floor((p[a] - grid.range.min_bound[a]) / grid.voxel_size[a]));
    idx[a] = std::clamp<std::int64_t>(raw, 0, dims[a] - 1);
  }
  return {idx[0], idx[1], idx[2]};
}

namespace {

// Groups points by key with a stable sort, so each centroid sums its points in
// input order.
PointCloud centroids_by_key(const PointCloud& cloud, std::vector<std::pair<VoxelIndex, std::size_t>> keyed) {
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  PointCloud out;
  out.frame_id = cloud.frame_id;
  out.has_intensity = cloud.has_intensity;
  std::size_t begin = 0;
  while (begin < keyed.size()) {
    std::size_t end = begin;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    double intensity = 0.0;
    while (end < keyed.size() && keyed[end].first == keyed[begin].first) {
      const Point3& p = cloud[keyed[end].second];
      sum += p.position();
      intensity += p.intensity;
      ++end;
    }
    const auto n = static_cast<double>(end - begin);
    out.points.push_back(Point3::from(sum / n, static_cast<float>(intensity / n)));
    begin = end;
  }
  return out;
}

}  // namespace

PointCloud voxel_downsample(const PointCloud& cloud, const VoxelGridSpec& grid) {
  grid.validate();
  std::vector<std::pair<VoxelIndex, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!grid.range.contains(cloud[i].position())) continue;
    keyed.emplace_back(voxel_index(cloud[i], grid), i);
  }
  return centroids_by_key(cloud, std::move(keyed));
}

PointCloud voxel_downsample(const PointCloud& cloud, double leaf) {
  if (!(leaf > 0.0)) throw ValueError("voxel leaf size must be positive");
  std::vector<std::pair<VoxelIndex, std::size_t>> keyed;
  keyed.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud[i];
    keyed.emplace_back(VoxelIndex{static_cast<std::int64_t>(std::floor(p.x / leaf)),
                                  static_cast<std::int64_t>(std::floor(p.y / leaf)),
                                  static_cast<std::int64_t>(std::floor(p.z / leaf))},
                       i);
  }
  return centroids_by_key(cloud, std::move(keyed));
}

std::array<Eigen::Vector3d, 8> obb_vertices(const OrientedBox& box) {
  const Eigen::Matrix3d r = yaw_rotation(box.yaw);
  const Eigen::Vector3d half = box.size / 2.0;
  std::array<Eigen::Vector3d, 8> out;
  for (int n = 0; n < 8; ++n) {
    const Eigen::Vector3d offset((n & 4) ? half.x() : -half.x(), (n & 2) ? half.y() : -half.y(),
                                 (n & 1) ? half.z() : -half.z());
    out[n] = box.center + r * offset;
  }
  return out;
}

BoxContainment::BoxContainment(const OrientedBox& box, double margin)
    : center_(box.center),
      half_(box.size / 2.0 + Eigen::Vector3d::Constant(margin)),
      cos_(std::cos(box.yaw)),
      sin_(std::sin(box.yaw)) {}

bool BoxContainment::contains(const Eigen::Vector3d& p) const {
  const Eigen::Vector3d d = p - center_;
  // Rᵀ·d for a yaw-only R.
  const double bx = cos_ * d.x() + sin_ * d.y();
  const double by = -sin_ * d.x() + cos_ * d.y();
  return std::abs(bx) <= half_.x() && std::abs(by) <= half_.y() && std::abs(d.z()) <= half_.z();
}

bool point_in_obb(const Eigen::Vector3d& point, const OrientedBox& box, double margin) {
  return BoxContainment(box, margin).contains(point);
}

bool point_in_obb(const Point3& point, const OrientedBox& box, double margin) {
  return point_in_obb(point.position(), box, margin);
}

}  // namespace staticmap
