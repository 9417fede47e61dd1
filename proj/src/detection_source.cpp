#include "staticmap/detection_source.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <unordered_map>

#include <Eigen/Eigenvalues>

#include "staticmap/errors.hpp"

namespace staticmap {

namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // The smaller index always becomes the root.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

void DynamicClassSet::validate() const {
  if (labels.empty()) throw ValueError("dynamic class set must not be empty");
  if (!(min_score >= 0.0 && min_score <= 1.0)) throw ValueError("min_score must lie in [0, 1]");
}

bool DynamicClassSet::contains(const std::string& label) const {
  const std::string key = lower(label);
  return std::any_of(labels.begin(), labels.end(), [&](const std::string& l) { return lower(l) == key; });
}

std::vector<OrientedBox> boxes_for_frame(const DetectionMap& detections, FrameId frame_id,
                                         const DynamicClassSet& classes) {
  std::vector<OrientedBox> out;
  const auto it = detections.find(frame_id);
  if (it == detections.end()) return out;
  for (const auto& rec : it->second) {
    if (rec.score >= classes.min_score && classes.contains(rec.class_label)) out.push_back(rec.to_box());
  }
  return out;
}

void ClusterParams::validate() const {
  if (!(cluster_radius > 0.0)) throw ValueError("cluster_radius must be positive");
  if (!(min_footprint >= 0.0 && min_footprint <= max_footprint)) throw ValueError("bad footprint gate");
  if (!(min_height >= 0.0 && min_height <= max_height)) throw ValueError("bad height gate");
}

OrientedBox fit_yaw_box(const PointCloud& cloud, const std::vector<std::size_t>& indices) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (auto i : indices) mean += Eigen::Vector2d(cloud[i].x, cloud[i].y);
  mean /= static_cast<double>(indices.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (auto i : indices) {
    const Eigen::Vector2d d = Eigen::Vector2d(cloud[i].x, cloud[i].y) - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
  const Eigen::Vector2d axis = solver.eigenvectors().col(1);
  double yaw = std::atan2(axis.y(), axis.x());
  // A box is symmetric under a half turn; keep yaw in (-pi/2, pi/2].
  if (yaw <= -std::numbers::pi / 2) yaw += std::numbers::pi;
  if (yaw > std::numbers::pi / 2) yaw -= std::numbers::pi;

  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (auto i : indices) {
    const Point3& p = cloud[i];
    const Eigen::Vector3d local(c * p.x + s * p.y, -s * p.x + c * p.y, p.z);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  const Eigen::Vector3d mid = (lo + hi) / 2.0;
  OrientedBox box;
  box.center = {c * mid.x() - s * mid.y(), s * mid.x() + c * mid.y(), mid.z()};
  box.size = (hi - lo).cwiseMax(Eigen::Vector3d::Constant(1e-6));
  box.yaw = yaw;
  box.class_label = "cluster";
  box.score = 1.0;
  return box;
}

std::vector<OrientedBox> cluster_detect(const PointCloud& cloud, const GroundModel& ground,
                                        const ClusterParams& params) {
  params.validate();
  const auto& idx = ground.nonground_indices;
  std::vector<OrientedBox> boxes;
  if (idx.empty()) return boxes;

  const double r = params.cluster_radius;
  const double r2 = r * r;
  auto cell_of = [&](const Point3& p) {
    return VoxelIndex{static_cast<std::int64_t>(std::floor(p.x / r)), static_cast<std::int64_t>(std::floor(p.y / r)),
                      static_cast<std::int64_t>(std::floor(p.z / r))};
  };
  std::unordered_map<VoxelIndex, std::vector<std::size_t>, VoxelIndexHash> cells;
  for (std::size_t n = 0; n < idx.size(); ++n) cells[cell_of(cloud[idx[n]])].push_back(n);

  UnionFind uf(idx.size());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const Point3& p = cloud[idx[n]];
    const VoxelIndex c = cell_of(p);
    for (std::int64_t di = -1; di <= 1; ++di) {
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        for (std::int64_t dk = -1; dk <= 1; ++dk) {
          const auto it = cells.find({c.i + di, c.j + dj, c.k + dk});
          if (it == cells.end()) continue;
          for (auto m : it->second) {
            if (m <= n) continue;
            if ((cloud[idx[m]].position() - p.position()).squaredNorm() <= r2) uf.unite(n, m);
          }
        }
      }
    }
  }

  // Roots are each cluster's smallest member, so iterating n in order visits
  // clusters by their lowest point index.
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> slot(idx.size(), std::numeric_limits<std::size_t>::max());
  for (std::size_t n = 0; n < idx.size(); ++n) {
    const std::size_t root = uf.find(n);
    if (slot[root] == std::numeric_limits<std::size_t>::max()) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(idx[n]);
  }

  for (const auto& members : clusters) {
    if (members.size() < params.min_cluster_points) continue;
    const OrientedBox box = fit_yaw_box(cloud, members);
    const double footprint = box.size.x() * box.size.y();
    if (footprint < params.min_footprint || footprint > params.max_footprint) continue;
    if (box.size.z() < params.min_height || box.size.z() > params.max_height) continue;
    boxes.push_back(box);
  }
  return boxes;
}

}  // namespace staticmap
