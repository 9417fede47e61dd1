#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "staticmap/core_types.hpp"
#include "staticmap/geometry.hpp"

namespace testing {

/// Scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("staticmap_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double sigma) { return std::normal_distribution<double>(0.0, sigma)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  Eigen::Vector3d vec(double lo, double hi) { return {uniform(lo, hi), uniform(lo, hi), uniform(lo, hi)}; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

inline staticmap::PointCloud random_cloud(Rng& rng, std::size_t n, double lo, double hi) {
  staticmap::PointCloud cloud;
  cloud.has_intensity = true;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.points.push_back(staticmap::Point3::from(rng.vec(lo, hi), static_cast<float>(rng.uniform(0.0, 1.0))));
  }
  return cloud;
}

inline staticmap::PoseSE3 random_pose(Rng& rng, double max_translation = 5.0) {
  const Eigen::Vector3d axis = rng.vec(-1.0, 1.0).normalized();
  const double angle = rng.uniform(-3.0, 3.0);
  return {Eigen::AngleAxisd(angle, axis).toRotationMatrix(), rng.vec(-max_translation, max_translation)};
}

/// Flat noisy ground, walls in several orientations and poles: enough
/// structure to constrain all six degrees of freedom.
inline staticmap::PointCloud structured_scan(Rng& rng, double ground_z = -1.73, double density = 4.0) {
  staticmap::PointCloud cloud;
  auto rect = [&](const Eigen::Vector3d& o, const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
    const auto n = static_cast<std::size_t>(u.norm() * v.norm() * density);
    for (std::size_t i = 0; i < n; ++i) {
      cloud.points.push_back(staticmap::Point3::from(o + rng.uniform(0, 1) * u + rng.uniform(0, 1) * v));
    }
  };
  rect({-20, -20, ground_z}, {40, 0, 0}, {0, 40, 0});
  const Eigen::Vector3d up(0, 0, 6);
  rect({8, -12, ground_z}, {0, 10, 0}, up);
  rect({-15, 4, ground_z}, {9, 0, 0}, up);
  rect({-6, -16, ground_z}, {7, 7, 0}, up);
  rect({3, 10, ground_z}, {8, -3, 0}, up);
  rect({-12, -8, ground_z}, {0, 6, 0}, up);
  for (const auto& c : {Eigen::Vector2d(4, -4), Eigen::Vector2d(-3, 6), Eigen::Vector2d(12, 5), Eigen::Vector2d(-9, -2)}) {
    rect({c.x() - 0.2, c.y() - 0.2, ground_z}, {0.4, 0, 0}, {0, 0, 4});
    rect({c.x() - 0.2, c.y() - 0.2, ground_z}, {0, 0.4, 0}, {0, 0, 4});
  }
  return cloud;
}

}  // namespace testing
