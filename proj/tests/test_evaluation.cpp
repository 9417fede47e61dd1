#include <cmath>
#include <numbers>
#include <sstream>

#include <doctest.h>

#include "oracles.hpp"
#include "staticmap/errors.hpp"
#include "staticmap/evaluation.hpp"
#include "staticmap/geometry.hpp"
#include "support.hpp"

using namespace staticmap;

namespace {

oracle::Mat4 rigid_inverse(const oracle::Mat4& m) {
  oracle::Mat4 inv{};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) inv[i][j] = m[j][i];
    double s = 0.0;
    for (int k = 0; k < 3; ++k) s -= m[k][i] * m[k][3];
    inv[i][3] = s;
  }
  inv[3][3] = 1.0;
  return inv;
}

oracle::Mat4 as_mat4(const PoseSE3& p) { return oracle::mat4(p.rotation(), p.translation()); }

// Errors after aligning by the first shared frame, computed with plain 4x4
// arithmetic.
std::vector<double> oracle_errors(const Trajectory& est, const Trajectory& gt) {
  std::vector<double> out;
  std::optional<oracle::Mat4> align;
  for (const auto& e : est) {
    const PoseSE3* g = gt.find(e.frame_id);
    if (!g) continue;
    if (!align) align = oracle::multiply(as_mat4(*g), rigid_inverse(as_mat4(e.pose)));
    const oracle::Mat4 a = oracle::multiply(*align, as_mat4(e.pose));
    const Eigen::Vector3d d(a[0][3] - g->translation().x(), a[1][3] - g->translation().y(),
                            a[2][3] - g->translation().z());
    out.push_back(d.norm());
  }
  return out;
}

Trajectory random_walk(testing::Rng& rng, std::size_t n, FrameId first = 0) {
  Trajectory t;
  PoseSE3 pose = PoseSE3::identity();
  for (std::size_t i = 0; i < n; ++i) {
    t.push_back(first + static_cast<FrameId>(i), pose);
    pose = pose * PoseSE3::from_yaw(rng.uniform(-0.1, 0.1), {rng.uniform(0.5, 1.5), rng.uniform(-0.1, 0.1), rng.normal(0.02)});
  }
  return t;
}

Trajectory perturb(testing::Rng& rng, const Trajectory& t, double sigma) {
  Trajectory out;
  for (const auto& e : t) {
    out.push_back(e.frame_id, e.pose * PoseSE3::from_yaw(rng.normal(sigma * 0.1), rng.vec(-sigma, sigma)));
  }
  return out;
}

Trajectory map_poses(const Trajectory& t, const PoseSE3& left) {
  Trajectory out;
  for (const auto& e : t) out.push_back(e.frame_id, left * e.pose);
  return out;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("identical trajectories score zero") {
    testing::Rng rng(1);
    const Trajectory t = random_walk(rng, 20);
    const OdometryReport r = odometry_error(t, t);
    CHECK(r.frame_count == 20);
    CHECK(r.average_error <= 1e-12);
  }

  TEST_CASE("global rigid offset is aligned away") {
    testing::Rng rng(2);
    const Trajectory gt = random_walk(rng, 20);
    const Trajectory est = map_poses(gt, testing::random_pose(rng, 50.0));
    CHECK(odometry_error(est, gt).average_error < 1e-9);
  }

  TEST_CASE("linear lateral drift") {
    Trajectory gt, est;
    for (FrameId i = 0; i < 10; ++i) {
      gt.push_back(i, PoseSE3::from_translation({i * 1.0, 0, 0}));
      est.push_back(i, PoseSE3::from_translation({i * 1.0, 0.1 * i, 0}));
    }
    const OdometryReport r = odometry_error(est, gt);
    REQUIRE(r.per_frame_errors.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(r.per_frame_errors[i] == doctest::Approx(0.1 * i).epsilon(1e-12));
    CHECK(r.average_error == doctest::Approx(0.45).epsilon(1e-12));
  }

  TEST_CASE("errors match a plain matrix oracle") {
    testing::Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      const Trajectory gt = random_walk(rng, 30);
      Trajectory est = perturb(rng, gt, 0.3);
      const auto expected = oracle_errors(est, gt);
      const OdometryReport r = odometry_error(est, gt);
      REQUIRE(r.per_frame_errors.size() == expected.size());
      for (std::size_t i = 0; i < expected.size(); ++i) CHECK(r.per_frame_errors[i] == doctest::Approx(expected[i]).epsilon(1e-9));
      CHECK(r.average_error == doctest::Approx(oracle::compensated_sum(expected) / expected.size()).epsilon(1e-9));
    }
  }

  TEST_CASE("invariant under a common rigid transform") {
    testing::Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
      const Trajectory gt = random_walk(rng, 25);
      const Trajectory est = perturb(rng, gt, 0.2);
      const PoseSE3 t = testing::random_pose(rng, 100.0);
      const double a = odometry_error(est, gt).average_error;
      const double b = odometry_error(map_poses(est, t), map_poses(gt, t)).average_error;
      CHECK(b == doctest::Approx(a).epsilon(1e-8));
    }
  }

  TEST_CASE("only shared frames are scored") {
    testing::Rng rng(5);
    const Trajectory gt = random_walk(rng, 20);
    Trajectory est;
    for (const auto& e : gt) {
      if (e.frame_id % 3 != 0) est.push_back(e.frame_id, e.pose);
    }
    const OdometryReport r = odometry_error(est, gt);
    CHECK(r.frame_count == est.size());
    CHECK(r.frame_ids.front() == 1);
    Trajectory disjoint;
    disjoint.push_back(100, PoseSE3::identity());
    CHECK_THROWS_AS(odometry_error(disjoint, gt), NoOverlap);
    CHECK_THROWS_AS(odometry_error(Trajectory{}, gt), NoOverlap);
  }

  TEST_CASE("rmse") {
    CHECK(rmse({3.0}) == 3.0);
    CHECK(rmse({3.0, 4.0}) == doctest::Approx(std::sqrt(12.5)));
    CHECK(std::isnan(rmse({})));
  }

  TEST_CASE("scans rendered from the map localize onto it") {
    testing::Rng rng(6);
    const PointCloud world = voxel_downsample(testing::structured_scan(rng, 0.0, 10.0), 0.1);
    Trajectory gt;
    std::vector<PointCloud> scans;
    for (FrameId f = 0; f < 6; ++f) {
      const PoseSE3 pose = PoseSE3::from_yaw(0.05 * f, {0.8 * f, 0.2 * f, 1.7});
      gt.push_back(f, pose);
      PointCloud scan = transform_cloud(world, pose.inverse());
      scan.frame_id = f;
      scans.push_back(std::move(scan));
    }
    const LocalizationReport r = localization_error(world, scans, gt);
    REQUIRE(r.per_frame.size() == 5);
    CHECK(r.failed_frames.empty());
    CHECK(r.xy_rmse < 0.01);
    CHECK(r.yaw_rmse < 0.005);
    std::vector<double> xy;
    for (const auto& f : r.per_frame) {
      CHECK(f.yaw_error >= 0.0);
      CHECK(f.yaw_error <= std::numbers::pi);
      xy.push_back(f.xy_error);
    }
    CHECK(r.xy_rmse == doctest::Approx(rmse(xy)));
    // Same inputs, same report.
    const LocalizationReport again = localization_error(world, scans, gt, {}, 1);
    for (std::size_t i = 0; i < r.per_frame.size(); ++i) {
      CHECK(again.per_frame[i].xy_error == r.per_frame[i].xy_error);
      CHECK(again.per_frame[i].yaw_error == r.per_frame[i].yaw_error);
    }
  }

  TEST_CASE("single evaluated frame") {
    testing::Rng rng(7);
    const PointCloud world = voxel_downsample(testing::structured_scan(rng, 0.0, 10.0), 0.1);
    Trajectory gt;
    gt.push_back(0, PoseSE3::from_translation({0, 0, 1.7}));
    gt.push_back(1, PoseSE3::from_translation({0.5, 0, 1.7}));
    PointCloud scan = transform_cloud(world, gt[1].pose.inverse());
    scan.frame_id = 1;
    const LocalizationReport r = localization_error(world, {scan}, gt);
    REQUIRE(r.per_frame.size() == 1);
    CHECK(r.xy_rmse == doctest::Approx(r.per_frame[0].xy_error));
    CHECK(r.xy_rmse < 0.01);
  }

  TEST_CASE("frames without predecessor ground truth are skipped") {
    testing::Rng rng(8);
    const PointCloud world = voxel_downsample(testing::structured_scan(rng, 0.0, 5.0), 0.2);
    Trajectory gt;
    gt.push_back(3, PoseSE3::identity());
    PointCloud scan = world;
    scan.frame_id = 3;
    const LocalizationReport r = localization_error(world, {scan}, gt);
    CHECK(r.per_frame.empty());
    CHECK_THROWS_AS(localization_error(PointCloud{}, {scan}, gt), ValueError);
  }

  TEST_CASE("reports carry an interpretation header") {
    Trajectory gt;
    for (FrameId i = 0; i < 3; ++i) gt.push_back(i, PoseSE3::from_translation({i * 1.0, 0, 0}));
    std::ostringstream records, summary;
    write_odometry_report(odometry_error(gt, gt), records, summary);
    CHECK(records.str().rfind(R"({"metric":"odometry")", 0) == 0);
    CHECK(summary.str().rfind("# odometry", 0) == 0);
    CHECK(summary.str().find("average_error") != std::string::npos);
  }
}
