#include <cmath>
#include <numbers>

#include <doctest.h>

#include "staticmap/errors.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/registration.hpp"
#include "support.hpp"

using namespace staticmap;
using std::numbers::pi;

namespace {

double translation_error(const PoseSE3& a, const PoseSE3& b) { return (a.translation() - b.translation()).norm(); }
double angle_error(const PoseSE3& a, const PoseSE3& b) { return (a.inverse() * b).rotation_angle(); }

}  // namespace

TEST_SUITE("registration") {
  TEST_CASE("self-registration returns the identity") {
    testing::Rng rng(1);
    const PointCloud scan = voxel_downsample(testing::structured_scan(rng), 0.2);
    const IcpResult r = icp_register(scan, scan, PoseSE3::identity());
    CHECK((r.pose.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(r.fitness == 1.0);
    CHECK(r.inlier_rmse <= 1e-9);
    CHECK(r.converged);
  }

  TEST_CASE("known offset of a structured scan is recovered") {
    testing::Rng rng(2);
    const PointCloud target = voxel_downsample(testing::structured_scan(rng), 0.2);
    const PoseSE3 offset = PoseSE3::from_yaw(3.0 * pi / 180.0, {0.3, 0.2, 0.0});
    const PointCloud source = transform_cloud(target, offset);
    const IcpResult r = icp_register(source, target, PoseSE3::identity());
    const PoseSE3 expected = offset.inverse();
    CHECK(translation_error(r.pose, expected) < 0.02);
    CHECK(angle_error(r.pose, expected) < 0.2 * pi / 180.0);
  }

  TEST_CASE("clouds beyond the gate have no correspondences") {
    PointCloud a, b;
    a.points = {{0, 0, 0, 0}, {1, 0, 0, 0}};
    b.points = {{10, 0, 0, 0}, {11, 0, 0, 0}};
    CHECK_THROWS_AS(icp_register(a, b, PoseSE3::identity()), NoCorrespondences);
  }

  TEST_CASE("ICP contracts the error inside its basin") {
    testing::Rng rng(3);
    const PointCloud scan = voxel_downsample(testing::structured_scan(rng), 0.2);
    const KdTree index(scan.positions());
    // Pose error as RMS displacement of the scene points, so translation and
    // rotation are weighed together.
    auto displacement = [&](const PoseSE3& pose) {
      double sum = 0.0;
      for (const auto& p : scan.points) sum += (pose.apply(p.position()) - p.position()).squaredNorm();
      return std::sqrt(sum / static_cast<double>(scan.size()));
    };
    for (int trial = 0; trial < 25; ++trial) {
      const Eigen::Vector3d dir = Eigen::Vector3d(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-0.2, 0.2)).normalized();
      const PoseSE3 initial = PoseSE3::from_yaw(rng.uniform(-10, 10) * pi / 180.0, dir * rng.uniform(0.05, 1.0));
      const IcpResult r = icp_register(scan, index, initial);
      CHECK(displacement(r.pose) < displacement(initial));
    }
  }

  TEST_CASE("fitness counts the matched share of the source") {
    PointCloud target, source;
    for (int i = 0; i < 10; ++i) target.points.push_back({static_cast<double>(i), 0, 0, 0});
    source = target;
    for (int i = 0; i < 10; ++i) source.points.push_back({static_cast<double>(i), 50, 0, 0});
    const IcpResult r = icp_register(source, target, PoseSE3::identity());
    CHECK(r.fitness == doctest::Approx(0.5));
  }

  TEST_CASE("closed-form alignment is exact on noise-free pairs") {
    testing::Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      const PoseSE3 truth = testing::random_pose(rng, 10);
      std::vector<Eigen::Vector3d> src, dst;
      for (int i = 0; i < 20; ++i) {
        src.push_back(rng.vec(-5, 5));
        dst.push_back(truth.apply(src.back()));
      }
      const PoseSE3 est = best_rigid_transform(src, dst);
      CHECK((est.matrix() - truth.matrix()).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(est.rotation().determinant() == doctest::Approx(1.0));
    }
  }

  TEST_CASE("parameter validation") {
    IcpParams p;
    p.max_correspondence_dist = 0;
    CHECK_THROWS_AS(p.validate(), ValueError);
    IcpParams q;
    q.max_iterations = 0;
    CHECK_THROWS_AS(q.validate(), ValueError);
  }
}
