#include <cmath>
#include <algorithm>
#include <numbers>
#include <numeric>

#include <doctest.h>

#include "scenes.hpp"
#include "staticmap/dynamic_removal.hpp"
#include "staticmap/errors.hpp"
#include "support.hpp"

using namespace staticmap;

namespace {

bool same_point(const Point3& a, const Point3& b) {
  return a.x == b.x && a.y == b.y && a.z == b.z && a.intensity == b.intensity;
}

OrientedBox axis_box(Eigen::Vector3d center, Eigen::Vector3d size) {
  OrientedBox b;
  b.center = center;
  b.size = size;
  b.class_label = "Car";
  return b;
}

}  // namespace

TEST_SUITE("dynamic_removal") {
  TEST_CASE("no boxes label nothing") {
    testing::Rng rng(1);
    CHECK(label_dynamic_points(testing::random_cloud(rng, 50, -5, 5), {}, 0.1).empty());
  }

  TEST_CASE("box holding two points of ten labels exactly those") {
    PointCloud c;
    for (int i = 0; i < 10; ++i) c.points.push_back({static_cast<double>(i) * 2.0, 0, 0, 0});
    c.points[3] = {100, 100, 0, 0};
    c.points[7] = {100.5, 100.2, 0.3, 0};
    const OrientedBox b = axis_box({100.2, 100, 0}, {2, 2, 2});
    std::vector<std::size_t> expected;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (point_in_obb(c[i], b, 0.1)) expected.push_back(i);
    }
    CHECK(expected == std::vector<std::size_t>{3, 7});
    CHECK(label_dynamic_points(c, {b}, 0.1) == expected);
  }

  TEST_CASE("overlapping boxes label a shared point once") {
    PointCloud c;
    for (int i = 0; i < 10; ++i) c.points.push_back({static_cast<double>(i), 0, 0, 0});
    const auto idx = label_dynamic_points(c, {axis_box({5, 0, 0}, {0.5, 1, 1}), axis_box({5.1, 0, 0}, {0.5, 1, 1})}, 0.0);
    CHECK(idx == std::vector<std::size_t>{5});
  }

  TEST_CASE("projection examples") {
    PointCloud c;
    c.points = {{1, 2, 3, 0.4f}};
    const PointCloud same = project_dynamic(c, {}, -1.7);
    CHECK(same_point(same[0], c[0]));
    const PointCloud p = project_dynamic(c, {0}, -1.7);
    CHECK(p[0].x == 1.0);
    CHECK(p[0].y == 2.0);
    CHECK(p[0].z == -1.7);
    CHECK(p[0].intensity == 0.4f);
    CHECK_THROWS_AS(project_dynamic(c, {1}, 0.0), IndexOutOfRange);
  }

  TEST_CASE("random projection changes exactly the listed z values") {
    testing::Rng rng(2);
    const PointCloud c = testing::random_cloud(rng, 1000, -10, 10);
    std::vector<std::size_t> idx(1000);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    idx.resize(100);
    std::sort(idx.begin(), idx.end());
    const double zbar = -1.73;
    const PointCloud p = project_dynamic(c, idx, zbar);
    REQUIRE(p.size() == c.size());
    std::size_t changed = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const bool listed = std::binary_search(idx.begin(), idx.end(), i);
      CHECK(p[i].x == c[i].x);
      CHECK(p[i].y == c[i].y);
      CHECK(p[i].intensity == c[i].intensity);
      if (listed) {
        CHECK(p[i].z == zbar);
        ++changed;
      } else {
        CHECK(same_point(p[i], c[i]));
      }
    }
    CHECK(changed == 100);
    const PointCloud again = project_dynamic(p, idx, zbar);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(same_point(again[i], p[i]));
  }

  TEST_CASE("no detections and no fallback pass the range-filtered cloud through") {
    const SyntheticPass pass = generate_pass(testing::single_frame_scene({testing::car_box({5, 0}, 0.2)}), Pass::First);
    RemovalConfig config;
    config.range = {Eigen::Vector3d(-8, -8, -3), Eigen::Vector3d(8, 8, 3)};
    const FrameResult r = process_frame(pass.scans[0], std::nullopt, config);
    const auto filtered = range_filter(pass.scans[0], config.range).cloud;
    REQUIRE(r.cleaned.size() == filtered.size());
    for (std::size_t i = 0; i < filtered.size(); ++i) CHECK(same_point(r.cleaned[i], filtered[i]));
    CHECK(r.dynamic_indices.empty());
    CHECK(r.ground.has_value());
  }

  TEST_CASE("detected car points drop to the ground height") {
    const OrientedBox car = testing::car_box({5, 2}, 0.6);
    const SyntheticPass pass = generate_pass(testing::single_frame_scene({car}, 1.7), Pass::First);
    const PointCloud& scan = pass.scans[0];
    const auto boxes = boxes_for_frame(pass.detections, 0, DynamicClassSet{});
    REQUIRE(boxes.size() == 1);
    const FrameResult r = process_frame(scan, boxes, RemovalConfig{});
    REQUIRE(r.cleaned.size() == scan.size());
    REQUIRE(r.ground.has_value());
    CHECK(std::abs(r.ground->mean_z + 1.7) < 1e-9);
    for (auto i : pass.dynamic_labels[0]) {
      CHECK(std::abs(r.cleaned[i].z + 1.7) <= 1e-9);
      CHECK(std::binary_search(r.dynamic_indices.begin(), r.dynamic_indices.end(), i));
    }
  }

  TEST_CASE("fallback detector removes an undetected car") {
    const SyntheticPass pass = generate_pass(testing::single_frame_scene({testing::car_box({-4, 3}, 1.1)}), Pass::First);
    RemovalConfig config;
    config.fallback_detector = true;
    const FrameResult r = process_frame(pass.scans[0], std::nullopt, config);
    CHECK(r.boxes.size() == 1);
    std::size_t projected = 0;
    for (auto i : pass.dynamic_labels[0]) projected += std::abs(r.cleaned[i].z - r.ground->mean_z) == 0.0;
    CHECK(projected >= pass.dynamic_labels[0].size() * 95 / 100);
  }

  TEST_CASE("degenerate ground policies") {
    testing::Rng rng(3);
    PointCloud tiny = testing::random_cloud(rng, 20, -2, 2);
    const std::vector<OrientedBox> boxes{axis_box(Eigen::Vector3d::Zero(), {10, 10, 10})};
    RemovalConfig config;
    const FrameResult r = process_frame(tiny, boxes, config);
    CHECK(r.ground_degenerate);
    CHECK(r.dynamic_indices.empty());
    REQUIRE(r.cleaned.size() == tiny.size());
    for (std::size_t i = 0; i < tiny.size(); ++i) CHECK(same_point(r.cleaned[i], tiny[i]));
    config.degenerate_policy = DegenerateGroundPolicy::Abort;
    CHECK_THROWS_AS(process_frame(tiny, boxes, config), DegenerateGround);
  }

  TEST_CASE("disabled removal only range filters") {
    const OrientedBox car = testing::car_box({5, 2}, 0.6);
    const SyntheticPass pass = generate_pass(testing::single_frame_scene({car}), Pass::First);
    RemovalConfig config;
    config.enabled = false;
    const FrameResult r = process_frame(pass.scans[0], std::vector<OrientedBox>{car}, config);
    CHECK(r.dynamic_indices.empty());
    for (std::size_t i = 0; i < r.cleaned.size(); ++i) CHECK(same_point(r.cleaned[i], pass.scans[0][i]));
  }

  TEST_CASE("stage properties over random boxes") {
    testing::Rng rng(4);
    const SyntheticPass pass = generate_pass(
        testing::single_frame_scene({testing::car_box({5, 2}, 0.6), testing::car_box({-6, -3}, -2.0)}, 1.73, 6.0),
        Pass::First);
    const PointCloud& scan = pass.scans[0];
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<OrientedBox> boxes;
      for (int b = 0; b < 4; ++b) {
        OrientedBox box = axis_box(rng.vec(-10, 10), {rng.uniform(0.5, 5), rng.uniform(0.5, 5), rng.uniform(0.5, 4)});
        box.yaw = wrap_angle(rng.uniform(-4, 4));
        boxes.push_back(box);
      }
      RemovalConfig config;
      config.range = {Eigen::Vector3d(-12, -12, -3), Eigen::Vector3d(12, 12, 5)};
      const FrameResult r = process_frame(scan, boxes, config);
      const auto filtered = range_filter(scan, config.range).cloud;
      REQUIRE(r.cleaned.size() == filtered.size());
      for (std::size_t i = 0; i < filtered.size(); ++i) {
        CHECK(r.cleaned[i].x == filtered[i].x);
        CHECK(r.cleaned[i].y == filtered[i].y);
        const bool dynamic = std::binary_search(r.dynamic_indices.begin(), r.dynamic_indices.end(), i);
        const bool inside = std::any_of(boxes.begin(), boxes.end(), [&](const OrientedBox& b) { return point_in_obb(filtered[i], b, config.box_margin); });
        CHECK(dynamic == inside);
        if (!dynamic) CHECK(same_point(r.cleaned[i], filtered[i]));
      }
      const PointCloud again = project_dynamic(r.cleaned, r.dynamic_indices, r.ground->mean_z);
      for (std::size_t i = 0; i < again.size(); ++i) CHECK(std::abs(again[i].z - r.cleaned[i].z) <= 1e-12);
    }
  }

  TEST_CASE("policy names round trip") {
    CHECK(parse_degenerate_policy(to_string(DegenerateGroundPolicy::Abort)) == DegenerateGroundPolicy::Abort);
    CHECK(parse_degenerate_policy("skip-projection") == DegenerateGroundPolicy::SkipProjection);
    CHECK_THROWS_AS(parse_degenerate_policy("ignore"), ValueError);
  }
}
