#include <cmath>
#include <fstream>
#include <set>

#include <doctest.h>
#include <json.hpp>

#include "oracles.hpp"
#include "scenes.hpp"
#include "staticmap/errors.hpp"
#include "staticmap/io_formats.hpp"
#include "staticmap/synthetic.hpp"
#include "support.hpp"

using namespace staticmap;

namespace {

bool same_cloud(const PointCloud& a, const PointCloud& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].position() != b[i].position() || a[i].intensity != b[i].intensity) return false;
  }
  return true;
}

SceneSpec small_scene() {
  SceneSpec spec = testing::single_frame_scene({testing::car_box({5, 2}, 0.3), testing::car_box({-6, -3}, 1.2)}, 1.7, 4.0);
  spec.static_structures.push_back({{8, -4, 0}, {10, 4, 3}});
  spec.sensor_path.push_back(PoseSE3::from_yaw(0.2, {2, 0.5, 1.7}));
  spec.dynamic_objects[1].presence = Presence::First;
  return spec;
}

}  // namespace

TEST_SUITE("synthetic") {
  TEST_CASE("flat ground seen from sensor height") {
    SceneSpec spec = testing::single_frame_scene({}, 1.7, 5.0);
    const SyntheticPass pass = generate_pass(spec, Pass::First);
    REQUIRE(pass.scans.size() == 1);
    const PointCloud& scan = pass.scans[0];
    // 30 m square patch at 5 points per square metre.
    CHECK(scan.size() == doctest::Approx(30.0 * 30.0 * 5.0).epsilon(0.05));
    for (const auto& p : scan.points) CHECK(std::abs(p.z + 1.7) <= 1e-12);
    CHECK(pass.dynamic_labels[0].empty());
    CHECK(pass.detections.at(0).empty());
  }

  TEST_CASE("same seed gives identical passes") {
    const SceneSpec spec = make_street_scene(3, 6);
    const SyntheticPass a = generate_pass(spec, Pass::Second);
    const SyntheticPass b = generate_pass(spec, Pass::Second);
    REQUIRE(a.scans.size() == b.scans.size());
    for (std::size_t i = 0; i < a.scans.size(); ++i) {
      CHECK(same_cloud(a.scans[i], b.scans[i]));
      CHECK(a.dynamic_labels[i] == b.dynamic_labels[i]);
    }
    const SyntheticPass c = generate_pass(make_street_scene(4, 6), Pass::Second);
    CHECK_FALSE(same_cloud(a.scans[0], c.scans[0]));
  }

  TEST_CASE("objects appear only in their passes") {
    const SceneSpec spec = small_scene();
    const SyntheticPass first = generate_pass(spec, Pass::First);
    const SyntheticPass second = generate_pass(spec, Pass::Second);
    auto owners = [](const SyntheticPass& p) {
      std::set<int> s(p.world_object.begin(), p.world_object.end());
      s.erase(-1);
      return s;
    };
    CHECK(owners(first) == std::set<int>{0, 1});
    CHECK(owners(second) == std::set<int>{0});
    CHECK(first.detections.at(0).size() == 2);
    CHECK(second.detections.at(0).size() == 1);
  }

  TEST_CASE("labelled points lie inside the reported boxes") {
    for (const SceneSpec& spec : {small_scene(), make_street_scene(5, 8)}) {
      const SyntheticPass pass = generate_pass(spec, Pass::First);
      for (std::size_t f = 0; f < pass.scans.size(); ++f) {
        const PointCloud& scan = pass.scans[f];
        std::vector<OrientedBox> boxes;
        for (const auto& d : pass.detections.at(scan.frame_id)) boxes.push_back(d.to_box());
        const std::set<std::size_t> labelled(pass.dynamic_labels[f].begin(), pass.dynamic_labels[f].end());
        for (std::size_t i = 0; i < scan.size(); ++i) {
          bool inside = false;
          for (const auto& b : boxes) inside = inside || point_in_obb(scan[i], b, 1e-9);
          if (labelled.count(i)) {
            CHECK(inside);
          } else {
            CHECK_FALSE(inside);
          }
        }
      }
    }
  }

  TEST_CASE("scans are the world seen through the sensor pose") {
    const SceneSpec spec = small_scene();
    const SyntheticPass pass = generate_pass(spec, Pass::First);
    const auto world = pass.world.positions();
    for (std::size_t f = 0; f < pass.scans.size(); ++f) {
      const PoseSE3& pose = pass.gt_poses[f].pose;
      const PointCloud back = transform_cloud(pass.scans[f], pose);
      for (std::size_t i = 0; i < back.size(); i += 7) {
        const auto j = oracle::brute_nearest(world, back[i].position(), 1e-6);
        REQUIRE(j.has_value());
        CHECK((world[*j] - back[i].position()).norm() <= 1e-9);
      }
    }
  }

  TEST_CASE("scene spec json round trip") {
    const SceneSpec spec = small_scene();
    const SceneSpec back = scene_spec_from_json(scene_spec_to_json(spec));
    CHECK(scene_spec_to_json(back) == scene_spec_to_json(spec));
    const SyntheticPass a = generate_pass(spec, Pass::First);
    const SyntheticPass b = generate_pass(back, Pass::First);
    CHECK(same_cloud(a.scans[1], b.scans[1]));

    auto j = nlohmann::json::parse(scene_spec_to_json(spec));
    j["colour"] = "red";
    CHECK_THROWS_AS(scene_spec_from_json(j.dump()), ValueError);
    CHECK_THROWS_AS(scene_spec_from_json("{not json"), MalformedFile);
    auto k = nlohmann::json::parse(scene_spec_to_json(spec));
    k["sensor_path"] = nlohmann::json::array();
    CHECK_THROWS_AS(scene_spec_from_json(k.dump()), ValueError);
  }

  TEST_CASE("drift grows linearly from the first pose") {
    Trajectory t;
    for (FrameId i = 0; i < 11; ++i) t.push_back(i, PoseSE3::from_translation({i * 1.0, 0, 0}));
    const Trajectory d = inject_drift(t, {0.5, -1.0, 0.0});
    CHECK(d[0].pose.translation() == t[0].pose.translation());
    CHECK((d[10].pose.translation() - Eigen::Vector3d(10.5, -1.0, 0)).norm() < 1e-12);
    CHECK((d[4].pose.translation() - Eigen::Vector3d(4.2, -0.4, 0)).norm() < 1e-12);
    const Trajectory r = relative_to(t, t[3].pose);
    CHECK((r[3].pose.translation()).norm() < 1e-12);
    CHECK((r[0].pose.translation() - Eigen::Vector3d(-3, 0, 0)).norm() < 1e-12);
  }

  TEST_CASE("street preset changes parked cars between passes") {
    const SceneSpec spec = make_street_scene(7, 20);
    int first_only = 0, second_only = 0, both = 0;
    for (const auto& o : spec.dynamic_objects) {
      first_only += o.presence == Presence::First;
      second_only += o.presence == Presence::Second;
      both += o.presence == Presence::Both;
    }
    CHECK(first_only > 0);
    CHECK(second_only > 0);
    CHECK(both > 0);
    CHECK(spec.sensor_path.size() == 20);
  }

  TEST_CASE("loop preset closes on its first pose") {
    const SceneSpec spec = make_loop_scene();
    CHECK(spec.sensor_path.size() == 300);
    const PoseSE3& a = spec.sensor_path.front();
    const PoseSE3& b = spec.sensor_path.back();
    CHECK((a.translation() - b.translation()).norm() < 1e-9);
    CHECK(std::abs(wrap_angle(a.yaw() - b.yaw())) < 1e-9);
  }

  TEST_CASE("written pass layout") {
    testing::TempDir dir("synth");
    const SceneSpec spec = small_scene();
    const SyntheticPass pass = generate_pass(spec, Pass::First);
    write_pass(pass, spec.sensor_path.front(), dir.path());
    CHECK(list_scan_files(dir / "velodyne").size() == 2);
    const Trajectory poses = read_poses(dir / "poses.txt");
    REQUIRE(poses.size() == 2);
    CHECK((poses[0].pose.matrix() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    const DetectionMap det = read_detections(dir / "detections.jsonl");
    CHECK(det.at(0).size() == 2);
    std::ifstream labels(dir / "labels.jsonl");
    std::string line;
    std::size_t rows = 0;
    while (std::getline(labels, line)) {
      const auto j = nlohmann::json::parse(line);
      CHECK(j.at("dynamic").get<std::vector<std::size_t>>() == pass.dynamic_labels[rows]);
      ++rows;
    }
    CHECK(rows == 2);
  }

  TEST_CASE("invalid scenes are rejected") {
    SceneSpec spec = small_scene();
    spec.points_per_surface = 0.0;
    CHECK_THROWS_AS(generate_pass(spec, Pass::First), ValueError);
    SceneSpec s2 = small_scene();
    s2.static_structures.push_back({{1, 1, 1}, {0, 2, 2}});
    CHECK_THROWS_AS(s2.validate(), ValueError);
  }
}
