#include "staticmap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "staticmap/errors.hpp"

namespace staticmap {

namespace {

using detail::json;

// mt19937_64 output mapped to doubles by hand so sequences match across
// standard library implementations.
class SceneRng {
 public:
  explicit SceneRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    spare_ = radius * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return radius * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x ^= x >> 33;
  x *= 0xff51afd7ed558ccdULL;
  x ^= x >> 33;
  return x;
}

int pass_index(Pass pass) { return pass == Pass::First ? 0 : 1; }

std::size_t sample_count(double area, double density) {
  return static_cast<std::size_t>(std::llround(std::max(0.0, area * density)));
}

// Samples a planar rectangle spanned by origin + s·u + t·v, s,t in [0,1].
void sample_rect(SceneRng& rng, const Eigen::Vector3d& origin, const Eigen::Vector3d& u, const Eigen::Vector3d& v,
                 double density, std::vector<Eigen::Vector3d>& out) {
  const std::size_t n = sample_count(u.norm() * v.norm(), density);
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.uniform();
    const double t = rng.uniform();
    out.push_back(origin + s * u + t * v);
  }
}

// Four walls and the roof of an axis-aligned cuboid given in its own frame.
void sample_cuboid_shell(SceneRng& rng, const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double density,
                         std::vector<Eigen::Vector3d>& out) {
  const Eigen::Vector3d d = hi - lo;
  const Eigen::Vector3d ex(d.x(), 0, 0);
  const Eigen::Vector3d ey(0, d.y(), 0);
  const Eigen::Vector3d ez(0, 0, d.z());
  sample_rect(rng, lo, ex, ez, density, out);
  sample_rect(rng, lo + ey, ex, ez, density, out);
  sample_rect(rng, lo, ey, ez, density, out);
  sample_rect(rng, lo + ex, ey, ez, density, out);
  sample_rect(rng, lo + ez, ex, ey, density, out);
}

bool in_footprint(const Eigen::Vector3d& p, const OrientedBox& box, double clearance) {
  const Eigen::Vector3d d = p - box.center;
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double bx = c * d.x() + s * d.y();
  const double by = -s * d.x() + c * d.y();
  return std::abs(bx) <= box.size.x() / 2 + clearance && std::abs(by) <= box.size.y() / 2 + clearance;
}

bool in_structure_footprint(const Eigen::Vector3d& p, const StaticStructure& s) {
  return p.x() >= s.min_corner.x() && p.x() <= s.max_corner.x() && p.y() >= s.min_corner.y() &&
         p.y() <= s.max_corner.y();
}

}  // namespace

bool present_in(Presence presence, Pass pass) {
  switch (presence) {
    case Presence::Both:
      return true;
    case Presence::First:
      return pass == Pass::First;
    case Presence::Second:
      return pass == Pass::Second;
  }
  return false;
}

void SceneSpec::validate() const {
  if (!(ground_extent > 0.0)) throw ValueError("scene ground_extent must be positive");
  if (!(ground_noise_sigma >= 0.0)) throw ValueError("scene ground_noise_sigma must be non-negative");
  if (!(points_per_surface > 0.0)) throw ValueError("scene points_per_surface must be positive");
  if (!(sensor_range > 0.0)) throw ValueError("scene sensor_range must be positive");
  if (!(falloff_range >= 0.0)) throw ValueError("scene falloff_range must be non-negative");
  if (sensor_path.empty()) throw ValueError("scene sensor_path is empty");
  for (const auto& s : static_structures) {
    if (!(s.min_corner.array() < s.max_corner.array()).all()) throw ValueError("static structure has empty extent");
  }
  for (const auto& o : dynamic_objects) o.box.validate();
}

SyntheticPass generate_pass(const SceneSpec& spec, Pass pass) {
  spec.validate();
  SyntheticPass out;
  const std::uint64_t pass_seed = mix(spec.seed, static_cast<std::uint64_t>(pass_index(pass)));

  std::vector<Eigen::Vector3d> points;
  std::vector<int> owner;

  // Ground: drawn in full so the random sequence does not depend on which
  // objects are present, then thinned under present objects and buildings.
  {
    SceneRng rng(mix(pass_seed, 1));
    const double e = spec.ground_extent;
    const std::size_t n = sample_count(4.0 * e * e, spec.points_per_surface);
    for (std::size_t i = 0; i < n; ++i) {
      const double x = spec.ground_center.x() + rng.uniform(-e, e);
      const double y = spec.ground_center.y() + rng.uniform(-e, e);
      const double z = spec.ground_z + spec.ground_noise_sigma * rng.normal();
      const Eigen::Vector3d p(x, y, z);
      bool hidden = std::any_of(spec.static_structures.begin(), spec.static_structures.end(),
                                [&](const StaticStructure& s) { return in_structure_footprint(p, s); });
      for (const auto& obj : spec.dynamic_objects) {
        if (hidden) break;
        hidden = present_in(obj.presence, pass) && in_footprint(p, obj.box, spec.occlusion_clearance);
      }
      if (hidden) continue;
      points.push_back(p);
      owner.push_back(-1);
    }
  }

  {
    SceneRng rng(mix(pass_seed, 2));
    std::vector<Eigen::Vector3d> shell;
    for (const auto& s : spec.static_structures) sample_cuboid_shell(rng, s.min_corner, s.max_corner, spec.points_per_surface, shell);
    for (const auto& p : shell) {
      points.push_back(p);
      owner.push_back(-1);
    }
  }

  constexpr double kInset = 0.01;
  for (std::size_t k = 0; k < spec.dynamic_objects.size(); ++k) {
    const auto& obj = spec.dynamic_objects[k];
    if (!present_in(obj.presence, pass)) continue;
    SceneRng rng(mix(pass_seed, 100 + k));
    const Eigen::Vector3d half = obj.box.size / 2.0 - Eigen::Vector3d::Constant(kInset);
    std::vector<Eigen::Vector3d> local;
    sample_cuboid_shell(rng, -half, half, spec.points_per_surface, local);
    const Eigen::Matrix3d r = yaw_rotation(obj.box.yaw);
    for (const auto& p : local) {
      points.push_back(obj.box.center + r * p);
      owner.push_back(static_cast<int>(k));
    }
  }

  out.world.has_intensity = true;
  out.world.points.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.world.points.push_back(Point3::from(points[i], owner[i] >= 0 ? 0.8f : 0.3f));
  }
  out.world_object = owner;

  for (std::size_t f = 0; f < spec.sensor_path.size(); ++f) {
    const PoseSE3& pose = spec.sensor_path[f];
    const PoseSE3 inv = pose.inverse();
    const auto frame = static_cast<FrameId>(f);
    out.gt_poses.push_back(frame, pose);

    PointCloud scan;
    scan.frame_id = frame;
    scan.has_intensity = true;
    std::vector<std::size_t> labels;
    std::vector<bool> seen(spec.dynamic_objects.size(), false);
    SceneRng thinning(mix(pass_seed, 1000 + f));
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double range = (points[i] - pose.translation()).head<2>().norm();
      if (range > spec.sensor_range) continue;
      if (spec.falloff_range > 0.0 && range > spec.falloff_range) {
        const double keep = (spec.falloff_range / range) * (spec.falloff_range / range);
        if (thinning.uniform() >= keep) continue;
      }
      if (owner[i] >= 0) {
        labels.push_back(scan.size());
        seen[static_cast<std::size_t>(owner[i])] = true;
      }
      scan.points.push_back(Point3::from(inv.apply(points[i]), out.world.points[i].intensity));
    }

    auto& records = out.detections[frame];
    for (std::size_t k = 0; k < spec.dynamic_objects.size(); ++k) {
      if (!seen[k]) continue;
      const OrientedBox& box = spec.dynamic_objects[k].box;
      OrientedBox local = box;
      local.center = inv.apply(box.center);
      const Eigen::Vector3d heading = inv.rotation() * yaw_rotation(box.yaw).col(0);
      local.yaw = wrap_angle(std::atan2(heading.y(), heading.x()));
      records.push_back(DetectionRecord::from_box(frame, local));
    }
    out.scans.push_back(std::move(scan));
    out.dynamic_labels.push_back(std::move(labels));
  }
  return out;
}

SceneSpec make_street_scene(std::uint64_t seed, int frames, double step) {
  SceneSpec spec;
  spec.seed = seed;
  spec.points_per_surface = 8.0;
  spec.falloff_range = 12.0;
  constexpr double kSensorHeight = 1.73;
  const double length = step * std::max(frames - 1, 0);
  for (int k = 0; k < frames; ++k) spec.sensor_path.push_back(PoseSE3::from_translation({k * step, 0.0, kSensorHeight}));
  spec.ground_center = {length / 2.0, 0.0};
  spec.ground_extent = length / 2.0 + spec.sensor_range + 5.0;

  SceneRng rng(mix(seed, 0x5eed));
  const double x_lo = -spec.sensor_range - 5.0;
  const double x_hi = length + spec.sensor_range + 5.0;
  for (const double side : {-1.0, 1.0}) {
    double x = x_lo + rng.uniform(0.0, 4.0);
    while (x < x_hi) {
      const double width = rng.uniform(6.0, 15.0);
      const double front = 10.0 + rng.uniform(0.0, 3.0);
      const double depth = rng.uniform(6.0, 12.0);
      const double height = rng.uniform(4.0, 15.0);
      StaticStructure s;
      const double y0 = side > 0 ? front : -front - depth;
      s.min_corner = {x, y0, spec.ground_z};
      s.max_corner = {x + width, y0 + depth, spec.ground_z + height};
      spec.static_structures.push_back(s);
      x += width + rng.uniform(2.0, 6.0);
    }
    for (double px = x_lo + rng.uniform(0.0, 10.0); px < x_hi; px += rng.uniform(9.0, 17.0)) {
      const double py = side * 7.5;
      spec.static_structures.push_back({{px - 0.15, py - 0.15, spec.ground_z}, {px + 0.15, py + 0.15, spec.ground_z + 4.0}});
    }
  }

  // Parked cars along both kerbs. Between passes one slot in six keeps its
  // car, two lose it and three get a different car parked at another offset
  // and angle.
  const Eigen::Vector3d car_size(4.5, 1.8, 1.5);
  int n = 0;
  for (const double side : {-1.0, 1.0}) {
    for (double cx = 3.0 + rng.uniform(0.0, 3.0); cx < length - 3.0; cx += rng.uniform(6.5, 8.0), ++n) {
      DynamicObject car;
      car.box.center = {cx, side * 5.0 + rng.uniform(-0.2, 0.2), spec.ground_z + car_size.z() / 2.0};
      car.box.size = car_size;
      car.box.yaw = wrap_angle((side > 0 ? 0.0 : std::numbers::pi) + rng.uniform(-0.08, 0.08));
      car.box.class_label = "Car";
      car.box.score = 1.0;
      const int slot = n % 6;
      car.presence = slot == 0 ? Presence::Both : Presence::First;
      spec.dynamic_objects.push_back(car);
      if (slot >= 3) {
        DynamicObject replacement = car;
        replacement.box.center.x() += rng.uniform(0.6, 1.2);
        replacement.box.center.y() += side * rng.uniform(0.0, 0.4);
        replacement.box.yaw = wrap_angle(replacement.box.yaw + rng.uniform(0.1, 0.25));
        replacement.presence = Presence::Second;
        spec.dynamic_objects.push_back(replacement);
      }
    }
  }
  return spec;
}

SceneSpec make_loop_scene(std::uint64_t seed, double side, double step) {
  SceneSpec spec;
  spec.seed = seed;
  constexpr double kSensorHeight = 1.73;
  // Rounded square, counter-clockwise from (r, 0) heading +x.
  const double r = std::min(6.0, side / 4.0);
  const double straight = side - 2.0 * r;
  const double arc = std::numbers::pi * r / 2.0;
  const double perimeter = 4.0 * (straight + arc);
  const int frames = std::max(4, static_cast<int>(std::lround(perimeter / step)));
  for (int k = 0; k < frames; ++k) {
    const double s = perimeter * k / frames;
    const int leg = std::min(3, static_cast<int>(s / (straight + arc)));
    const double u = s - leg * (straight + arc);
    const double heading = leg * std::numbers::pi / 2.0;
    const Eigen::Vector2d dir(std::cos(heading), std::sin(heading));
    const Eigen::Vector2d left(-dir.y(), dir.x());
    const Eigen::Vector2d leg_start = Eigen::Vector2d(side / 2.0, side / 2.0) +
                                      Eigen::Rotation2Dd(heading) * Eigen::Vector2d(r - side / 2.0, -side / 2.0);
    Eigen::Vector2d p;
    double yaw = heading;
    if (u <= straight) {
      p = leg_start + u * dir;
    } else {
      const double phi = (u - straight) / r;
      const Eigen::Vector2d center = leg_start + straight * dir + r * left;
      p = center + r * (std::sin(phi) * dir - std::cos(phi) * left);
      yaw = heading + phi;
    }
    spec.sensor_path.push_back(PoseSE3::from_yaw(wrap_angle(yaw), {p.x(), p.y(), kSensorHeight}));
  }
  spec.sensor_path.push_back(spec.sensor_path.front());

  spec.ground_center = {side / 2.0, side / 2.0};
  spec.ground_extent = side / 2.0 + spec.sensor_range + 5.0;

  SceneRng rng(mix(seed, 0x100));
  constexpr double kRoadClearance = 4.0;
  auto blocks_road = [&](const StaticStructure& s) {
    const bool touches_outer = s.max_corner.x() > -kRoadClearance && s.min_corner.x() < side + kRoadClearance &&
                               s.max_corner.y() > -kRoadClearance && s.min_corner.y() < side + kRoadClearance;
    const bool inside_inner = s.min_corner.x() > kRoadClearance && s.max_corner.x() < side - kRoadClearance &&
                              s.min_corner.y() > kRoadClearance && s.max_corner.y() < side - kRoadClearance;
    return touches_outer && !inside_inner;
  };
  auto overlaps = [&](const StaticStructure& s) {
    return std::any_of(spec.static_structures.begin(), spec.static_structures.end(), [&](const StaticStructure& o) {
      return s.min_corner.x() < o.max_corner.x() + 1.0 && o.min_corner.x() < s.max_corner.x() + 1.0 &&
             s.min_corner.y() < o.max_corner.y() + 1.0 && o.min_corner.y() < s.max_corner.y() + 1.0;
    });
  };
  const double lo = -spec.sensor_range;
  const double hi = side + spec.sensor_range;
  int placed = 0;
  for (int attempt = 0; attempt < 4000 && placed < 60; ++attempt) {
    const bool pole = rng.uniform() < 0.3;
    const double w = pole ? 0.3 : rng.uniform(3.0, 12.0);
    const double d = pole ? 0.3 : rng.uniform(3.0, 12.0);
    const double h = pole ? rng.uniform(3.0, 6.0) : rng.uniform(3.0, 16.0);
    const double x = rng.uniform(lo, hi - w);
    const double y = rng.uniform(lo, hi - d);
    StaticStructure s{{x, y, spec.ground_z}, {x + w, y + d, spec.ground_z + h}};
    if (blocks_road(s) || overlaps(s)) continue;
    spec.static_structures.push_back(s);
    ++placed;
  }
  return spec;
}

Trajectory inject_drift(const Trajectory& poses, const Eigen::Vector3d& total, double total_yaw) {
  Trajectory out;
  const double last = poses.size() > 1 ? static_cast<double>(poses.size() - 1) : 1.0;
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const double alpha = static_cast<double>(i) / last;
    const PoseSE3 drift = PoseSE3::from_yaw(alpha * total_yaw, alpha * total);
    out.push_back(poses[i].frame_id, drift * poses[i].pose);
  }
  return out;
}

Trajectory relative_to(const Trajectory& poses, const PoseSE3& anchor) {
  Trajectory out;
  const PoseSE3 inv = anchor.inverse();
  for (const auto& e : poses) out.push_back(e.frame_id, inv * e.pose);
  return out;
}

namespace {

json pose_to_json(const PoseSE3& p) {
  return json{{"translation", detail::to_json(p.translation())}, {"yaw", p.yaw()}};
}

PoseSE3 pose_from_json(const json& j) {
  detail::check_keys(j, {"translation", "yaw"}, "sensor_path entry");
  double yaw = 0.0;
  detail::read_opt(j, "yaw", yaw);
  return PoseSE3::from_yaw(yaw, detail::vec3(j.at("translation"), "sensor_path translation"));
}

std::string presence_name(Presence p) {
  switch (p) {
    case Presence::First:
      return "first";
    case Presence::Second:
      return "second";
    case Presence::Both:
      return "both";
  }
  return "both";
}

Presence parse_presence(const std::string& s) {
  if (s == "first") return Presence::First;
  if (s == "second") return Presence::Second;
  if (s == "both") return Presence::Both;
  throw ValueError("unknown presence '" + s + "'");
}

}  // namespace

std::string scene_spec_to_json(const SceneSpec& spec) {
  json j;
  j["seed"] = spec.seed;
  j["ground_z"] = spec.ground_z;
  j["ground_center"] = {spec.ground_center.x(), spec.ground_center.y()};
  j["ground_extent"] = spec.ground_extent;
  j["ground_noise_sigma"] = spec.ground_noise_sigma;
  j["points_per_surface"] = spec.points_per_surface;
  j["sensor_range"] = spec.sensor_range;
  j["occlusion_clearance"] = spec.occlusion_clearance;
  j["falloff_range"] = spec.falloff_range;
  j["static_structures"] = json::array();
  for (const auto& s : spec.static_structures) {
    j["static_structures"].push_back({{"min", detail::to_json(s.min_corner)}, {"max", detail::to_json(s.max_corner)}});
  }
  j["dynamic_objects"] = json::array();
  for (const auto& o : spec.dynamic_objects) {
    j["dynamic_objects"].push_back({{"class", o.box.class_label},
                                    {"score", o.box.score},
                                    {"center", detail::to_json(o.box.center)},
                                    {"size", detail::to_json(o.box.size)},
                                    {"yaw", o.box.yaw},
                                    {"presence", presence_name(o.presence)}});
  }
  j["sensor_path"] = json::array();
  for (const auto& p : spec.sensor_path) j["sensor_path"].push_back(pose_to_json(p));
  return j.dump(2);
}

SceneSpec scene_spec_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedFile(std::string("scene spec: ") + e.what());
  }
  SceneSpec spec;
  try {
    detail::check_keys(j,
                       {"seed", "ground_z", "ground_center", "ground_extent", "ground_noise_sigma",
                        "points_per_surface", "sensor_range", "occlusion_clearance", "falloff_range", "static_structures",
                        "dynamic_objects", "sensor_path"},
                       "scene spec");
    detail::read_opt(j, "seed", spec.seed);
    detail::read_opt(j, "ground_z", spec.ground_z);
    if (j.contains("ground_center")) {
      const auto c = j.at("ground_center").get<std::vector<double>>();
      if (c.size() != 2) throw ValueError("scene ground_center needs 2 values");
      spec.ground_center = {c[0], c[1]};
    }
    detail::read_opt(j, "ground_extent", spec.ground_extent);
    detail::read_opt(j, "ground_noise_sigma", spec.ground_noise_sigma);
    detail::read_opt(j, "points_per_surface", spec.points_per_surface);
    detail::read_opt(j, "sensor_range", spec.sensor_range);
    detail::read_opt(j, "occlusion_clearance", spec.occlusion_clearance);
    detail::read_opt(j, "falloff_range", spec.falloff_range);
    if (j.contains("static_structures")) {
      for (const auto& s : j.at("static_structures")) {
        detail::check_keys(s, {"min", "max"}, "static structure");
        spec.static_structures.push_back({detail::vec3(s.at("min"), "min"), detail::vec3(s.at("max"), "max")});
      }
    }
    if (j.contains("dynamic_objects")) {
      for (const auto& o : j.at("dynamic_objects")) {
        detail::check_keys(o, {"class", "score", "center", "size", "yaw", "presence"}, "dynamic object");
        DynamicObject obj;
        obj.box.class_label = o.value("class", std::string("Car"));
        obj.box.score = o.value("score", 1.0);
        obj.box.center = detail::vec3(o.at("center"), "center");
        obj.box.size = detail::vec3(o.at("size"), "size");
        obj.box.yaw = wrap_angle(o.value("yaw", 0.0));
        obj.presence = parse_presence(o.value("presence", std::string("both")));
        spec.dynamic_objects.push_back(obj);
      }
    }
    if (j.contains("sensor_path")) {
      for (const auto& p : j.at("sensor_path")) spec.sensor_path.push_back(pose_from_json(p));
    }
  } catch (const json::exception& e) {
    throw MalformedFile(std::string("scene spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SceneSpec read_scene_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return scene_spec_from_json(ss.str());
}

void write_scene_spec(const SceneSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << scene_spec_to_json(spec) << '\n';
}

void write_pass(const SyntheticPass& pass, const PoseSE3& anchor, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "velodyne");
  for (const auto& scan : pass.scans) write_scan_binary(scan, dir / "velodyne" / scan_file_name(scan.frame_id));
  write_poses(relative_to(pass.gt_poses, anchor), dir / "poses.txt");
  write_detections(pass.detections, dir / "detections.jsonl");
  std::ofstream labels(dir / "labels.jsonl");
  if (!labels) throw IoError("cannot write " + (dir / "labels.jsonl").string());
  for (std::size_t f = 0; f < pass.scans.size(); ++f) {
    labels << json{{"frame", pass.scans[f].frame_id}, {"dynamic", pass.dynamic_labels[f]}}.dump() << '\n';
  }
}

}  // namespace staticmap
