#include "staticmap/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>

#include "json_util.hpp"
#include "staticmap/errors.hpp"
#include "staticmap/io_formats.hpp"
#include "staticmap/parallel.hpp"

namespace staticmap {

namespace fs = std::filesystem;
using detail::json;

namespace {

json range_to_json(const RangeSpec& r) {
  return {{"min", detail::to_json(r.min_bound)}, {"max", detail::to_json(r.max_bound)}};
}

RangeSpec range_from_json(const json& j) {
  detail::check_keys(j, {"min", "max"}, "removal.range");
  RangeSpec r;
  if (j.contains("min")) r.min_bound = detail::vec3(j.at("min"), "removal.range.min");
  if (j.contains("max")) r.max_bound = detail::vec3(j.at("max"), "removal.range.max");
  return r;
}

json removal_to_json(const RemovalConfig& c) {
  return {{"enabled", c.enabled},
          {"range", range_to_json(c.range)},
          {"box_margin", c.box_margin},
          {"classes", {{"labels", c.classes.labels}, {"min_score", c.classes.min_score}}},
          {"fallback_detector", c.fallback_detector},
          {"cluster",
           {{"cluster_radius", c.cluster.cluster_radius},
            {"min_cluster_points", c.cluster.min_cluster_points},
            {"min_footprint", c.cluster.min_footprint},
            {"max_footprint", c.cluster.max_footprint},
            {"min_height", c.cluster.min_height},
            {"max_height", c.cluster.max_height}}},
          {"ground",
           {{"seed_fraction", c.ground.seed_fraction},
            {"seed_margin", c.ground.seed_margin},
            {"dist_threshold", c.ground.dist_threshold},
            {"iterations", c.ground.iterations},
            {"min_seed_points", c.ground.min_seed_points}}},
          {"degenerate_policy", to_string(c.degenerate_policy)}};
}

RemovalConfig removal_from_json(const json& j) {
  detail::check_keys(j,
                     {"enabled", "range", "box_margin", "classes", "fallback_detector", "cluster", "ground",
                      "degenerate_policy"},
                     "removal");
  RemovalConfig c;
  detail::read_opt(j, "enabled", c.enabled);
  if (j.contains("range")) c.range = range_from_json(j.at("range"));
  detail::read_opt(j, "box_margin", c.box_margin);
  if (j.contains("classes")) {
    const json& k = j.at("classes");
    detail::check_keys(k, {"labels", "min_score"}, "removal.classes");
    detail::read_opt(k, "labels", c.classes.labels);
    detail::read_opt(k, "min_score", c.classes.min_score);
  }
  detail::read_opt(j, "fallback_detector", c.fallback_detector);
  if (j.contains("cluster")) {
    const json& k = j.at("cluster");
    detail::check_keys(k,
                       {"cluster_radius", "min_cluster_points", "min_footprint", "max_footprint", "min_height",
                        "max_height"},
                       "removal.cluster");
    detail::read_opt(k, "cluster_radius", c.cluster.cluster_radius);
    detail::read_opt(k, "min_cluster_points", c.cluster.min_cluster_points);
    detail::read_opt(k, "min_footprint", c.cluster.min_footprint);
    detail::read_opt(k, "max_footprint", c.cluster.max_footprint);
    detail::read_opt(k, "min_height", c.cluster.min_height);
    detail::read_opt(k, "max_height", c.cluster.max_height);
  }
  if (j.contains("ground")) {
    const json& k = j.at("ground");
    detail::check_keys(k, {"seed_fraction", "seed_margin", "dist_threshold", "iterations", "min_seed_points"},
                       "removal.ground");
    detail::read_opt(k, "seed_fraction", c.ground.seed_fraction);
    detail::read_opt(k, "seed_margin", c.ground.seed_margin);
    detail::read_opt(k, "dist_threshold", c.ground.dist_threshold);
    detail::read_opt(k, "iterations", c.ground.iterations);
    detail::read_opt(k, "min_seed_points", c.ground.min_seed_points);
  }
  if (j.contains("degenerate_policy")) {
    c.degenerate_policy = parse_degenerate_policy(j.at("degenerate_policy").get<std::string>());
  }
  return c;
}

json mapping_to_json(const MappingConfig& c) {
  return {{"icp",
           {{"max_correspondence_dist", c.icp.max_correspondence_dist},
            {"max_iterations", c.icp.max_iterations},
            {"translation_eps", c.icp.translation_eps},
            {"rotation_eps", c.icp.rotation_eps},
            {"map_voxel", c.icp.map_voxel},
            {"scan_voxel", c.icp.scan_voxel}}},
          {"min_fitness", c.min_fitness},
          {"use_registration", c.use_registration},
          {"keep_frames", c.keep_frames},
          {"scan_context",
           {{"num_rings", c.scan_context.num_rings},
            {"num_sectors", c.scan_context.num_sectors},
            {"max_radius", c.scan_context.max_radius},
            {"sensor_height", c.scan_context.sensor_height}}},
          {"loop",
           {{"enabled", c.loop.enabled},
            {"exclusion_window", c.loop.exclusion_window},
            {"ring_key_candidates", c.loop.ring_key_candidates},
            {"loop_threshold", c.loop.loop_threshold}}}};
}

MappingConfig mapping_from_json(const json& j) {
  detail::check_keys(j, {"icp", "min_fitness", "use_registration", "keep_frames", "scan_context", "loop"}, "mapping");
  MappingConfig c;
  if (j.contains("icp")) {
    const json& k = j.at("icp");
    detail::check_keys(k,
                       {"max_correspondence_dist", "max_iterations", "translation_eps", "rotation_eps", "map_voxel",
                        "scan_voxel"},
                       "mapping.icp");
    detail::read_opt(k, "max_correspondence_dist", c.icp.max_correspondence_dist);
    detail::read_opt(k, "max_iterations", c.icp.max_iterations);
    detail::read_opt(k, "translation_eps", c.icp.translation_eps);
    detail::read_opt(k, "rotation_eps", c.icp.rotation_eps);
    detail::read_opt(k, "map_voxel", c.icp.map_voxel);
    detail::read_opt(k, "scan_voxel", c.icp.scan_voxel);
  }
  detail::read_opt(j, "min_fitness", c.min_fitness);
  detail::read_opt(j, "use_registration", c.use_registration);
  detail::read_opt(j, "keep_frames", c.keep_frames);
  if (j.contains("scan_context")) {
    const json& k = j.at("scan_context");
    detail::check_keys(k, {"num_rings", "num_sectors", "max_radius", "sensor_height"}, "mapping.scan_context");
    detail::read_opt(k, "num_rings", c.scan_context.num_rings);
    detail::read_opt(k, "num_sectors", c.scan_context.num_sectors);
    detail::read_opt(k, "max_radius", c.scan_context.max_radius);
    detail::read_opt(k, "sensor_height", c.scan_context.sensor_height);
  }
  if (j.contains("loop")) {
    const json& k = j.at("loop");
    detail::check_keys(k, {"enabled", "exclusion_window", "ring_key_candidates", "loop_threshold"}, "mapping.loop");
    detail::read_opt(k, "enabled", c.loop.enabled);
    detail::read_opt(k, "exclusion_window", c.loop.exclusion_window);
    detail::read_opt(k, "ring_key_candidates", c.loop.ring_key_candidates);
    detail::read_opt(k, "loop_threshold", c.loop.loop_threshold);
  }
  return c;
}

void require_path(const fs::path& p, const char* what) {
  if (p.empty()) throw ValueError(std::string("missing required input: ") + what);
  if (!fs::exists(p)) throw IoError(std::string(what) + " not found: " + p.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(std::numeric_limits<double>::max_digits10);
  return out;
}

// An estimated trajectory may come with <stem>_frames.txt listing the frame
// id of each pose line.
Trajectory read_trajectory(const fs::path& path) {
  const Trajectory lines = read_poses(path);
  const fs::path ids_path = path.parent_path() / (path.stem().string() + "_frames.txt");
  if (!fs::exists(ids_path)) return lines;
  std::ifstream in(ids_path);
  std::vector<FrameId> ids;
  for (long long id; in >> id;) {
    if (id < 0) throw MalformedFile(ids_path.string() + ": negative frame id");
    ids.push_back(static_cast<FrameId>(id));
  }
  if (!in.eof()) throw MalformedFile(ids_path.string() + ": expected integer frame ids");
  if (ids.size() != lines.size()) {
    throw MalformedFile(ids_path.string() + ": " + std::to_string(ids.size()) + " ids for " +
                        std::to_string(lines.size()) + " poses");
  }
  Trajectory out;
  for (std::size_t i = 0; i < ids.size(); ++i) out.push_back(ids[i], lines[i].pose);
  return out;
}

void write_trajectory(const Trajectory& trajectory, const fs::path& dir) {
  write_poses(trajectory, dir / "trajectory.txt");
  bool dense = true;
  for (std::size_t i = 0; i < trajectory.size(); ++i) dense = dense && trajectory[i].frame_id == i;
  const fs::path ids_path = dir / "trajectory_frames.txt";
  if (dense) {
    fs::remove(ids_path);
    return;
  }
  auto out = open_out(ids_path);
  for (const auto& e : trajectory) out << e.frame_id << '\n';
}

std::optional<Trajectory> read_hints(const PipelineConfig& config) {
  if (config.odometry.empty()) return std::nullopt;
  require_path(config.odometry, "odometry file");
  return read_poses(config.odometry);
}

// Hint for a frame, re-anchored so the first mapped frame sits at identity.
std::optional<PoseSE3> hint_for(const std::optional<Trajectory>& hints, FrameId first, FrameId frame) {
  if (!hints) return std::nullopt;
  const PoseSE3* anchor = hints->find(first);
  const PoseSE3* pose = hints->find(frame);
  if (!anchor || !pose) return std::nullopt;
  return anchor->inverse() * *pose;
}

void write_loops(const std::vector<LoopEvent>& loops, const fs::path& path) {
  auto out = open_out(path);
  out << "# current matched distance shift fitness residual_translation_m residual_yaw_rad accepted\n";
  for (const auto& e : loops) {
    out << e.current_frame << ' ' << e.matched_frame << ' ' << e.distance << ' ' << e.best_shift << ' ' << e.fitness
        << ' ' << e.residual_translation << ' ' << e.residual_yaw << ' ' << (e.accepted ? 1 : 0) << '\n';
  }
}

MapSummary finish_map(const MapBuilder& builder, std::size_t frames_in, const PipelineConfig& config) {
  const MapState& state = builder.state();
  MapSummary summary;
  summary.frames_in = frames_in;
  summary.trajectory = state.trajectory;
  summary.failed_frames = state.failed_frames;
  summary.flagged_frames = state.flagged_frames;
  summary.loops = state.loop_log;
  summary.map_points = state.map_cloud.size();
  for (const FrameId f : state.failed_frames) std::cerr << "warning: frame " << f << " rejected by registration\n";
  write_cloud_ply(state.map_cloud, config.out / "map.ply");
  write_trajectory(state.trajectory, config.out);
  write_loops(state.loop_log, config.out / "loops.txt");
  return summary;
}

void prepare_out(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out);
  write_config(config, config.out / "config.json");
}

std::optional<DetectionMap> read_detections_if_given(const PipelineConfig& config) {
  if (config.detections.empty()) return std::nullopt;
  require_path(config.detections, "detections file");
  return read_detections(config.detections);
}

std::optional<std::vector<OrientedBox>> file_boxes(const std::optional<DetectionMap>& detections, FrameId frame,
                                                   const DynamicClassSet& classes) {
  if (!detections) return std::nullopt;
  return boxes_for_frame(*detections, frame, classes);
}

CleanFrameLog log_entry(const FrameResult& r) {
  CleanFrameLog log;
  log.frame_id = r.cleaned.frame_id;
  log.points = r.cleaned.size();
  log.dynamic_points = r.dynamic_indices.size();
  log.boxes = r.boxes.size();
  log.ground_degenerate = r.ground_degenerate;
  log.mean_z = r.ground ? r.ground->mean_z : std::numeric_limits<double>::quiet_NaN();
  return log;
}

}  // namespace

void PipelineConfig::validate() const {
  removal.validate();
  mapping.validate();
  if (out.empty()) throw ValueError("output directory is empty");
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["scans"] = c.scans.string();
  j["poses"] = c.poses.string();
  j["detections"] = c.detections.string();
  j["odometry"] = c.odometry.string();
  j["map"] = c.map.string();
  j["trajectory"] = c.trajectory.string();
  j["out"] = c.out.string();
  j["workers"] = c.workers;
  j["removal"] = removal_to_json(c.removal);
  j["mapping"] = mapping_to_json(c.mapping);
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw MalformedFile(std::string("config: ") + e.what());
  }
  PipelineConfig c;
  try {
    detail::check_keys(j,
                       {"scans", "poses", "detections", "odometry", "map", "trajectory", "out", "workers", "removal",
                        "mapping"},
                       "config");
    auto path = [&](const char* key, fs::path& target) {
      if (j.contains(key)) target = j.at(key).get<std::string>();
    };
    path("scans", c.scans);
    path("poses", c.poses);
    path("detections", c.detections);
    path("odometry", c.odometry);
    path("map", c.map);
    path("trajectory", c.trajectory);
    path("out", c.out);
    detail::read_opt(j, "workers", c.workers);
    if (j.contains("removal")) c.removal = removal_from_json(j.at("removal"));
    if (j.contains("mapping")) c.mapping = mapping_from_json(j.at("mapping"));
  } catch (const json::exception& e) {
    throw ValueError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

PipelineConfig read_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

void write_config(const PipelineConfig& config, const fs::path& path) {
  auto out = open_out(path);
  out << config_to_json(config) << '\n';
}

EvalMode parse_eval_mode(const std::string& text) {
  if (text == "odometry") return EvalMode::Odometry;
  if (text == "localization") return EvalMode::Localization;
  throw ValueError("unknown evaluation mode '" + text + "'");
}

CleanSummary cmd_clean(const PipelineConfig& config) {
  require_path(config.scans, "scan directory");
  const auto files = list_scan_files(config.scans);
  const auto detections = read_detections_if_given(config);
  prepare_out(config);
  const fs::path velodyne = config.out / "velodyne";
  fs::create_directories(velodyne);

  CleanSummary summary;
  summary.frames.resize(files.size());
  parallel_for(files.size(), config.workers, [&](std::size_t i) {
    const PointCloud scan = read_scan_binary(files[i]);
    const FrameResult r = process_frame(scan, file_boxes(detections, scan.frame_id, config.removal.classes), config.removal);
    write_scan_binary(r.cleaned, velodyne / files[i].filename());
    summary.frames[i] = log_entry(r);
  });

  auto log = open_out(config.out / "removal_log.jsonl");
  for (const auto& f : summary.frames) {
    json j{{"frame", f.frame_id},
           {"points", f.points},
           {"dynamic_points", f.dynamic_points},
           {"boxes", f.boxes},
           {"ground_degenerate", f.ground_degenerate}};
    j["mean_z"] = std::isnan(f.mean_z) ? json(nullptr) : json(f.mean_z);
    log << j.dump() << '\n';
  }
  return summary;
}

MapSummary cmd_build_map(const PipelineConfig& config) {
  require_path(config.scans, "scan directory");
  const auto files = list_scan_files(config.scans);
  const auto hints = read_hints(config);
  prepare_out(config);

  MapBuilder builder(config.mapping);
  std::optional<FrameId> first;
  for (const auto& file : files) {
    FrameResult frame;
    frame.cleaned = read_scan_binary(file);
    const FrameId id = frame.cleaned.frame_id;
    if (!first) first = id;
    builder.add(frame, hint_for(hints, *first, id));
  }
  return finish_map(builder, files.size(), config);
}

MapSummary cmd_run(const PipelineConfig& config) {
  require_path(config.scans, "scan directory");
  const auto files = list_scan_files(config.scans);
  const auto detections = read_detections_if_given(config);
  const auto hints = read_hints(config);
  prepare_out(config);

  MapBuilder builder(config.mapping);
  std::optional<FrameId> first;
  for (const auto& file : files) {
    const PointCloud scan = read_scan_binary(file);
    FrameResult frame =
        process_frame(scan, file_boxes(detections, scan.frame_id, config.removal.classes), config.removal);
    frame.cleaned = quantize_to_float32(frame.cleaned);
    const FrameId id = frame.cleaned.frame_id;
    if (!first) first = id;
    builder.add(frame, hint_for(hints, *first, id));
  }
  return finish_map(builder, files.size(), config);
}

void cmd_evaluate(const PipelineConfig& config, EvalMode mode) {
  require_path(config.poses, "ground-truth poses");
  if (mode == EvalMode::Odometry) {
    require_path(config.trajectory, "estimated trajectory");
    const Trajectory estimated = read_trajectory(config.trajectory);
    const Trajectory truth = read_poses(config.poses);
    prepare_out(config);
    const OdometryReport report = odometry_error(estimated, truth);
    auto records = open_out(config.out / "odometry_frames.jsonl");
    auto summary = open_out(config.out / "odometry_summary.tsv");
    write_odometry_report(report, records, summary);
    return;
  }
  require_path(config.map, "map file");
  require_path(config.scans, "scan directory");
  const PointCloud map = read_cloud_ply(config.map);
  const Trajectory truth = read_poses(config.poses);
  std::vector<PointCloud> scans;
  for (const auto& file : list_scan_files(config.scans)) scans.push_back(read_scan_binary(file));
  prepare_out(config);
  const LocalizationReport report = localization_error(map, scans, truth, config.mapping.icp, config.workers);
  auto records = open_out(config.out / "localization_frames.jsonl");
  auto summary = open_out(config.out / "localization_summary.tsv");
  write_localization_report(report, records, summary);
}

void cmd_synth(const SceneSpec& spec, const fs::path& out) {
  spec.validate();
  fs::create_directories(out);
  write_scene_spec(spec, out / "scene.json");
  const PoseSE3 anchor = spec.sensor_path.front();
  write_pass(generate_pass(spec, Pass::First), anchor, out / "first");
  write_pass(generate_pass(spec, Pass::Second), anchor, out / "second");
}

}  // namespace staticmap
