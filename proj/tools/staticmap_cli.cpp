// Command-line front end: clean, build-map, run, evaluate, synth.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "staticmap/errors.hpp"
#include "staticmap/pipeline.hpp"
#include "staticmap/synthetic.hpp"

namespace {

struct Overrides {
  std::string config;
  std::string scans, poses, detections, odometry, map, trajectory, out;
  bool no_removal = false;
  bool fallback_detector = false;
  bool no_loop = false;
  bool dead_reckoning = false;
  std::optional<std::size_t> workers;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON pipeline configuration");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--workers", o.workers, "worker threads (0: all cores)");
}

staticmap::PipelineConfig effective_config(const Overrides& o) {
  staticmap::PipelineConfig c = o.config.empty() ? staticmap::PipelineConfig{} : staticmap::read_config(o.config);
  if (!o.scans.empty()) c.scans = o.scans;
  if (!o.poses.empty()) c.poses = o.poses;
  if (!o.detections.empty()) c.detections = o.detections;
  if (!o.odometry.empty()) c.odometry = o.odometry;
  if (!o.map.empty()) c.map = o.map;
  if (!o.trajectory.empty()) c.trajectory = o.trajectory;
  if (!o.out.empty()) c.out = o.out;
  if (o.workers) c.workers = *o.workers;
  if (o.no_removal) c.removal.enabled = false;
  if (o.fallback_detector) c.removal.fallback_detector = true;
  if (o.no_loop) c.mapping.loop.enabled = false;
  if (o.dead_reckoning) c.mapping.use_registration = false;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Static point cloud map construction with dynamic object removal"};
  app.require_subcommand(1);
  Overrides o;

  auto* clean = app.add_subcommand("clean", "remove dynamic points from every scan");
  add_common(clean, o);
  clean->add_option("--scans", o.scans, "directory of .bin scans");
  clean->add_option("--detections", o.detections, "detections JSON lines");
  clean->add_flag("--no-removal", o.no_removal, "range filter only");
  clean->add_flag("--fallback-detector", o.fallback_detector, "cluster detector for frames without detections");

  auto* build = app.add_subcommand("build-map", "accumulate scans into a map");
  add_common(build, o);
  build->add_option("--scans", o.scans, "directory of .bin scans");
  build->add_option("--odometry", o.odometry, "pose hints, KITTI format");
  build->add_flag("--no-loop", o.no_loop, "disable loop closure");
  build->add_flag("--dead-reckoning", o.dead_reckoning, "take poses from the hints without registration");

  auto* run = app.add_subcommand("run", "clean and build the map in one pass");
  add_common(run, o);
  run->add_option("--scans", o.scans, "directory of .bin scans");
  run->add_option("--detections", o.detections, "detections JSON lines");
  run->add_option("--odometry", o.odometry, "pose hints, KITTI format");
  run->add_flag("--no-removal", o.no_removal, "skip dynamic removal");
  run->add_flag("--fallback-detector", o.fallback_detector, "cluster detector for frames without detections");
  run->add_flag("--no-loop", o.no_loop, "disable loop closure");
  run->add_flag("--dead-reckoning", o.dead_reckoning, "take poses from the hints without registration");

  std::string mode = "odometry";
  auto* evaluate = app.add_subcommand("evaluate", "odometry or localization accuracy");
  add_common(evaluate, o);
  evaluate->add_option("--mode", mode, "odometry | localization")->check(CLI::IsMember({"odometry", "localization"}));
  evaluate->add_option("--poses", o.poses, "ground-truth poses");
  evaluate->add_option("--trajectory", o.trajectory, "estimated trajectory (odometry)");
  evaluate->add_option("--map", o.map, "map PLY (localization)");
  evaluate->add_option("--scans", o.scans, "scans to localize (localization)");

  std::string scene;
  std::string preset = "street";
  int frames = 50;
  std::uint64_t seed = 0;
  auto* synth = app.add_subcommand("synth", "generate a two-pass synthetic dataset");
  synth->add_option("--scene", scene, "scene spec JSON");
  synth->add_option("--preset", preset, "street | loop")->check(CLI::IsMember({"street", "loop"}));
  synth->add_option("--frames", frames, "street preset length")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "sampling seed (default: the preset's)");
  synth->add_option("--out", o.out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      staticmap::SceneSpec spec;
      if (!scene.empty()) {
        spec = staticmap::read_scene_spec(scene);
      } else if (preset == "loop") {
        spec = staticmap::make_loop_scene(synth->count("--seed") ? seed : 11);
      } else {
        spec = staticmap::make_street_scene(synth->count("--seed") ? seed : 7, frames);
      }
      if (!scene.empty() && synth->count("--seed")) spec.seed = seed;
      staticmap::cmd_synth(spec, o.out);
      return 0;
    }
    const staticmap::PipelineConfig config = effective_config(o);
    if (clean->parsed()) {
      const auto summary = staticmap::cmd_clean(config);
      std::cout << "cleaned " << summary.frames.size() << " frames into " << config.out.string() << '\n';
    } else if (build->parsed() || run->parsed()) {
      const auto summary = build->parsed() ? staticmap::cmd_build_map(config) : staticmap::cmd_run(config);
      std::cout << "mapped " << summary.trajectory.size() << "/" << summary.frames_in << " frames, "
                << summary.map_points << " map points, " << summary.loops.size() << " loop events\n";
    } else if (evaluate->parsed()) {
      staticmap::cmd_evaluate(config, staticmap::parse_eval_mode(mode));
    }
  } catch (const staticmap::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
