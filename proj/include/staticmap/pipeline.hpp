#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "staticmap/dynamic_removal.hpp"
#include "staticmap/evaluation.hpp"
#include "staticmap/mapping.hpp"
#include "staticmap/synthetic.hpp"

namespace staticmap {

/// Everything a pipeline run depends on. Round-trips through one JSON file;
/// unknown keys are rejected. Empty paths mean "not given".
struct PipelineConfig {
  std::filesystem::path scans;
  std::filesystem::path poses;       // ground truth
  std::filesystem::path detections;
  std::filesystem::path odometry;    // optional pose hints for build-map
  std::filesystem::path map;         // localization input
  std::filesystem::path trajectory;  // odometry evaluation input
  std::filesystem::path out = "out";
  std::size_t workers = 0;  // 0: one per hardware thread
  RemovalConfig removal;
  MappingConfig mapping;

  void validate() const;
};

std::string config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const std::string& text);
PipelineConfig read_config(const std::filesystem::path& path);
void write_config(const PipelineConfig& config, const std::filesystem::path& path);

struct CleanFrameLog {
  FrameId frame_id = 0;
  std::size_t points = 0;
  std::size_t dynamic_points = 0;
  std::size_t boxes = 0;
  bool ground_degenerate = false;
  double mean_z = 0.0;  // NaN when no ground model
};

struct CleanSummary {
  std::vector<CleanFrameLog> frames;
};

struct MapSummary {
  std::size_t frames_in = 0;
  Trajectory trajectory;
  std::vector<FrameId> failed_frames;
  std::vector<FrameId> flagged_frames;
  std::vector<LoopEvent> loops;
  std::size_t map_points = 0;
};

enum class EvalMode { Odometry, Localization };

EvalMode parse_eval_mode(const std::string& text);

// Each command writes its artifacts plus config.json into config.out.

/// Writes cleaned scans to out/velodyne and per-frame counts to
/// out/removal_log.jsonl. Frames run in parallel.
CleanSummary cmd_clean(const PipelineConfig& config);

/// Maps the scans as given (no removal) and writes map.ply, trajectory.txt,
/// loops.txt and, when frames were dropped, trajectory_frames.txt.
MapSummary cmd_build_map(const PipelineConfig& config);

/// Clean and build-map in one pass, without the intermediate files. Cleaned
/// clouds are rounded to float32 as a file round trip would, so the result
/// matches the staged run.
MapSummary cmd_run(const PipelineConfig& config);

/// Writes <mode>_frames.jsonl and <mode>_summary.tsv.
void cmd_evaluate(const PipelineConfig& config, EvalMode mode);

/// Writes scene.json and one dataset directory per pass (first/, second/).
/// Poses of both passes are relative to the first pose of the sensor path.
void cmd_synth(const SceneSpec& spec, const std::filesystem::path& out);

}  // namespace staticmap
