#include "staticmap/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "staticmap/errors.hpp"

namespace staticmap {

void MappingConfig::validate() const {
  icp.validate();
  scan_context.validate();
  if (!(min_fitness >= 0.0 && min_fitness <= 1.0)) throw ValueError("min_fitness must lie in [0, 1]");
  if (loop.ring_key_candidates < 1) throw ValueError("ring_key_candidates must be at least 1");
  if (!(loop.loop_threshold > 0.0)) throw ValueError("loop_threshold must be positive");
}

void VoxelAccumulator::insert(const PointCloud& world_cloud) {
  for (const auto& p : world_cloud.points) {
    const VoxelIndex key{static_cast<std::int64_t>(std::floor(p.x / leaf_)),
                         static_cast<std::int64_t>(std::floor(p.y / leaf_)),
                         static_cast<std::int64_t>(std::floor(p.z / leaf_))};
    Cell& cell = cells_[key];
    cell.sum += p.position();
    cell.intensity += p.intensity;
    ++cell.count;
  }
}

PointCloud VoxelAccumulator::cloud() const {
  std::vector<std::pair<VoxelIndex, const Cell*>> sorted;
  sorted.reserve(cells_.size());
  for (const auto& [key, cell] : cells_) sorted.emplace_back(key, &cell);
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  PointCloud out;
  out.has_intensity = true;
  out.points.reserve(sorted.size());
  for (const auto& [key, cell] : sorted) {
    const auto n = static_cast<double>(cell->count);
    out.points.push_back(Point3::from(cell->sum / n, static_cast<float>(cell->intensity / n)));
  }
  return out;
}

void MapState::refresh_map() {
  map_cloud = voxels.cloud();
  map_index = KdTree(map_cloud.positions());
}

void MapState::rebuild_from_frames() {
  voxels.clear();
  for (const auto& entry : trajectory) {
    const auto it = stored_frames.find(entry.frame_id);
    if (it != stored_frames.end()) voxels.insert(transform_cloud(it->second, entry.pose));
  }
  refresh_map();
}

namespace {

PoseSE3 constant_velocity_prediction(const Trajectory& trajectory) {
  const PoseSE3& last = trajectory.back().pose;
  if (trajectory.size() < 2) return last;
  const PoseSE3& prev = trajectory[trajectory.size() - 2].pose;
  return last * (prev.inverse() * last);
}

IcpResult register_or_fail(const PointCloud& source, const KdTree& target, const PoseSE3& initial,
                           const IcpParams& params, double min_fitness, const std::string& what) {
  IcpResult r;
  try {
    r = icp_register(source, target, initial, params);
  } catch (const NoCorrespondences& e) {
    throw RegistrationFailed(what + ": " + e.what());
  }
  if (r.fitness < min_fitness) {
    throw RegistrationFailed(what + ": fitness " + std::to_string(r.fitness) + " below minimum");
  }
  return r;
}

}  // namespace

AccumulateResult accumulate(MapState& state, const FrameResult& frame, const std::optional<PoseSE3>& odometry_hint,
                            const MappingConfig& config) {
  const FrameId frame_id = frame.cleaned.frame_id;
  if (!state.trajectory.empty() && frame_id <= state.trajectory.back().frame_id) {
    throw ValueError("frames must arrive in increasing order");
  }
  // Registration input and what enters the map.
  PointCloud scan = voxel_downsample(frame.cleaned, config.icp.scan_voxel);
  scan.frame_id = frame_id;

  AccumulateResult result;
  if (!state.trajectory.empty()) {
    const PoseSE3 initial = odometry_hint ? *odometry_hint : constant_velocity_prediction(state.trajectory);
    result.pose = initial;
    if (config.use_registration && !scan.empty()) {
      try {
        const IcpResult icp = register_or_fail(scan, state.map_index, initial, config.icp, config.min_fitness,
                                               "frame " + std::to_string(frame_id));
        result.pose = icp.pose;
        result.fitness = icp.fitness;
      } catch (const RegistrationFailed&) {
        state.failed_frames.push_back(frame_id);
        throw;
      }
    }
  }

  if (frame.ground_degenerate) state.flagged_frames.push_back(frame_id);
  state.trajectory.push_back(frame_id, result.pose);
  state.voxels.insert(transform_cloud(scan, result.pose));
  state.refresh_map();
  state.descriptor_db.push_back({frame_id, scan_context_descriptor(frame.cleaned, config.scan_context)});
  if (config.keep_frames) state.stored_frames.emplace(frame_id, std::move(scan));
  return result;
}

std::optional<LoopCandidate> detect_loop(const MapState& state, const ScanContext& current, FrameId current_frame,
                                         const LoopConfig& config) {
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < state.descriptor_db.size(); ++i) {
    const auto& entry = state.descriptor_db[i];
    if (static_cast<std::uint64_t>(entry.frame_id) + config.exclusion_window >= current_frame) continue;
    if (entry.descriptor.ring_key.size() != current.ring_key.size()) continue;
    ranked.emplace_back((entry.descriptor.ring_key - current.ring_key).norm(), i);
  }
  if (ranked.empty()) return std::nullopt;
  const std::size_t keep = std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(config.ring_key_candidates));
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end());

  std::optional<LoopCandidate> best;
  for (std::size_t n = 0; n < keep; ++n) {
    const auto& entry = state.descriptor_db[ranked[n].second];
    const ScanContextMatch m = scan_context_distance(current, entry.descriptor);
    if (!best || m.distance < best->distance ||
        (m.distance == best->distance && entry.frame_id < best->matched_frame)) {
      best = LoopCandidate{entry.frame_id, m.distance, m.best_shift};
    }
  }
  if (best && best->distance < config.loop_threshold) return best;
  return std::nullopt;
}

LoopEvent apply_loop_correction(MapState& state, FrameId current_frame, const LoopCandidate& loop,
                                const PointCloud& current_scan, const MappingConfig& config) {
  LoopEvent event;
  event.current_frame = current_frame;
  event.matched_frame = loop.matched_frame;
  event.distance = loop.distance;
  event.best_shift = loop.best_shift;

  const auto matched_scan = state.stored_frames.find(loop.matched_frame);
  const PoseSE3* matched_pose = state.trajectory.find(loop.matched_frame);
  const PoseSE3* current_pose = state.trajectory.find(current_frame);
  if (matched_scan == state.stored_frames.end() || !matched_pose || !current_pose) {
    throw RegistrationFailed("loop frames are not available in the map state");
  }
  if (loop.matched_frame >= current_frame) throw ValueError("loop must point to an older frame");

  const int sectors = config.scan_context.num_sectors;
  const double shift_yaw = 2.0 * std::numbers::pi * loop.best_shift / sectors;
  const PointCloud source = voxel_downsample(current_scan, config.icp.scan_voxel);
  const KdTree target(matched_scan->second.positions());
  const std::string what =
      "loop " + std::to_string(current_frame) + "->" + std::to_string(loop.matched_frame);

  // Coarse pass with a wide gate: revisits rarely coincide exactly.
  IcpParams coarse = config.icp;
  coarse.max_correspondence_dist *= 3.0;
  const IcpResult rough =
      register_or_fail(source, target, PoseSE3::from_yaw(wrap_angle(shift_yaw)), coarse, config.min_fitness, what);
  const IcpResult fine = register_or_fail(source, target, rough.pose, config.icp, config.min_fitness, what);
  event.fitness = fine.fitness;

  const PoseSE3 corrected = *matched_pose * fine.pose;
  const PoseSE3 residual = corrected * current_pose->inverse();
  const Eigen::Vector3d dt = residual.translation();
  const double dyaw = residual.yaw();
  event.residual_translation = (corrected.translation() - current_pose->translation()).norm();
  event.residual_yaw = std::abs(wrap_angle(corrected.yaw() - current_pose->yaw()));

  const double span = static_cast<double>(current_frame - loop.matched_frame);
  for (auto& entry : state.trajectory) {
    if (entry.frame_id <= loop.matched_frame) continue;
    const double alpha =
        entry.frame_id >= current_frame ? 1.0 : static_cast<double>(entry.frame_id - loop.matched_frame) / span;
    entry.pose = PoseSE3::from_yaw(alpha * dyaw, alpha * dt) * entry.pose;
  }
  state.rebuild_from_frames();
  event.accepted = true;
  state.loop_log.push_back(event);
  return event;
}

MapBuilder::MapBuilder(MappingConfig config) : config_(std::move(config)), state_(config_.icp.map_voxel) {
  config_.validate();
}

bool MapBuilder::add(const FrameResult& frame, const std::optional<PoseSE3>& odometry_hint) {
  try {
    accumulate(state_, frame, odometry_hint, config_);
  } catch (const RegistrationFailed&) {
    return false;
  }
  if (!config_.loop.enabled || !config_.keep_frames) return true;

  const FrameId frame_id = frame.cleaned.frame_id;
  const ScanContext& current = state_.descriptor_db.back().descriptor;
  const auto loop = detect_loop(state_, current, frame_id, config_.loop);
  if (!loop) return true;
  try {
    apply_loop_correction(state_, frame_id, *loop, frame.cleaned, config_);
  } catch (const RegistrationFailed&) {
    LoopEvent rejected;
    rejected.current_frame = frame_id;
    rejected.matched_frame = loop->matched_frame;
    rejected.distance = loop->distance;
    rejected.best_shift = loop->best_shift;
    state_.loop_log.push_back(rejected);
  }
  return true;
}

}  // namespace staticmap
