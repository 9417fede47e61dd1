#include "staticmap/evaluation.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>

#include <json.hpp>

#include "staticmap/errors.hpp"
#include "staticmap/geometry.hpp"
#include "staticmap/parallel.hpp"
#include "staticmap/spatial_index.hpp"

namespace staticmap {

double rmse(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum / static_cast<double>(values.size()));
}

OdometryReport odometry_error(const Trajectory& estimated, const Trajectory& ground_truth) {
  std::optional<PoseSE3> alignment;
  OdometryReport report;
  for (const auto& entry : estimated) {
    const PoseSE3* gt = ground_truth.find(entry.frame_id);
    if (!gt) continue;
    if (!alignment) alignment = *gt * entry.pose.inverse();
    const PoseSE3 aligned = *alignment * entry.pose;
    report.frame_ids.push_back(entry.frame_id);
    report.per_frame_errors.push_back((aligned.translation() - gt->translation()).norm());
  }
  if (report.frame_ids.empty()) throw NoOverlap("estimated and ground-truth trajectories share no frame");
  report.frame_count = report.frame_ids.size();
  double sum = 0.0;
  for (double e : report.per_frame_errors) sum += e;
  report.average_error = sum / static_cast<double>(report.frame_count);
  return report;
}

LocalizationReport localization_error(const PointCloud& map, const std::vector<PointCloud>& scans,
                                      const Trajectory& ground_truth, const IcpParams& params,
                                      std::size_t workers) {
  if (map.empty()) throw ValueError("localization map is empty");
  params.validate();
  const KdTree index(map.positions());

  struct Slot {
    bool evaluated = false;
    bool failed = false;
    LocalizationFrame frame;
  };
  std::vector<Slot> slots(scans.size());
  parallel_for(scans.size(), workers, [&](std::size_t i) {
    const PointCloud& scan = scans[i];
    const FrameId f = scan.frame_id;
    if (f == 0) return;
    const PoseSE3* previous = ground_truth.find(f - 1);
    const PoseSE3* truth = ground_truth.find(f);
    if (!previous || !truth || scan.empty()) return;
    Slot& slot = slots[i];
    slot.evaluated = true;
    slot.frame.frame_id = f;
    const PointCloud source = voxel_downsample(scan, params.scan_voxel);
    try {
      const IcpResult r = icp_register(source, index, *previous, params);
      slot.frame.xy_error = (r.pose.translation() - truth->translation()).head<2>().norm();
      slot.frame.yaw_error = std::abs(wrap_angle(r.pose.yaw() - truth->yaw()));
      slot.frame.fitness = r.fitness;
    } catch (const NoCorrespondences&) {
      slot.failed = true;
    }
  });

  LocalizationReport report;
  std::vector<double> xy;
  std::vector<double> yaw;
  for (const auto& slot : slots) {
    if (!slot.evaluated) continue;
    if (slot.failed) {
      report.failed_frames.push_back(slot.frame.frame_id);
      continue;
    }
    report.per_frame.push_back(slot.frame);
    xy.push_back(slot.frame.xy_error);
    yaw.push_back(slot.frame.yaw_error);
  }
  report.xy_rmse = rmse(xy);
  report.yaw_rmse = rmse(yaw);
  return report;
}

void write_odometry_report(const OdometryReport& report, std::ostream& records, std::ostream& summary) {
  records << R"j({"metric":"odometry","definition":"first-pose-aligned absolute translational error (interpretation)"})j"
          << '\n';
  for (std::size_t i = 0; i < report.frame_count; ++i) {
    nlohmann::json j;
    j["frame"] = report.frame_ids[i];
    j["error"] = report.per_frame_errors[i];
    records << j.dump() << '\n';
  }
  summary << "# odometry: first-pose-aligned absolute translational error (interpretation)\n";
  summary << "frames\taverage_error_m\n";
  summary << report.frame_count << '\t' << nlohmann::json(report.average_error).dump() << '\n';
}

void write_localization_report(const LocalizationReport& report, std::ostream& records, std::ostream& summary) {
  records << R"j({"metric":"localization","definition":"ICP from ground truth at k, error of pose at k+1 vs ground truth (interpretation)"})j"
          << '\n';
  for (const auto& f : report.per_frame) {
    nlohmann::json j;
    j["frame"] = f.frame_id;
    j["xy_error"] = f.xy_error;
    j["yaw_error"] = f.yaw_error;
    j["fitness"] = f.fitness;
    records << j.dump() << '\n';
  }
  for (auto f : report.failed_frames) {
    nlohmann::json j;
    j["frame"] = f;
    j["failed"] = "no_correspondences";
    records << j.dump() << '\n';
  }
  summary << "# localization: ICP from ground truth at k, error at k+1 vs ground truth (interpretation)\n";
  summary << "frames\tfailed\txy_rmse_m\tyaw_rmse_rad\n";
  summary << report.per_frame.size() << '\t' << report.failed_frames.size() << '\t'
          << nlohmann::json(report.xy_rmse).dump() << '\t' << nlohmann::json(report.yaw_rmse).dump() << '\n';
}

}  // namespace staticmap
