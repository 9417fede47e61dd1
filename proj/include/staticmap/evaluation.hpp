#pragma once

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "staticmap/core_types.hpp"
#include "staticmap/registration.hpp"

namespace staticmap {

/// First-pose-aligned absolute translational error per shared frame.
struct OdometryReport {
  std::vector<FrameId> frame_ids;
  std::vector<double> per_frame_errors;  // m
  double average_error = 0.0;
  std::size_t frame_count = 0;
};

struct LocalizationFrame {
  FrameId frame_id = 0;
  double xy_error = 0.0;   // m
  double yaw_error = 0.0;  // rad, in [0, pi]
  double fitness = 0.0;
};

struct LocalizationReport {
  double xy_rmse = 0.0;
  double yaw_rmse = 0.0;
  std::vector<LocalizationFrame> per_frame;
  std::vector<FrameId> failed_frames;  // no correspondences; excluded from RMSE
};

/// Aligns `estimated` onto `ground_truth` by the first shared frame
/// (left-multiplying gt_0·est_0⁻¹) and measures position error on every
/// shared frame. Throws NoOverlap when no frame id is shared.
OdometryReport odometry_error(const Trajectory& estimated, const Trajectory& ground_truth);

/// For each scan whose frame and predecessor frame both have ground truth,
/// registers the scan against the map starting from the predecessor's
/// ground-truth pose and compares the result to the frame's own ground truth.
LocalizationReport localization_error(const PointCloud& map, const std::vector<PointCloud>& scans,
                                      const Trajectory& ground_truth, const IcpParams& params = {},
                                      std::size_t workers = 0);

double rmse(const std::vector<double>& values);

// Per-frame records as JSON lines, then a summary table. Both formats start
// with a header naming the metric interpretation.
void write_odometry_report(const OdometryReport& report, std::ostream& records, std::ostream& summary);
void write_localization_report(const LocalizationReport& report, std::ostream& records, std::ostream& summary);

}  // namespace staticmap
