#pragma once

#include <Eigen/Core>

#include "staticmap/core_types.hpp"

namespace staticmap {

struct ScanContextConfig {
  int num_rings = 20;
  int num_sectors = 60;
  double max_radius = 80.0;  // m
  // Added to cell heights before the column cosine so that ground cells below
  // the sensor contribute positive values.
  double sensor_height = 2.0;

  void validate() const;
};

/// Polar max-height descriptor. Rows are rings (radial bins from the sensor),
/// columns are sectors (azimuth bins counter-clockwise from +x).
struct ScanContext {
  static constexpr double kEmptyCell = -1000.0;

  Eigen::MatrixXd matrix;   // max z per bin, kEmptyCell where no point fell
  Eigen::VectorXd ring_key;  // occupied fraction of sectors per ring
  double sensor_height = 2.0;

  bool occupied(int ring, int sector) const { return matrix(ring, sector) != kEmptyCell; }
};

ScanContext scan_context_descriptor(const PointCloud& cloud, const ScanContextConfig& config = {});

struct ScanContextMatch {
  double distance = 1.0;  // in [0, 1]
  int best_shift = 0;     // b's column (c + shift) pairs with a's column c
};

/// Minimum over cyclic sector shifts of the mean column cosine distance.
/// Columns empty in both descriptors are skipped; a column empty in only one
/// counts as distance 1. Throws DimensionMismatch.
ScanContextMatch scan_context_distance(const ScanContext& a, const ScanContext& b);

}  // namespace staticmap
