#include "staticmap/scan_context.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "staticmap/errors.hpp"

namespace staticmap {

void ScanContextConfig::validate() const {
  if (num_rings < 1 || num_sectors < 1 || !(max_radius > 0.0)) {
    throw ValueError("scan context dimensions and radius must be positive");
  }
}

ScanContext scan_context_descriptor(const PointCloud& cloud, const ScanContextConfig& config) {
  config.validate();
  ScanContext sc;
  sc.sensor_height = config.sensor_height;
  sc.matrix = Eigen::MatrixXd::Constant(config.num_rings, config.num_sectors, ScanContext::kEmptyCell);
  const double ring_width = config.max_radius / config.num_rings;
  const double sector_width = 2.0 * std::numbers::pi / config.num_sectors;

  for (const auto& p : cloud.points) {
    const double r = std::hypot(p.x, p.y);
    if (r > config.max_radius) continue;
    double azimuth = std::atan2(p.y, p.x);
    if (azimuth < 0.0) azimuth += 2.0 * std::numbers::pi;
    const int ring = std::min(static_cast<int>(r / ring_width), config.num_rings - 1);
    const int sector = std::min(static_cast<int>(azimuth / sector_width), config.num_sectors - 1);
    double& cell = sc.matrix(ring, sector);
    cell = std::max(cell, p.z);
  }

  sc.ring_key = Eigen::VectorXd::Zero(config.num_rings);
  for (int ring = 0; ring < config.num_rings; ++ring) {
    int occupied = 0;
    for (int sector = 0; sector < config.num_sectors; ++sector) occupied += sc.occupied(ring, sector) ? 1 : 0;
    sc.ring_key[ring] = static_cast<double>(occupied) / config.num_sectors;
  }
  return sc;
}

namespace {

// Column values fed to the cosine: lifted height, zero for empty bins.
Eigen::MatrixXd lifted(const ScanContext& sc, bool& any_occupied, Eigen::VectorXi& column_occupied) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(sc.matrix.rows(), sc.matrix.cols());
  column_occupied = Eigen::VectorXi::Zero(sc.matrix.cols());
  any_occupied = false;
  for (Eigen::Index c = 0; c < sc.matrix.cols(); ++c) {
    for (Eigen::Index r = 0; r < sc.matrix.rows(); ++r) {
      if (sc.matrix(r, c) == ScanContext::kEmptyCell) continue;
      out(r, c) = std::max(0.0, sc.matrix(r, c) + sc.sensor_height);
      column_occupied[c] = 1;
      any_occupied = true;
    }
  }
  return out;
}

}  // namespace

ScanContextMatch scan_context_distance(const ScanContext& a, const ScanContext& b) {
  if (a.matrix.rows() != b.matrix.rows() || a.matrix.cols() != b.matrix.cols()) {
    throw DimensionMismatch("scan context dimensions differ");
  }
  bool a_any = false;
  bool b_any = false;
  Eigen::VectorXi a_occ;
  Eigen::VectorXi b_occ;
  const Eigen::MatrixXd la = lifted(a, a_any, a_occ);
  const Eigen::MatrixXd lb = lifted(b, b_any, b_occ);
  ScanContextMatch best;
  if (!a_any || !b_any) return best;

  const Eigen::Index cols = la.cols();
  // Squared column norms.
  const Eigen::VectorXd na = la.colwise().squaredNorm();
  const Eigen::VectorXd nb = lb.colwise().squaredNorm();
  best.distance = std::numeric_limits<double>::infinity();
  for (Eigen::Index shift = 0; shift < cols; ++shift) {
    double sum = 0.0;
    int counted = 0;
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Eigen::Index cb = (c + shift) % cols;
      if (!a_occ[c] && !b_occ[cb]) continue;
      ++counted;
      if (na[c] == 0.0 || nb[cb] == 0.0) {
        sum += (na[c] == 0.0 && nb[cb] == 0.0 && a_occ[c] && b_occ[cb]) ? 0.0 : 1.0;
        continue;
      }
      const double cosine = la.col(c).dot(lb.col(cb)) / std::sqrt(na[c] * nb[cb]);
      sum += 1.0 - std::clamp(cosine, 0.0, 1.0);
    }
    const double d = counted > 0 ? sum / counted : 1.0;
    if (d < best.distance) {
      best.distance = d;
      best.best_shift = static_cast<int>(shift);
    }
  }
  return best;
}

}  // namespace staticmap
