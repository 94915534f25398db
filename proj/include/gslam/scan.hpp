#ifndef GSLAM_SCAN_HPP
#define GSLAM_SCAN_HPP

#include <vector>

#include <Eigen/Core>

namespace gslam {

enum class ScanFrame { Sensor, Base };

/// 2D point cloud with optional per-point unit normals. Normals, when
/// present, are oriented toward the sensor origin at creation time.
/// missAngles records bearings of rays that returned nothing within
/// maxRange; grid building can optionally clear along them.
struct Scan {
  std::vector<Eigen::Vector2d> points;
  std::vector<Eigen::Vector2d> normals;  // empty, or same size as points
  ScanFrame frame = ScanFrame::Sensor;
  double stamp = 0.0;
  std::vector<double> missAngles;
  double maxRange = 0.0;

  bool hasNormals() const { return !normals.empty(); }
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

}  // namespace gslam

#endif  // GSLAM_SCAN_HPP
