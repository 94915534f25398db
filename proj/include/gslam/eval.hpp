#ifndef GSLAM_EVAL_HPP
#define GSLAM_EVAL_HPP

#include <utility>
#include <vector>

#include "gslam/geometry.hpp"

namespace gslam {

struct StampedPose {
  double stamp = 0.0;
  Transform2 pose;
};

/// Closed-form least-squares rigid alignment (rotation + translation, no
/// scale) mapping est positions onto gt positions.
Transform2 alignRigid(const std::vector<Eigen::Vector2d>& est,
                      const std::vector<Eigen::Vector2d>& gt);

/// Absolute trajectory RMSE after nearest-stamp association (within
/// stampTolerance) and optional rigid alignment. Throws std::runtime_error
/// when fewer than two pairs associate.
double ateRmse(const std::vector<StampedPose>& estimated,
               const std::vector<StampedPose>& groundTruth, bool align,
               double stampTolerance = 0.02);

struct AteSeries {
  std::vector<double> series;  // per-update current-pose error
  double ateEnd = 0.0;
  double ateMax = 0.0;
};

/// Per-update ATE of the current pose: at update k the trajectory so far is
/// rigidly aligned to its ground truth, and the aligned error of pose k is
/// recorded. Loop closures show up as decreases in the series.
AteSeries ateSeries(const std::vector<std::pair<Transform2, Transform2>>& estGt);

}  // namespace gslam

#endif  // GSLAM_EVAL_HPP
