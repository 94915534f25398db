#ifndef GSLAM_OPTIMIZER_HPP
#define GSLAM_OPTIMIZER_HPP

#include <map>
#include <set>

#include "gslam/geometry.hpp"
#include "gslam/map_graph.hpp"

namespace gslam {

/// SE(2) link error e = log(Z^-1 * (Xi^-1 * Xj)) as (x, y, wrapped theta),
/// with analytic Jacobians with respect to both endpoint poses.
Eigen::Vector3d linkError(const Transform2& xi, const Transform2& xj,
                          const Transform2& measurement);
void linkJacobians(const Transform2& xi, const Transform2& xj,
                   const Transform2& measurement, Eigen::Matrix3d& ji,
                   Eigen::Matrix3d& jj);

struct OptimizeResult {
  std::map<NodeId, Transform2> poses;
  double chiSquare = 0.0;
  int iterations = 0;
};

/// Sparse Levenberg least squares over the links whose endpoints are both
/// in activeIds. Disconnected components are optimized independently, each
/// anchored at fixedId when it belongs to the component and at its lowest
/// id otherwise; anchor poses are bit-identical to their input poses.
/// Poses initialize from a spanning-tree composition of the measurements,
/// so constraint trees come back exact with zero residual.
OptimizeResult optimizePoses(const MapGraph& graph, const std::set<NodeId>& activeIds,
                             NodeId fixedId);

struct LinkCheck {
  bool accepted = true;
  NodeId from = 0;
  NodeId to = 0;
  double deviationSq = 0.0;
  double toleranceSq = 0.0;
};

/// Post-optimization safeguard: a link whose optimized relative transform
/// moved away from its measurement by more than factor^2 times its
/// translational variance (sum of the x and y variances) flags the
/// optimization as inconsistent.
LinkCheck checkLinkDeviation(const MapGraph& graph,
                             const std::map<NodeId, Transform2>& optimized,
                             const std::set<NodeId>& activeIds, double factor);

}  // namespace gslam

#endif  // GSLAM_OPTIMIZER_HPP
