#ifndef GSLAM_LOOP_CLOSURE_HPP
#define GSLAM_LOOP_CLOSURE_HPP

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gslam/config.hpp"
#include "gslam/map_graph.hpp"

namespace gslam {

struct LoopEstimate {
  bool accepted = false;
  std::optional<Link> link;  // from = current, to = candidate
  int correspondences = 0;
  int inliers = 0;
  std::string rejectReason;
};

/// Loop transform: NNDR descriptor correspondences, seeded RANSAC over
/// two-point rigid models, least-squares refit on the inlier set, then ICP
/// refinement of the scans. Rejected when inliers fall under
/// Vis/MinInliers or the refinement does not converge.
LoopEstimate estimateLoopTransform(const MapNode& current, const MapNode& candidate,
                                   const Config& config, std::uint64_t seed);

/// Closed-form least-squares rigid fit mapping p[i] -> q[i].
Transform2 rigidLeastSquares(const std::vector<Eigen::Vector2d>& p,
                             const std::vector<Eigen::Vector2d>& q);

struct RansacResult {
  bool valid = false;
  Transform2 transform;  // refit on inliers
  std::vector<int> inlierIndices;
};

/// RANSAC over correspondence pairs (two-point closed-form model); the
/// returned transform is the least-squares fit on the winning inlier set.
RansacResult ransacRigid(const std::vector<Eigen::Vector2d>& p,
                         const std::vector<Eigen::Vector2d>& q, int iterations,
                         double inlierRadius, std::uint64_t seed);

/// Proximity detection: WM nodes within RGBD/ProximityRadius of the
/// current optimized pose and within RGBD/ProximityMaxGraphDepth links are
/// re-registered against the current scan; convergent registrations yield
/// Proximity links (from = current).
std::vector<Link> detectProximity(const MapGraph& graph, NodeId currentId,
                                  const std::set<NodeId>& wmNodes,
                                  const Config& config);

}  // namespace gslam

#endif  // GSLAM_LOOP_CLOSURE_HPP
