#include "gslam/loop_closure.hpp"

#include <cmath>
#include <limits>
#include <queue>

#include "gslam/random.hpp"
#include "gslam/registration.hpp"

namespace gslam {

Transform2 rigidLeastSquares(const std::vector<Eigen::Vector2d>& p,
                             const std::vector<Eigen::Vector2d>& q) {
  const int n = static_cast<int>(p.size());
  Eigen::Vector2d cp = Eigen::Vector2d::Zero();
  Eigen::Vector2d cq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    cp += p[i];
    cq += q[i];
  }
  cp /= n;
  cq /= n;
  double sdot = 0.0, scross = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d a = p[i] - cp;
    const Eigen::Vector2d b = q[i] - cq;
    sdot += a.dot(b);
    scross += a.x() * b.y() - a.y() * b.x();
  }
  const double theta = std::atan2(scross, sdot);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Transform2(cq.x() - (c * cp.x() - s * cp.y()),
                    cq.y() - (s * cp.x() + c * cp.y()), theta);
}

RansacResult ransacRigid(const std::vector<Eigen::Vector2d>& p,
                         const std::vector<Eigen::Vector2d>& q, int iterations,
                         double inlierRadius, std::uint64_t seed) {
  RansacResult result;
  const int n = static_cast<int>(p.size());
  if (n < 2) {
    return result;
  }
  Rng rng(seed);
  const double radiusSq = inlierRadius * inlierRadius;
  std::vector<int> bestInliers;
  for (int iter = 0; iter < iterations; ++iter) {
    const int i = static_cast<int>(rng.below(n));
    int j = static_cast<int>(rng.below(n));
    if (i == j) {
      continue;
    }
    const Eigen::Vector2d dp = p[j] - p[i];
    const Eigen::Vector2d dq = q[j] - q[i];
    if (dp.norm() < 1e-9 || dq.norm() < 1e-9) {
      continue;
    }
    const double theta = std::atan2(dq.y(), dq.x()) - std::atan2(dp.y(), dp.x());
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    const Transform2 model(q[i].x() - (c * p[i].x() - s * p[i].y()),
                           q[i].y() - (s * p[i].x() + c * p[i].y()), theta);
    std::vector<int> inliers;
    for (int k = 0; k < n; ++k) {
      if ((model.apply(p[k]) - q[k]).squaredNorm() <= radiusSq) {
        inliers.push_back(k);
      }
    }
    if (inliers.size() > bestInliers.size()) {
      bestInliers = std::move(inliers);
    }
  }
  if (bestInliers.size() < 2) {
    return result;
  }
  std::vector<Eigen::Vector2d> ip, iq;
  ip.reserve(bestInliers.size());
  iq.reserve(bestInliers.size());
  for (const int k : bestInliers) {
    ip.push_back(p[k]);
    iq.push_back(q[k]);
  }
  result.valid = true;
  result.transform = rigidLeastSquares(ip, iq);
  result.inlierIndices = std::move(bestInliers);
  return result;
}

LoopEstimate estimateLoopTransform(const MapNode& current, const MapNode& candidate,
                                   const Config& config, std::uint64_t seed) {
  LoopEstimate est;
  // NNDR correspondences: candidate descriptor -> best match among the
  // current node's descriptors. Pairs map candidate-frame positions onto
  // current-frame positions, i.e. the pose of the candidate in the current
  // frame, which is the link transform for from=current, to=candidate.
  std::vector<Eigen::Vector2d> p, q;
  for (const auto& dc : candidate.descriptors) {
    double d1 = std::numeric_limits<double>::infinity();
    double d2 = std::numeric_limits<double>::infinity();
    int best = -1;
    for (int i = 0; i < static_cast<int>(current.descriptors.size()); ++i) {
      const double dist = (current.descriptors[i].vector - dc.vector).norm();
      if (dist < d1) {
        d2 = d1;
        d1 = dist;
        best = i;
      } else if (dist < d2) {
        d2 = dist;
      }
    }
    if (best >= 0 && d1 < config.visCorNNDR * d2) {
      p.push_back(dc.position);
      q.push_back(current.descriptors[best].position);
    }
  }
  est.correspondences = static_cast<int>(p.size());
  if (est.correspondences < config.visMinInliers) {
    est.rejectReason = "too few correspondences";
    return est;
  }
  const RansacResult fit = ransacRigid(p, q, config.ransacIterations,
                                       config.ransacInlierRadius, seed);
  est.inliers = static_cast<int>(fit.inlierIndices.size());
  if (!fit.valid || est.inliers < config.visMinInliers) {
    est.rejectReason = "too few inliers";
    return est;
  }

  // Refine with ICP between the stored scans.
  IcpParams params;
  params.mode = config.icpPointToPlane ? IcpMode::PointToPlane : IcpMode::PointToPoint;
  params.maxIterations = config.icpMaxIterations;
  params.epsilonT = config.icpEpsilonT;
  params.epsilonTheta = config.icpEpsilonTheta;
  params.maxCorrespondenceDistance = config.icpMaxCorrespondenceDistance;
  params.minCorrespondenceRatio = config.icpMinCorrespondenceRatio;
  params.coarseDistance = config.icpCoarseDistance;
  const RegistrationResult reg =
      icp(candidate.scan, current.scan, fit.transform, params);
  if (!reg.converged) {
    est.rejectReason = "icp refinement did not converge";
    return est;
  }
  Link link;
  link.from = current.id;
  link.to = candidate.id;
  link.transform = reg.transform;
  link.covariance = reg.covariance;
  link.kind = LinkKind::LoopClosure;
  est.accepted = true;
  est.link = link;
  return est;
}

std::vector<Link> detectProximity(const MapGraph& graph, NodeId currentId,
                                  const std::set<NodeId>& wmNodes,
                                  const Config& config) {
  std::vector<Link> links;
  const auto currentPose = graph.optimizedPose(currentId);
  if (!currentPose) {
    return links;
  }
  // Hop distance from the current node, bounded by the graph depth limit.
  std::map<NodeId, int> depth;
  depth[currentId] = 0;
  std::queue<NodeId> frontier;
  frontier.push(currentId);
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop();
    const int d = depth[id];
    if (d >= config.proximityMaxGraphDepth) {
      continue;
    }
    for (const NodeId next : graph.neighbors(id)) {
      if (depth.try_emplace(next, d + 1).second) {
        frontier.push(next);
      }
    }
  }

  struct Candidate {
    double distance;
    NodeId id;
  };
  std::vector<Candidate> candidates;
  for (const NodeId id : wmNodes) {
    if (id == currentId || !depth.count(id)) {
      continue;
    }
    const auto pose = graph.optimizedPose(id);
    if (!pose) {
      continue;
    }
    const double dist = std::hypot(pose->x - currentPose->x, pose->y - currentPose->y);
    if (dist > config.proximityRadius) {
      continue;
    }
    if (graph.hasLink(currentId, id, LinkKind::Proximity) ||
        graph.hasLink(id, currentId, LinkKind::Proximity)) {
      continue;
    }
    candidates.push_back({dist, id});
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.distance != b.distance ? a.distance < b.distance : a.id < b.id;
  });

  IcpParams params;
  params.mode = config.icpPointToPlane ? IcpMode::PointToPlane : IcpMode::PointToPoint;
  params.maxIterations = config.icpMaxIterations;
  params.epsilonT = config.icpEpsilonT;
  params.epsilonTheta = config.icpEpsilonTheta;
  params.maxCorrespondenceDistance = config.icpMaxCorrespondenceDistance;
  params.minCorrespondenceRatio = config.icpMinCorrespondenceRatio;
  params.coarseDistance = config.icpCoarseDistance;

  const MapNode& currentNode = graph.node(currentId);
  int registered = 0;
  for (const auto& cand : candidates) {
    if (registered >= config.proximityMaxPaths) {
      break;
    }
    ++registered;
    const MapNode& other = graph.node(cand.id);
    const Transform2 guess = relative(*currentPose, *graph.optimizedPose(cand.id));
    const RegistrationResult reg = icp(other.scan, currentNode.scan, guess, params);
    if (!reg.converged) {
      continue;
    }
    Link link;
    link.from = currentId;
    link.to = cand.id;
    link.transform = reg.transform;
    link.covariance = reg.covariance;
    link.kind = LinkKind::Proximity;
    links.push_back(std::move(link));
  }
  return links;
}

}  // namespace gslam
