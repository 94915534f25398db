#include "gslam/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

namespace gslam {

Eigen::Vector3d linkError(const Transform2& xi, const Transform2& xj,
                          const Transform2& measurement) {
  const Transform2 rel = relative(xi, xj);
  const Transform2 e = compose(inverse(measurement), rel);
  return {e.x, e.y, e.theta};
}

void linkJacobians(const Transform2& xi, const Transform2& xj,
                   const Transform2& measurement, Eigen::Matrix3d& ji,
                   Eigen::Matrix3d& jj) {
  const double ci = std::cos(xi.theta);
  const double si = std::sin(xi.theta);
  Eigen::Matrix2d rit;  // Ri^T
  rit << ci, si, -si, ci;
  Eigen::Matrix2d drit;  // d(Ri^T)/dtheta
  drit << -si, ci, -ci, -si;
  const double cz = std::cos(measurement.theta);
  const double sz = std::sin(measurement.theta);
  Eigen::Matrix2d rzt;  // Rz^T
  rzt << cz, sz, -sz, cz;

  const Eigen::Vector2d dt(xj.x - xi.x, xj.y - xi.y);

  ji.setZero();
  ji.block<2, 2>(0, 0) = -rzt * rit;
  ji.block<2, 1>(0, 2) = rzt * (drit * dt);
  ji(2, 2) = -1.0;

  jj.setZero();
  jj.block<2, 2>(0, 0) = rzt * rit;
  jj(2, 2) = 1.0;
}

namespace {

struct Component {
  std::vector<NodeId> nodes;      // sorted
  std::vector<const Link*> links; // both endpoints inside
  NodeId anchor = 0;
};

std::vector<Component> splitComponents(const MapGraph& graph,
                                       const std::set<NodeId>& activeIds,
                                       NodeId fixedId) {
  std::map<NodeId, std::vector<std::pair<NodeId, const Link*>>> adj;
  std::vector<const Link*> activeLinks;
  for (const Link& l : graph.links()) {
    if (!activeIds.count(l.from) || !activeIds.count(l.to)) {
      continue;
    }
    activeLinks.push_back(&l);
    adj[l.from].push_back({l.to, &l});
    adj[l.to].push_back({l.from, &l});
  }

  std::vector<Component> components;
  std::set<NodeId> assigned;
  for (const NodeId start : activeIds) {
    if (assigned.count(start)) {
      continue;
    }
    Component comp;
    std::queue<NodeId> frontier;
    frontier.push(start);
    assigned.insert(start);
    std::set<NodeId> members{start};
    while (!frontier.empty()) {
      const NodeId id = frontier.front();
      frontier.pop();
      const auto it = adj.find(id);
      if (it == adj.end()) {
        continue;
      }
      for (const auto& [next, link] : it->second) {
        (void)link;
        if (members.insert(next).second) {
          assigned.insert(next);
          frontier.push(next);
        }
      }
    }
    comp.nodes.assign(members.begin(), members.end());
    comp.anchor = members.count(fixedId) ? fixedId : comp.nodes.front();
    for (const Link* l : activeLinks) {
      if (members.count(l->from)) {
        comp.links.push_back(l);
      }
    }
    components.push_back(std::move(comp));
  }
  return components;
}

/// Spanning-tree initialization from the anchor, neighbor links first.
std::map<NodeId, Transform2> spanningTreeInit(const Component& comp,
                                              const Transform2& anchorPose) {
  std::map<NodeId, std::vector<const Link*>> adj;
  for (const Link* l : comp.links) {
    adj[l->from].push_back(l);
    adj[l->to].push_back(l);
  }
  for (auto& [id, ls] : adj) {
    (void)id;
    std::stable_sort(ls.begin(), ls.end(), [](const Link* a, const Link* b) {
      return (a->kind == LinkKind::Neighbor) > (b->kind == LinkKind::Neighbor);
    });
  }
  std::map<NodeId, Transform2> poses;
  poses[comp.anchor] = anchorPose;
  std::queue<NodeId> frontier;
  frontier.push(comp.anchor);
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop();
    const auto it = adj.find(id);
    if (it == adj.end()) {
      continue;
    }
    for (const Link* l : it->second) {
      const NodeId other = l->from == id ? l->to : l->from;
      if (poses.count(other)) {
        continue;
      }
      poses[other] = l->from == id ? compose(poses[id], l->transform)
                                   : compose(poses[id], inverse(l->transform));
      frontier.push(other);
    }
  }
  return poses;
}

double chiSquare(const Component& comp, const std::map<NodeId, Transform2>& poses,
                 const std::vector<Eigen::Matrix3d>& infos) {
  double chi = 0.0;
  for (std::size_t k = 0; k < comp.links.size(); ++k) {
    const Link* l = comp.links[k];
    const Eigen::Vector3d e =
        linkError(poses.at(l->from), poses.at(l->to), l->transform);
    chi += e.dot(infos[k] * e);
  }
  return chi;
}

}  // namespace

OptimizeResult optimizePoses(const MapGraph& graph, const std::set<NodeId>& activeIds,
                             NodeId fixedId) {
  OptimizeResult result;
  constexpr int kMaxIterations = 100;
  constexpr double kRelTolerance = 1e-6;

  for (const Component& comp : splitComponents(graph, activeIds, fixedId)) {
    const MapNode& anchorNode = graph.node(comp.anchor);
    const Transform2 anchorPose =
        graph.optimizedPose(comp.anchor).value_or(anchorNode.odomPose);
    std::map<NodeId, Transform2> poses = spanningTreeInit(comp, anchorPose);
    // Nodes unreachable through links keep their previous placement.
    for (const NodeId id : comp.nodes) {
      if (!poses.count(id)) {
        poses[id] = graph.optimizedPose(id).value_or(graph.node(id).odomPose);
      }
    }

    if (comp.links.empty() || comp.nodes.size() < 2) {
      for (const auto& [id, pose] : poses) {
        result.poses[id] = pose;
      }
      continue;
    }

    std::vector<Eigen::Matrix3d> infos;
    infos.reserve(comp.links.size());
    for (const Link* l : comp.links) {
      infos.push_back(l->covariance.information());
    }

    std::map<NodeId, int> varIndex;
    int nv = 0;
    for (const NodeId id : comp.nodes) {
      if (id != comp.anchor) {
        varIndex[id] = nv++;
      }
    }

    double chi = chiSquare(comp, poses, infos);
    double lambda = 1e-6;
    int iter = 0;
    bool done = false;
    for (; iter < kMaxIterations && !done; ++iter) {
      if (chi < 1e-16) {
        break;
      }
      std::vector<Eigen::Triplet<double>> triplets;
      Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * nv);
      for (std::size_t k = 0; k < comp.links.size(); ++k) {
        const Link* l = comp.links[k];
        const Transform2& xi = poses.at(l->from);
        const Transform2& xj = poses.at(l->to);
        const Eigen::Vector3d e = linkError(xi, xj, l->transform);
        Eigen::Matrix3d ji, jj;
        linkJacobians(xi, xj, l->transform, ji, jj);
        const Eigen::Matrix3d& info = infos[k];
        const bool iVar = l->from != comp.anchor;
        const bool jVar = l->to != comp.anchor;
        const int io = iVar ? 3 * varIndex.at(l->from) : 0;
        const int jo = jVar ? 3 * varIndex.at(l->to) : 0;
        if (iVar) {
          const Eigen::Matrix3d hii = ji.transpose() * info * ji;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
              triplets.emplace_back(io + r, io + c, hii(r, c));
          b.segment<3>(io) -= ji.transpose() * info * e;
        }
        if (jVar) {
          const Eigen::Matrix3d hjj = jj.transpose() * info * jj;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
              triplets.emplace_back(jo + r, jo + c, hjj(r, c));
          b.segment<3>(jo) -= jj.transpose() * info * e;
        }
        if (iVar && jVar) {
          const Eigen::Matrix3d hij = ji.transpose() * info * jj;
          for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
              triplets.emplace_back(io + r, jo + c, hij(r, c));
              triplets.emplace_back(jo + c, io + r, hij(r, c));
            }
        }
      }

      bool stepAccepted = false;
      for (int attempt = 0; attempt < 8; ++attempt) {
        std::vector<Eigen::Triplet<double>> damped = triplets;
        for (int d = 0; d < 3 * nv; ++d) {
          damped.emplace_back(d, d, lambda);
        }
        Eigen::SparseMatrix<double> h(3 * nv, 3 * nv);
        h.setFromTriplets(damped.begin(), damped.end());
        Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(h);
        if (solver.info() != Eigen::Success) {
          lambda *= 10.0;
          continue;
        }
        const Eigen::VectorXd dx = solver.solve(b);
        if (solver.info() != Eigen::Success || !dx.allFinite()) {
          lambda *= 10.0;
          continue;
        }
        std::map<NodeId, Transform2> candidate = poses;
        for (const auto& [id, vi] : varIndex) {
          Transform2& pose = candidate[id];
          pose = Transform2(pose.x + dx[3 * vi], pose.y + dx[3 * vi + 1],
                            pose.theta + dx[3 * vi + 2]);
        }
        const double newChi = chiSquare(comp, candidate, infos);
        if (newChi <= chi) {
          const double relDecrease = (chi - newChi) / std::max(chi, 1e-300);
          poses = std::move(candidate);
          chi = newChi;
          lambda = std::max(lambda * 0.25, 1e-12);
          stepAccepted = true;
          done = relDecrease < kRelTolerance;
          break;
        }
        lambda *= 10.0;
      }
      if (!stepAccepted) {
        break;
      }
    }

    result.chiSquare += chi;
    result.iterations = std::max(result.iterations, iter);
    for (const auto& [id, pose] : poses) {
      result.poses[id] = pose;
    }
  }
  return result;
}

LinkCheck checkLinkDeviation(const MapGraph& graph,
                             const std::map<NodeId, Transform2>& optimized,
                             const std::set<NodeId>& activeIds, double factor) {
  LinkCheck check;
  for (const Link& l : graph.links()) {
    if (!activeIds.count(l.from) || !activeIds.count(l.to)) {
      continue;
    }
    const auto fi = optimized.find(l.from);
    const auto ti = optimized.find(l.to);
    if (fi == optimized.end() || ti == optimized.end()) {
      continue;
    }
    const Transform2 rel = relative(fi->second, ti->second);
    const double dx = rel.x - l.transform.x;
    const double dy = rel.y - l.transform.y;
    const double devSq = dx * dx + dy * dy;
    const Eigen::Matrix3d& cov = l.covariance.matrix();
    const double transVar = cov(0, 0) + cov(1, 1);
    const double tolSq = factor * factor * transVar;
    if (devSq > tolSq) {
      check.accepted = false;
      check.from = l.from;
      check.to = l.to;
      check.deviationSq = devSq;
      check.toleranceSq = tolSq;
      return check;
    }
  }
  return check;
}

}  // namespace gslam
