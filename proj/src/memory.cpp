#include "gslam/memory.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace gslam {
namespace {

std::set<int> distinctWords(const MapNode& node) {
  return {node.wordIds.begin(), node.wordIds.end()};
}

}  // namespace

bool MemoryManager::shouldCreateNode(std::optional<double> lastNodeStamp,
                                     double stamp) const {
  if (!lastNodeStamp) {
    return true;
  }
  return stamp - *lastNodeStamp >= 1.0 / config_.detectionRate;
}

MemoryManager::RehearsalResult MemoryManager::rehearse(MapGraph& graph,
                                                       NodeId newNode,
                                                       NodeId lastNode) const {
  RehearsalResult r;
  MapNode& nu = graph.node(newNode);
  MapNode& last = graph.node(lastNode);
  const std::set<int> wn = distinctWords(nu);
  const std::set<int> wl = distinctWords(last);
  const std::size_t denom = std::max(wn.size(), wl.size());
  if (denom == 0) {
    return r;
  }
  std::size_t shared = 0;
  for (const int w : wn) {
    shared += wl.count(w);
  }
  r.similarity = static_cast<double>(shared) / static_cast<double>(denom);
  if (r.similarity < config_.rehearsalSimilarity) {
    return r;
  }
  r.merged = true;
  nu.weight += 1 + last.weight;
  last.weight = 0;
  const Transform2 delta = relative(last.odomPose, nu.odomPose);
  const bool stationary = std::hypot(delta.x, delta.y) < config_.stationaryEpsLin &&
                          std::abs(delta.theta) < config_.stationaryEpsAng;
  r.discardLast = stationary;
  return r;
}

void MemoryManager::insertStm(MapGraph& graph, NodeId id) {
  graph.node(id).location = MemoryLocation::STM;
  stm_.push_back(id);
}

std::vector<NodeId> MemoryManager::moveToWm(MapGraph& graph) {
  std::vector<NodeId> moved;
  while (static_cast<int>(stm_.size()) > config_.stmSize) {
    const NodeId id = stm_.front();
    stm_.pop_front();
    wm_.insert(id);
    graph.node(id).location = MemoryLocation::WM;
    moved.push_back(id);
  }
  return moved;
}

std::vector<NodeId> MemoryManager::enforceMemory(MapGraph& graph,
                                                 double updateDurationMs,
                                                 const std::set<NodeId>& exempt) {
  std::vector<NodeId> transferred;
  auto victim = [&]() -> std::optional<NodeId> {
    std::optional<NodeId> best;
    int bestWeight = 0;
    for (const NodeId id : wm_) {  // ascending id
      if (exempt.count(id)) {
        continue;
      }
      const int w = graph.node(id).weight;
      if (!best || w < bestWeight) {
        best = id;
        bestWeight = w;
      }
    }
    return best;
  };
  auto transfer = [&](NodeId id) {
    wm_.erase(id);
    ltm_.insert(id);
    graph.node(id).location = MemoryLocation::LTM;
    transferred.push_back(id);
  };

  if (config_.memoryThr > 0) {
    while (static_cast<int>(wm_.size()) > config_.memoryThr) {
      const auto id = victim();
      if (!id) {
        break;
      }
      transfer(*id);
    }
  }
  if (config_.timeThr > 0.0 && updateDurationMs > config_.timeThr) {
    const int batch = static_cast<int>(
        std::ceil(static_cast<double>(wm_.size()) * config_.transferBatchRatio));
    for (int i = 0; i < batch; ++i) {
      const auto id = victim();
      if (!id) {
        break;
      }
      transfer(*id);
    }
  }
  return transferred;
}

std::vector<NodeId> MemoryManager::retrieveNeighbors(MapGraph& graph,
                                                     NodeId loopNodeId) {
  const int maxDepth = (retrievalDepth_[loopNodeId] += config_.retrievalHops);
  std::vector<NodeId> retrieved;
  std::set<NodeId> visited{loopNodeId};
  std::queue<std::pair<NodeId, int>> frontier;
  frontier.push({loopNodeId, 0});
  while (!frontier.empty()) {
    const auto [id, depth] = frontier.front();
    frontier.pop();
    if (depth >= maxDepth) {
      continue;
    }
    for (const NodeId next : graph.neighbors(id)) {
      if (!visited.insert(next).second) {
        continue;
      }
      if (ltm_.count(next) &&
          static_cast<int>(retrieved.size()) < config_.maxRetrieved) {
        ltm_.erase(next);
        wm_.insert(next);
        graph.node(next).location = MemoryLocation::WM;
        retrieved.push_back(next);
      }
      frontier.push({next, depth + 1});
    }
    if (static_cast<int>(retrieved.size()) >= config_.maxRetrieved) {
      break;
    }
  }
  std::sort(retrieved.begin(), retrieved.end());
  return retrieved;
}

void MemoryManager::forget(NodeId id) {
  const auto it = std::find(stm_.begin(), stm_.end(), id);
  if (it != stm_.end()) {
    stm_.erase(it);
  }
  wm_.erase(id);
  ltm_.erase(id);
  retrievalDepth_.erase(id);
}

}  // namespace gslam
