#ifndef GSLAM_MEMORY_HPP
#define GSLAM_MEMORY_HPP

#include <deque>
#include <optional>
#include <set>
#include <vector>

#include "gslam/config.hpp"
#include "gslam/map_graph.hpp"

namespace gslam {

/// Node lifecycle across STM, WM and LTM. New nodes enter STM; the oldest
/// STM node moves to WM when STM exceeds its capacity; WM nodes move to
/// LTM under the time/size thresholds (lowest weight first, oldest id
/// breaking ties); on loop closure, LTM nodes near the matched location
/// move back to WM. Transfers never touch links.
class MemoryManager {
 public:
  explicit MemoryManager(const Config& config) : config_(config) {}

  /// True when stamp - lastNodeStamp >= 1 / detection rate, or there is no
  /// previous node.
  bool shouldCreateNode(std::optional<double> lastNodeStamp, double stamp) const;

  struct RehearsalResult {
    double similarity = 0.0;
    bool merged = false;
    bool discardLast = false;
  };

  /// Word-overlap similarity of the two nodes; on a match, the new node
  /// absorbs the last node's weight plus one and the last node's weight
  /// resets. discardLast is set when the odometry displacement between the
  /// two nodes is below the stationarity epsilon.
  RehearsalResult rehearse(MapGraph& graph, NodeId newNode, NodeId lastNode) const;

  void insertStm(MapGraph& graph, NodeId id);

  /// Pops oldest STM nodes into WM while STM exceeds Mem/STMSize.
  std::vector<NodeId> moveToWm(MapGraph& graph);

  /// WM -> LTM transfers. Size mode empties WM down to Rtabmap/MemoryThr;
  /// time mode moves ceil(|WM| * Mem/TransferBatchRatio) nodes when the
  /// update exceeded Rtabmap/TimeThr. Nodes in exempt stay.
  std::vector<NodeId> enforceMemory(MapGraph& graph, double updateDurationMs,
                                    const std::set<NodeId>& exempt);

  /// LTM nodes near the matched node move back to WM with their links
  /// intact. The search radius starts at Mem/RetrievalHops and grows by the
  /// same amount on every repeated match of the same node, so revisits
  /// reactivate the neighborhood incrementally.
  std::vector<NodeId> retrieveNeighbors(MapGraph& graph, NodeId loopNodeId);

  /// Remove a node from whichever store holds it (rehearsal discard).
  void forget(NodeId id);

  const std::deque<NodeId>& stm() const { return stm_; }
  const std::set<NodeId>& wm() const { return wm_; }
  const std::set<NodeId>& ltm() const { return ltm_; }

 private:
  Config config_;
  std::deque<NodeId> stm_;
  std::set<NodeId> wm_;
  std::set<NodeId> ltm_;
  std::map<NodeId, int> retrievalDepth_;
};

}  // namespace gslam

#endif  // GSLAM_MEMORY_HPP
