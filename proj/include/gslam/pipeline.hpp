#ifndef GSLAM_PIPELINE_HPP
#define GSLAM_PIPELINE_HPP

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "gslam/bayes_filter.hpp"
#include "gslam/config.hpp"
#include "gslam/eval.hpp"
#include "gslam/grid.hpp"
#include "gslam/map_graph.hpp"
#include "gslam/memory.hpp"
#include "gslam/odometry.hpp"
#include "gslam/sim.hpp"
#include "gslam/vocabulary.hpp"

namespace gslam {

/// One row per map update (node creation cycle).
struct UpdateStats {
  int update = 0;
  double stamp = 0.0;
  NodeId nodeId = 0;
  int wmSize = 0;
  int stmSize = 0;
  int ltmSize = 0;
  int words = 0;
  int neighborLinks = 0;
  int loopLinks = 0;
  int proximityLinks = 0;
  double posteriorSum = 1.0;
  NodeId loopHypothesisId = -1;
  double loopHypothesisP = 0.0;
  bool loopAccepted = false;
  bool proximityAdded = false;
  bool rejectedByOptimizer = false;
  int retrieved = 0;
  int transferred = 0;
  double tNodeMs = 0.0;
  double tDetectMs = 0.0;
  double tOptimizeMs = 0.0;
  double tAssembleMs = 0.0;
  double tTransferMs = 0.0;
  double tTotalMs = 0.0;
  Transform2 optimizedPose;
  Transform2 gtPose;
  double ate = 0.0;  // current-pose error after per-update alignment
};

/// Full graph-SLAM dataflow: lidar odometry feeding node creation at the
/// detection rate, rehearsal, loop-closure and proximity detection, graph
/// optimization with the link-rejection safeguard, occupancy map assembly
/// and WM/LTM memory management.
class Pipeline {
 public:
  explicit Pipeline(const Config& config);

  /// Odometry stage: registration only, no map access.
  OdometryOutput stepOdometry(const SensorFrame& frame);
  /// Map-update stage: consumes one odometry message.
  void stepMapping(const SensorFrame& frame, const OdometryOutput& odom);

  void processFrame(const SensorFrame& frame);
  /// Starts a session: odometry resets into a fresh referential and frame
  /// stamps get offset to stay monotone across sessions.
  void beginSession(double firstFrameStamp);
  SensorFrame shiftStamps(const SensorFrame& frame) const;
  void processSession(const std::vector<SensorFrame>& frames);

  const MapGraph& graph() const { return graph_; }
  MapGraph& graph() { return graph_; }
  const MemoryManager& memory() const { return memory_; }
  const HypothesisFilter& filter() const { return filter_; }
  const Vocabulary& vocabulary() const { return vocabulary_; }
  const OccupancyGrid& onlineGrid() const { return assembler_.grid(); }
  const std::vector<UpdateStats>& updates() const { return updates_; }
  int lostFrames() const { return lostFrames_; }

  const std::vector<StampedPose>& odometryTrajectory() const { return odomTrajectory_; }
  const std::vector<StampedPose>& groundTruthTrajectory() const { return gtTrajectory_; }
  /// Final optimized pose per surviving node, stamped.
  std::vector<StampedPose> optimizedTrajectory() const;
  /// Ground-truth pose per surviving node, stamped.
  std::vector<StampedPose> nodeGroundTruth() const;

  /// Map from every node (LTM included) at the final optimized poses.
  OccupancyGrid assembleFullMap() const;

  int loopLinkCount() const;
  int proximityLinkCount() const;

 private:
  void update(const SensorFrame& frame, const OdometryOutput& odom);
  Transform2 extendedMapPose(NodeId id, std::optional<NodeId> anchor) const;
  void reassembleOnline(NodeId currentId);

  Config config_;
  LidarOdometry odometry_;
  MapGraph graph_;
  MemoryManager memory_;
  Vocabulary vocabulary_;
  HypothesisFilter filter_;
  GridAssembler assembler_;

  NodeId nextNodeId_ = 0;
  int session_ = -1;
  std::optional<double> lastNodeStamp_;
  std::optional<NodeId> lastNodeId_;
  int lastNodeSession_ = -1;
  std::map<NodeId, NodeId> chainPrev_;  // neighbor-link predecessor
  std::map<NodeId, Transform2> nodeGt_;
  int lostFrames_ = 0;
  double stampOffset_ = 0.0;
  double lastFrameStamp_ = 0.0;
  bool seenFrame_ = false;

  std::vector<UpdateStats> updates_;
  std::vector<StampedPose> odomTrajectory_;
  std::vector<StampedPose> gtTrajectory_;
};

/// Batch driver. With threaded=true, odometry and map update run as two
/// pipeline stages joined by a bounded queue (results are identical; the
/// serial mode exists for debugging and is the default in tests).
void runSlam(Pipeline& pipeline, const std::vector<std::vector<SensorFrame>>& sessions,
             bool threaded = false);

}  // namespace gslam

#endif  // GSLAM_PIPELINE_HPP
