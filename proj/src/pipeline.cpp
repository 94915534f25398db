#include "gslam/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gslam/loop_closure.hpp"
#include "gslam/optimizer.hpp"
#include "gslam/registration.hpp"

namespace gslam {
namespace {

using Clock = std::chrono::steady_clock;

double msSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

Covariance3 flooredCovariance(const Covariance3& cov, double floor = 1e-8) {
  Eigen::Matrix3d m = cov.matrix();
  for (int i = 0; i < 3; ++i) {
    m(i, i) = std::max(m(i, i), floor);
  }
  return Covariance3(m);
}

Covariance3 externalLinkCovariance(const Transform2& increment) {
  const double dist = std::hypot(increment.x, increment.y);
  const double st = 0.02 * dist + 1e-3;
  const double sr = 0.05 * std::abs(increment.theta) + 2e-3;
  return Covariance3::diagonal(st * st, st * st, sr * sr);
}

std::uint64_t pairSeed(NodeId a, NodeId b) {
  return 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(a + 1) +
         0x2545f4914f6cdd1dULL * static_cast<std::uint64_t>(b + 1);
}

}  // namespace

Pipeline::Pipeline(const Config& config)
    : config_(config),
      odometry_(config),
      memory_(config),
      vocabulary_(config.visCorNNDR),
      filter_(config),
      assembler_(config.gridCellSize) {
  config_.validate();
}

OdometryOutput Pipeline::stepOdometry(const SensorFrame& frame) {
  std::optional<Transform2> external;
  if (config_.odomStrategy == OdometryStrategy::External ||
      config_.odomStrategy == OdometryStrategy::ExternalToS2M) {
    external = frame.wheelOdomPose;
  }
  return odometry_.processScan(frame.scan, frame.stamp, external);
}

void Pipeline::stepMapping(const SensorFrame& frame, const OdometryOutput& odom) {
  odomTrajectory_.push_back({frame.stamp, odom.pose});
  gtTrajectory_.push_back({frame.stamp, frame.gtPose});
  lastFrameStamp_ = frame.stamp;
  seenFrame_ = true;
  if (odom.lost) {
    ++lostFrames_;
    return;
  }
  if (!memory_.shouldCreateNode(lastNodeStamp_, frame.stamp)) {
    return;
  }
  update(frame, odom);
}

void Pipeline::processFrame(const SensorFrame& frame) {
  stepMapping(frame, stepOdometry(frame));
}

void Pipeline::beginSession(double firstFrameStamp) {
  ++session_;
  if (session_ > 0) {
    // New referential with its own odometry; stamps continue monotonically.
    const double gap = 1.0 / config_.detectionRate;
    if (seenFrame_) {
      stampOffset_ = lastFrameStamp_ + gap - firstFrameStamp;
    }
    odometry_.reset();
  }
}

SensorFrame Pipeline::shiftStamps(const SensorFrame& frame) const {
  if (stampOffset_ == 0.0) {
    return frame;
  }
  SensorFrame shifted = frame;
  shifted.stamp += stampOffset_;
  shifted.scan.stamp += stampOffset_;
  return shifted;
}

void Pipeline::processSession(const std::vector<SensorFrame>& frames) {
  beginSession(frames.empty() ? 0.0 : frames.front().stamp);
  for (const SensorFrame& frame : frames) {
    processFrame(shiftStamps(frame));
  }
}

void Pipeline::update(const SensorFrame& frame, const OdometryOutput& odom) {
  const auto tStart = Clock::now();
  UpdateStats row;
  row.update = static_cast<int>(updates_.size());
  row.stamp = frame.stamp;

  // ---- Node creation: scan filtering, local grid, quantization, rehearsal.
  auto tBucket = Clock::now();
  const NodeId id = nextNodeId_++;
  MapNode node;
  node.id = id;
  node.stamp = frame.stamp;
  node.odomPose = odom.pose;
  node.session = session_ < 0 ? 0 : session_;
  Scan filtered = voxelFilter(frame.scan, config_.icpVoxelSize);
  if (static_cast<int>(filtered.size()) >= config_.icpNormalK) {
    filtered = estimateNormals(filtered, config_.icpNormalK);
  }
  filtered.frame = ScanFrame::Base;
  node.scan = std::move(filtered);
  LocalGridOptions gridOptions;
  gridOptions.clearNoReturn = config_.gridRayTraceNoReturn;
  node.localGrid = buildLocalGrid(frame.scan, config_.gridCellSize, gridOptions);
  node.descriptors.reserve(frame.observations.size());
  for (const auto& obs : frame.observations) {
    if (static_cast<int>(node.descriptors.size()) >= config_.kpMaxFeatures) {
      break;
    }
    node.descriptors.push_back(obs.descriptor);
  }
  graph_.addNode(std::move(node));
  MapNode& stored = graph_.node(id);
  stored.wordIds = vocabulary_.quantize(id, stored.descriptors, config_.kpMaxFeatures);
  memory_.insertStm(graph_, id);
  nodeGt_[id] = frame.gtPose;

  std::optional<NodeId> linkAnchor;
  bool discarded = false;
  if (lastNodeId_ && lastNodeSession_ == (session_ < 0 ? 0 : session_)) {
    linkAnchor = lastNodeId_;
    const auto rehearsal = memory_.rehearse(graph_, id, *lastNodeId_);
    if (rehearsal.merged && rehearsal.discardLast) {
      const NodeId dropped = *lastNodeId_;
      const auto prevIt = chainPrev_.find(dropped);
      linkAnchor = prevIt != chainPrev_.end() ? std::optional<NodeId>(prevIt->second)
                                              : std::nullopt;
      vocabulary_.removeNode(dropped, graph_.node(dropped).wordIds);
      memory_.forget(dropped);
      graph_.removeNode(dropped);
      nodeGt_.erase(dropped);
      chainPrev_.erase(dropped);
      discarded = true;
    }
  }
  if (linkAnchor) {
    Link l;
    l.from = *linkAnchor;
    l.to = id;
    l.transform = relative(graph_.node(*linkAnchor).odomPose, stored.odomPose);
    l.covariance = config_.odomStrategy == OdometryStrategy::External
                       ? externalLinkCovariance(l.transform)
                       : flooredCovariance(odom.covariance);
    l.kind = LinkKind::Neighbor;
    graph_.addLink(std::move(l));
    chainPrev_[id] = *linkAnchor;
  }
  graph_.optimizedPoses()[id] = extendedMapPose(id, linkAnchor);
  memory_.moveToWm(graph_);
  row.tNodeMs = msSince(tBucket);

  // ---- Loop closure and proximity detection.
  tBucket = Clock::now();
  std::vector<Link> pendingLinks;
  std::optional<NodeId> loopCandidate;
  std::vector<NodeId> retrieved;
  const std::set<NodeId>& wm = memory_.wm();
  if (!wm.empty()) {
    const auto raw = vocabulary_.tfIdfScores(stored.wordIds, wm, graph_);
    const Likelihood lk = standardizeScores(raw, wm);
    filter_.update(lk, graph_, wm);
    row.posteriorSum = filter_.sum();
    if (const auto best = filter_.highestHypothesis()) {
      row.loopHypothesisId = *best;
      row.loopHypothesisP = filter_.posterior(*best);
    }
    if (const auto candidate = filter_.detectLoop(config_.loopThr)) {
      if (!wm.count(*candidate)) {
        throw std::logic_error("loop candidate outside WM");
      }
      loopCandidate = candidate;
      // Bring the matched location's LTM neighborhood back first: even when
      // this cycle's transform fails, the retrieved nodes enable the next
      // detections, expanding the remembered area incrementally.
      retrieved = memory_.retrieveNeighbors(graph_, *candidate);
      const LoopEstimate est = estimateLoopTransform(
          stored, graph_.node(*candidate), config_, pairSeed(id, *candidate));
      if (est.accepted) {
        pendingLinks.push_back(*est.link);
      }
    }
  }
  const std::vector<Link> proximityLinks = detectProximity(graph_, id, wm, config_);
  for (const Link& l : proximityLinks) {
    pendingLinks.push_back(l);
  }
  row.retrieved = static_cast<int>(retrieved.size());
  row.tDetectMs = msSince(tBucket);

  // ---- Graph optimization with the post-optimization rejection rule.
  tBucket = Clock::now();
  bool posesChanged = false;
  bool loopAccepted = false;
  if (!pendingLinks.empty()) {
    const std::map<NodeId, Transform2> snapshot = graph_.optimizedPoses();
    for (const Link& l : pendingLinks) {
      graph_.addLink(l);
    }
    std::set<NodeId> active = wm;
    for (const NodeId sid : memory_.stm()) {
      active.insert(sid);
    }
    const NodeId anchor = *active.begin();
    const OptimizeResult result = optimizePoses(graph_, active, anchor);
    const LinkCheck check =
        checkLinkDeviation(graph_, result.poses, active, config_.optimizeMaxError);
    if (!check.accepted) {
      for (const Link& l : pendingLinks) {
        graph_.removeLink(l.from, l.to, l.kind);
      }
      graph_.optimizedPoses() = snapshot;
      row.rejectedByOptimizer = true;
      pendingLinks.clear();
    } else {
      for (const auto& [nid, pose] : result.poses) {
        auto& slot = graph_.optimizedPoses()[nid];
        if (!posesChanged && !approxEqual(slot, pose, 1e-6)) {
          posesChanged = true;
        }
        slot = pose;
      }
      for (const Link& l : pendingLinks) {
        if (l.kind == LinkKind::LoopClosure) {
          loopAccepted = true;
        } else if (l.kind == LinkKind::Proximity) {
          row.proximityAdded = true;
        }
      }
      // Local retrieval: a proximity localization reactivates the matched
      // location's LTM neighborhood, rolling the remembered area along the
      // retraced path.
      for (const Link& l : pendingLinks) {
        if (l.kind == LinkKind::Proximity) {
          for (const NodeId rid : memory_.retrieveNeighbors(graph_, l.to)) {
            retrieved.push_back(rid);
          }
          break;
        }
      }
    }
  }
  row.loopAccepted = loopAccepted;
  row.retrieved = static_cast<int>(retrieved.size());
  row.tOptimizeMs = msSince(tBucket);

  // ---- Memory enforcement (transfer bucket).
  tBucket = Clock::now();
  std::set<NodeId> exempt{id};
  if (linkAnchor) {
    exempt.insert(*linkAnchor);
  }
  if (loopCandidate) {
    exempt.insert(*loopCandidate);
  }
  for (const NodeId rid : retrieved) {
    exempt.insert(rid);
  }
  // The assembled neighborhood stays: WM nodes metrically near the current
  // pose are immunized against transfer, nearest first, up to a fraction
  // of the WM budget.
  {
    const Transform2 here = graph_.optimizedPoses().at(id);
    std::vector<std::pair<double, NodeId>> near;
    for (const NodeId wid : memory_.wm()) {
      const auto pose = graph_.optimizedPose(wid);
      if (!pose) {
        continue;
      }
      const double d = std::hypot(pose->x - here.x, pose->y - here.y);
      if (d <= config_.localRadius) {
        near.push_back({d, wid});
      }
    }
    std::sort(near.begin(), near.end());
    const int budget = config_.memoryThr > 0
                           ? static_cast<int>(std::ceil(config_.localImmunizationRatio *
                                                        config_.memoryThr))
                           : static_cast<int>(near.size());
    for (int k = 0; k < std::min<int>(budget, static_cast<int>(near.size())); ++k) {
      exempt.insert(near[k].second);
    }
  }
  const std::vector<NodeId> transferred =
      memory_.enforceMemory(graph_, msSince(tStart), exempt);
  row.transferred = static_cast<int>(transferred.size());
  row.tTransferMs = msSince(tBucket);

  // ---- Occupancy map assembly.
  tBucket = Clock::now();
  const bool membershipChanged = !retrieved.empty() || !transferred.empty() || discarded;
  if (config_.gridAssemble) {
    if (posesChanged || membershipChanged) {
      reassembleOnline(id);
    } else {
      NodeGridRef ref;
      ref.id = id;
      ref.pose = graph_.optimizedPoses().at(id);
      ref.grid = &graph_.node(id).localGrid;
      assembler_.add(ref);
    }
  }
  row.tAssembleMs = msSince(tBucket);

  // ---- Stats.
  row.nodeId = id;
  row.wmSize = static_cast<int>(memory_.wm().size());
  row.stmSize = static_cast<int>(memory_.stm().size());
  row.ltmSize = static_cast<int>(memory_.ltm().size());
  row.words = vocabulary_.wordCount();
  for (const Link& l : graph_.links()) {
    switch (l.kind) {
      case LinkKind::Neighbor: ++row.neighborLinks; break;
      case LinkKind::LoopClosure: ++row.loopLinks; break;
      case LinkKind::Proximity: ++row.proximityLinks; break;
    }
  }
  row.optimizedPose = graph_.optimizedPoses().at(id);
  row.gtPose = frame.gtPose;
  {
    // Current-pose ATE: align the optimized node trajectory so far onto its
    // ground truth, then take the aligned error of the current node.
    std::vector<Eigen::Vector2d> est, gt;
    est.reserve(nodeGt_.size());
    gt.reserve(nodeGt_.size());
    for (const auto& [nid, gtPose] : nodeGt_) {
      const auto opt = graph_.optimizedPose(nid);
      if (opt) {
        est.push_back(opt->translation());
        gt.push_back(gtPose.translation());
      }
    }
    if (!est.empty()) {
      const Transform2 t = alignRigid(est, gt);
      row.ate = (t.apply(graph_.optimizedPoses().at(id).translation()) -
                 frame.gtPose.translation())
                    .norm();
    }
  }
  row.tTotalMs = msSince(tStart);
  updates_.push_back(row);

  lastNodeStamp_ = frame.stamp;
  lastNodeId_ = id;
  lastNodeSession_ = session_ < 0 ? 0 : session_;
}

Transform2 Pipeline::extendedMapPose(NodeId id, std::optional<NodeId> anchor) const {
  const MapNode& node = graph_.node(id);
  if (!anchor) {
    return node.odomPose;  // first node of a session keeps its referential
  }
  const MapNode& prev = graph_.node(*anchor);
  const auto prevOpt = graph_.optimizedPose(*anchor);
  const Transform2 base = prevOpt.value_or(prev.odomPose);
  return compose(base, relative(prev.odomPose, node.odomPose));
}

void Pipeline::reassembleOnline(NodeId currentId) {
  assembler_.clear();
  // Only the current node's graph component: an unmerged session keeps its
  // own referential and must not draw over another session's map.
  std::set<NodeId> component;
  std::deque<NodeId> frontier{currentId};
  component.insert(currentId);
  while (!frontier.empty()) {
    const NodeId id = frontier.front();
    frontier.pop_front();
    for (const NodeId next : graph_.neighbors(id)) {
      if (component.insert(next).second) {
        frontier.push_back(next);
      }
    }
  }
  for (const auto& [nid, node] : graph_.nodes()) {
    if (node.location == MemoryLocation::LTM || !component.count(nid)) {
      continue;  // LTM grids leave the online map
    }
    const auto pose = graph_.optimizedPose(nid);
    if (!pose) {
      continue;
    }
    assembler_.add({nid, *pose, &node.localGrid});
  }
}

OccupancyGrid Pipeline::assembleFullMap() const {
  std::vector<NodeGridRef> refs;
  for (const auto& [nid, node] : graph_.nodes()) {
    const auto pose = graph_.optimizedPose(nid);
    if (!pose) {
      continue;
    }
    refs.push_back({nid, *pose, &node.localGrid});
  }
  return assembleGrids(refs, config_.gridCellSize);
}

std::vector<StampedPose> Pipeline::optimizedTrajectory() const {
  std::vector<StampedPose> out;
  for (const auto& [nid, node] : graph_.nodes()) {
    const auto pose = graph_.optimizedPose(nid);
    if (pose) {
      out.push_back({node.stamp, *pose});
    }
  }
  return out;
}

std::vector<StampedPose> Pipeline::nodeGroundTruth() const {
  std::vector<StampedPose> out;
  for (const auto& [nid, node] : graph_.nodes()) {
    const auto it = nodeGt_.find(nid);
    if (it != nodeGt_.end()) {
      out.push_back({node.stamp, it->second});
    }
  }
  return out;
}

int Pipeline::loopLinkCount() const {
  int n = 0;
  for (const Link& l : graph_.links()) {
    n += l.kind == LinkKind::LoopClosure ? 1 : 0;
  }
  return n;
}

int Pipeline::proximityLinkCount() const {
  int n = 0;
  for (const Link& l : graph_.links()) {
    n += l.kind == LinkKind::Proximity ? 1 : 0;
  }
  return n;
}

namespace {

struct OdometryMessage {
  SensorFrame frame;
  OdometryOutput output;
};

/// Bounded FIFO: blocking push/pop, no message dropping.
class BoundedQueue {
 public:
  explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(OdometryMessage msg) {
    std::unique_lock lock(mutex_);
    notFull_.wait(lock, [&] { return queue_.size() < capacity_; });
    queue_.push_back(std::move(msg));
    notEmpty_.notify_one();
  }

  void finish() {
    std::unique_lock lock(mutex_);
    done_ = true;
    notEmpty_.notify_all();
  }

  bool pop(OdometryMessage& msg) {
    std::unique_lock lock(mutex_);
    notEmpty_.wait(lock, [&] { return !queue_.empty() || done_; });
    if (queue_.empty()) {
      return false;
    }
    msg = std::move(queue_.front());
    queue_.pop_front();
    notFull_.notify_one();
    return true;
  }

 private:
  std::size_t capacity_;
  std::mutex mutex_;
  std::condition_variable notFull_, notEmpty_;
  std::deque<OdometryMessage> queue_;
  bool done_ = false;
};

}  // namespace

void runSlam(Pipeline& pipeline, const std::vector<std::vector<SensorFrame>>& sessions,
             bool threaded) {
  if (!threaded) {
    for (const auto& session : sessions) {
      pipeline.processSession(session);
    }
    return;
  }
  for (const auto& session : sessions) {
    pipeline.beginSession(session.empty() ? 0.0 : session.front().stamp);
    BoundedQueue queue(16);
    std::thread producer([&] {
      for (const SensorFrame& frame : session) {
        SensorFrame shifted = pipeline.shiftStamps(frame);
        OdometryMessage msg;
        msg.output = pipeline.stepOdometry(shifted);
        msg.frame = std::move(shifted);
        queue.push(std::move(msg));
      }
      queue.finish();
    });
    OdometryMessage msg;
    while (queue.pop(msg)) {
      pipeline.stepMapping(msg.frame, msg.output);
    }
    producer.join();
  }
}

}  // namespace gslam
