#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "gslam/eval.hpp"
#include "gslam/io.hpp"
#include "gslam/pipeline.hpp"
#include "gslam/sim.hpp"
#include "worlds.hpp"

using namespace gslam;
using namespace gslam::testsupport;

namespace {

std::vector<SensorFrame> shortened(std::vector<SensorFrame> frames, double maxRange) {
  for (auto& f : frames) {
    f.scan = emulateShortRange(f.scan, maxRange);
  }
  return frames;
}

AteSeries seriesOf(const Pipeline& pipe) {
  std::vector<std::pair<Transform2, Transform2>> estGt;
  for (const auto& u : pipe.updates()) {
    estGt.push_back({u.optimizedPose, u.gtPose});
  }
  return ateSeries(estGt);
}

std::string statsFingerprint(const Pipeline& pipe) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& u : pipe.updates()) {
    os << u.nodeId << ' ' << u.stamp << ' ' << u.wmSize << ' ' << u.stmSize << ' '
       << u.ltmSize << ' ' << u.words << ' ' << u.neighborLinks << ' ' << u.loopLinks
       << ' ' << u.proximityLinks << ' ' << u.loopHypothesisId << ' '
       << u.loopHypothesisP << ' ' << u.loopAccepted << ' ' << u.rejectedByOptimizer
       << ' ' << u.retrieved << ' ' << u.transferred << ' ' << u.optimizedPose.x << ' '
       << u.optimizedPose.y << ' ' << u.optimizedPose.theta << ' ' << u.ate << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("noiseless square loop with scan-to-map odometry lands on ground truth") {
  World world = rectRoom(12, 12);
  SimParams sp = pipelineSimParams(false);
  const auto frames = simulate(world, squareLoop(3, 3, 6), sp, 21);
  Config cfg = pipelineConfig(OdometryStrategy::S2M);
  Pipeline pipe(cfg);
  runSlam(pipe, {frames});
  CHECK(pipe.lostFrames() == 0);
  const AteSeries s = seriesOf(pipe);
  CHECK(s.ateEnd <= 2.0 * cfg.gridCellSize);
}

TEST_CASE("loop closures cut the accumulated drift of wheel odometry") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  sp.sigmaOmega = 1.5 * M_PI / 180.0;  // drift must dominate the comparison
  auto frames = shortened(simulate(world, ringLap(16, 10, 2), sp, 7), 5.6);

  Config cfg = pipelineConfig(OdometryStrategy::External);
  Pipeline pipe(cfg);
  runSlam(pipe, {frames});
  CHECK(pipe.lostFrames() == 0);
  CHECK(pipe.loopLinkCount() > 0);

  const AteSeries withLoops = seriesOf(pipe);

  // Odometry-only baseline over the same node stamps.
  std::vector<std::pair<Transform2, Transform2>> odomGt;
  for (const auto& f : frames) {
    odomGt.push_back({f.wheelOdomPose, f.gtPose});
  }
  const AteSeries odomOnly = ateSeries(odomGt);
  CHECK(withLoops.ateEnd < odomOnly.ateEnd);

  // Filter hygiene across the whole run.
  for (const auto& u : pipe.updates()) {
    CHECK(std::abs(u.posteriorSum - 1.0) < 1e-9);
  }
}

TEST_CASE("ate series drops when a loop closure is accepted") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  sp.sigmaOmega = 1.5 * M_PI / 180.0;
  auto frames = shortened(simulate(world, ringLap(16, 10, 2), sp, 13), 5.6);
  Config cfg = pipelineConfig(OdometryStrategy::External);
  Pipeline pipe(cfg);
  runSlam(pipe, {frames});
  const AteSeries s = seriesOf(pipe);
  bool sawDrop = false;
  for (std::size_t i = 0; i < pipe.updates().size(); ++i) {
    if (pipe.updates()[i].loopAccepted && i > 0 && s.series[i] < s.series[i - 1]) {
      sawDrop = true;
      break;
    }
  }
  CHECK(sawDrop);
  CHECK(s.ateMax >= s.ateEnd);
}

TEST_CASE("two overlapping sessions merge into one graph") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  const auto sessionA = shortened(simulate(world, ringLap(16, 10, 1), sp, 5), 5.6);
  const auto sessionB = shortened(simulate(world, ringLap(16, 10, 1), sp, 6), 5.6);

  Config cfg = pipelineConfig(OdometryStrategy::External);
  Pipeline pipe(cfg);
  runSlam(pipe, {sessionA, sessionB});

  // An inter-session constraint must exist...
  int crossLinks = 0;
  const auto& g = pipe.graph();
  for (const Link& l : g.links()) {
    if (l.kind == LinkKind::Neighbor) {
      continue;
    }
    if (g.node(l.from).session != g.node(l.to).session) {
      ++crossLinks;
    }
  }
  CHECK(crossLinks > 0);

  // ...and the graph must be a single connected component.
  std::set<NodeId> visited;
  std::vector<NodeId> stack{g.nodes().begin()->first};
  visited.insert(stack.back());
  while (!stack.empty()) {
    const NodeId id = stack.back();
    stack.pop_back();
    for (const NodeId next : g.neighbors(id)) {
      if (visited.insert(next).second) {
        stack.push_back(next);
      }
    }
  }
  CHECK(visited.size() == g.nodes().size());

  // Session-2 poses end up in session-1 coordinates: ATE stays small.
  const AteSeries s = seriesOf(pipe);
  CHECK(s.ateEnd < 1.0);
}

TEST_CASE("memory threshold bounds the working memory") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  auto frames = shortened(simulate(world, ringLap(16, 10, 2), sp, 7), 5.6);
  Config cfg = pipelineConfig(OdometryStrategy::External);
  cfg.memoryThr = 30;
  cfg.gridAssemble = false;
  Pipeline pipe(cfg);
  runSlam(pipe, {frames});
  int maxWm = 0;
  for (const auto& u : pipe.updates()) {
    maxWm = std::max(maxWm, u.wmSize);
  }
  // Retrieval may momentarily exceed the threshold within an update, but
  // the recorded post-update size stays within threshold + retrieved.
  CHECK(maxWm <= 30 + cfg.retrievalHops * 2 + 1);
  CHECK(pipe.memory().ltm().size() > 100);
  // The managed run still finds loop closures.
  CHECK(pipe.loopLinkCount() > 0);
}

TEST_CASE("identical seeds give byte-identical runs") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  const auto frames = shortened(simulate(world, ringLap(16, 10, 2), sp, 99), 5.6);
  Config cfg = pipelineConfig(OdometryStrategy::External);

  Pipeline a(cfg), b(cfg);
  runSlam(a, {frames});
  runSlam(b, {frames});
  CHECK(statsFingerprint(a) == statsFingerprint(b));
  CHECK(a.onlineGrid() == b.onlineGrid());
  CHECK(a.assembleFullMap() == b.assembleFullMap());
}

TEST_CASE("threaded two-stage pipeline matches the serial one") {
  World world = cornerLandmarkedRing(16, 10);
  SimParams sp = pipelineSimParams(true);
  const auto frames = shortened(simulate(world, ringLap(16, 10, 1), sp, 3), 5.6);
  Config cfg = pipelineConfig(OdometryStrategy::External);

  Pipeline serial(cfg), threaded(cfg);
  runSlam(serial, {frames}, /*threaded=*/false);
  runSlam(threaded, {frames}, /*threaded=*/true);
  CHECK(statsFingerprint(serial) == statsFingerprint(threaded));
  CHECK(serial.onlineGrid() == threaded.onlineGrid());
}

TEST_CASE("lost odometry skips frames but the run continues") {
  World world = rectRoom(12, 12);
  SimParams sp = pipelineSimParams(false);
  auto frames = simulate(world, {{{3, 3}, std::nullopt}, {{9, 3}, std::nullopt}}, sp, 4);
  // Teleport the middle of the run: scans jump with no external stream.
  const std::size_t n = frames.size();
  for (std::size_t i = n / 2; i < n; ++i) {
    for (auto& p : frames[i].scan.points) {
      p += Eigen::Vector2d(200.0, 200.0);
    }
  }
  Config cfg = pipelineConfig(OdometryStrategy::S2S);
  Pipeline pipe(cfg);
  runSlam(pipe, {frames});
  CHECK(pipe.lostFrames() > 0);
  CHECK(pipe.updates().size() > 0);
  CHECK(pipe.graph().nodes().size() > 0);
}

TEST_CASE("swapping the odometry source leaves mapping decisions untouched") {
  // The mapping modules see only the pose stream: feeding ground truth
  // through the external input or a perfect S2M track gives node-for-node
  // identical link structure when both tracks coincide.
  World world = rectRoom(12, 12);
  SimParams sp = pipelineSimParams(false);
  const auto frames = simulate(world, squareLoop(3, 3, 6), sp, 21);

  Config extCfg = pipelineConfig(OdometryStrategy::External);
  Pipeline ext(extCfg);
  runSlam(ext, {frames});

  Config s2mCfg = pipelineConfig(OdometryStrategy::S2M);
  Pipeline s2m(s2mCfg);
  runSlam(s2m, {frames});

  // Same node cadence (node creation is driven by stamps alone).
  REQUIRE(ext.updates().size() == s2m.updates().size());
  for (std::size_t i = 0; i < ext.updates().size(); ++i) {
    CHECK(ext.updates()[i].nodeId == s2m.updates()[i].nodeId);
    CHECK(ext.updates()[i].stamp == s2m.updates()[i].stamp);
  }
}
