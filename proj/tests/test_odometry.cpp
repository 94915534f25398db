#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gslam/odometry.hpp"
#include "gslam/sim.hpp"
#include "worlds.hpp"

using namespace gslam;
using namespace gslam::testsupport;

namespace {

Config s2sConfig() {
  Config c;
  c.odomStrategy = OdometryStrategy::S2S;
  return c;
}

Config s2mConfig() {
  Config c;
  c.odomStrategy = OdometryStrategy::S2M;
  return c;
}

Scan roomScan(const World& world, const Transform2& pose, double maxRange = 30.0,
              double resolutionDeg = 1.0) {
  SimParams params;
  params.lidarMaxRange = maxRange;
  params.lidarResolution = resolutionDeg * M_PI / 180.0;
  Scan scan;
  scan.frame = ScanFrame::Base;
  scan.maxRange = maxRange;
  const int rays = static_cast<int>(std::round(2.0 * M_PI / params.lidarResolution));
  for (int r = 0; r < rays; ++r) {
    const double bearing = -M_PI + r * 2.0 * M_PI / rays;
    const double angle = pose.theta + bearing;
    const Eigen::Vector2d dir(std::cos(angle), std::sin(angle));
    const auto hit = castRay(world, pose.translation(), dir, maxRange);
    if (hit) {
      scan.points.emplace_back(*hit * std::cos(bearing), *hit * std::sin(bearing));
    } else {
      scan.missAngles.push_back(bearing);
    }
  }
  return scan;
}

}  // namespace

TEST_CASE("motion prediction: identity at init, velocity model after") {
  LidarOdometry odom(s2sConfig());
  CHECK(approxEqual(odom.predictMotion(0.1, std::nullopt), Transform2()));
  // External increments pass through unconditionally.
  const Transform2 ext(0.05, 0.0, 0.01);
  CHECK(approxEqual(odom.predictMotion(0.1, ext), ext));

  // Feed two frames so the velocity estimate exists.
  const World world = rectRoom(10, 8);
  odom.processScan(roomScan(world, Transform2(3, 3, 0)), 0.0, std::nullopt);
  odom.processScan(roomScan(world, Transform2(3.1, 3, 0)), 0.1, std::nullopt);
  const Transform2 pred = odom.predictMotion(0.1, std::nullopt);
  CHECK(pred.x == doctest::Approx(0.1).epsilon(1e-2));
  CHECK(std::abs(pred.y) < 1e-3);
}

TEST_CASE("stationary robot yields identity increments") {
  const World world = rectRoom(10, 8);
  LidarOdometry odom(s2sConfig());
  const Scan scan = roomScan(world, Transform2(4, 4, 0.3));
  odom.processScan(scan, 0.0, std::nullopt);
  const OdometryOutput out1 = odom.processScan(scan, 0.1, std::nullopt);
  const OdometryOutput out2 = odom.processScan(scan, 0.2, std::nullopt);
  CHECK_FALSE(out1.lost);
  CHECK(std::abs(out1.pose.x) < 1e-9);
  CHECK(std::abs(out1.pose.y) < 1e-9);
  CHECK(std::abs(out2.pose.theta) < 1e-9);
}

TEST_CASE("noiseless square path stays close to ground truth (S2S)") {
  World world = rectRoom(14, 14);
  SimParams params = fastScanParams();
  params.lidarResolution = M_PI / 360.0;  // 0.5 deg
  const auto frames = simulate(world, squareLoop(4, 4, 6), params, 11);
  LidarOdometry odom(s2sConfig());
  OdometryOutput out;
  for (const auto& f : frames) {
    out = odom.processScan(f.scan, f.stamp, std::nullopt);
    REQUIRE_FALSE(out.lost);
  }
  // Odometry frame starts at the first ground-truth pose.
  const Transform2 start = frames.front().gtPose;
  const Transform2 endInWorld = compose(start, out.pose);
  const Transform2 gtEnd = frames.back().gtPose;
  CHECK(std::abs(endInWorld.x - gtEnd.x) < 1e-3);
  CHECK(std::abs(endInWorld.y - gtEnd.y) < 1e-3);
  CHECK(std::abs(wrapAngle(endInWorld.theta - gtEnd.theta)) < 1e-3);
}

TEST_CASE("keyframe updates only below the correspondence ratio threshold") {
  const World world = rectRoom(10, 8);
  Config config = s2sConfig();
  config.scanKeyFrameThr = 0.9;
  LidarOdometry odom(config);
  const Scan scan = roomScan(world, Transform2(4, 4, 0));
  odom.processScan(scan, 0.0, std::nullopt);
  const std::size_t keySize = odom.modelSize();
  // Identical scan: ratio 1.0 >= 0.9, key frame unchanged (same object).
  odom.processScan(scan, 0.1, std::nullopt);
  CHECK(odom.modelSize() == keySize);
}

TEST_CASE("s2m map subtraction adds nothing when points overlap") {
  const World world = rectRoom(10, 8);
  Config config = s2mConfig();
  LidarOdometry odom(config);
  const Scan scan = roomScan(world, Transform2(4, 4, 0));
  odom.processScan(scan, 0.0, std::nullopt);
  const std::size_t mapSize = odom.modelSize();
  // Same pose again: every point is within the subtract radius of the map.
  // The ratio is 1.0 so the map update is skipped outright; force a lower
  // threshold to exercise the subtraction path.
  Config eager = config;
  eager.scanKeyFrameThr = 1.01;  // always update
  LidarOdometry odom2(eager);
  odom2.processScan(scan, 0.0, std::nullopt);
  const std::size_t size1 = odom2.modelSize();
  odom2.processScan(scan, 0.1, std::nullopt);
  CHECK(odom2.modelSize() == size1);
  CHECK(odom.modelSize() == mapSize);
}

TEST_CASE("s2m map cloud stays bounded and evicts oldest points first") {
  // Long room with wall ribs so the scan geometry stays observable
  // everywhere along the path.
  World world = rectRoom(40, 10);
  for (double x = 6; x < 36; x += 5) {
    world.segments.push_back({{x, 0}, {x, 1}});
    world.segments.push_back({{x, 9}, {x, 10}});
  }
  SimParams params = fastScanParams();
  params.lidarMaxRange = 8.0;
  const auto frames = simulate(
      world, {{{4, 5}, std::nullopt}, {{36, 5}, std::nullopt}}, params, 2);
  Config config = s2mConfig();
  config.scanMaxSize = 400;
  config.scanKeyFrameThr = 1.01;  // update map every frame
  LidarOdometry odom(config);
  for (const auto& f : frames) {
    const OdometryOutput out = odom.processScan(f.scan, f.stamp, std::nullopt);
    REQUIRE_FALSE(out.lost);
    CHECK(odom.modelSize() <= 400);
  }
  // The map tracks the robot: the oldest (leftmost) points got evicted.
  // The map cloud lives in the odometry frame anchored at the start pose.
  double minX = 1e9;
  for (const auto& p : odom.modelCloud().points) {
    minX = std::min(minX, p.x());
  }
  CHECK(minX > 4.0);
}

TEST_CASE("lost latches without external prediction and recovers with reset") {
  const World world = rectRoom(10, 8);
  LidarOdometry odom(s2sConfig());
  const Scan good = roomScan(world, Transform2(4, 4, 0));
  odom.processScan(good, 0.0, std::nullopt);
  odom.processScan(good, 0.1, std::nullopt);

  Scan far = good;
  for (auto& p : far.points) {
    p += Eigen::Vector2d(50.0, 50.0);
  }
  const OdometryOutput lost1 = odom.processScan(far, 0.2, std::nullopt);
  CHECK(lost1.lost);
  CHECK(lost1.covariance.matrix()(0, 0) == doctest::Approx(9999.0));
  CHECK(lost1.covariance.matrix()(2, 2) == doctest::Approx(9999.0));

  // Even a good scan cannot recover: the motion prediction is null.
  const OdometryOutput lost2 = odom.processScan(good, 0.3, std::nullopt);
  CHECK(lost2.lost);
  CHECK(lost2.covariance.matrix()(1, 1) == doctest::Approx(9999.0));

  odom.reset();
  odom.processScan(good, 0.4, std::nullopt);
  const OdometryOutput ok = odom.processScan(good, 0.5, std::nullopt);
  CHECK_FALSE(ok.lost);
}

TEST_CASE("lost recovers through the external prediction") {
  const World world = rectRoom(10, 8);
  Config config = s2mConfig();
  LidarOdometry odom(config);
  const Scan good = roomScan(world, Transform2(4, 4, 0));
  odom.processScan(good, 0.0, Transform2(0, 0, 0));
  odom.processScan(good, 0.1, Transform2(0, 0, 0));
  Scan far = good;
  for (auto& p : far.points) {
    p += Eigen::Vector2d(50.0, 50.0);
  }
  const OdometryOutput lost = odom.processScan(far, 0.2, Transform2(0.0, 0, 0));
  CHECK(lost.lost);
  // External stream keeps the prediction valid; a matching scan recovers.
  const OdometryOutput back = odom.processScan(good, 0.3, Transform2(0.0, 0, 0));
  CHECK_FALSE(back.lost);
}

TEST_CASE("corridor: external odometry fills the degenerate direction") {
  // Two parallel walls; scans carry no along-corridor information.
  World world = openCorridor(60, 4);
  Config config = s2mConfig();
  config.odomStrategy = OdometryStrategy::ExternalToS2M;
  LidarOdometry odom(config);

  const double y = 2.0;
  Scan s0 = roomScan(world, Transform2(30, y, 0), 5.0);
  odom.processScan(s0, 0.0, Transform2(30, y, 0));

  // External odometry advances 0.1 m along the corridor; the scan alone
  // cannot see this.
  Scan s1 = roomScan(world, Transform2(30.1, y, 0), 5.0);
  const OdometryOutput out = odom.processScan(s1, 0.1, Transform2(30.1, y, 0));
  REQUIRE_FALSE(out.lost);
  CHECK(odom.lastComplexity() < 0.02);
  CHECK(odom.lastSubstituted());
  CHECK(out.pose.x == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(std::abs(out.pose.y) < 1e-6);
  // Rotation comes from ICP, untouched by the substitution.
  CHECK(std::abs(out.pose.theta) < 1e-6);
}

TEST_CASE("degenerate substitution never alters the ICP rotation") {
  World world = openCorridor(60, 4);
  Config config;
  config.odomStrategy = OdometryStrategy::ExternalToS2M;
  LidarOdometry withExt(config);
  Config pure = config;
  pure.odomStrategy = OdometryStrategy::S2M;
  LidarOdometry without(pure);

  const Scan s0 = roomScan(world, Transform2(30, 2, 0), 5.0);
  const Scan s1 = roomScan(world, Transform2(30.05, 2, 0.002), 5.0);
  withExt.processScan(s0, 0.0, Transform2(30, 2, 0));
  without.processScan(s0, 0.0, std::nullopt);
  const OdometryOutput a = withExt.processScan(s1, 0.1, Transform2(30.05, 2, 0.002));
  const OdometryOutput b = without.processScan(s1, 0.1, std::nullopt);
  REQUIRE(withExt.lastSubstituted());
  REQUIRE_FALSE(without.lastSubstituted());
  // Same rotation estimate from ICP either way (tiny numeric play allowed:
  // the ICP guess differs between the two runs).
  CHECK(std::abs(wrapAngle(a.pose.theta - b.pose.theta)) < 2e-4);
}
