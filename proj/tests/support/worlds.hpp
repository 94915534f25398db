#ifndef GSLAM_TESTS_WORLDS_HPP
#define GSLAM_TESTS_WORLDS_HPP

#include <cstdint>
#include <vector>

#include "gslam/config.hpp"
#include "gslam/sim.hpp"

namespace gslam::testsupport {

/// Axis-aligned rectangular room [0,w] x [0,h].
World rectRoom(double w, double h);

/// Square ring corridor: outer square [0,outer]^2, inner square centered,
/// corridor width (outer - inner) / 2 on each side.
World ringCorridor(double outer, double inner);

/// Two parallel walls y = 0 and y = width from x = 0 to x = length
/// (open ends: a featureless corridor for short-range lidars).
World openCorridor(double length, double width);

/// Landmarks spaced `spacing` apart along every wall segment, nudged into
/// the interior by `inset` along the segment normal toward `interior`.
void addWallLandmarks(World& world, double spacing, double inset,
                      const Eigen::Vector2d& interior, std::uint64_t seedBase = 100);

/// Rectangular loop path with corner waypoints, closed back to the start.
std::vector<Waypoint> squareLoop(double x0, double y0, double side, int laps = 1);

SimParams fastScanParams();

/// Ring corridor with landmarks every `spacing` meters on both corridor
/// walls, nudged into the corridor.
World landmarkedRing(double outer, double inner, double spacing = 1.0);

/// Ring corridor with landmarks only near the corridor corners. The bare
/// straightaways give rehearsal a scene boundary where node weights can
/// settle, which is what keeps revisit candidates in WM under memory
/// management.
World cornerLandmarkedRing(double outer, double inner, double spacing = 0.2,
                           double cornerRadius = 3.0);

/// Lap path along the corridor centerline of a ring world.
std::vector<Waypoint> ringLap(double outer, double inner, int laps = 1);

/// Simulation preset for pipeline runs: 10 Hz sensor, 0.5 m/s, forward
/// 90 degree camera, wheel odometry noise matching the acceptance runs.
SimParams pipelineSimParams(bool odometryNoise);

/// Config preset for simulator pipeline runs (denser landmark matching
/// thresholds than the camera-tuned defaults).
Config pipelineConfig(OdometryStrategy strategy);

}  // namespace gslam::testsupport

#endif  // GSLAM_TESTS_WORLDS_HPP
