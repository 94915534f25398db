#ifndef GSLAM_SIM_HPP
#define GSLAM_SIM_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include "gslam/descriptor.hpp"
#include "gslam/geometry.hpp"
#include "gslam/scan.hpp"

namespace gslam {

struct WallSegment {
  Eigen::Vector2d a;
  Eigen::Vector2d b;
};

struct Landmark {
  Eigen::Vector2d position;
  std::uint64_t descriptorSeed = 0;
};

/// Static 2D environment: wall segments block lidar rays and landmark
/// visibility; landmarks feed the place-recognition vocabulary.
struct World {
  std::vector<WallSegment> segments;
  std::vector<Landmark> landmarks;

  /// Axis-aligned bounding box of all segments, expanded by margin.
  void bounds(Eigen::Vector2d& lo, Eigen::Vector2d& hi, double margin = 0.5) const;
};

struct Waypoint {
  Eigen::Vector2d position;
  std::optional<double> speed;  // takes effect when driving toward this point
  double dwell = 0.0;           // pause at this waypoint [s]
  double spin = 0.0;            // rotate in place at this waypoint [rad]
};

struct SimParams {
  double sensorRate = 20.0;      // Hz
  double speed = 0.5;            // m/s, default drive speed
  double turnRate = 1.0;         // rad/s for in-place turns
  double lidarFov = 2.0 * M_PI;  // rad
  double lidarResolution = 2.0 * M_PI / 180.0;  // rad
  double lidarMaxRange = 30.0;   // m ("long range" default)
  double cameraFov = M_PI / 2.0;  // forward-facing
  double cameraRange = 10.0;      // m
  double sigmaV = 0.0;            // relative noise on linear velocity
  double sigmaOmega = 0.0;        // rad/s, absolute noise on angular velocity
  double sigmaRange = 0.0;        // m, lidar range noise
  double sigmaDescriptor = 0.05;  // per-component descriptor perturbation
  double sigmaBearing = 0.0;      // rad
  double sigmaLandmarkRange = 0.0;  // m
};

struct Observation {
  Descriptor descriptor;  // position filled from bearing/range
  double bearing = 0.0;   // rad, base frame
  double range = 0.0;     // m
};

struct SensorFrame {
  double stamp = 0.0;
  Transform2 gtPose;
  Transform2 wheelOdomPose;  // noisy integrated
  Scan scan;                 // base frame
  std::vector<Observation> observations;
};

/// Nominal descriptor vector of a landmark, before observation noise.
Descriptor landmarkDescriptor(std::uint64_t descriptorSeed);

/// Deterministic simulation of a waypoint run. Throws std::invalid_argument
/// when a waypoint leaves the world bounds or the path crosses a wall.
std::vector<SensorFrame> simulate(const World& world,
                                  const std::vector<Waypoint>& trajectory,
                                  const SimParams& params, std::uint64_t seed);

/// Emulate a shorter-range lidar: points beyond maxRange are removed and
/// their bearings become no-return rays.
Scan emulateShortRange(const Scan& scan, double maxRange);

/// First hit distance of the ray from origin along dir (unit), or nullopt.
std::optional<double> castRay(const World& world, const Eigen::Vector2d& origin,
                              const Eigen::Vector2d& dir, double maxRange);

}  // namespace gslam

#endif  // GSLAM_SIM_HPP
