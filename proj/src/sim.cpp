#include "gslam/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gslam/random.hpp"

namespace gslam {
namespace {

/// Intersection parameter t of ray o + t*d with segment, t >= 0, or nullopt.
std::optional<double> raySegment(const Eigen::Vector2d& o, const Eigen::Vector2d& d,
                                 const WallSegment& seg) {
  const Eigen::Vector2d e = seg.b - seg.a;
  const double denom = d.x() * (-e.y()) - d.y() * (-e.x());
  if (std::abs(denom) < 1e-15) {
    return std::nullopt;  // parallel
  }
  const Eigen::Vector2d rhs = seg.a - o;
  const double t = (rhs.x() * (-e.y()) - rhs.y() * (-e.x())) / denom;
  const double u = (d.x() * rhs.y() - d.y() * rhs.x()) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) {
    return std::nullopt;
  }
  return t;
}

bool segmentsCross(const Eigen::Vector2d& p0, const Eigen::Vector2d& p1,
                   const WallSegment& seg) {
  const Eigen::Vector2d d = p1 - p0;
  const double len = d.norm();
  if (len < 1e-12) {
    return false;
  }
  const auto t = raySegment(p0, d / len, seg);
  return t && *t <= len;
}

struct MotionStep {
  double v = 0.0;      // m/s
  double omega = 0.0;  // rad/s
};

/// Unicycle integration with midpoint heading; exact for pure rotation and
/// pure translation.
Transform2 integrate(const Transform2& pose, const MotionStep& cmd, double dt) {
  const double midTheta = pose.theta + 0.5 * cmd.omega * dt;
  return Transform2(pose.x + cmd.v * dt * std::cos(midTheta),
                    pose.y + cmd.v * dt * std::sin(midTheta),
                    pose.theta + cmd.omega * dt);
}

}  // namespace

void World::bounds(Eigen::Vector2d& lo, Eigen::Vector2d& hi, double margin) const {
  lo = Eigen::Vector2d(std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity());
  hi = -lo;
  for (const auto& s : segments) {
    lo = lo.cwiseMin(s.a).cwiseMin(s.b);
    hi = hi.cwiseMax(s.a).cwiseMax(s.b);
  }
  lo.array() -= margin;
  hi.array() += margin;
}

Descriptor landmarkDescriptor(std::uint64_t descriptorSeed) {
  Rng rng(descriptorSeed * 0x9e3779b97f4a7c15ULL + 1);
  Descriptor d;
  for (int i = 0; i < kDescriptorDim; ++i) {
    d.vector[i] = rng.gaussian();
  }
  d.vector.normalize();
  return d;
}

std::optional<double> castRay(const World& world, const Eigen::Vector2d& origin,
                              const Eigen::Vector2d& dir, double maxRange) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& seg : world.segments) {
    const auto t = raySegment(origin, dir, seg);
    if (t && *t < best) {
      best = *t;
    }
  }
  if (best > maxRange) {
    return std::nullopt;
  }
  return best;
}

std::vector<SensorFrame> simulate(const World& world,
                                  const std::vector<Waypoint>& trajectory,
                                  const SimParams& params, std::uint64_t seed) {
  if (trajectory.size() < 2) {
    throw std::invalid_argument("trajectory needs at least two waypoints");
  }
  if (world.segments.empty()) {
    throw std::invalid_argument("world has no segments");
  }
  for (const auto& s : world.segments) {
    if ((s.b - s.a).norm() <= 0.0) {
      throw std::invalid_argument("degenerate wall segment");
    }
  }
  Eigen::Vector2d lo, hi;
  world.bounds(lo, hi);
  for (const auto& w : trajectory) {
    if ((w.position.array() < lo.array()).any() ||
        (w.position.array() > hi.array()).any()) {
      throw std::invalid_argument("waypoint outside world bounds");
    }
  }
  for (std::size_t i = 0; i + 1 < trajectory.size(); ++i) {
    for (const auto& seg : world.segments) {
      if (segmentsCross(trajectory[i].position, trajectory[i + 1].position, seg)) {
        throw std::invalid_argument("trajectory crosses a wall");
      }
    }
  }

  Rng rng(seed);
  const double dt = 1.0 / params.sensorRate;
  const int rayCount = std::max(
      1, static_cast<int>(std::round(params.lidarFov / params.lidarResolution)));

  Transform2 gt(trajectory[0].position.x(), trajectory[0].position.y(), 0.0);
  {
    const Eigen::Vector2d d0 = trajectory[1].position - trajectory[0].position;
    gt.theta = std::atan2(d0.y(), d0.x());
  }
  Transform2 odom = gt;

  std::vector<SensorFrame> frames;
  auto emitFrame = [&](double stamp) {
    SensorFrame f;
    f.stamp = stamp;
    f.gtPose = gt;
    f.wheelOdomPose = odom;
    f.scan.frame = ScanFrame::Base;
    f.scan.stamp = stamp;
    f.scan.maxRange = params.lidarMaxRange;
    for (int r = 0; r < rayCount; ++r) {
      const double bearing =
          -0.5 * params.lidarFov + r * params.lidarFov / rayCount;
      const double worldAngle = gt.theta + bearing;
      const Eigen::Vector2d dir(std::cos(worldAngle), std::sin(worldAngle));
      const auto hit = castRay(world, gt.translation(), dir, params.lidarMaxRange);
      if (!hit) {
        f.scan.missAngles.push_back(bearing);
        continue;
      }
      double range = *hit + rng.gaussian(params.sigmaRange);
      range = std::clamp(range, 1e-6, params.lidarMaxRange);
      f.scan.points.emplace_back(range * std::cos(bearing),
                                 range * std::sin(bearing));
    }
    for (const auto& lm : world.landmarks) {
      const Eigen::Vector2d rel = lm.position - gt.translation();
      const double dist = rel.norm();
      if (dist > params.cameraRange || dist < 1e-9) {
        continue;
      }
      const double bearing = wrapAngle(std::atan2(rel.y(), rel.x()) - gt.theta);
      if (std::abs(bearing) > 0.5 * params.cameraFov) {
        continue;
      }
      // Occlusion: a wall strictly between robot and landmark hides it.
      const auto block = castRay(world, gt.translation(), rel / dist, dist - 1e-9);
      if (block) {
        continue;
      }
      Observation obs;
      obs.bearing = wrapAngle(bearing + rng.gaussian(params.sigmaBearing));
      obs.range = std::max(1e-6, dist + rng.gaussian(params.sigmaLandmarkRange));
      obs.descriptor = landmarkDescriptor(lm.descriptorSeed);
      for (int i = 0; i < kDescriptorDim; ++i) {
        obs.descriptor.vector[i] += rng.gaussian(params.sigmaDescriptor);
      }
      obs.descriptor.vector.normalize();
      obs.descriptor.position = Eigen::Vector2d(obs.range * std::cos(obs.bearing),
                                                obs.range * std::sin(obs.bearing));
      f.observations.push_back(std::move(obs));
    }
    frames.push_back(std::move(f));
  };

  double stamp = 0.0;
  emitFrame(stamp);
  auto dwellPhase = [&](double dwell) {
    const int pauseSteps = static_cast<int>(std::round(dwell / dt));
    for (int k = 0; k < pauseSteps; ++k) {
      MotionStep noisy;
      noisy.omega = rng.gaussian(params.sigmaOmega);
      odom = integrate(odom, noisy, dt);
      stamp += dt;
      emitFrame(stamp);
    }
  };
  auto spinPhase = [&](double spin) {
    double remaining = spin;
    while (std::abs(remaining) > 1e-9) {
      MotionStep cmd;
      cmd.omega = std::clamp(remaining / dt, -params.turnRate, params.turnRate);
      gt = integrate(gt, cmd, dt);
      remaining -= cmd.omega * dt;
      MotionStep noisy = cmd;
      noisy.omega += rng.gaussian(params.sigmaOmega);
      odom = integrate(odom, noisy, dt);
      stamp += dt;
      emitFrame(stamp);
    }
  };
  dwellPhase(trajectory[0].dwell);
  spinPhase(trajectory[0].spin);
  double speed = trajectory[1].speed.value_or(params.speed);
  for (std::size_t wp = 1; wp < trajectory.size(); ++wp) {
    if (trajectory[wp].speed) {
      speed = *trajectory[wp].speed;
    }
    const Eigen::Vector2d target = trajectory[wp].position;
    // Turn in place toward the target heading.
    while (true) {
      const Eigen::Vector2d rel = target - gt.translation();
      if (rel.norm() < 1e-9) {
        break;
      }
      const double want = std::atan2(rel.y(), rel.x());
      const double diff = wrapAngle(want - gt.theta);
      if (std::abs(diff) < 1e-9) {
        break;
      }
      MotionStep cmd;
      cmd.omega = std::clamp(diff / dt, -params.turnRate, params.turnRate);
      gt = integrate(gt, cmd, dt);
      MotionStep noisy = cmd;
      noisy.v += rng.gaussian(params.sigmaV * std::abs(cmd.v));
      noisy.omega += rng.gaussian(params.sigmaOmega);
      odom = integrate(odom, noisy, dt);
      stamp += dt;
      emitFrame(stamp);
    }
    // Drive straight to the target.
    while (true) {
      const Eigen::Vector2d rel = target - gt.translation();
      const double remaining = rel.norm();
      if (remaining < 1e-9) {
        break;
      }
      MotionStep cmd;
      cmd.v = std::min(speed, remaining / dt);
      gt = integrate(gt, cmd, dt);
      MotionStep noisy = cmd;
      noisy.v += rng.gaussian(params.sigmaV * std::abs(cmd.v));
      noisy.omega += rng.gaussian(params.sigmaOmega);
      odom = integrate(odom, noisy, dt);
      stamp += dt;
      emitFrame(stamp);
    }
    // Dwell and optional in-place spin; only the angular odometry noise
    // accumulates while paused.
    dwellPhase(trajectory[wp].dwell);
    spinPhase(trajectory[wp].spin);
  }
  return frames;
}

Scan emulateShortRange(const Scan& scan, double maxRange) {
  if (!(maxRange > 0.0)) {
    throw std::invalid_argument("max range must be > 0");
  }
  Scan out;
  out.frame = scan.frame;
  out.stamp = scan.stamp;
  out.maxRange = scan.maxRange > 0.0 ? std::min(scan.maxRange, maxRange) : maxRange;
  out.missAngles = scan.missAngles;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    if (p.norm() <= maxRange) {
      out.points.push_back(p);
      if (scan.hasNormals()) {
        out.normals.push_back(scan.normals[i]);
      }
    } else {
      out.missAngles.push_back(std::atan2(p.y(), p.x()));
    }
  }
  return out;
}

}  // namespace gslam
