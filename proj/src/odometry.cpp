#include "gslam/odometry.hpp"

#include <cmath>

namespace gslam {
namespace {

Covariance3 externalCovariance(const Transform2& increment) {
  const double dist = std::hypot(increment.x, increment.y);
  const double st = 0.02 * dist + 1e-3;
  const double sr = 0.05 * std::abs(increment.theta) + 2e-3;
  return Covariance3::diagonal(st * st, st * st, sr * sr);
}

}  // namespace

LidarOdometry::LidarOdometry(const Config& config) : config_(config) {
  icpParams_.mode = config.icpPointToPlane ? IcpMode::PointToPlane
                                           : IcpMode::PointToPoint;
  icpParams_.maxIterations = config.icpMaxIterations;
  icpParams_.epsilonT = config.icpEpsilonT;
  icpParams_.epsilonTheta = config.icpEpsilonTheta;
  icpParams_.maxCorrespondenceDistance = config.icpMaxCorrespondenceDistance;
  icpParams_.minCorrespondenceRatio = config.icpMinCorrespondenceRatio;
  icpParams_.coarseDistance = config.icpCoarseDistance;
}

Transform2 LidarOdometry::predictMotion(
    double dt, const std::optional<Transform2>& externalIncrement) const {
  if (externalIncrement) {
    return *externalIncrement;
  }
  if (frames_ < 2) {
    return Transform2();
  }
  return Transform2(velocity_.x() * dt, velocity_.y() * dt, velocity_.z() * dt);
}

void LidarOdometry::reset(const Transform2& pose) {
  pose_ = pose;
  velocity_.setZero();
  lost_ = false;
  frames_ = 0;
  lastStamp_ = 0.0;
  model_ = Scan();
  keyPose_ = Transform2();
  lastExternalPose_.reset();
  lastComplexity_ = 1.0;
  lastSubstituted_ = false;
}

OdometryOutput LidarOdometry::lostOutput(double stamp) const {
  OdometryOutput out;
  out.pose = pose_;
  out.covariance = Covariance3::isotropic(kLostVariance);
  out.stamp = stamp;
  out.lost = true;
  return out;
}

OdometryOutput LidarOdometry::processScan(
    const Scan& scan, double stamp, const std::optional<Transform2>& externalPose) {
  lastSubstituted_ = false;

  std::optional<Transform2> externalInc;
  if (externalPose && lastExternalPose_) {
    externalInc = relative(*lastExternalPose_, *externalPose);
  }
  if (externalPose) {
    lastExternalPose_ = *externalPose;
  }

  // External-only mode passes the stream through.
  if (config_.odomStrategy == OdometryStrategy::External) {
    if (externalInc) {
      pose_ = compose(pose_, *externalInc);
    }
    ++frames_;
    lastStamp_ = stamp;
    OdometryOutput out;
    out.pose = pose_;
    out.covariance = externalCovariance(externalInc.value_or(Transform2()));
    out.stamp = stamp;
    return out;
  }

  const double dt = frames_ > 0 ? stamp - lastStamp_ : 0.0;

  Scan filtered = voxelFilter(scan, config_.icpVoxelSize);
  const bool scanUsable =
      static_cast<int>(filtered.size()) >= config_.icpNormalK;
  if (scanUsable) {
    filtered = estimateNormals(filtered, config_.icpNormalK);
  }

  if (frames_ == 0) {
    if (!scanUsable) {
      ++frames_;
      lastStamp_ = stamp;
      return lostOutput(stamp);
    }
    keyPose_ = pose_;
    updateModel(RegistrationResult{}, filtered, pose_);
    ++frames_;
    lastStamp_ = stamp;
    OdometryOutput out;
    out.pose = pose_;
    out.stamp = stamp;
    return out;
  }

  if (lost_ && !externalInc) {
    // Cannot recover with a null motion prediction.
    ++frames_;
    lastStamp_ = stamp;
    return lostOutput(stamp);
  }

  const Transform2 prediction = predictMotion(dt > 0.0 ? dt : 1.0, externalInc);
  const Transform2 predictedPose = compose(pose_, prediction);

  RegistrationResult result;
  const bool s2s = config_.odomStrategy == OdometryStrategy::S2S;
  if (scanUsable && !model_.empty()) {
    if (s2s) {
      result = icp(filtered, model_, relative(keyPose_, predictedPose), icpParams_);
    } else {
      result = icp(filtered, model_, predictedPose, icpParams_);
    }
  }

  if (!result.converged) {
    if (externalInc) {
      // Keep integrating the external stream so registration can recover.
      pose_ = compose(pose_, *externalInc);
      ++frames_;
      lastStamp_ = stamp;
      return lostOutput(stamp);
    }
    lost_ = true;
    velocity_.setZero();
    ++frames_;
    lastStamp_ = stamp;
    return lostOutput(stamp);
  }
  lost_ = false;

  Transform2 newPose =
      s2s ? compose(keyPose_, result.transform) : result.transform;

  lastComplexity_ = structuralComplexity(filtered);
  Transform2 increment = relative(pose_, newPose);
  if (lastComplexity_ < config_.pointToPlaneMinComplexity && externalInc) {
    // ICP cannot observe translation along the minor normal axis; take that
    // component from the external odometry and keep the ICP rotation.
    const Eigen::Vector2d axis = degenerateDirection(filtered);
    const Eigen::Vector2d perp(-axis.y(), axis.x());
    const Eigen::Vector2d tIcp(increment.x, increment.y);
    const Eigen::Vector2d tExt(externalInc->x, externalInc->y);
    const Eigen::Vector2d blended =
        axis * tExt.dot(axis) + perp * tIcp.dot(perp);
    increment = Transform2(blended.x(), blended.y(), increment.theta);
    newPose = compose(pose_, increment);
    lastSubstituted_ = true;
  }

  if (dt > 0.0) {
    velocity_ = Eigen::Vector3d(increment.x / dt, increment.y / dt,
                                increment.theta / dt);
  }
  pose_ = newPose;

  updateModel(result, filtered, newPose);

  ++frames_;
  lastStamp_ = stamp;
  OdometryOutput out;
  out.pose = pose_;
  out.covariance = result.covariance;
  out.stamp = stamp;
  return out;
}

void LidarOdometry::updateModel(const RegistrationResult& result,
                                const Scan& filteredBase, const Transform2& newPose) {
  const bool s2s = config_.odomStrategy == OdometryStrategy::S2S;
  const bool first = model_.empty();

  if (s2s) {
    if (first || result.correspondenceRatio < config_.scanKeyFrameThr) {
      model_ = filteredBase;
      keyPose_ = newPose;
    }
    return;
  }

  // S2M: map cloud lives in the odometry frame.
  if (!first && result.correspondenceRatio >= config_.scanKeyFrameThr) {
    return;
  }
  const Eigen::Matrix2d rot = newPose.rotation();
  Scan worldScan;
  worldScan.frame = ScanFrame::Base;
  worldScan.points.reserve(filteredBase.points.size());
  worldScan.normals.reserve(filteredBase.normals.size());
  for (std::size_t i = 0; i < filteredBase.points.size(); ++i) {
    worldScan.points.push_back(newPose.apply(filteredBase.points[i]));
    if (filteredBase.hasNormals()) {
      worldScan.normals.push_back(rot * filteredBase.normals[i]);
    }
  }
  if (first) {
    model_ = std::move(worldScan);
    return;
  }
  // Subtract the map from the new cloud, then append the remaining points.
  GridIndex index(model_.points, config_.scanSubtractRadius);
  for (std::size_t i = 0; i < worldScan.points.size(); ++i) {
    if (index.nearest(worldScan.points[i], config_.scanSubtractRadius) >= 0) {
      continue;
    }
    model_.points.push_back(worldScan.points[i]);
    if (worldScan.hasNormals() && model_.hasNormals()) {
      model_.normals.push_back(worldScan.normals[i]);
    }
  }
  const std::size_t cap = static_cast<std::size_t>(config_.scanMaxSize);
  if (model_.points.size() > cap) {
    const std::size_t excess = model_.points.size() - cap;
    model_.points.erase(model_.points.begin(), model_.points.begin() + excess);
    if (model_.hasNormals()) {
      model_.normals.erase(model_.normals.begin(), model_.normals.begin() + excess);
    }
  }
}

}  // namespace gslam
