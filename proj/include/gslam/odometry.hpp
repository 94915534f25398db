#ifndef GSLAM_ODOMETRY_HPP
#define GSLAM_ODOMETRY_HPP

#include <optional>

#include "gslam/config.hpp"
#include "gslam/geometry.hpp"
#include "gslam/registration.hpp"
#include "gslam/scan.hpp"

namespace gslam {

struct OdometryOutput {
  Transform2 pose;  // odometry frame
  Covariance3 covariance = Covariance3::isotropic(1e-9);
  double stamp = 0.0;
  bool lost = false;
};

constexpr double kLostVariance = 9999.0;

/// Scan-to-scan / scan-to-map lidar odometry with constant-velocity motion
/// prediction, an optional external odometry stream, complexity-gated
/// translation substitution along the degenerate axis, and MAD covariance.
///
/// Without an external stream, a failed registration latches the lost
/// state until reset(); with one, prediction stays valid and registration
/// can recover when the robot returns to known structure.
class LidarOdometry {
 public:
  explicit LidarOdometry(const Config& config);

  /// External poses are absolute in their own frame; increments are taken
  /// between consecutive calls.
  OdometryOutput processScan(const Scan& scan, double stamp,
                             const std::optional<Transform2>& externalPose);

  /// Constant-velocity prediction: the external increment when provided,
  /// identity while fewer than two frames have been processed, otherwise
  /// last velocity times dt.
  Transform2 predictMotion(double dt,
                           const std::optional<Transform2>& externalIncrement) const;

  void reset(const Transform2& pose = Transform2());

  const Transform2& pose() const { return pose_; }
  bool lost() const { return lost_; }
  int framesProcessed() const { return frames_; }
  std::size_t modelSize() const { return model_.points.size(); }
  const Scan& modelCloud() const { return model_; }
  double lastComplexity() const { return lastComplexity_; }
  bool lastSubstituted() const { return lastSubstituted_; }

 private:
  OdometryOutput lostOutput(double stamp) const;
  void updateModel(const RegistrationResult& result, const Scan& filteredBase,
                   const Transform2& newPose);

  Config config_;
  IcpParams icpParams_;

  Transform2 pose_;
  Eigen::Vector3d velocity_ = Eigen::Vector3d::Zero();  // vx, vy [m/s], omega [rad/s]
  bool lost_ = false;
  int frames_ = 0;
  double lastStamp_ = 0.0;

  // S2S: the key frame scan in base frame and its odometry pose.
  // S2M: the accumulated map cloud in the odometry frame (keyPose_ unused).
  Scan model_;
  Transform2 keyPose_;

  std::optional<Transform2> lastExternalPose_;
  double lastComplexity_ = 1.0;
  bool lastSubstituted_ = false;
};

}  // namespace gslam

#endif  // GSLAM_ODOMETRY_HPP
