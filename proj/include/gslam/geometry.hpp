#ifndef GSLAM_GEOMETRY_HPP
#define GSLAM_GEOMETRY_HPP

#include <Eigen/Core>

namespace gslam {

/// Wrap an angle to (-pi, pi].
double wrapAngle(double theta);

/// Rigid 2D transform / pose (x, y, theta). Theta is kept normalized to
/// (-pi, pi] by every operation that produces a Transform2.
struct Transform2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Transform2() = default;
  Transform2(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(wrapAngle(theta_)) {}

  static Transform2 identity() { return {}; }

  Eigen::Vector2d translation() const { return {x, y}; }
  Eigen::Matrix2d rotation() const;

  /// Apply this transform to a point.
  Eigen::Vector2d apply(const Eigen::Vector2d& p) const;

  bool isFinite() const;
};

/// Group composition a * b.
Transform2 compose(const Transform2& a, const Transform2& b);

Transform2 inverse(const Transform2& t);

/// Pose of b expressed in the frame of a: inverse(a) * b.
Transform2 relative(const Transform2& a, const Transform2& b);

bool approxEqual(const Transform2& a, const Transform2& b, double tol = 1e-12);

/// 3x3 symmetric positive-definite covariance over (x, y, theta).
/// Construction validates symmetry and positive definiteness.
class Covariance3 {
 public:
  /// Throws std::invalid_argument if m is not symmetric within 1e-12
  /// or not positive definite.
  explicit Covariance3(const Eigen::Matrix3d& m);

  static Covariance3 diagonal(double vx, double vy, double vtheta);
  static Covariance3 isotropic(double v) { return diagonal(v, v, v); }

  const Eigen::Matrix3d& matrix() const { return m_; }

  /// Inverse with a symmetric PD projection when the condition number
  /// exceeds 1e12 (eigenvalues floored at max_eig / 1e12).
  Eigen::Matrix3d information() const;

 private:
  Eigen::Matrix3d m_;
};

}  // namespace gslam

#endif  // GSLAM_GEOMETRY_HPP
