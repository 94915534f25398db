#include "gslam/geometry.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace gslam {

double wrapAngle(double theta) {
  // Result in (-pi, pi]; remainder() returns [-pi, pi] with -pi possible.
  double w = std::remainder(theta, 2.0 * M_PI);
  if (w <= -M_PI) {
    w += 2.0 * M_PI;
  }
  return w;
}

Eigen::Matrix2d Transform2::rotation() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::Vector2d Transform2::apply(const Eigen::Vector2d& p) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {x + c * p.x() - s * p.y(), y + s * p.x() + c * p.y()};
}

bool Transform2::isFinite() const {
  return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta);
}

Transform2 compose(const Transform2& a, const Transform2& b) {
  const double c = std::cos(a.theta);
  const double s = std::sin(a.theta);
  return Transform2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y,
                    a.theta + b.theta);
}

Transform2 inverse(const Transform2& t) {
  const double c = std::cos(t.theta);
  const double s = std::sin(t.theta);
  return Transform2(-(c * t.x + s * t.y), -(-s * t.x + c * t.y), -t.theta);
}

Transform2 relative(const Transform2& a, const Transform2& b) {
  return compose(inverse(a), b);
}

bool approxEqual(const Transform2& a, const Transform2& b, double tol) {
  return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol &&
         std::abs(wrapAngle(a.theta - b.theta)) <= tol;
}

Covariance3::Covariance3(const Eigen::Matrix3d& m) : m_(m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("covariance has non-finite entries");
  }
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("covariance not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m_);
  if (es.eigenvalues().minCoeff() <= 0.0) {
    throw std::invalid_argument("covariance not positive definite");
  }
}

Covariance3 Covariance3::diagonal(double vx, double vy, double vtheta) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  m(0, 0) = vx;
  m(1, 1) = vy;
  m(2, 2) = vtheta;
  return Covariance3(m);
}

Eigen::Matrix3d Covariance3::information() const {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(m_);
  Eigen::Vector3d ev = es.eigenvalues();
  const double maxEv = ev.maxCoeff();
  const double floor = maxEv / 1e12;
  bool clamped = false;
  for (int i = 0; i < 3; ++i) {
    if (ev[i] < floor) {
      ev[i] = floor;
      clamped = true;
    }
  }
  if (!clamped) {
    return m_.inverse();
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
         es.eigenvectors().transpose();
}

}  // namespace gslam
