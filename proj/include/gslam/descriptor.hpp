#ifndef GSLAM_DESCRIPTOR_HPP
#define GSLAM_DESCRIPTOR_HPP

#include <vector>

#include <Eigen/Core>

namespace gslam {

constexpr int kDescriptorDim = 32;

/// Appearance descriptor of an observed landmark, paired with the
/// landmark's position in the observing robot's base frame. The vector is
/// unit-norm.
struct Descriptor {
  Eigen::Matrix<double, kDescriptorDim, 1> vector =
      Eigen::Matrix<double, kDescriptorDim, 1>::Zero();
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
};

double descriptorDistance(const Descriptor& a, const Descriptor& b);

}  // namespace gslam

#endif  // GSLAM_DESCRIPTOR_HPP
