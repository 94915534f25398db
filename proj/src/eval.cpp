#include "gslam/eval.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gslam {

Transform2 alignRigid(const std::vector<Eigen::Vector2d>& est,
                      const std::vector<Eigen::Vector2d>& gt) {
  const int n = static_cast<int>(est.size());
  if (n == 0) {
    return Transform2();
  }
  Eigen::Vector2d ce = Eigen::Vector2d::Zero();
  Eigen::Vector2d cg = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    ce += est[i];
    cg += gt[i];
  }
  ce /= n;
  cg /= n;
  double sdot = 0.0, scross = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d a = est[i] - ce;
    const Eigen::Vector2d b = gt[i] - cg;
    sdot += a.dot(b);
    scross += a.x() * b.y() - a.y() * b.x();
  }
  const double theta = (sdot == 0.0 && scross == 0.0) ? 0.0 : std::atan2(scross, sdot);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return Transform2(cg.x() - (c * ce.x() - s * ce.y()),
                    cg.y() - (s * ce.x() + c * ce.y()), theta);
}

double ateRmse(const std::vector<StampedPose>& estimated,
               const std::vector<StampedPose>& groundTruth, bool align,
               double stampTolerance) {
  std::vector<Eigen::Vector2d> est, gt;
  std::vector<StampedPose> sortedGt = groundTruth;
  std::sort(sortedGt.begin(), sortedGt.end(),
            [](const StampedPose& a, const StampedPose& b) { return a.stamp < b.stamp; });
  for (const auto& e : estimated) {
    // Nearest ground-truth stamp.
    const auto it = std::lower_bound(
        sortedGt.begin(), sortedGt.end(), e.stamp,
        [](const StampedPose& p, double s) { return p.stamp < s; });
    const StampedPose* best = nullptr;
    if (it != sortedGt.end()) {
      best = &*it;
    }
    if (it != sortedGt.begin()) {
      const StampedPose* before = &*std::prev(it);
      if (!best || std::abs(before->stamp - e.stamp) < std::abs(best->stamp - e.stamp)) {
        best = before;
      }
    }
    if (!best || std::abs(best->stamp - e.stamp) > stampTolerance) {
      continue;
    }
    est.push_back(e.pose.translation());
    gt.push_back(best->pose.translation());
  }
  if (est.size() < 2) {
    throw std::runtime_error("trajectories share fewer than two stamps");
  }
  const Transform2 t = align ? alignRigid(est, gt) : Transform2();
  double sum = 0.0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    sum += (t.apply(est[i]) - gt[i]).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(est.size()));
}

AteSeries ateSeries(const std::vector<std::pair<Transform2, Transform2>>& estGt) {
  AteSeries out;
  std::vector<Eigen::Vector2d> est, gt;
  est.reserve(estGt.size());
  gt.reserve(estGt.size());
  for (const auto& [e, g] : estGt) {
    est.push_back(e.translation());
    gt.push_back(g.translation());
    const Transform2 t = alignRigid(est, gt);
    const double err = (t.apply(est.back()) - gt.back()).norm();
    out.series.push_back(err);
  }
  if (!out.series.empty()) {
    out.ateEnd = out.series.back();
    out.ateMax = *std::max_element(out.series.begin(), out.series.end());
  }
  return out;
}

}  // namespace gslam
