#ifndef GSLAM_REGISTRATION_HPP
#define GSLAM_REGISTRATION_HPP

#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gslam/geometry.hpp"
#include "gslam/scan.hpp"

namespace gslam {

/// Downsample to at most one point per voxel cell; the cell centroid is
/// retained. Output order follows the first occurrence of each cell.
Scan voxelFilter(const Scan& scan, double voxel);

/// Per-point normals from the k-nearest-neighbor covariance; the normal is
/// the eigenvector of the smaller eigenvalue, sign-flipped toward the
/// sensor origin. Throws std::invalid_argument when the scan has fewer
/// than k points.
Scan estimateNormals(const Scan& scan, int k);

/// Structural complexity: twice the second eigenvalue of the PCA of the
/// scan's normal vectors, clamped to [0, 1]. Near zero for corridors.
/// Throws std::invalid_argument when normals are missing.
double structuralComplexity(const Scan& scan);

/// Minor principal axis of the normal covariance: the direction in which
/// ICP translation is unobservable for low-complexity scans.
Eigen::Vector2d degenerateDirection(const Scan& scan);

enum class IcpMode { PointToPoint, PointToPlane };

struct IcpParams {
  IcpMode mode = IcpMode::PointToPlane;
  int maxIterations = 30;
  double epsilonT = 1e-5;
  double epsilonTheta = 1e-5;
  double maxCorrespondenceDistance = 0.1;
  double minCorrespondenceRatio = 0.1;
  /// Initial correspondence radius; halves per iteration down to
  /// maxCorrespondenceDistance. Widens the convergence basin for guess
  /// errors beyond the final radius.
  double coarseDistance = 0.5;
};

/// One matched correspondence after the final ICP iteration, used for the
/// MAD covariance. residual = target point - transformed source point,
/// point = matched target point (both in the target frame).
struct ResidualSample {
  Eigen::Vector2d residual;
  Eigen::Vector2d point;
};

struct RegistrationResult {
  Transform2 transform;            // maps source into the target frame
  double correspondenceRatio = 0.0;  // matched / source point count
  std::vector<ResidualSample> inliers;
  Covariance3 covariance = Covariance3::isotropic(1e-9);
  bool converged = false;
  std::vector<double> iterationResiduals;  // mean matched distance per iteration
};

/// Iterative closest point between two scans. Non-convergence and a
/// correspondence ratio below the floor are reported through
/// converged=false, not exceptions. Point-to-plane needs target normals
/// and falls back to point-to-point without them.
RegistrationResult icp(const Scan& source, const Scan& target,
                       const Transform2& guess, const IcpParams& params);

/// Robust covariance from registration residuals: per-axis variance
/// (1.4826 * MAD)^2 on x and y, theta variance from tangential residuals
/// divided by the mean point radius. All axes floored at 1e-9.
/// Throws std::invalid_argument with fewer than 4 samples.
Covariance3 madCovariance(std::span<const ResidualSample> samples);

/// Deterministic nearest-neighbor index over a fixed point set, bucketed
/// on a uniform grid with cell size equal to the query radius.
class GridIndex {
 public:
  GridIndex(std::span<const Eigen::Vector2d> points, double cellSize);

  /// Index of the nearest point within maxDist, or -1. Ties resolve to the
  /// lowest point index.
  int nearest(const Eigen::Vector2d& q, double maxDist) const;

  /// Indices of the two nearest points within maxDist (second may be -1).
  std::pair<int, int> twoNearest(const Eigen::Vector2d& q, double maxDist) const;

 private:
  struct CellKey {
    long long x, y;
    bool operator==(const CellKey&) const = default;
  };
  struct CellHash {
    std::size_t operator()(const CellKey& k) const;
  };
  std::vector<Eigen::Vector2d> points_;
  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> buckets_;
};

}  // namespace gslam

#endif  // GSLAM_REGISTRATION_HPP
