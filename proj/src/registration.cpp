#include "gslam/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <Eigen/Dense>

namespace gslam {
namespace {

long long cellCoord(double v, double cell) {
  return static_cast<long long>(std::floor(v / cell));
}

double median(std::vector<double> v) {
  const std::size_t n = v.size();
  std::sort(v.begin(), v.end());
  if (n % 2 == 1) {
    return v[n / 2];
  }
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double madScale(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    dev[i] = std::abs(v[i] - m);
  }
  return 1.4826 * median(std::move(dev));
}

/// Second moment of the normals about zero. ICP observability of
/// translation along d is sum((n.d)^2), so the moment is taken about the
/// origin, not the mean: a corner (two normal directions) must register as
/// complex while a corridor (one +/- pair) must not.
Eigen::Matrix2d normalCovariance(const Scan& scan) {
  if (!scan.hasNormals()) {
    throw std::invalid_argument("scan has no normals");
  }
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& n : scan.normals) {
    cov += n * n.transpose();
  }
  cov /= static_cast<double>(scan.normals.size());
  return cov;
}

}  // namespace

Scan voxelFilter(const Scan& scan, double voxel) {
  if (!(voxel > 0.0)) {
    throw std::invalid_argument("voxel size must be > 0");
  }
  struct Accum {
    Eigen::Vector2d pointSum = Eigen::Vector2d::Zero();
    Eigen::Vector2d normalSum = Eigen::Vector2d::Zero();
    int count = 0;
  };
  struct Key {
    long long x, y;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      return std::hash<long long>()(k.x * 73856093LL ^ k.y * 19349663LL);
    }
  };
  std::unordered_map<Key, int, KeyHash> cellToSlot;
  std::vector<Accum> slots;
  for (std::size_t i = 0; i < scan.points.size(); ++i) {
    const auto& p = scan.points[i];
    const Key key{cellCoord(p.x(), voxel), cellCoord(p.y(), voxel)};
    auto [it, inserted] = cellToSlot.try_emplace(key, static_cast<int>(slots.size()));
    if (inserted) {
      slots.emplace_back();
    }
    Accum& a = slots[it->second];
    a.pointSum += p;
    if (scan.hasNormals()) {
      a.normalSum += scan.normals[i];
    }
    ++a.count;
  }
  Scan out;
  out.frame = scan.frame;
  out.stamp = scan.stamp;
  out.missAngles = scan.missAngles;
  out.maxRange = scan.maxRange;
  out.points.reserve(slots.size());
  if (scan.hasNormals()) {
    out.normals.reserve(slots.size());
  }
  for (const Accum& a : slots) {
    out.points.push_back(a.pointSum / a.count);
    if (scan.hasNormals()) {
      const double n = a.normalSum.norm();
      out.normals.push_back(n > 1e-12 ? Eigen::Vector2d(a.normalSum / n)
                                      : Eigen::Vector2d(1.0, 0.0));
    }
  }
  return out;
}

Scan estimateNormals(const Scan& scan, int k) {
  const int n = static_cast<int>(scan.points.size());
  if (n < k) {
    throw std::invalid_argument("scan smaller than normal neighborhood k");
  }
  Scan out = scan;
  out.normals.assign(scan.points.size(), Eigen::Vector2d::Zero());
  std::vector<std::pair<double, int>> dist(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d& p = scan.points[i];
    for (int j = 0; j < n; ++j) {
      dist[j] = {(scan.points[j] - p).squaredNorm(), j};
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int j = 0; j < k; ++j) {
      mean += scan.points[dist[j].second];
    }
    mean /= k;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int j = 0; j < k; ++j) {
      const Eigen::Vector2d d = scan.points[dist[j].second] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    // Eigenvalues ascending: column 0 is the smaller-eigenvalue direction.
    Eigen::Vector2d normal = es.eigenvectors().col(0);
    if (normal.dot(-p) < 0.0) {
      normal = -normal;
    }
    out.normals[i] = normal;
  }
  return out;
}

double structuralComplexity(const Scan& scan) {
  const Eigen::Matrix2d cov = normalCovariance(scan);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double second = es.eigenvalues()(0);  // ascending order
  return std::clamp(2.0 * second, 0.0, 1.0);
}

Eigen::Vector2d degenerateDirection(const Scan& scan) {
  const Eigen::Matrix2d cov = normalCovariance(scan);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  return es.eigenvectors().col(0);
}

std::size_t GridIndex::CellHash::operator()(const CellKey& k) const {
  return std::hash<long long>()(k.x * 73856093LL ^ k.y * 19349663LL);
}

GridIndex::GridIndex(std::span<const Eigen::Vector2d> points, double cellSize)
    : points_(points.begin(), points.end()), cell_(cellSize) {
  for (int i = 0; i < static_cast<int>(points_.size()); ++i) {
    const CellKey key{cellCoord(points_[i].x(), cell_), cellCoord(points_[i].y(), cell_)};
    buckets_[key].push_back(i);
  }
}

int GridIndex::nearest(const Eigen::Vector2d& q, double maxDist) const {
  return twoNearest(q, maxDist).first;
}

std::pair<int, int> GridIndex::twoNearest(const Eigen::Vector2d& q, double maxDist) const {
  const long long cx = cellCoord(q.x(), cell_);
  const long long cy = cellCoord(q.y(), cell_);
  const double maxSq = maxDist * maxDist;
  const long long range = std::max(1LL, static_cast<long long>(std::ceil(maxDist / cell_)));
  double best1 = std::numeric_limits<double>::infinity();
  double best2 = std::numeric_limits<double>::infinity();
  int idx1 = -1, idx2 = -1;
  for (long long dx = -range; dx <= range; ++dx) {
    for (long long dy = -range; dy <= range; ++dy) {
      const auto it = buckets_.find(CellKey{cx + dx, cy + dy});
      if (it == buckets_.end()) {
        continue;
      }
      for (const int i : it->second) {
        const double d = (points_[i] - q).squaredNorm();
        if (d > maxSq) {
          continue;
        }
        if (d < best1 || (d == best1 && i < idx1)) {
          best2 = best1;
          idx2 = idx1;
          best1 = d;
          idx1 = i;
        } else if (d < best2 || (d == best2 && i < idx2)) {
          best2 = d;
          idx2 = i;
        }
      }
    }
  }
  return {idx1, idx2};
}

namespace {

Transform2 procrustes(const std::vector<Eigen::Vector2d>& p,
                      const std::vector<Eigen::Vector2d>& q) {
  const int n = static_cast<int>(p.size());
  Eigen::Vector2d cp = Eigen::Vector2d::Zero();
  Eigen::Vector2d cq = Eigen::Vector2d::Zero();
  for (int i = 0; i < n; ++i) {
    cp += p[i];
    cq += q[i];
  }
  cp /= n;
  cq /= n;
  double sdot = 0.0, scross = 0.0;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector2d a = p[i] - cp;
    const Eigen::Vector2d b = q[i] - cq;
    sdot += a.dot(b);
    scross += a.x() * b.y() - a.y() * b.x();
  }
  const double theta = std::atan2(scross, sdot);
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const Eigen::Vector2d t = cq - Eigen::Vector2d(c * cp.x() - s * cp.y(),
                                                 s * cp.x() + c * cp.y());
  return Transform2(t.x(), t.y(), theta);
}

Transform2 pointToPlaneStep(const std::vector<Eigen::Vector2d>& p,
                            const std::vector<Eigen::Vector2d>& q,
                            const std::vector<Eigen::Vector2d>& n) {
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const Eigen::Vector2d perp(-p[i].y(), p[i].x());
    Eigen::Vector3d row(n[i].x(), n[i].y(), n[i].dot(perp));
    const double b = n[i].dot(q[i] - p[i]);
    ata += row * row.transpose();
    atb += row * b;
  }
  // Tiny damping keeps unobservable directions (corridor sliding) at zero.
  const double damp = 1e-9 * std::max(1.0, ata.trace());
  ata += damp * Eigen::Matrix3d::Identity();
  const Eigen::Vector3d u = ata.ldlt().solve(atb);
  return Transform2(u.x(), u.y(), u.z());
}

}  // namespace

RegistrationResult icp(const Scan& source, const Scan& target,
                       const Transform2& guess, const IcpParams& params) {
  RegistrationResult result;
  result.transform = guess;
  if (source.empty() || target.empty() || !guess.isFinite()) {
    return result;
  }
  const bool planeMode =
      params.mode == IcpMode::PointToPlane && target.hasNormals();
  GridIndex index(target.points, params.maxCorrespondenceDistance);

  Transform2 t = guess;
  bool stepConverged = false;
  double searchDist =
      std::max(params.maxCorrespondenceDistance, params.coarseDistance);
  std::vector<Eigen::Vector2d> moved(source.points.size());
  std::vector<Eigen::Vector2d> mp, mq, mn;
  std::vector<Transform2> fineHistory;  // period-2 limit cycle detection
  for (int iter = 0; iter < params.maxIterations; ++iter) {
    const bool finePhase = searchDist <= params.maxCorrespondenceDistance;
    for (std::size_t i = 0; i < source.points.size(); ++i) {
      moved[i] = t.apply(source.points[i]);
    }
    mp.clear();
    mq.clear();
    mn.clear();
    double sumDist = 0.0;
    for (std::size_t i = 0; i < moved.size(); ++i) {
      const int j = index.nearest(moved[i], searchDist);
      if (j < 0) {
        continue;
      }
      mp.push_back(moved[i]);
      mq.push_back(target.points[j]);
      if (planeMode) {
        mn.push_back(target.normals[j]);
      }
      sumDist += (target.points[j] - moved[i]).norm();
    }
    if (mp.size() < 4) {
      result.correspondenceRatio =
          static_cast<double>(mp.size()) / static_cast<double>(source.size());
      result.transform = t;
      return result;
    }
    if (finePhase) {
      result.iterationResiduals.push_back(sumDist / static_cast<double>(mp.size()));
    }
    const Transform2 delta =
        planeMode ? pointToPlaneStep(mp, mq, mn) : procrustes(mp, mq);
    t = compose(delta, t);
    if (finePhase) {
      if (std::abs(delta.x) < params.epsilonT && std::abs(delta.y) < params.epsilonT &&
          std::abs(delta.theta) < params.epsilonTheta) {
        stepConverged = true;
        break;
      }
      // Alternating nearest-neighbor assignments can cycle with a short
      // period at the discretization floor; returning to a previous iterate
      // means the update has no direction left to improve in.
      bool cycled = false;
      const std::size_t lookback = std::min<std::size_t>(fineHistory.size(), 6);
      for (std::size_t back = 2; back <= lookback; ++back) {
        if (approxEqual(fineHistory[fineHistory.size() - back], t, params.epsilonT)) {
          cycled = true;
          break;
        }
      }
      if (cycled) {
        stepConverged = true;
        break;
      }
      fineHistory.push_back(t);
    }
    searchDist = std::max(params.maxCorrespondenceDistance, 0.5 * searchDist);
  }

  // Final correspondences at the converged transform.
  std::size_t matched = 0;
  for (std::size_t i = 0; i < source.points.size(); ++i) {
    const Eigen::Vector2d p = t.apply(source.points[i]);
    const int j = index.nearest(p, params.maxCorrespondenceDistance);
    if (j < 0) {
      continue;
    }
    ++matched;
    result.inliers.push_back({target.points[j] - p, target.points[j]});
  }
  result.transform = t;
  result.correspondenceRatio =
      static_cast<double>(matched) / static_cast<double>(source.size());
  result.converged = stepConverged &&
                     result.correspondenceRatio >= params.minCorrespondenceRatio;
  if (result.inliers.size() >= 4) {
    result.covariance = madCovariance(result.inliers);
  }
  return result;
}

Covariance3 madCovariance(std::span<const ResidualSample> samples) {
  if (samples.size() < 4) {
    throw std::invalid_argument("MAD covariance needs at least 4 correspondences");
  }
  std::vector<double> xs, ys, tang;
  xs.reserve(samples.size());
  ys.reserve(samples.size());
  tang.reserve(samples.size());
  double radiusSum = 0.0;
  for (const auto& s : samples) {
    xs.push_back(s.residual.x());
    ys.push_back(s.residual.y());
    const double r = s.point.norm();
    radiusSum += r;
    if (r > 1e-9) {
      const Eigen::Vector2d tdir(-s.point.y() / r, s.point.x() / r);
      tang.push_back(s.residual.dot(tdir));
    } else {
      tang.push_back(0.0);
    }
  }
  const double meanRadius = radiusSum / static_cast<double>(samples.size());
  constexpr double kFloor = 1e-9;
  const double sx = madScale(xs);
  const double sy = madScale(ys);
  const double st = madScale(tang);
  const double vx = std::max(sx * sx, kFloor);
  const double vy = std::max(sy * sy, kFloor);
  double vt = kFloor;
  if (meanRadius > 1e-9) {
    vt = std::max((st / meanRadius) * (st / meanRadius), kFloor);
  }
  return Covariance3::diagonal(vx, vy, vt);
}

}  // namespace gslam
