#ifndef GSLAM_CONFIG_HPP
#define GSLAM_CONFIG_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace gslam {

enum class OdometryStrategy { S2S, S2M, External, ExternalToS2M };

/// Runtime parameters. Keys use the upstream parameter names so that
/// published parameter tables can be pasted into a config file directly.
struct Config {
  // Map update / memory management
  double detectionRate = 2.0;        // Rtabmap/DetectionRate [Hz]
  double timeThr = 0.0;              // Rtabmap/TimeThr [ms], 0 = disabled
  int memoryThr = 0;                 // Rtabmap/MemoryThr [nodes], 0 = disabled
  double loopThr = 0.11;             // Rtabmap/LoopThr
  double rehearsalSimilarity = 0.2;  // Mem/RehearsalSimilarity
  int stmSize = 30;                  // Mem/STMSize [nodes]
  double transferBatchRatio = 0.1;   // Mem/TransferBatchRatio (time mode)
  double stationaryEpsLin = 0.01;    // Mem/StationaryEpsilonLin [m]
  double stationaryEpsAng = 0.01;    // Mem/StationaryEpsilonAng [rad]
  int retrievalHops = 2;             // Mem/RetrievalHops
  int maxRetrieved = 2;              // Rtabmap/MaxRetrieved [nodes/update]

  // Vocabulary / loop transform estimation
  int kpMaxFeatures = 500;        // Kp/MaxFeatures
  int visMinInliers = 20;         // Vis/MinInliers
  double visCorNNDR = 0.6;        // Vis/CorNNDR
  int ransacIterations = 200;     // Ransac/Iterations
  double ransacInlierRadius = 0.1;  // Ransac/InlierRadius [m]

  // Bayes filter transition model
  double bayesNewPlacePrior = 0.9;      // Bayes/NewPlacePrior
  double bayesTransPrev = 0.175;        // Bayes/TransitionPrev   (offset -1)
  double bayesTransSelf = 0.675;        // Bayes/TransitionSelf   (offset  0)
  double bayesTransNext = 0.1;          // Bayes/TransitionNext   (offset +1)
  double bayesTransNext2 = 0.025;       // Bayes/TransitionNext2  (offset +2)

  // Lidar odometry
  OdometryStrategy odomStrategy = OdometryStrategy::S2M;  // Odom/Strategy
  double scanKeyFrameThr = 0.9;      // Odom/ScanKeyFrameThr
  int scanMaxSize = 10000;           // OdomF2M/ScanMaxSize [points]
  double scanSubtractRadius = 0.05;  // OdomF2M/ScanSubtractRadius [m]

  // ICP
  double icpVoxelSize = 0.05;           // Icp/VoxelSize [m]
  int icpMaxIterations = 30;            // Icp/MaxIterations
  double icpEpsilonT = 1e-5;            // Icp/EpsilonT [m]
  double icpEpsilonTheta = 1e-5;        // Icp/EpsilonTheta [rad]
  double icpMaxCorrespondenceDistance = 0.1;  // Icp/MaxCorrespondenceDistance [m]
  double icpCoarseDistance = 0.5;       // Icp/CoarseDistance [m]
  double icpMinCorrespondenceRatio = 0.1;     // Icp/MinCorrespondenceRatio
  bool icpPointToPlane = true;          // Icp/PointToPlane (P2N vs P2P)
  int icpNormalK = 5;                   // Icp/NormalK
  double pointToPlaneMinComplexity = 0.02;  // Icp/PointToPlaneMinComplexity

  // Graph / proximity
  double optimizeMaxError = 1.0;     // RGBD/OptimizeMaxError
  int proximityMaxGraphDepth = 50;   // RGBD/ProximityMaxGraphDepth [links]
  double proximityRadius = 1.0;      // RGBD/ProximityRadius [m]
  int proximityMaxPaths = 3;         // RGBD/ProximityMaxPaths [candidates/update]
  double localRadius = 10.0;         // RGBD/LocalRadius [m]
  double localImmunizationRatio = 0.25;  // RGBD/LocalImmunizationRatio

  // Occupancy grid
  double gridCellSize = 0.05;        // Grid/CellSize [m]
  bool gridRayTraceNoReturn = false; // Grid/RayTraceNoReturn
  bool gridAssemble = true;          // Grid/Assemble (online global grid)

  /// Throws std::invalid_argument when a value violates its range
  /// (rates/sizes strictly positive, LoopThr in (0,1), similarity in [0,1]).
  void validate() const;

  /// Set one parameter by its key name. Unknown keys return false.
  bool set(const std::string& key, const std::string& value);

  /// Parse "Key = value" lines; '#' starts a comment. Unknown keys are
  /// collected into unknownKeys (warn, not fail).
  static Config load(std::istream& in, std::vector<std::string>* unknownKeys = nullptr);
  static Config loadFile(const std::string& path,
                         std::vector<std::string>* unknownKeys = nullptr);

  /// All known keys with defaults and one-line descriptions, for --help.
  static std::string describeKeys();
};

std::string toString(OdometryStrategy s);
OdometryStrategy odometryStrategyFromString(const std::string& s);

}  // namespace gslam

#endif  // GSLAM_CONFIG_HPP
