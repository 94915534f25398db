#include "gslam/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gslam {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double toDouble(const std::string& v) {
  size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size()) {
    throw std::invalid_argument("bad numeric value '" + v + "'");
  }
  return d;
}

int toInt(const std::string& v) {
  size_t pos = 0;
  const int i = std::stoi(v, &pos);
  if (pos != v.size()) {
    throw std::invalid_argument("bad integer value '" + v + "'");
  }
  return i;
}

bool toBool(const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "1" || s == "on") return true;
  if (s == "false" || s == "0" || s == "off") return false;
  throw std::invalid_argument("bad boolean value '" + v + "'");
}

struct KeyEntry {
  const char* key;
  const char* doc;
  std::function<void(Config&, const std::string&)> apply;
};

const std::vector<KeyEntry>& keyTable() {
  static const std::vector<KeyEntry> table = {
      {"Rtabmap/DetectionRate", "node creation rate [Hz] (default 2)",
       [](Config& c, const std::string& v) { c.detectionRate = toDouble(v); }},
      {"Rtabmap/TimeThr", "WM->LTM transfer time threshold [ms], 0=off (default 0)",
       [](Config& c, const std::string& v) { c.timeThr = toDouble(v); }},
      {"Rtabmap/MemoryThr", "max WM size [nodes], 0=off (default 0)",
       [](Config& c, const std::string& v) { c.memoryThr = toInt(v); }},
      {"Rtabmap/LoopThr", "loop closure hypothesis threshold (default 0.11)",
       [](Config& c, const std::string& v) { c.loopThr = toDouble(v); }},
      {"Mem/RehearsalSimilarity", "word overlap threshold for rehearsal (default 0.2)",
       [](Config& c, const std::string& v) { c.rehearsalSimilarity = toDouble(v); }},
      {"Mem/STMSize", "short-term memory capacity [nodes] (default 30)",
       [](Config& c, const std::string& v) { c.stmSize = toInt(v); }},
      {"Mem/TransferBatchRatio", "fraction of WM moved per time-threshold violation (default 0.1)",
       [](Config& c, const std::string& v) { c.transferBatchRatio = toDouble(v); }},
      {"Mem/StationaryEpsilonLin", "displacement below which rehearsal discards [m] (default 0.01)",
       [](Config& c, const std::string& v) { c.stationaryEpsLin = toDouble(v); }},
      {"Mem/StationaryEpsilonAng", "rotation below which rehearsal discards [rad] (default 0.01)",
       [](Config& c, const std::string& v) { c.stationaryEpsAng = toDouble(v); }},
      {"Mem/RetrievalHops", "graph radius retrieved from LTM per loop closure (default 2)",
       [](Config& c, const std::string& v) { c.retrievalHops = toInt(v); }},
      {"Rtabmap/MaxRetrieved", "max nodes retrieved from LTM per update (default 2)",
       [](Config& c, const std::string& v) { c.maxRetrieved = toInt(v); }},
      {"Kp/MaxFeatures", "max descriptors quantized per node (default 500)",
       [](Config& c, const std::string& v) { c.kpMaxFeatures = toInt(v); }},
      {"Vis/MinInliers", "min correspondence inliers to accept a loop transform (default 20)",
       [](Config& c, const std::string& v) { c.visMinInliers = toInt(v); }},
      {"Vis/CorNNDR", "nearest neighbor distance ratio for matching (default 0.6)",
       [](Config& c, const std::string& v) { c.visCorNNDR = toDouble(v); }},
      {"Ransac/Iterations", "RANSAC iterations for loop transform (default 200)",
       [](Config& c, const std::string& v) { c.ransacIterations = toInt(v); }},
      {"Ransac/InlierRadius", "RANSAC inlier radius [m] (default 0.1)",
       [](Config& c, const std::string& v) { c.ransacInlierRadius = toDouble(v); }},
      {"Bayes/NewPlacePrior", "transition self-probability of the new-place state (default 0.9)",
       [](Config& c, const std::string& v) { c.bayesNewPlacePrior = toDouble(v); }},
      {"Bayes/TransitionPrev", "loop transition weight to offset -1 (default 0.175)",
       [](Config& c, const std::string& v) { c.bayesTransPrev = toDouble(v); }},
      {"Bayes/TransitionSelf", "loop transition weight to offset 0 (default 0.675)",
       [](Config& c, const std::string& v) { c.bayesTransSelf = toDouble(v); }},
      {"Bayes/TransitionNext", "loop transition weight to offset +1 (default 0.1)",
       [](Config& c, const std::string& v) { c.bayesTransNext = toDouble(v); }},
      {"Bayes/TransitionNext2", "loop transition weight to offset +2 (default 0.025)",
       [](Config& c, const std::string& v) { c.bayesTransNext2 = toDouble(v); }},
      {"Odom/Strategy", "odometry mode: s2s | s2m | external | external_s2m (default s2m)",
       [](Config& c, const std::string& v) { c.odomStrategy = odometryStrategyFromString(v); }},
      {"Odom/ScanKeyFrameThr", "correspondence ratio below which the key frame updates (default 0.9)",
       [](Config& c, const std::string& v) { c.scanKeyFrameThr = toDouble(v); }},
      {"OdomF2M/ScanMaxSize", "max points kept in the odometry map cloud (default 10000)",
       [](Config& c, const std::string& v) { c.scanMaxSize = toInt(v); }},
      {"OdomF2M/ScanSubtractRadius", "radius for subtracting map from new scan [m] (default 0.05)",
       [](Config& c, const std::string& v) { c.scanSubtractRadius = toDouble(v); }},
      {"Icp/VoxelSize", "downsampling voxel size [m] (default 0.05)",
       [](Config& c, const std::string& v) { c.icpVoxelSize = toDouble(v); }},
      {"Icp/MaxIterations", "ICP iteration cap (default 30)",
       [](Config& c, const std::string& v) { c.icpMaxIterations = toInt(v); }},
      {"Icp/EpsilonT", "ICP translation convergence epsilon [m] (default 1e-5)",
       [](Config& c, const std::string& v) { c.icpEpsilonT = toDouble(v); }},
      {"Icp/EpsilonTheta", "ICP rotation convergence epsilon [rad] (default 1e-5)",
       [](Config& c, const std::string& v) { c.icpEpsilonTheta = toDouble(v); }},
      {"Icp/MaxCorrespondenceDistance", "correspondence rejection distance [m] (default 0.1)",
       [](Config& c, const std::string& v) { c.icpMaxCorrespondenceDistance = toDouble(v); }},
      {"Icp/MinCorrespondenceRatio", "ratio below which registration fails (default 0.1)",
       [](Config& c, const std::string& v) { c.icpMinCorrespondenceRatio = toDouble(v); }},
      {"Icp/CoarseDistance", "initial correspondence radius, shrinks to the max distance [m] (default 0.5)",
       [](Config& c, const std::string& v) { c.icpCoarseDistance = toDouble(v); }},
      {"Icp/PointToPlane", "use point-to-plane correspondences (default true)",
       [](Config& c, const std::string& v) { c.icpPointToPlane = toBool(v); }},
      {"Icp/NormalK", "neighbors used for normal estimation (default 5)",
       [](Config& c, const std::string& v) { c.icpNormalK = toInt(v); }},
      {"Icp/PointToPlaneMinComplexity", "complexity below which external odometry fills the degenerate axis (default 0.02)",
       [](Config& c, const std::string& v) { c.pointToPlaneMinComplexity = toDouble(v); }},
      {"RGBD/OptimizeMaxError", "post-optimization link deviation factor (default 1)",
       [](Config& c, const std::string& v) { c.optimizeMaxError = toDouble(v); }},
      {"RGBD/ProximityMaxGraphDepth", "max link count to a proximity candidate (default 50)",
       [](Config& c, const std::string& v) { c.proximityMaxGraphDepth = toInt(v); }},
      {"RGBD/ProximityRadius", "metric radius for proximity candidates [m] (default 1)",
       [](Config& c, const std::string& v) { c.proximityRadius = toDouble(v); }},
      {"RGBD/ProximityMaxPaths", "max proximity candidates registered per update (default 3)",
       [](Config& c, const std::string& v) { c.proximityMaxPaths = toInt(v); }},
      {"RGBD/LocalRadius", "radius of the assembled neighborhood immune to transfer [m] (default 10)",
       [](Config& c, const std::string& v) { c.localRadius = toDouble(v); }},
      {"RGBD/LocalImmunizationRatio", "max WM fraction kept immune near the robot (default 0.25)",
       [](Config& c, const std::string& v) { c.localImmunizationRatio = toDouble(v); }},
      {"Grid/CellSize", "occupancy grid cell size [m] (default 0.05)",
       [](Config& c, const std::string& v) { c.gridCellSize = toDouble(v); }},
      {"Grid/RayTraceNoReturn", "clear cells along rays with no return (default false)",
       [](Config& c, const std::string& v) { c.gridRayTraceNoReturn = toBool(v); }},
      {"Grid/Assemble", "maintain the online global occupancy grid (default true)",
       [](Config& c, const std::string& v) { c.gridAssemble = toBool(v); }},
  };
  return table;
}

void requirePositive(double v, const char* name) {
  if (!(v > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be > 0");
  }
}

}  // namespace

void Config::validate() const {
  requirePositive(detectionRate, "Rtabmap/DetectionRate");
  if (timeThr < 0.0) throw std::invalid_argument("Rtabmap/TimeThr must be >= 0");
  if (memoryThr < 0) throw std::invalid_argument("Rtabmap/MemoryThr must be >= 0");
  if (!(loopThr > 0.0 && loopThr < 1.0)) {
    throw std::invalid_argument("Rtabmap/LoopThr must be in (0,1)");
  }
  if (rehearsalSimilarity < 0.0 || rehearsalSimilarity > 1.0) {
    throw std::invalid_argument("Mem/RehearsalSimilarity must be in [0,1]");
  }
  if (stmSize <= 0) throw std::invalid_argument("Mem/STMSize must be > 0");
  if (!(transferBatchRatio > 0.0 && transferBatchRatio <= 1.0)) {
    throw std::invalid_argument("Mem/TransferBatchRatio must be in (0,1]");
  }
  if (retrievalHops <= 0) throw std::invalid_argument("Mem/RetrievalHops must be > 0");
  if (maxRetrieved <= 0) throw std::invalid_argument("Rtabmap/MaxRetrieved must be > 0");
  if (kpMaxFeatures <= 0) throw std::invalid_argument("Kp/MaxFeatures must be > 0");
  if (visMinInliers < 2) throw std::invalid_argument("Vis/MinInliers must be >= 2");
  if (!(visCorNNDR > 0.0 && visCorNNDR <= 1.0)) {
    throw std::invalid_argument("Vis/CorNNDR must be in (0,1]");
  }
  if (ransacIterations <= 0) throw std::invalid_argument("Ransac/Iterations must be > 0");
  requirePositive(ransacInlierRadius, "Ransac/InlierRadius");
  if (!(bayesNewPlacePrior > 0.0 && bayesNewPlacePrior < 1.0)) {
    throw std::invalid_argument("Bayes/NewPlacePrior must be in (0,1)");
  }
  if (!(scanKeyFrameThr > 0.0 && scanKeyFrameThr <= 1.0)) {
    throw std::invalid_argument("Odom/ScanKeyFrameThr must be in (0,1]");
  }
  if (scanMaxSize <= 0) throw std::invalid_argument("OdomF2M/ScanMaxSize must be > 0");
  requirePositive(scanSubtractRadius, "OdomF2M/ScanSubtractRadius");
  requirePositive(icpVoxelSize, "Icp/VoxelSize");
  if (icpMaxIterations <= 0) throw std::invalid_argument("Icp/MaxIterations must be > 0");
  requirePositive(icpEpsilonT, "Icp/EpsilonT");
  requirePositive(icpEpsilonTheta, "Icp/EpsilonTheta");
  requirePositive(icpMaxCorrespondenceDistance, "Icp/MaxCorrespondenceDistance");
  requirePositive(icpCoarseDistance, "Icp/CoarseDistance");
  if (icpMinCorrespondenceRatio < 0.0 || icpMinCorrespondenceRatio > 1.0) {
    throw std::invalid_argument("Icp/MinCorrespondenceRatio must be in [0,1]");
  }
  if (icpNormalK < 2) throw std::invalid_argument("Icp/NormalK must be >= 2");
  if (pointToPlaneMinComplexity < 0.0 || pointToPlaneMinComplexity > 1.0) {
    throw std::invalid_argument("Icp/PointToPlaneMinComplexity must be in [0,1]");
  }
  requirePositive(optimizeMaxError, "RGBD/OptimizeMaxError");
  if (proximityMaxGraphDepth <= 0) {
    throw std::invalid_argument("RGBD/ProximityMaxGraphDepth must be > 0");
  }
  requirePositive(proximityRadius, "RGBD/ProximityRadius");
  if (proximityMaxPaths <= 0) {
    throw std::invalid_argument("RGBD/ProximityMaxPaths must be > 0");
  }
  requirePositive(localRadius, "RGBD/LocalRadius");
  if (localImmunizationRatio < 0.0 || localImmunizationRatio > 1.0) {
    throw std::invalid_argument("RGBD/LocalImmunizationRatio must be in [0,1]");
  }
  requirePositive(gridCellSize, "Grid/CellSize");
}

bool Config::set(const std::string& key, const std::string& value) {
  for (const auto& entry : keyTable()) {
    if (key == entry.key) {
      entry.apply(*this, trim(value));
      return true;
    }
  }
  return false;
}

Config Config::load(std::istream& in, std::vector<std::string>* unknownKeys) {
  Config c;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(lineNo) +
                                  ": expected 'Key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!c.set(key, value)) {
      if (unknownKeys) {
        unknownKeys->push_back(key);
      }
    }
  }
  return c;
}

Config Config::loadFile(const std::string& path, std::vector<std::string>* unknownKeys) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open config file: " + path);
  }
  return load(in, unknownKeys);
}

std::string Config::describeKeys() {
  std::ostringstream os;
  for (const auto& entry : keyTable()) {
    os << "  " << entry.key << "\n      " << entry.doc << "\n";
  }
  return os.str();
}

std::string toString(OdometryStrategy s) {
  switch (s) {
    case OdometryStrategy::S2S: return "s2s";
    case OdometryStrategy::S2M: return "s2m";
    case OdometryStrategy::External: return "external";
    case OdometryStrategy::ExternalToS2M: return "external_s2m";
  }
  return "s2m";
}

OdometryStrategy odometryStrategyFromString(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), ::tolower);
  if (v == "s2s") return OdometryStrategy::S2S;
  if (v == "s2m") return OdometryStrategy::S2M;
  if (v == "external") return OdometryStrategy::External;
  if (v == "external_s2m" || v == "external->s2m") return OdometryStrategy::ExternalToS2M;
  throw std::invalid_argument("unknown odometry strategy '" + s + "'");
}

}  // namespace gslam
