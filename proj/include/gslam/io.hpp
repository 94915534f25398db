#ifndef GSLAM_IO_HPP
#define GSLAM_IO_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "gslam/eval.hpp"
#include "gslam/grid.hpp"
#include "gslam/map_graph.hpp"
#include "gslam/sim.hpp"

namespace gslam::io {

/// World + trajectory definition: "key = value" lines plus
/// "segment x1 y1 x2 y2", "landmark x y seed" and "waypoint x y [speed]"
/// records. '#' starts a comment.
struct WorldFile {
  World world;
  std::vector<Waypoint> trajectory;
  SimParams params;
  std::uint64_t seed = 1;
};

WorldFile loadWorldFile(const std::string& path);
WorldFile parseWorldFile(std::istream& in);
void saveWorldFile(const std::string& path, const WorldFile& wf);

/// Sensor frame container. Binary mode is a little-endian, length-prefixed
/// record stream behind a versioned magic header; text mode is a lossless
/// line dump for debugging. loadFrames detects the mode from the magic.
void saveFrames(const std::string& path, const std::vector<SensorFrame>& frames,
                bool text = false);
std::vector<SensorFrame> loadFrames(const std::string& path);

/// Trajectory files: one "stamp x y theta" line per pose.
void saveTrajectory(const std::string& path, const std::vector<StampedPose>& poses);
std::vector<StampedPose> loadTrajectory(const std::string& path);

/// PGM (P5) occupancy grid export: unknown=205, free=254, occupied=0, with
/// a sidecar metadata file (resolution, origin, negate, thresholds). The
/// top PGM row is the maximum-y row of the grid.
void saveGridPgm(const OccupancyGrid& grid, const std::string& pgmPath,
                 const std::string& metaPath);

/// Plain-text pose-graph dump (VERTEX_SE2 / EDGE_SE2 records with the
/// information upper triangle) for cross-checking with external solvers.
void saveGraphDump(std::ostream& out, const std::map<NodeId, Transform2>& poses,
                   const std::vector<Link>& links);
void saveGraphDump(const std::string& path, const std::map<NodeId, Transform2>& poses,
                   const std::vector<Link>& links);
struct GraphDump {
  std::map<NodeId, Transform2> poses;
  std::vector<Link> links;
};
GraphDump loadGraphDump(const std::string& path);

/// Append-only long-term-memory journal: one length-prefixed binary record
/// per node (header, scan, descriptors, local grid) behind a versioned
/// magic header.
class JournalWriter {
 public:
  explicit JournalWriter(const std::string& path);
  ~JournalWriter();
  JournalWriter(const JournalWriter&) = delete;
  JournalWriter& operator=(const JournalWriter&) = delete;
  void append(const MapNode& node);
  void close();

 private:
  struct Impl;
  Impl* impl_;
};

std::vector<MapNode> loadJournal(const std::string& path);

/// Minimal SVG line chart of one or more named series over a shared x axis.
void saveSvgLineChart(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::map<std::string, std::vector<double>>& series,
                      const std::string& xLabel, const std::string& yLabel);

}  // namespace gslam::io

#include "gslam/pipeline.hpp"

namespace gslam::io {

/// Per-update statistics CSV with a fixed header (one row per map update).
/// Wall-clock measurements live in a separate timing CSV so that repeated
/// seeded runs produce byte-identical stats.
void saveStatsCsv(const std::string& path, const std::vector<UpdateStats>& updates);
void saveTimingCsv(const std::string& path, const std::vector<UpdateStats>& updates);
/// Reads either a stats or a timing CSV (detected from the header).
std::vector<UpdateStats> loadStatsCsv(const std::string& path);

}  // namespace gslam::io

#endif  // GSLAM_IO_HPP
