#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gslam/config.hpp"
#include "gslam/io.hpp"
#include "gslam/random.hpp"

using namespace gslam;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("gslam_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<SensorFrame> randomFrames(int n, unsigned seed) {
  Rng rng(seed);
  std::vector<SensorFrame> frames;
  for (int i = 0; i < n; ++i) {
    SensorFrame f;
    f.stamp = 0.1 * i + rng.uniform(0, 1e-3);
    f.gtPose = Transform2(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3));
    f.wheelOdomPose = Transform2(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-3, 3));
    f.scan.frame = ScanFrame::Base;
    f.scan.stamp = f.stamp;
    f.scan.maxRange = 30.0;
    const int np = static_cast<int>(rng.below(50)) + 1;
    for (int k = 0; k < np; ++k) {
      f.scan.points.emplace_back(rng.uniform(-10, 10), rng.uniform(-10, 10));
    }
    const int nm = static_cast<int>(rng.below(5));
    for (int k = 0; k < nm; ++k) {
      f.scan.missAngles.push_back(rng.uniform(-M_PI, M_PI));
    }
    const int no = static_cast<int>(rng.below(8));
    for (int k = 0; k < no; ++k) {
      Observation o;
      o.bearing = rng.uniform(-1, 1);
      o.range = rng.uniform(0.5, 10);
      o.descriptor = landmarkDescriptor(rng.below(1000));
      o.descriptor.position =
          Eigen::Vector2d(o.range * std::cos(o.bearing), o.range * std::sin(o.bearing));
      f.observations.push_back(o);
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

bool framesEqual(const std::vector<SensorFrame>& a, const std::vector<SensorFrame>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].stamp != b[i].stamp) return false;
    if (a[i].gtPose.x != b[i].gtPose.x || a[i].gtPose.theta != b[i].gtPose.theta)
      return false;
    if (a[i].wheelOdomPose.y != b[i].wheelOdomPose.y) return false;
    if (a[i].scan.points.size() != b[i].scan.points.size()) return false;
    for (std::size_t k = 0; k < a[i].scan.points.size(); ++k) {
      if (a[i].scan.points[k] != b[i].scan.points[k]) return false;
    }
    if (a[i].scan.missAngles != b[i].scan.missAngles) return false;
    if (a[i].observations.size() != b[i].observations.size()) return false;
    for (std::size_t k = 0; k < a[i].observations.size(); ++k) {
      if (a[i].observations[k].bearing != b[i].observations[k].bearing) return false;
      if ((a[i].observations[k].descriptor.vector -
           b[i].observations[k].descriptor.vector).norm() != 0.0)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("frames round-trip bit-exactly in binary and text modes") {
  TempDir tmp;
  const auto frames = randomFrames(10, 42);
  io::saveFrames(tmp.file("frames.bin"), frames);
  CHECK(framesEqual(io::loadFrames(tmp.file("frames.bin")), frames));
  io::saveFrames(tmp.file("frames.txt"), frames, /*text=*/true);
  CHECK(framesEqual(io::loadFrames(tmp.file("frames.txt")), frames));
}

TEST_CASE("trajectory files round-trip") {
  TempDir tmp;
  std::vector<StampedPose> poses;
  Rng rng(7);
  for (int i = 0; i < 25; ++i) {
    poses.push_back({0.5 * i, Transform2(rng.uniform(-9, 9), rng.uniform(-9, 9),
                                         rng.uniform(-3, 3))});
  }
  io::saveTrajectory(tmp.file("traj.txt"), poses);
  const auto loaded = io::loadTrajectory(tmp.file("traj.txt"));
  REQUIRE(loaded.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK(loaded[i].stamp == poses[i].stamp);
    CHECK(loaded[i].pose.x == poses[i].pose.x);
    CHECK(loaded[i].pose.theta == poses[i].pose.theta);
  }
}

TEST_CASE("journal round-trips nodes with scans, descriptors and grids") {
  TempDir tmp;
  std::vector<MapNode> nodes;
  Rng rng(3);
  for (int i = 0; i < 5; ++i) {
    MapNode n;
    n.id = i * 3;
    n.stamp = 0.5 * i;
    n.odomPose = Transform2(i, -i, 0.1 * i);
    n.weight = i;
    n.session = i % 2;
    n.location = i % 2 ? MemoryLocation::LTM : MemoryLocation::WM;
    for (int k = 0; k < 20; ++k) {
      n.scan.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5));
      n.scan.normals.emplace_back(1.0, 0.0);
    }
    Descriptor d = landmarkDescriptor(i + 1);
    d.position = Eigen::Vector2d(1, 2);
    n.descriptors.push_back(d);
    n.wordIds = {i, i + 1};
    n.localGrid.cellSize = 0.05;
    n.localGrid.cells = {{CellIndex{0, 0}, kCellFree}, {CellIndex{5, -2}, kCellOccupied}};
    nodes.push_back(std::move(n));
  }
  {
    io::JournalWriter writer(tmp.file("nodes.journal"));
    for (const auto& n : nodes) {
      writer.append(n);
    }
  }
  const auto loaded = io::loadJournal(tmp.file("nodes.journal"));
  REQUIRE(loaded.size() == nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    CHECK(loaded[i].id == nodes[i].id);
    CHECK(loaded[i].stamp == nodes[i].stamp);
    CHECK(loaded[i].odomPose.x == nodes[i].odomPose.x);
    CHECK(loaded[i].weight == nodes[i].weight);
    CHECK(loaded[i].location == nodes[i].location);
    REQUIRE(loaded[i].scan.points.size() == nodes[i].scan.points.size());
    CHECK(loaded[i].scan.points[3] == nodes[i].scan.points[3]);
    REQUIRE(loaded[i].descriptors.size() == 1);
    CHECK((loaded[i].descriptors[0].vector - nodes[i].descriptors[0].vector).norm() == 0.0);
    CHECK(loaded[i].wordIds == nodes[i].wordIds);
    CHECK(loaded[i].localGrid.cells == nodes[i].localGrid.cells);
  }
}

TEST_CASE("graph dump round-trips poses and measurements") {
  TempDir tmp;
  std::map<NodeId, Transform2> poses = {{0, Transform2()},
                                        {1, Transform2(1, 0.5, 0.25)},
                                        {2, Transform2(2, 0, -0.5)}};
  std::vector<Link> links;
  Link l;
  l.from = 0;
  l.to = 1;
  l.transform = Transform2(1, 0.5, 0.25);
  l.covariance = Covariance3::diagonal(1e-3, 2e-3, 5e-4);
  links.push_back(l);
  io::saveGraphDump(tmp.file("graph.g2o"), poses, links);
  const auto dump = io::loadGraphDump(tmp.file("graph.g2o"));
  REQUIRE(dump.poses.size() == 3);
  CHECK(dump.poses.at(1).x == 1.0);
  REQUIRE(dump.links.size() == 1);
  CHECK(dump.links[0].transform.theta == 0.25);
  CHECK(dump.links[0].covariance.matrix()(0, 0) == doctest::Approx(1e-3));
  // The text uses VERTEX_SE2 / EDGE_SE2 records.
  std::ifstream in(tmp.file("graph.g2o"));
  std::string first;
  std::getline(in, first);
  CHECK(first.rfind("VERTEX_SE2 0 ", 0) == 0);
}

TEST_CASE("pgm export writes the documented byte values") {
  TempDir tmp;
  OccupancyGrid g;
  g.cellSize = 0.05;
  g.minCell = {2, 3};
  g.width = 2;
  g.height = 2;
  // Row order in values is y-ascending; PGM stores top row first.
  g.values = {kCellFree, kCellOccupied, kCellUnknown, kCellFree};
  io::saveGridPgm(g, tmp.file("map.pgm"), tmp.file("map.yaml"));

  std::ifstream in(tmp.file("map.pgm"), std::ios::binary);
  std::string magic, dims;
  std::getline(in, magic);
  CHECK(magic == "P5");
  std::getline(in, dims);
  CHECK(dims == "2 2");
  std::string maxval;
  std::getline(in, maxval);
  CHECK(maxval == "255");
  unsigned char bytes[4];
  in.read(reinterpret_cast<char*>(bytes), 4);
  // Top row = grid row y=1: unknown, free. Bottom row: free, occupied.
  CHECK(static_cast<int>(bytes[0]) == 205);
  CHECK(static_cast<int>(bytes[1]) == 254);
  CHECK(static_cast<int>(bytes[2]) == 254);
  CHECK(static_cast<int>(bytes[3]) == 0);

  std::ifstream meta(tmp.file("map.yaml"));
  std::string line;
  bool sawResolution = false, sawOrigin = false;
  while (std::getline(meta, line)) {
    sawResolution |= line.rfind("resolution: 0.05", 0) == 0;
    sawOrigin |= line.rfind("origin: [0.1", 0) == 0;  // 2 * 0.05
  }
  CHECK(sawResolution);
  CHECK(sawOrigin);
}

TEST_CASE("config files use published parameter names and warn on unknowns") {
  std::istringstream in(
      "# table defaults\n"
      "Rtabmap/DetectionRate = 1\n"
      "Rtabmap/MemoryThr = 300\n"
      "Mem/STMSize = 15\n"
      "Icp/PointToPlaneMinComplexity = 0.02\n"
      "Odom/Strategy = external_s2m\n"
      "Grid/CellSize = 0.05\n"
      "Some/UnknownKey = 3\n");
  std::vector<std::string> unknown;
  const Config c = Config::load(in, &unknown);
  CHECK(c.detectionRate == 1.0);
  CHECK(c.memoryThr == 300);
  CHECK(c.stmSize == 15);
  CHECK((c.odomStrategy == OdometryStrategy::ExternalToS2M));
  REQUIRE(unknown.size() == 1);
  CHECK(unknown[0] == "Some/UnknownKey");
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("config validation rejects out-of-range values") {
  Config c;
  c.loopThr = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = Config();
  c.detectionRate = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = Config();
  c.rehearsalSimilarity = -0.1;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("world files parse keys and records") {
  std::istringstream in(
      "seed = 9\n"
      "sensor_rate = 10\n"
      "speed = 0.8\n"
      "lidar_max_range = 5.6\n"
      "noise_omega_deg = 0.5\n"
      "segment 0 0 10 0\n"
      "segment 10 0 10 10 # east wall\n"
      "landmark 5 1 77\n"
      "waypoint 1 1\n"
      "waypoint 9 1 0.25\n");
  const io::WorldFile wf = io::parseWorldFile(in);
  CHECK(wf.seed == 9);
  CHECK(wf.params.sensorRate == 10.0);
  CHECK(wf.params.lidarMaxRange == 5.6);
  CHECK(wf.params.sigmaOmega == doctest::Approx(0.5 * M_PI / 180.0));
  REQUIRE(wf.world.segments.size() == 2);
  REQUIRE(wf.world.landmarks.size() == 1);
  CHECK(wf.world.landmarks[0].descriptorSeed == 77);
  REQUIRE(wf.trajectory.size() == 2);
  CHECK_FALSE(wf.trajectory[0].speed.has_value());
  CHECK(wf.trajectory[1].speed.value() == 0.25);
}

TEST_CASE("svg chart writes a plottable file") {
  TempDir tmp;
  std::vector<double> x, y1, y2;
  for (int i = 0; i < 100; ++i) {
    x.push_back(i);
    y1.push_back(std::sin(0.1 * i));
    y2.push_back(0.01 * i);
  }
  io::saveSvgLineChart(tmp.file("plot.svg"), "ate", x, {{"run_a", y1}, {"run_b", y2}},
                       "update", "m");
  std::ifstream in(tmp.file("plot.svg"));
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string svg = ss.str();
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
  CHECK(svg.find("run_a") != std::string::npos);
}
