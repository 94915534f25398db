#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gslam/config.hpp"
#include "gslam/eval.hpp"
#include "gslam/io.hpp"
#include "gslam/pipeline.hpp"
#include "gslam/sim.hpp"

namespace fs = std::filesystem;
using namespace gslam;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int runSimulate(const std::string& worldPath, std::string outPath,
                std::optional<std::uint64_t> seedOverride, bool text,
                double shortRange) {
  const io::WorldFile wf = io::loadWorldFile(worldPath);
  if (wf.trajectory.size() < 2) {
    throw std::runtime_error("world file defines fewer than two waypoints");
  }
  const std::uint64_t seed = seedOverride.value_or(wf.seed);
  std::vector<SensorFrame> frames = simulate(wf.world, wf.trajectory, wf.params, seed);
  if (shortRange > 0.0) {
    for (auto& f : frames) {
      f.scan = emulateShortRange(f.scan, shortRange);
    }
  }
  io::saveFrames(outPath, frames, text);
  std::cout << "wrote " << frames.size() << " frames to " << outPath << "\n";
  return kExitOk;
}

int runSlamCommand(const std::vector<std::string>& framesPaths,
                   const std::string& configPath, std::string outDir, bool threaded) {
  Config config;
  if (!configPath.empty()) {
    std::vector<std::string> unknown;
    config = Config::loadFile(configPath, &unknown);
    for (const auto& key : unknown) {
      std::cerr << "warning: unknown config key '" << key << "'\n";
    }
  }
  config.validate();

  if (const char* env = std::getenv("GSLAM_OUTPUT_DIR")) {
    outDir = env;
  }
  fs::create_directories(outDir);

  std::vector<std::vector<SensorFrame>> sessions;
  for (const auto& path : framesPaths) {
    sessions.push_back(io::loadFrames(path));
  }

  Pipeline pipeline(config);
  runSlam(pipeline, sessions, threaded);

  const fs::path out(outDir);
  io::saveTrajectory((out / "trajectory.txt").string(), pipeline.optimizedTrajectory());
  io::saveTrajectory((out / "odometry.txt").string(), pipeline.odometryTrajectory());
  io::saveTrajectory((out / "ground_truth.txt").string(),
                     pipeline.groundTruthTrajectory());
  io::saveStatsCsv((out / "stats.csv").string(), pipeline.updates());
  io::saveTimingCsv((out / "timing.csv").string(), pipeline.updates());
  io::saveGraphDump((out / "graph.g2o").string(),
                    pipeline.graph().optimizedPoses(), pipeline.graph().links());
  {
    io::JournalWriter journal((out / "nodes.journal").string());
    for (const auto& [id, node] : pipeline.graph().nodes()) {
      (void)id;
      journal.append(node);
    }
  }
  const OccupancyGrid map = pipeline.assembleFullMap();
  if (map.width > 0) {
    io::saveGridPgm(map, (out / "map.pgm").string(), (out / "map.yaml").string());
  }

  std::vector<std::pair<Transform2, Transform2>> estGt;
  for (const auto& u : pipeline.updates()) {
    estGt.push_back({u.optimizedPose, u.gtPose});
  }
  if (!estGt.empty()) {
    const AteSeries series = ateSeries(estGt);
    std::cout << "nodes " << pipeline.graph().nodes().size() << "\n";
    std::cout << "loop_links " << pipeline.loopLinkCount() << "\n";
    std::cout << "proximity_links " << pipeline.proximityLinkCount() << "\n";
    std::cout << "lost_frames " << pipeline.lostFrames() << "\n";
    std::cout << "ate_end " << series.ateEnd << "\n";
    std::cout << "ate_max " << series.ateMax << "\n";
  }
  std::cout << "outputs in " << outDir << "\n";
  return kExitOk;
}

int runEval(const std::string& estimatePath, const std::string& gtPath, bool noAlign,
            double tolerance) {
  const auto est = io::loadTrajectory(estimatePath);
  const auto gt = io::loadTrajectory(gtPath);
  const double rmse = ateRmse(est, gt, !noAlign, tolerance);
  std::cout << "ate_rmse " << rmse << "\n";

  // End/max of the aligned per-pose error series (single final alignment).
  std::vector<Eigen::Vector2d> pe, pg;
  for (const auto& e : est) {
    const StampedPose* best = nullptr;
    for (const auto& g : gt) {
      if (!best || std::abs(g.stamp - e.stamp) < std::abs(best->stamp - e.stamp)) {
        best = &g;
      }
    }
    if (best && std::abs(best->stamp - e.stamp) <= tolerance) {
      pe.push_back(e.pose.translation());
      pg.push_back(best->pose.translation());
    }
  }
  if (pe.size() >= 2) {
    const Transform2 t = noAlign ? Transform2() : alignRigid(pe, pg);
    double maxErr = 0.0, endErr = 0.0;
    for (std::size_t i = 0; i < pe.size(); ++i) {
      endErr = (t.apply(pe[i]) - pg[i]).norm();
      maxErr = std::max(maxErr, endErr);
    }
    std::cout << "ate_end " << endErr << "\n";
    std::cout << "ate_max " << maxErr << "\n";
  }
  return kExitOk;
}

int runExportMap(const std::string& traceDir, const std::string& outPrefix) {
  const fs::path trace(traceDir);
  const auto nodes = io::loadJournal((trace / "nodes.journal").string());
  const auto dump = io::loadGraphDump((trace / "graph.g2o").string());
  if (nodes.empty()) {
    throw std::runtime_error("trace has no nodes");
  }
  std::vector<NodeGridRef> refs;
  double cellSize = 0.05;
  for (const auto& node : nodes) {
    const auto it = dump.poses.find(node.id);
    if (it == dump.poses.end()) {
      continue;
    }
    refs.push_back({node.id, it->second, &node.localGrid});
    cellSize = node.localGrid.cellSize;
  }
  const OccupancyGrid grid = assembleGrids(refs, cellSize);
  io::saveGridPgm(grid, outPrefix + ".pgm", outPrefix + ".yaml");
  std::cout << "wrote " << outPrefix << ".pgm (" << grid.width << "x" << grid.height
            << " cells)\n";
  return kExitOk;
}

int runPlot(const std::string& statsPath, const std::string& outPath,
            const std::string& what) {
  const auto updates = io::loadStatsCsv(statsPath);
  if (updates.empty()) {
    throw std::runtime_error("stats file has no rows");
  }
  std::vector<double> x;
  for (const auto& u : updates) {
    x.push_back(u.update);
  }
  std::map<std::string, std::vector<double>> series;
  if (what == "ate") {
    std::vector<double> ate;
    for (const auto& u : updates) {
      ate.push_back(u.ate);
    }
    series["ate [m]"] = std::move(ate);
    io::saveSvgLineChart(outPath, "trajectory error per update", x, series, "update",
                         "m");
  } else if (what == "time") {
    std::vector<double> detect, optimize, assemble, total;
    for (const auto& u : updates) {
      detect.push_back(u.tDetectMs);
      optimize.push_back(u.tOptimizeMs);
      assemble.push_back(u.tAssembleMs);
      total.push_back(u.tTotalMs);
    }
    series["detection"] = std::move(detect);
    series["optimization"] = std::move(optimize);
    series["assembly"] = std::move(assemble);
    series["total"] = std::move(total);
    io::saveSvgLineChart(outPath, "update time per module", x, series, "update", "ms");
  } else if (what == "wm") {
    std::vector<double> wm, ltm;
    for (const auto& u : updates) {
      wm.push_back(u.wmSize);
      ltm.push_back(u.ltmSize);
    }
    series["WM"] = std::move(wm);
    series["LTM"] = std::move(ltm);
    io::saveSvgLineChart(outPath, "memory occupancy", x, series, "update", "nodes");
  } else {
    throw std::runtime_error("unknown plot kind '" + what + "' (ate | time | wm)");
  }
  std::cout << "wrote " << outPath << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D lidar graph SLAM with memory management"};
  app.require_subcommand(1);

  std::string worldPath, framesOut;
  std::uint64_t seedValue = 0;
  bool textMode = false;
  double shortRange = 0.0;
  auto* sim = app.add_subcommand("simulate", "generate sensor frames from a world file");
  sim->add_option("--world", worldPath, "world + trajectory definition file")->required();
  sim->add_option("--out", framesOut, "output frames file")->required();
  auto* seedOpt = sim->add_option("--seed", seedValue, "override the world file seed");
  sim->add_flag("--text", textMode, "write the lossless text dump instead of binary");
  sim->add_option("--short-range", shortRange,
                  "emulate a short-range lidar with this max range [m]");

  std::vector<std::string> framesPaths;
  std::string configPath, outDir = "out";
  bool threaded = false;
  auto* run = app.add_subcommand("run", "run SLAM over recorded frames");
  run->add_option("--frames", framesPaths,
                  "frames file(s); several files run as back-to-back sessions")
      ->required();
  run->add_option("--config", configPath, "config file ('Key = value' lines)");
  run->add_option("--out", outDir,
                  "output directory (env GSLAM_OUTPUT_DIR overrides)");
  run->add_flag("--threaded", threaded,
                "run odometry and map update as two pipeline stages");
  run->footer("Config keys:\n" + Config::describeKeys());

  std::string estimatePath, gtPath;
  bool noAlign = false;
  double tolerance = 0.02;
  auto* eval = app.add_subcommand("eval", "trajectory error against ground truth");
  eval->add_option("--estimate", estimatePath, "estimated trajectory file")->required();
  eval->add_option("--ground-truth", gtPath, "ground truth trajectory file")->required();
  eval->add_flag("--no-align", noAlign, "skip the rigid alignment");
  eval->add_option("--tolerance", tolerance, "stamp association tolerance [s]");

  std::string traceDir, mapPrefix = "map";
  auto* exportMap = app.add_subcommand("export-map", "assemble a PGM map from a run trace");
  exportMap->add_option("--trace", traceDir, "run output directory")->required();
  exportMap->add_option("--out", mapPrefix, "output prefix (.pgm/.yaml appended)");

  std::string statsPath, plotOut = "plot.svg", plotKind = "ate";
  auto* plot = app.add_subcommand("plot", "render SVG charts from a stats file");
  plot->add_option("--stats", statsPath, "stats.csv from a run")->required();
  plot->add_option("--out", plotOut, "output SVG path");
  plot->add_option("--kind", plotKind, "ate | time | wm");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (sim->parsed()) {
      return runSimulate(worldPath, framesOut,
                         seedOpt->count() > 0 ? std::optional<std::uint64_t>(seedValue)
                                              : std::nullopt,
                         textMode, shortRange);
    }
    if (run->parsed()) {
      return runSlamCommand(framesPaths, configPath, outDir, threaded);
    }
    if (eval->parsed()) {
      return runEval(estimatePath, gtPath, noAlign, tolerance);
    }
    if (exportMap->parsed()) {
      return runExportMap(traceDir, mapPrefix);
    }
    if (plot->parsed()) {
      return runPlot(statsPath, plotOut, plotKind);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
