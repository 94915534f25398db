#include "gslam/io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gslam::io {
namespace {

constexpr std::uint32_t kFramesMagic = 0x464c5347;   // "GSLF"
constexpr std::uint32_t kJournalMagic = 0x4a4c5347;  // "GSLJ"
constexpr std::uint32_t kFormatVersion = 1;

// Binary primitives. Host is little-endian on every supported target; the
// writers round-trip bit-exactly with the readers.
template <typename T>
void put(std::string& buf, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  const char* raw = reinterpret_cast<const char*>(&v);
  buf.append(raw, sizeof(T));
}

class Cursor {
 public:
  Cursor(const std::string& data, std::size_t offset = 0) : data_(data), pos_(offset) {}
  template <typename T>
  T get() {
    static_assert(std::is_trivially_copyable_v<T>);
    if (pos_ + sizeof(T) > data_.size()) {
      throw std::runtime_error("truncated record");
    }
    T v;
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::string& data_;
  std::size_t pos_;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

void writeAll(const std::string& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) {
    throw std::runtime_error("write failed: " + path);
  }
}

std::string readAll(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open: " + path);
  }
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void putTransform(std::string& buf, const Transform2& t) {
  put(buf, t.x);
  put(buf, t.y);
  put(buf, t.theta);
}

Transform2 getTransform(Cursor& c) {
  const double x = c.get<double>();
  const double y = c.get<double>();
  const double theta = c.get<double>();
  return Transform2(x, y, theta);
}

void putScan(std::string& buf, const Scan& scan) {
  put(buf, static_cast<std::uint8_t>(scan.frame == ScanFrame::Base ? 1 : 0));
  put(buf, scan.stamp);
  put(buf, scan.maxRange);
  put(buf, static_cast<std::uint32_t>(scan.points.size()));
  for (const auto& p : scan.points) {
    put(buf, p.x());
    put(buf, p.y());
  }
  put(buf, static_cast<std::uint32_t>(scan.normals.size()));
  for (const auto& n : scan.normals) {
    put(buf, n.x());
    put(buf, n.y());
  }
  put(buf, static_cast<std::uint32_t>(scan.missAngles.size()));
  for (const double a : scan.missAngles) {
    put(buf, a);
  }
}

Scan getScan(Cursor& c) {
  Scan scan;
  scan.frame = c.get<std::uint8_t>() ? ScanFrame::Base : ScanFrame::Sensor;
  scan.stamp = c.get<double>();
  scan.maxRange = c.get<double>();
  const auto np = c.get<std::uint32_t>();
  scan.points.reserve(np);
  for (std::uint32_t i = 0; i < np; ++i) {
    const double x = c.get<double>();
    const double y = c.get<double>();
    scan.points.emplace_back(x, y);
  }
  const auto nn = c.get<std::uint32_t>();
  scan.normals.reserve(nn);
  for (std::uint32_t i = 0; i < nn; ++i) {
    const double x = c.get<double>();
    const double y = c.get<double>();
    scan.normals.emplace_back(x, y);
  }
  const auto nm = c.get<std::uint32_t>();
  scan.missAngles.reserve(nm);
  for (std::uint32_t i = 0; i < nm; ++i) {
    scan.missAngles.push_back(c.get<double>());
  }
  return scan;
}

std::string g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

WorldFile parseWorldFile(std::istream& in) {
  WorldFile wf;
  std::string line;
  int lineNo = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("world file line " + std::to_string(lineNo) + ": " + what);
  };
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
    std::istringstream ls(line);
    std::string head;
    ls >> head;
    if (head == "segment") {
      double x1, y1, x2, y2;
      if (!(ls >> x1 >> y1 >> x2 >> y2)) {
        fail("segment needs 4 numbers");
      }
      wf.world.segments.push_back({{x1, y1}, {x2, y2}});
    } else if (head == "landmark") {
      double x, y;
      std::uint64_t seed;
      if (!(ls >> x >> y >> seed)) {
        fail("landmark needs x y seed");
      }
      wf.world.landmarks.push_back({{x, y}, seed});
    } else if (head == "waypoint") {
      double x, y;
      if (!(ls >> x >> y)) {
        fail("waypoint needs x y");
      }
      Waypoint w{{x, y}, std::nullopt, 0.0, 0.0};
      double speed;
      if (ls >> speed) {
        w.speed = speed;
        double dwell;
        if (ls >> dwell) {
          w.dwell = dwell;
          double spin;
          if (ls >> spin) {
            w.spin = spin;
          }
        }
      }
      wf.trajectory.push_back(w);
    } else {
      // "key = value"
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        fail("expected 'key = value' or a segment/landmark/waypoint record");
      }
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      const double v = std::stod(value);
      const double rad = v * M_PI / 180.0;
      if (key == "seed") wf.seed = static_cast<std::uint64_t>(v);
      else if (key == "sensor_rate") wf.params.sensorRate = v;
      else if (key == "speed") wf.params.speed = v;
      else if (key == "turn_rate") wf.params.turnRate = v;
      else if (key == "lidar_fov_deg") wf.params.lidarFov = rad;
      else if (key == "lidar_resolution_deg") wf.params.lidarResolution = rad;
      else if (key == "lidar_max_range") wf.params.lidarMaxRange = v;
      else if (key == "camera_fov_deg") wf.params.cameraFov = rad;
      else if (key == "camera_range") wf.params.cameraRange = v;
      else if (key == "noise_v") wf.params.sigmaV = v;
      else if (key == "noise_omega_deg") wf.params.sigmaOmega = rad;
      else if (key == "noise_range") wf.params.sigmaRange = v;
      else if (key == "noise_descriptor") wf.params.sigmaDescriptor = v;
      else if (key == "noise_bearing_deg") wf.params.sigmaBearing = rad;
      else if (key == "noise_landmark_range") wf.params.sigmaLandmarkRange = v;
      else fail("unknown key '" + key + "'");
    }
  }
  return wf;
}

WorldFile loadWorldFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open world file: " + path);
  }
  return parseWorldFile(in);
}

void saveWorldFile(const std::string& path, const WorldFile& wf) {
  std::ostringstream os;
  const double deg = 180.0 / M_PI;
  os << "seed = " << wf.seed << "\n";
  os << "sensor_rate = " << g17(wf.params.sensorRate) << "\n";
  os << "speed = " << g17(wf.params.speed) << "\n";
  os << "turn_rate = " << g17(wf.params.turnRate) << "\n";
  os << "lidar_fov_deg = " << g17(wf.params.lidarFov * deg) << "\n";
  os << "lidar_resolution_deg = " << g17(wf.params.lidarResolution * deg) << "\n";
  os << "lidar_max_range = " << g17(wf.params.lidarMaxRange) << "\n";
  os << "camera_fov_deg = " << g17(wf.params.cameraFov * deg) << "\n";
  os << "camera_range = " << g17(wf.params.cameraRange) << "\n";
  os << "noise_v = " << g17(wf.params.sigmaV) << "\n";
  os << "noise_omega_deg = " << g17(wf.params.sigmaOmega * deg) << "\n";
  os << "noise_range = " << g17(wf.params.sigmaRange) << "\n";
  os << "noise_descriptor = " << g17(wf.params.sigmaDescriptor) << "\n";
  os << "noise_bearing_deg = " << g17(wf.params.sigmaBearing * deg) << "\n";
  os << "noise_landmark_range = " << g17(wf.params.sigmaLandmarkRange) << "\n";
  os << "\n";
  for (const auto& s : wf.world.segments) {
    os << "segment " << g17(s.a.x()) << " " << g17(s.a.y()) << " " << g17(s.b.x())
       << " " << g17(s.b.y()) << "\n";
  }
  os << "\n";
  for (const auto& lm : wf.world.landmarks) {
    os << "landmark " << g17(lm.position.x()) << " " << g17(lm.position.y()) << " "
       << lm.descriptorSeed << "\n";
  }
  os << "\n";
  for (const auto& w : wf.trajectory) {
    os << "waypoint " << g17(w.position.x()) << " " << g17(w.position.y());
    if (w.speed || w.dwell > 0.0 || w.spin != 0.0) {
      os << " " << g17(w.speed.value_or(wf.params.speed));
      if (w.dwell > 0.0 || w.spin != 0.0) {
        os << " " << g17(w.dwell);
        if (w.spin != 0.0) {
          os << " " << g17(w.spin);
        }
      }
    }
    os << "\n";
  }
  writeAll(path, os.str());
}

void saveFrames(const std::string& path, const std::vector<SensorFrame>& frames,
                bool text) {
  if (text) {
    std::ostringstream os;
    os << "gslam-frames-text 1 " << kDescriptorDim << "\n";
    for (const auto& f : frames) {
      os << "frame " << g17(f.stamp) << "\n";
      os << "gt " << g17(f.gtPose.x) << " " << g17(f.gtPose.y) << " "
         << g17(f.gtPose.theta) << "\n";
      os << "odom " << g17(f.wheelOdomPose.x) << " " << g17(f.wheelOdomPose.y)
         << " " << g17(f.wheelOdomPose.theta) << "\n";
      os << "maxrange " << g17(f.scan.maxRange) << "\n";
      for (const auto& p : f.scan.points) {
        os << "point " << g17(p.x()) << " " << g17(p.y()) << "\n";
      }
      for (const double a : f.scan.missAngles) {
        os << "miss " << g17(a) << "\n";
      }
      for (const auto& o : f.observations) {
        os << "obs " << g17(o.bearing) << " " << g17(o.range);
        for (int i = 0; i < kDescriptorDim; ++i) {
          os << " " << g17(o.descriptor.vector[i]);
        }
        os << "\n";
      }
      os << "end\n";
    }
    writeAll(path, os.str());
    return;
  }
  std::string out;
  put(out, kFramesMagic);
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(kDescriptorDim));
  put(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& f : frames) {
    std::string rec;
    put(rec, f.stamp);
    putTransform(rec, f.gtPose);
    putTransform(rec, f.wheelOdomPose);
    putScan(rec, f.scan);
    put(rec, static_cast<std::uint32_t>(f.observations.size()));
    for (const auto& o : f.observations) {
      put(rec, o.bearing);
      put(rec, o.range);
      for (int i = 0; i < kDescriptorDim; ++i) {
        put(rec, o.descriptor.vector[i]);
      }
    }
    put(out, static_cast<std::uint32_t>(rec.size()));
    out += rec;
  }
  writeAll(path, out);
}

namespace {

std::vector<SensorFrame> loadFramesText(const std::string& data) {
  std::istringstream in(data);
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string tag;
  int version = 0, dim = 0;
  hs >> tag >> version >> dim;
  if (tag != "gslam-frames-text" || version != 1 || dim != kDescriptorDim) {
    throw std::runtime_error("unsupported frames text header");
  }
  std::vector<SensorFrame> frames;
  SensorFrame current;
  bool open = false;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) {
      continue;
    }
    if (head == "frame") {
      current = SensorFrame{};
      ls >> current.stamp;
      current.scan.frame = ScanFrame::Base;
      current.scan.stamp = current.stamp;
      open = true;
    } else if (head == "gt") {
      double x, y, t;
      ls >> x >> y >> t;
      current.gtPose = Transform2(x, y, t);
    } else if (head == "odom") {
      double x, y, t;
      ls >> x >> y >> t;
      current.wheelOdomPose = Transform2(x, y, t);
    } else if (head == "maxrange") {
      ls >> current.scan.maxRange;
    } else if (head == "point") {
      double x, y;
      ls >> x >> y;
      current.scan.points.emplace_back(x, y);
    } else if (head == "miss") {
      double a;
      ls >> a;
      current.scan.missAngles.push_back(a);
    } else if (head == "obs") {
      Observation o;
      ls >> o.bearing >> o.range;
      for (int i = 0; i < kDescriptorDim; ++i) {
        ls >> o.descriptor.vector[i];
      }
      o.descriptor.position = Eigen::Vector2d(o.range * std::cos(o.bearing),
                                              o.range * std::sin(o.bearing));
      current.observations.push_back(std::move(o));
    } else if (head == "end") {
      if (open) {
        frames.push_back(std::move(current));
        open = false;
      }
    }
  }
  return frames;
}

}  // namespace

std::vector<SensorFrame> loadFrames(const std::string& path) {
  const std::string data = readAll(path);
  if (data.rfind("gslam-frames-text", 0) == 0) {
    return loadFramesText(data);
  }
  Cursor header(data);
  if (header.get<std::uint32_t>() != kFramesMagic) {
    throw std::runtime_error("not a frames file: " + path);
  }
  if (header.get<std::uint32_t>() != kFormatVersion) {
    throw std::runtime_error("unsupported frames file version");
  }
  if (header.get<std::uint32_t>() != kDescriptorDim) {
    throw std::runtime_error("unsupported descriptor dimension");
  }
  const auto count = header.get<std::uint32_t>();
  std::vector<SensorFrame> frames;
  frames.reserve(count);
  std::size_t offset = header.pos();
  for (std::uint32_t k = 0; k < count; ++k) {
    Cursor lenCur(data, offset);
    const auto length = lenCur.get<std::uint32_t>();
    Cursor c(data, lenCur.pos());
    SensorFrame f;
    f.stamp = c.get<double>();
    f.gtPose = getTransform(c);
    f.wheelOdomPose = getTransform(c);
    f.scan = getScan(c);
    const auto nobs = c.get<std::uint32_t>();
    f.observations.reserve(nobs);
    for (std::uint32_t i = 0; i < nobs; ++i) {
      Observation o;
      o.bearing = c.get<double>();
      o.range = c.get<double>();
      for (int d = 0; d < kDescriptorDim; ++d) {
        o.descriptor.vector[d] = c.get<double>();
      }
      o.descriptor.position = Eigen::Vector2d(o.range * std::cos(o.bearing),
                                              o.range * std::sin(o.bearing));
      f.observations.push_back(std::move(o));
    }
    frames.push_back(std::move(f));
    offset = lenCur.pos() + length;
  }
  return frames;
}

void saveTrajectory(const std::string& path, const std::vector<StampedPose>& poses) {
  std::ostringstream os;
  for (const auto& p : poses) {
    os << g17(p.stamp) << " " << g17(p.pose.x) << " " << g17(p.pose.y) << " "
       << g17(p.pose.theta) << "\n";
  }
  writeAll(path, os.str());
}

std::vector<StampedPose> loadTrajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open trajectory: " + path);
  }
  std::vector<StampedPose> poses;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream ls(line);
    StampedPose p;
    double x, y, theta;
    if (!(ls >> p.stamp >> x >> y >> theta)) {
      throw std::runtime_error("bad trajectory line: " + line);
    }
    p.pose = Transform2(x, y, theta);
    poses.push_back(p);
  }
  return poses;
}

void saveGridPgm(const OccupancyGrid& grid, const std::string& pgmPath,
                 const std::string& metaPath) {
  std::string out;
  out += "P5\n";
  out += std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
  out.reserve(out.size() + static_cast<std::size_t>(grid.width * grid.height));
  for (long long row = grid.height - 1; row >= 0; --row) {
    for (long long col = 0; col < grid.width; ++col) {
      const CellValue v = grid.values[row * grid.width + col];
      unsigned char pixel = 205;  // unknown
      if (v == kCellFree) {
        pixel = 254;
      } else if (v == kCellOccupied) {
        pixel = 0;
      }
      out.push_back(static_cast<char>(pixel));
    }
  }
  writeAll(pgmPath, out);

  std::ostringstream meta;
  const Transform2 origin = grid.origin();
  meta << "image: " << pgmPath << "\n";
  meta << "resolution: " << g17(grid.cellSize) << "\n";
  meta << "origin: [" << g17(origin.x) << ", " << g17(origin.y) << ", "
       << g17(origin.theta) << "]\n";
  meta << "negate: 0\n";
  meta << "occupied_thresh: 0.65\n";
  meta << "free_thresh: 0.196\n";
  writeAll(metaPath, meta.str());
}

void saveGraphDump(std::ostream& out, const std::map<NodeId, Transform2>& poses,
                   const std::vector<Link>& links) {
  for (const auto& [id, pose] : poses) {
    out << "VERTEX_SE2 " << id << " " << g17(pose.x) << " " << g17(pose.y) << " "
        << g17(pose.theta) << "\n";
  }
  for (const Link& l : links) {
    const Eigen::Matrix3d info = l.covariance.information();
    out << "EDGE_SE2 " << l.from << " " << l.to << " " << g17(l.transform.x) << " "
        << g17(l.transform.y) << " " << g17(l.transform.theta);
    out << " " << g17(info(0, 0)) << " " << g17(info(0, 1)) << " " << g17(info(0, 2))
        << " " << g17(info(1, 1)) << " " << g17(info(1, 2)) << " " << g17(info(2, 2));
    out << "\n";
  }
}

void saveGraphDump(const std::string& path, const std::map<NodeId, Transform2>& poses,
                   const std::vector<Link>& links) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  saveGraphDump(out, poses, links);
}

GraphDump loadGraphDump(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open graph dump: " + path);
  }
  GraphDump dump;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) {
      continue;
    }
    if (tag == "VERTEX_SE2") {
      NodeId id;
      double x, y, t;
      ls >> id >> x >> y >> t;
      dump.poses[id] = Transform2(x, y, t);
    } else if (tag == "EDGE_SE2") {
      NodeId from, to;
      double x, y, t, i11, i12, i13, i22, i23, i33;
      ls >> from >> to >> x >> y >> t >> i11 >> i12 >> i13 >> i22 >> i23 >> i33;
      Eigen::Matrix3d info;
      info << i11, i12, i13, i12, i22, i23, i13, i23, i33;
      Link l;
      l.from = from;
      l.to = to;
      l.transform = Transform2(x, y, t);
      l.covariance = Covariance3(info.inverse().selfadjointView<Eigen::Lower>());
      dump.links.push_back(std::move(l));
    }
  }
  return dump;
}

struct JournalWriter::Impl {
  std::ofstream out;
};

JournalWriter::JournalWriter(const std::string& path) : impl_(new Impl) {
  impl_->out.open(path, std::ios::binary | std::ios::trunc);
  if (!impl_->out) {
    delete impl_;
    throw std::runtime_error("cannot open journal: " + path);
  }
  std::string header;
  put(header, kJournalMagic);
  put(header, kFormatVersion);
  put(header, static_cast<std::uint32_t>(kDescriptorDim));
  impl_->out.write(header.data(), static_cast<std::streamsize>(header.size()));
}

JournalWriter::~JournalWriter() {
  close();
  delete impl_;
}

void JournalWriter::close() {
  if (impl_->out.is_open()) {
    impl_->out.close();
  }
}

void JournalWriter::append(const MapNode& node) {
  std::string rec;
  put(rec, static_cast<std::int32_t>(node.id));
  put(rec, node.stamp);
  putTransform(rec, node.odomPose);
  put(rec, static_cast<std::int32_t>(node.weight));
  put(rec, static_cast<std::int32_t>(node.session));
  put(rec, static_cast<std::uint8_t>(node.location));
  putScan(rec, node.scan);
  put(rec, static_cast<std::uint32_t>(node.descriptors.size()));
  for (const auto& d : node.descriptors) {
    put(rec, d.position.x());
    put(rec, d.position.y());
    for (int i = 0; i < kDescriptorDim; ++i) {
      put(rec, d.vector[i]);
    }
  }
  put(rec, static_cast<std::uint32_t>(node.wordIds.size()));
  for (const int w : node.wordIds) {
    put(rec, static_cast<std::int32_t>(w));
  }
  put(rec, node.localGrid.cellSize);
  put(rec, static_cast<std::uint32_t>(node.localGrid.cells.size()));
  for (const auto& [cell, value] : node.localGrid.cells) {
    put(rec, static_cast<std::int64_t>(cell.x));
    put(rec, static_cast<std::int64_t>(cell.y));
    put(rec, static_cast<std::int8_t>(value));
  }
  std::string framed;
  put(framed, static_cast<std::uint32_t>(rec.size()));
  impl_->out.write(framed.data(), static_cast<std::streamsize>(framed.size()));
  impl_->out.write(rec.data(), static_cast<std::streamsize>(rec.size()));
  if (!impl_->out) {
    throw std::runtime_error("journal write failed");
  }
}

std::vector<MapNode> loadJournal(const std::string& path) {
  const std::string data = readAll(path);
  Cursor header(data);
  if (header.get<std::uint32_t>() != kJournalMagic) {
    throw std::runtime_error("not a journal file: " + path);
  }
  if (header.get<std::uint32_t>() != kFormatVersion) {
    throw std::runtime_error("unsupported journal version");
  }
  if (header.get<std::uint32_t>() != kDescriptorDim) {
    throw std::runtime_error("unsupported descriptor dimension");
  }
  std::vector<MapNode> nodes;
  std::size_t offset = header.pos();
  while (offset < data.size()) {
    Cursor lenCur(data, offset);
    const auto length = lenCur.get<std::uint32_t>();
    Cursor c(data, lenCur.pos());
    MapNode node;
    node.id = c.get<std::int32_t>();
    node.stamp = c.get<double>();
    node.odomPose = getTransform(c);
    node.weight = c.get<std::int32_t>();
    node.session = c.get<std::int32_t>();
    node.location = static_cast<MemoryLocation>(c.get<std::uint8_t>());
    node.scan = getScan(c);
    const auto nd = c.get<std::uint32_t>();
    node.descriptors.reserve(nd);
    for (std::uint32_t i = 0; i < nd; ++i) {
      Descriptor d;
      const double px = c.get<double>();
      const double py = c.get<double>();
      d.position = Eigen::Vector2d(px, py);
      for (int k = 0; k < kDescriptorDim; ++k) {
        d.vector[k] = c.get<double>();
      }
      node.descriptors.push_back(std::move(d));
    }
    const auto nw = c.get<std::uint32_t>();
    node.wordIds.reserve(nw);
    for (std::uint32_t i = 0; i < nw; ++i) {
      node.wordIds.push_back(c.get<std::int32_t>());
    }
    node.localGrid.cellSize = c.get<double>();
    const auto nc = c.get<std::uint32_t>();
    node.localGrid.cells.reserve(nc);
    for (std::uint32_t i = 0; i < nc; ++i) {
      const auto x = c.get<std::int64_t>();
      const auto y = c.get<std::int64_t>();
      const auto v = c.get<std::int8_t>();
      node.localGrid.cells.push_back({CellIndex{x, y}, static_cast<CellValue>(v)});
    }
    nodes.push_back(std::move(node));
    offset = lenCur.pos() + length;
  }
  return nodes;
}

void saveSvgLineChart(const std::string& path, const std::string& title,
                      const std::vector<double>& x,
                      const std::map<std::string, std::vector<double>>& series,
                      const std::string& xLabel, const std::string& yLabel) {
  constexpr int kWidth = 900, kHeight = 480;
  constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 50;
  const double plotW = kWidth - kMarginL - kMarginR;
  const double plotH = kHeight - kMarginT - kMarginB;

  double xMin = 0.0, xMax = 1.0, yMin = 0.0, yMax = 1.0;
  if (!x.empty()) {
    xMin = *std::min_element(x.begin(), x.end());
    xMax = *std::max_element(x.begin(), x.end());
  }
  bool first = true;
  for (const auto& [name, ys] : series) {
    (void)name;
    for (const double v : ys) {
      if (first) {
        yMin = yMax = v;
        first = false;
      }
      yMin = std::min(yMin, v);
      yMax = std::max(yMax, v);
    }
  }
  if (xMax - xMin < 1e-12) {
    xMax = xMin + 1.0;
  }
  if (yMax - yMin < 1e-12) {
    yMax = yMin + 1.0;
  }
  auto px = [&](double v) { return kMarginL + (v - xMin) / (xMax - xMin) * plotW; };
  auto py = [&](double v) {
    return kMarginT + plotH - (v - yMin) / (yMax - yMin) * plotH;
  };

  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        "font-size=\"16\">" << title << "</text>\n";
  os << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT + plotH << "\" x2=\""
     << kMarginL + plotW << "\" y2=\"" << kMarginT + plotH
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << kMarginL << "\" y1=\"" << kMarginT << "\" x2=\"" << kMarginL
     << "\" y2=\"" << kMarginT + plotH << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kMarginL + plotW / 2 << "\" y=\"" << kHeight - 12
     << "\" text-anchor=\"middle\" font-size=\"12\">" << xLabel << "</text>\n";
  os << "<text x=\"18\" y=\"" << kMarginT + plotH / 2
     << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
     << kMarginT + plotH / 2 << ")\">" << yLabel << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double xv = xMin + (xMax - xMin) * tick / 4.0;
    const double yv = yMin + (yMax - yMin) * tick / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << kMarginT + plotH + 16
       << "\" text-anchor=\"middle\" font-size=\"10\">" << g17(std::round(xv * 100) / 100)
       << "</text>\n";
    os << "<text x=\"" << kMarginL - 6 << "\" y=\"" << py(yv) + 3
       << "\" text-anchor=\"end\" font-size=\"10\">" << g17(std::round(yv * 1000) / 1000)
       << "</text>\n";
  }
  int si = 0;
  int legendY = kMarginT + 6;
  for (const auto& [name, ys] : series) {
    const char* color = kColors[si % 6];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
    const std::size_t n = std::min(x.size(), ys.size());
    for (std::size_t i = 0; i < n; ++i) {
      os << px(x[i]) << "," << py(ys[i]) << " ";
    }
    os << "\"/>\n";
    os << "<text x=\"" << kMarginL + plotW - 6 << "\" y=\"" << legendY
       << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << color << "\">" << name
       << "</text>\n";
    legendY += 14;
    ++si;
  }
  os << "</svg>\n";
  writeAll(path, os.str());
}

namespace {
// stats.csv holds only run-deterministic values; wall-clock measurements go
// to the separate timing file so repeated runs stay byte-identical.
constexpr const char* kStatsHeader =
    "update,stamp,node_id,wm,stm,ltm,words,neighbor_links,loop_links,"
    "proximity_links,posterior_sum,hypothesis_id,hypothesis_p,loop_accepted,"
    "proximity_added,rejected,retrieved,transferred,opt_x,opt_y,"
    "opt_theta,gt_x,gt_y,gt_theta,ate";
constexpr const char* kTimingHeader =
    "update,t_node_ms,t_detect_ms,t_optimize_ms,t_assemble_ms,t_transfer_ms,"
    "t_total_ms";
}  // namespace

void saveStatsCsv(const std::string& path, const std::vector<UpdateStats>& updates) {
  std::ostringstream os;
  os << kStatsHeader << "\n";
  for (const auto& u : updates) {
    os << u.update << ',' << g17(u.stamp) << ',' << u.nodeId << ',' << u.wmSize << ','
       << u.stmSize << ',' << u.ltmSize << ',' << u.words << ',' << u.neighborLinks
       << ',' << u.loopLinks << ',' << u.proximityLinks << ',' << g17(u.posteriorSum)
       << ',' << u.loopHypothesisId << ',' << g17(u.loopHypothesisP) << ','
       << (u.loopAccepted ? 1 : 0) << ',' << (u.proximityAdded ? 1 : 0) << ','
       << (u.rejectedByOptimizer ? 1 : 0) << ',' << u.retrieved << ',' << u.transferred
       << ',' << g17(u.optimizedPose.x) << ','
       << g17(u.optimizedPose.y) << ',' << g17(u.optimizedPose.theta) << ','
       << g17(u.gtPose.x) << ',' << g17(u.gtPose.y) << ',' << g17(u.gtPose.theta) << ','
       << g17(u.ate) << "\n";
  }
  writeAll(path, os.str());
}

void saveTimingCsv(const std::string& path, const std::vector<UpdateStats>& updates) {
  std::ostringstream os;
  os << kTimingHeader << "\n";
  for (const auto& u : updates) {
    os << u.update << ',' << g17(u.tNodeMs) << ',' << g17(u.tDetectMs) << ','
       << g17(u.tOptimizeMs) << ',' << g17(u.tAssembleMs) << ','
       << g17(u.tTransferMs) << ',' << g17(u.tTotalMs) << "\n";
  }
  writeAll(path, os.str());
}

std::vector<UpdateStats> loadStatsCsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open stats file: " + path);
  }
  std::string header;
  std::getline(in, header);
  const bool timing = header == kTimingHeader;
  if (!timing && header != kStatsHeader) {
    throw std::runtime_error("unexpected stats header in " + path);
  }
  std::vector<UpdateStats> out;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string field;
    while (std::getline(ls, field, ',')) {
      fields.push_back(field);
    }
    UpdateStats u;
    int k = 0;
    if (timing) {
      if (fields.size() != 7) {
        throw std::runtime_error("bad timing row: " + line);
      }
      u.update = std::stoi(fields[k++]);
      u.tNodeMs = std::stod(fields[k++]);
      u.tDetectMs = std::stod(fields[k++]);
      u.tOptimizeMs = std::stod(fields[k++]);
      u.tAssembleMs = std::stod(fields[k++]);
      u.tTransferMs = std::stod(fields[k++]);
      u.tTotalMs = std::stod(fields[k++]);
      out.push_back(u);
      continue;
    }
    if (fields.size() != 25) {
      throw std::runtime_error("bad stats row: " + line);
    }
    u.update = std::stoi(fields[k++]);
    u.stamp = std::stod(fields[k++]);
    u.nodeId = std::stoi(fields[k++]);
    u.wmSize = std::stoi(fields[k++]);
    u.stmSize = std::stoi(fields[k++]);
    u.ltmSize = std::stoi(fields[k++]);
    u.words = std::stoi(fields[k++]);
    u.neighborLinks = std::stoi(fields[k++]);
    u.loopLinks = std::stoi(fields[k++]);
    u.proximityLinks = std::stoi(fields[k++]);
    u.posteriorSum = std::stod(fields[k++]);
    u.loopHypothesisId = std::stoi(fields[k++]);
    u.loopHypothesisP = std::stod(fields[k++]);
    u.loopAccepted = fields[k++] == "1";
    u.proximityAdded = fields[k++] == "1";
    u.rejectedByOptimizer = fields[k++] == "1";
    u.retrieved = std::stoi(fields[k++]);
    u.transferred = std::stoi(fields[k++]);
    const double ox = std::stod(fields[k++]);
    const double oy = std::stod(fields[k++]);
    const double ot = std::stod(fields[k++]);
    u.optimizedPose = Transform2(ox, oy, ot);
    const double gx = std::stod(fields[k++]);
    const double gy = std::stod(fields[k++]);
    const double gt = std::stod(fields[k++]);
    u.gtPose = Transform2(gx, gy, gt);
    u.ate = std::stod(fields[k++]);
    out.push_back(u);
  }
  return out;
}

}  // namespace gslam::io
