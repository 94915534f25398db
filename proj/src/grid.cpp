#include "gslam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace gslam {
namespace {

/// 8-connected integer line from a to b, inclusive of both endpoints.
template <typename Visit>
void traverseLine(const CellIndex& a, const CellIndex& b, Visit&& visit) {
  long long x = a.x, y = a.y;
  const long long dx = std::llabs(b.x - a.x);
  const long long dy = std::llabs(b.y - a.y);
  const long long sx = a.x < b.x ? 1 : -1;
  const long long sy = a.y < b.y ? 1 : -1;
  long long err = dx - dy;
  while (true) {
    visit(CellIndex{x, y});
    if (x == b.x && y == b.y) {
      break;
    }
    const long long e2 = 2 * err;
    if (e2 > -dy) {
      err -= dy;
      x += sx;
    }
    if (e2 < dx) {
      err += dx;
      y += sy;
    }
  }
}

void applyLocalGrid(OccupancyGrid& g, const NodeGridRef& ref) {
  const double s = g.cellSize;
  const double c0 = std::cos(ref.pose.theta);
  const double s0 = std::sin(ref.pose.theta);
  // Free cells first, then occupied: occupied wins within one node even
  // when rotation aliases two local cells onto one global cell.
  for (int pass = 0; pass < 2; ++pass) {
    const CellValue want = pass == 0 ? kCellFree : kCellOccupied;
    for (const auto& [cell, value] : ref.grid->cells) {
      if (value != want) {
        continue;
      }
      const double lx = (cell.x + 0.5) * s;
      const double ly = (cell.y + 0.5) * s;
      const double wx = ref.pose.x + c0 * lx - s0 * ly;
      const double wy = ref.pose.y + s0 * lx + c0 * ly;
      const CellIndex target{gridCellOf(wx, s), gridCellOf(wy, s)};
      g.values[(target.y - g.minCell.y) * g.width + (target.x - g.minCell.x)] = value;
    }
  }
}

struct Bounds {
  long long minX = 0, minY = 0, maxX = -1, maxY = -1;  // empty when maxX < minX
  void include(const CellIndex& c) {
    if (maxX < minX) {
      minX = maxX = c.x;
      minY = maxY = c.y;
      return;
    }
    minX = std::min(minX, c.x);
    maxX = std::max(maxX, c.x);
    minY = std::min(minY, c.y);
    maxY = std::max(maxY, c.y);
  }
  bool empty() const { return maxX < minX; }
};

/// Conservative bounds: transform the four corners of the local grid's
/// center-coordinate rectangle. Every transformed cell center lies inside
/// their axis-aligned hull.
Bounds transformedBounds(const NodeGridRef& ref, double cellSize) {
  Bounds b;
  if (ref.grid->cells.empty()) {
    return b;
  }
  long long minX = ref.grid->cells.front().first.x;
  long long maxX = ref.grid->cells.back().first.x;
  long long minY = ref.grid->cells.front().first.y;
  long long maxY = minY;
  for (const auto& [cell, value] : ref.grid->cells) {
    (void)value;
    minY = std::min(minY, cell.y);
    maxY = std::max(maxY, cell.y);
  }
  const double xs[2] = {(minX + 0.5) * cellSize, (maxX + 0.5) * cellSize};
  const double ys[2] = {(minY + 0.5) * cellSize, (maxY + 0.5) * cellSize};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const Eigen::Vector2d world = ref.pose.apply(Eigen::Vector2d(xs[i], ys[j]));
      b.include(CellIndex{gridCellOf(world.x(), cellSize), gridCellOf(world.y(), cellSize)});
    }
  }
  return b;
}

void growTo(OccupancyGrid& g, const Bounds& b) {
  if (b.empty()) {
    return;
  }
  if (g.width == 0) {
    g.minCell = {b.minX, b.minY};
    g.width = b.maxX - b.minX + 1;
    g.height = b.maxY - b.minY + 1;
    g.values.assign(static_cast<std::size_t>(g.width * g.height), kCellUnknown);
    return;
  }
  const long long minX = std::min(g.minCell.x, b.minX);
  const long long minY = std::min(g.minCell.y, b.minY);
  const long long maxX = std::max(g.minCell.x + g.width - 1, b.maxX);
  const long long maxY = std::max(g.minCell.y + g.height - 1, b.maxY);
  if (minX == g.minCell.x && minY == g.minCell.y &&
      maxX == g.minCell.x + g.width - 1 && maxY == g.minCell.y + g.height - 1) {
    return;
  }
  OccupancyGrid bigger;
  bigger.cellSize = g.cellSize;
  bigger.minCell = {minX, minY};
  bigger.width = maxX - minX + 1;
  bigger.height = maxY - minY + 1;
  bigger.values.assign(static_cast<std::size_t>(bigger.width * bigger.height),
                       kCellUnknown);
  for (long long y = 0; y < g.height; ++y) {
    const auto* src = g.values.data() + y * g.width;
    auto* dst = bigger.values.data() +
                (g.minCell.y + y - minY) * bigger.width + (g.minCell.x - minX);
    std::copy(src, src + g.width, dst);
  }
  g = std::move(bigger);
}

}  // namespace

long long gridCellOf(double v, double cellSize) {
  return static_cast<long long>(std::floor(v / cellSize + 1e-9));
}

LocalGrid buildLocalGrid(const Scan& scan, double cellSize,
                         const LocalGridOptions& options) {
  if (!(cellSize > 0.0)) {
    throw std::invalid_argument("cell size must be > 0");
  }
  LocalGrid grid;
  grid.cellSize = cellSize;
  std::map<CellIndex, CellValue> cells;
  const CellIndex sensorCell{gridCellOf(0.0, cellSize), gridCellOf(0.0, cellSize)};
  for (const auto& p : scan.points) {
    const CellIndex end{gridCellOf(p.x(), cellSize), gridCellOf(p.y(), cellSize)};
    traverseLine(sensorCell, end, [&](const CellIndex& c) {
      if (c == end) {
        cells[c] = kCellOccupied;
      } else {
        cells.try_emplace(c, kCellFree);  // never downgrades occupied
      }
    });
  }
  if (options.clearNoReturn && scan.maxRange > 0.0) {
    for (const double angle : scan.missAngles) {
      const Eigen::Vector2d tip(scan.maxRange * std::cos(angle),
                                scan.maxRange * std::sin(angle));
      const CellIndex end{gridCellOf(tip.x(), cellSize), gridCellOf(tip.y(), cellSize)};
      traverseLine(sensorCell, end, [&](const CellIndex& c) {
        cells.try_emplace(c, kCellFree);
      });
    }
  }
  grid.cells.assign(cells.begin(), cells.end());
  return grid;
}

OccupancyGrid assembleGrids(const std::vector<NodeGridRef>& refs, double cellSize) {
  for (std::size_t i = 1; i < refs.size(); ++i) {
    if (refs[i - 1].id >= refs[i].id) {
      throw std::invalid_argument("grid refs must be sorted by ascending node id");
    }
  }
  OccupancyGrid g;
  g.cellSize = cellSize;
  Bounds total;
  for (const auto& ref : refs) {
    if (ref.grid == nullptr) {
      throw std::invalid_argument("node without a local grid");
    }
    const Bounds b = transformedBounds(ref, cellSize);
    if (!b.empty()) {
      total.include(CellIndex{b.minX, b.minY});
      total.include(CellIndex{b.maxX, b.maxY});
    }
  }
  growTo(g, total);
  for (const auto& ref : refs) {
    if (!ref.grid->empty()) {
      applyLocalGrid(g, ref);
    }
  }
  return g;
}

void GridAssembler::add(const NodeGridRef& ref) {
  if (ref.grid == nullptr) {
    throw std::invalid_argument("node without a local grid");
  }
  if (ref.grid->empty()) {
    return;
  }
  growTo(grid_, transformedBounds(ref, grid_.cellSize));
  applyLocalGrid(grid_, ref);
}

void GridAssembler::clear() {
  const double cell = grid_.cellSize;
  grid_ = OccupancyGrid{};
  grid_.cellSize = cell;
}

}  // namespace gslam
