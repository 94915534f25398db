#ifndef GSLAM_GRID_HPP
#define GSLAM_GRID_HPP

#include <cstdint>
#include <vector>

#include "gslam/geometry.hpp"
#include "gslam/scan.hpp"

namespace gslam {

using CellValue = std::int8_t;
constexpr CellValue kCellUnknown = -1;
constexpr CellValue kCellFree = 0;
constexpr CellValue kCellOccupied = 100;

struct CellIndex {
  long long x = 0;
  long long y = 0;
  bool operator==(const CellIndex&) const = default;
  bool operator<(const CellIndex& o) const {
    return x != o.x ? x < o.x : y < o.y;
  }
};

/// Cell index containing coordinate v. A small epsilon snaps values that
/// land exactly on a cell boundary up into the higher cell.
long long gridCellOf(double v, double cellSize);

/// Sparse per-node occupancy grid in the robot base frame at node creation.
/// Cells are unique and sorted; a cell holds either free or occupied
/// (occupied wins on conflict within one scan).
struct LocalGrid {
  double cellSize = 0.05;
  std::vector<std::pair<CellIndex, CellValue>> cells;  // sorted by index

  bool empty() const { return cells.empty(); }
};

struct LocalGridOptions {
  bool clearNoReturn = false;  // trace free space along rays with no return
};

/// Ray-trace a base-frame scan into a local grid: each endpoint cell is
/// occupied and the traversed cells from the sensor cell up to (excluding)
/// the endpoint are free.
LocalGrid buildLocalGrid(const Scan& scan, double cellSize,
                         const LocalGridOptions& options = {});

/// Dense global occupancy grid. minCell is the world cell index of
/// values[0]; rows are y-major ascending (value at (x, y) lives at
/// (y - minCell.y) * width + (x - minCell.x)).
struct OccupancyGrid {
  double cellSize = 0.05;
  CellIndex minCell;
  long long width = 0;
  long long height = 0;
  std::vector<CellValue> values;

  bool contains(const CellIndex& c) const {
    return c.x >= minCell.x && c.x < minCell.x + width && c.y >= minCell.y &&
           c.y < minCell.y + height;
  }
  CellValue at(const CellIndex& c) const {
    return contains(c) ? values[(c.y - minCell.y) * width + (c.x - minCell.x)]
                       : kCellUnknown;
  }
  /// Map-frame pose of the lower-left corner of the grid.
  Transform2 origin() const {
    return Transform2(minCell.x * cellSize, minCell.y * cellSize, 0.0);
  }
  bool operator==(const OccupancyGrid&) const = default;
};

struct NodeGridRef {
  int id = 0;
  Transform2 pose;
  const LocalGrid* grid = nullptr;
};

/// Batch assembly: local grids applied in ascending node id, later writes
/// override (free clears occupied and vice versa). refs must be id-sorted.
OccupancyGrid assembleGrids(const std::vector<NodeGridRef>& refs, double cellSize);

/// Incremental assembler; applying nodes one at a time in ascending id
/// yields the same grid as a batch assembly of the same nodes.
class GridAssembler {
 public:
  explicit GridAssembler(double cellSize) { grid_.cellSize = cellSize; }

  void add(const NodeGridRef& ref);
  void clear();
  const OccupancyGrid& grid() const { return grid_; }

 private:
  OccupancyGrid grid_;
};

}  // namespace gslam

#endif  // GSLAM_GRID_HPP
