#ifndef GSLAM_MAP_GRAPH_HPP
#define GSLAM_MAP_GRAPH_HPP

#include <map>
#include <optional>
#include <vector>

#include "gslam/descriptor.hpp"
#include "gslam/geometry.hpp"
#include "gslam/grid.hpp"
#include "gslam/scan.hpp"

namespace gslam {

using NodeId = int;

enum class MemoryLocation { STM, WM, LTM };

enum class LinkKind { Neighbor, LoopClosure, Proximity };

/// Directed constraint between two nodes: transform is the pose of `to`
/// expressed in the frame of `from`; covariance is in the `from` frame.
struct Link {
  NodeId from = 0;
  NodeId to = 0;
  Transform2 transform;
  Covariance3 covariance = Covariance3::isotropic(1e-6);
  LinkKind kind = LinkKind::Neighbor;
};

struct MapNode {
  NodeId id = 0;
  double stamp = 0.0;
  Transform2 odomPose;   // odometry frame
  int weight = 0;
  int session = 0;
  Scan scan;             // base frame, filtered, with normals
  std::vector<Descriptor> descriptors;
  std::vector<int> wordIds;  // parallel to descriptors after quantization
  LocalGrid localGrid;
  MemoryLocation location = MemoryLocation::STM;
};

/// The map: nodes, constraint links and the latest optimized poses.
/// Node ids are global across sessions and strictly increasing.
class MapGraph {
 public:
  /// Throws std::invalid_argument when the id is not strictly greater
  /// than every existing id or the weight is negative.
  void addNode(MapNode node);

  /// Throws when an endpoint is missing, from == to, or a link with the
  /// same ordered (from, to, kind) already exists.
  void addLink(Link link);

  bool hasNode(NodeId id) const { return nodes_.count(id) != 0; }
  const MapNode& node(NodeId id) const;
  MapNode& node(NodeId id);
  void removeNode(NodeId id);
  void removeLinksOf(NodeId id);
  bool hasLink(NodeId from, NodeId to, LinkKind kind) const;
  void removeLink(NodeId from, NodeId to, LinkKind kind);

  const std::map<NodeId, MapNode>& nodes() const { return nodes_; }
  const std::vector<Link>& links() const { return links_; }
  std::vector<Link> linksOf(NodeId id) const;

  std::map<NodeId, Transform2>& optimizedPoses() { return optimizedPoses_; }
  const std::map<NodeId, Transform2>& optimizedPoses() const {
    return optimizedPoses_;
  }
  std::optional<Transform2> optimizedPose(NodeId id) const;

  /// Undirected adjacency over all links.
  std::vector<NodeId> neighbors(NodeId id) const;

  /// Checks endpoint existence and link uniqueness; throws on violation.
  void checkInvariants() const;

 private:
  std::map<NodeId, MapNode> nodes_;
  std::vector<Link> links_;
  std::map<NodeId, Transform2> optimizedPoses_;
};

}  // namespace gslam

#endif  // GSLAM_MAP_GRAPH_HPP
