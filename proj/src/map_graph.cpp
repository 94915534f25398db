#include "gslam/map_graph.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace gslam {

void MapGraph::addNode(MapNode node) {
  if (!nodes_.empty() && node.id <= nodes_.rbegin()->first) {
    throw std::invalid_argument("node id must be strictly increasing");
  }
  if (node.weight < 0) {
    throw std::invalid_argument("node weight must be >= 0");
  }
  nodes_.emplace(node.id, std::move(node));
}

void MapGraph::addLink(Link link) {
  if (link.from == link.to) {
    throw std::invalid_argument("link endpoints must differ");
  }
  if (!hasNode(link.from) || !hasNode(link.to)) {
    throw std::invalid_argument("link endpoint missing from graph");
  }
  if (hasLink(link.from, link.to, link.kind)) {
    throw std::invalid_argument("duplicate link (from, to, kind)");
  }
  links_.push_back(std::move(link));
}

const MapNode& MapGraph::node(NodeId id) const {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw std::out_of_range("no such node");
  }
  return it->second;
}

MapNode& MapGraph::node(NodeId id) {
  const auto it = nodes_.find(id);
  if (it == nodes_.end()) {
    throw std::out_of_range("no such node");
  }
  return it->second;
}

void MapGraph::removeNode(NodeId id) {
  removeLinksOf(id);
  nodes_.erase(id);
  optimizedPoses_.erase(id);
}

void MapGraph::removeLinksOf(NodeId id) {
  links_.erase(std::remove_if(links_.begin(), links_.end(),
                              [id](const Link& l) {
                                return l.from == id || l.to == id;
                              }),
               links_.end());
}

bool MapGraph::hasLink(NodeId from, NodeId to, LinkKind kind) const {
  return std::any_of(links_.begin(), links_.end(), [&](const Link& l) {
    return l.from == from && l.to == to && l.kind == kind;
  });
}

void MapGraph::removeLink(NodeId from, NodeId to, LinkKind kind) {
  links_.erase(std::remove_if(links_.begin(), links_.end(),
                              [&](const Link& l) {
                                return l.from == from && l.to == to &&
                                       l.kind == kind;
                              }),
               links_.end());
}

std::vector<Link> MapGraph::linksOf(NodeId id) const {
  std::vector<Link> out;
  for (const Link& l : links_) {
    if (l.from == id || l.to == id) {
      out.push_back(l);
    }
  }
  return out;
}

std::optional<Transform2> MapGraph::optimizedPose(NodeId id) const {
  const auto it = optimizedPoses_.find(id);
  if (it == optimizedPoses_.end()) {
    return std::nullopt;
  }
  return it->second;
}

std::vector<NodeId> MapGraph::neighbors(NodeId id) const {
  std::set<NodeId> out;
  for (const Link& l : links_) {
    if (l.from == id) {
      out.insert(l.to);
    } else if (l.to == id) {
      out.insert(l.from);
    }
  }
  return {out.begin(), out.end()};
}

void MapGraph::checkInvariants() const {
  std::set<std::tuple<NodeId, NodeId, int>> seen;
  for (const Link& l : links_) {
    if (!hasNode(l.from) || !hasNode(l.to)) {
      throw std::logic_error("link endpoint missing");
    }
    if (l.from == l.to) {
      throw std::logic_error("self link");
    }
    if (!seen.insert({l.from, l.to, static_cast<int>(l.kind)}).second) {
      throw std::logic_error("duplicate link");
    }
  }
}

}  // namespace gslam
