#include "gslam/vocabulary.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gslam {

double descriptorDistance(const Descriptor& a, const Descriptor& b) {
  return (a.vector - b.vector).norm();
}

std::vector<int> Vocabulary::quantize(NodeId nodeId,
                                      const std::vector<Descriptor>& descriptors,
                                      int maxFeatures) {
  std::vector<int> wordIds;
  const std::size_t kept =
      std::min(descriptors.size(), static_cast<std::size_t>(maxFeatures));
  wordIds.reserve(kept);
  for (std::size_t i = 0; i < kept; ++i) {
    const Descriptor& d = descriptors[i];
    int assigned = -1;
    if (words_.size() >= 2) {
      double d1 = std::numeric_limits<double>::infinity();
      double d2 = std::numeric_limits<double>::infinity();
      int best = -1;
      for (const auto& [id, rep] : words_) {
        const double dist = (rep.vector - d.vector).norm();
        if (dist < d1) {
          d2 = d1;
          d1 = dist;
          best = id;
        } else if (dist < d2) {
          d2 = dist;
        }
      }
      if (d1 < nndr_ * d2) {
        assigned = best;
      }
    }
    if (assigned < 0) {
      assigned = nextWordId_++;
      words_.emplace_back(assigned, d);
    }
    wordIds.push_back(assigned);
    index_[assigned].insert(nodeId);
  }
  return wordIds;
}

void Vocabulary::removeNode(NodeId nodeId, const std::vector<int>& wordIds) {
  for (const int w : wordIds) {
    const auto it = index_.find(w);
    if (it != index_.end()) {
      it->second.erase(nodeId);
      if (it->second.empty()) {
        index_.erase(it);
      }
    }
  }
}

std::map<NodeId, double> Vocabulary::tfIdfScores(
    const std::vector<int>& queryWordIds, const std::set<NodeId>& wmNodes,
    const MapGraph& graph) const {
  std::map<NodeId, double> scores;
  if (wmNodes.empty()) {
    return scores;
  }
  const double n = static_cast<double>(wmNodes.size());
  const std::set<int> queryWords(queryWordIds.begin(), queryWordIds.end());
  for (const int w : queryWords) {
    const auto it = index_.find(w);
    if (it == index_.end()) {
      continue;
    }
    std::vector<NodeId> holders;
    for (const NodeId id : it->second) {
      if (wmNodes.count(id)) {
        holders.push_back(id);
      }
    }
    if (holders.empty()) {
      continue;
    }
    const double idf = std::log(n / static_cast<double>(holders.size()));
    if (idf <= 0.0) {
      continue;  // a word present in every node carries no information
    }
    for (const NodeId id : holders) {
      const MapNode& node = graph.node(id);
      int count = 0;
      for (const int nw : node.wordIds) {
        count += nw == w ? 1 : 0;
      }
      const double tf =
          static_cast<double>(count) / static_cast<double>(node.wordIds.size());
      scores[id] += tf * idf;
    }
  }
  return scores;
}

void Vocabulary::checkIndex(const MapGraph& graph) const {
  for (const auto& [word, nodes] : index_) {
    for (const NodeId id : nodes) {
      if (!graph.hasNode(id)) {
        throw std::logic_error("inverted index references a missing node");
      }
      const auto& words = graph.node(id).wordIds;
      if (std::find(words.begin(), words.end(), word) == words.end()) {
        throw std::logic_error("inverted index references a word the node lacks");
      }
    }
  }
}

Likelihood standardizeScores(const std::map<NodeId, double>& rawScores,
                             const std::set<NodeId>& wmNodes) {
  Likelihood lk;
  if (wmNodes.empty()) {
    return lk;
  }
  const double n = static_cast<double>(wmNodes.size());
  double mean = 0.0;
  for (const NodeId id : wmNodes) {
    const auto it = rawScores.find(id);
    mean += it != rawScores.end() ? it->second : 0.0;
  }
  mean /= n;
  double var = 0.0;
  for (const NodeId id : wmNodes) {
    const auto it = rawScores.find(id);
    const double s = it != rawScores.end() ? it->second : 0.0;
    var += (s - mean) * (s - mean);
  }
  var /= n;
  const double sigma = std::sqrt(var);
  double clampedSum = 0.0;
  for (const NodeId id : wmNodes) {
    const auto it = rawScores.find(id);
    const double s = it != rawScores.end() ? it->second : 0.0;
    const double standardized = sigma > 1e-12 ? std::max(0.0, (s - mean) / sigma) : 0.0;
    clampedSum += standardized;
    lk.values[id] = standardized + 1.0;
  }
  lk.newPlace = clampedSum / n + 1.0;
  return lk;
}

}  // namespace gslam
