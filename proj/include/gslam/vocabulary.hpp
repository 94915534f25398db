#ifndef GSLAM_VOCABULARY_HPP
#define GSLAM_VOCABULARY_HPP

#include <map>
#include <set>
#include <vector>

#include "gslam/descriptor.hpp"
#include "gslam/map_graph.hpp"

namespace gslam {

/// Incremental descriptor vocabulary with an inverted index. A descriptor
/// joins its nearest word when the two-nearest distance ratio passes the
/// NNDR test, otherwise it seeds a new word. Search is brute force; the
/// descriptor dimension is small by design.
class Vocabulary {
 public:
  explicit Vocabulary(double nndr) : nndr_(nndr) {}

  /// Quantize up to maxFeatures descriptors of a node. Returns one word id
  /// per (kept) descriptor and registers the node in the inverted index.
  std::vector<int> quantize(NodeId nodeId, const std::vector<Descriptor>& descriptors,
                            int maxFeatures);

  /// Remove a node's postings (rehearsal discard). Word representatives stay.
  void removeNode(NodeId nodeId, const std::vector<int>& wordIds);

  /// Raw tf-idf scores of a query against the WM nodes: score(n) =
  /// sum over shared words w of tf(w, n) * log(N / df(w)), df counted over
  /// WM only. Nodes without shared words are absent from the result.
  std::map<NodeId, double> tfIdfScores(const std::vector<int>& queryWordIds,
                                       const std::set<NodeId>& wmNodes,
                                       const MapGraph& graph) const;

  int wordCount() const { return static_cast<int>(words_.size()); }
  const std::map<int, std::set<NodeId>>& invertedIndex() const { return index_; }

  /// Inverted-index soundness against the graph's node word sets; throws
  /// std::logic_error on violation.
  void checkIndex(const MapGraph& graph) const;

 private:
  double nndr_;
  int nextWordId_ = 0;
  std::vector<std::pair<int, Descriptor>> words_;  // id -> representative
  std::map<int, std::set<NodeId>> index_;
};

/// Likelihood over WM nodes: tf-idf scores standardized ((s - mean)/stddev,
/// negatives clamped to zero, +1 offset). The virtual new-place likelihood
/// is the mean of the clamped standardized scores + 1, which keeps flat
/// evidence favoring the new-place hypothesis.
struct Likelihood {
  std::map<NodeId, double> values;  // one entry per WM node
  double newPlace = 1.0;
};

Likelihood standardizeScores(const std::map<NodeId, double>& rawScores,
                             const std::set<NodeId>& wmNodes);

}  // namespace gslam

#endif  // GSLAM_VOCABULARY_HPP
