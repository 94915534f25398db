#ifndef GSLAM_BAYES_FILTER_HPP
#define GSLAM_BAYES_FILTER_HPP

#include <map>
#include <optional>
#include <set>

#include "gslam/config.hpp"
#include "gslam/map_graph.hpp"
#include "gslam/vocabulary.hpp"

namespace gslam {

/// Discrete Bayes filter over {new place} + WM node loop hypotheses.
/// Prediction diffuses loop mass along the neighbor chain (offsets -1, 0,
/// +1, +2) and exchanges mass with the new-place state; the posterior is
/// the normalized product with the tf-idf likelihood.
class HypothesisFilter {
 public:
  explicit HypothesisFilter(const Config& config) : config_(config) {}

  /// One filter cycle over the current WM (nodes entering WM get zero
  /// prior; mass of departed nodes folds into new place).
  void update(const Likelihood& likelihood, const MapGraph& graph,
              const std::set<NodeId>& wmNodes);

  /// Highest loop hypothesis when it reaches threshold. Never a new-place
  /// or STM result: only WM nodes are represented.
  std::optional<NodeId> detectLoop(double threshold) const;

  std::optional<NodeId> highestHypothesis() const;
  double posterior(NodeId id) const;
  double newPlacePosterior() const { return newPlace_; }
  const std::map<NodeId, double>& posteriors() const { return posterior_; }
  double sum() const;
  void reset();

 private:
  Config config_;
  std::map<NodeId, double> posterior_;
  double newPlace_ = 1.0;
};

}  // namespace gslam

#endif  // GSLAM_BAYES_FILTER_HPP
