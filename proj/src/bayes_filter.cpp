#include "gslam/bayes_filter.hpp"

#include <array>
#include <cmath>

namespace gslam {

void HypothesisFilter::update(const Likelihood& likelihood, const MapGraph& graph,
                              const std::set<NodeId>& wmNodes) {
  // Prior over the current state set; departed mass folds into new place.
  std::map<NodeId, double> prior;
  double newPlacePrior = newPlace_;
  for (const auto& [id, p] : posterior_) {
    if (wmNodes.count(id)) {
      prior[id] = p;
    } else {
      newPlacePrior += p;
    }
  }
  for (const NodeId id : wmNodes) {
    prior.try_emplace(id, 0.0);
  }
  {
    double s = newPlacePrior;
    for (const auto& [id, p] : prior) {
      (void)id;
      s += p;
    }
    if (s <= 0.0) {
      newPlacePrior = 1.0;
      for (auto& [id, p] : prior) {
        (void)id;
        p = 0.0;
      }
    } else {
      newPlacePrior /= s;
      for (auto& [id, p] : prior) {
        (void)id;
        p /= s;
      }
    }
  }

  // Neighbor chain lookup for the transition kernel.
  std::map<NodeId, NodeId> next, prev;
  for (const Link& l : graph.links()) {
    if (l.kind == LinkKind::Neighbor) {
      next[l.from] = l.to;
      prev[l.to] = l.from;
    }
  }

  // Prediction step.
  std::map<NodeId, double> predicted;
  for (const NodeId id : wmNodes) {
    predicted[id] = 0.0;
  }
  double predictedNewPlace = config_.bayesNewPlacePrior * newPlacePrior;
  if (!wmNodes.empty()) {
    const double toEach =
        (1.0 - config_.bayesNewPlacePrior) * newPlacePrior / wmNodes.size();
    for (const NodeId id : wmNodes) {
      predicted[id] += toEach;
    }
  }
  const double loopToNewPlace =
      1.0 - (config_.bayesTransPrev + config_.bayesTransSelf +
             config_.bayesTransNext + config_.bayesTransNext2);
  for (const auto& [id, p] : prior) {
    if (p <= 0.0) {
      continue;
    }
    std::array<std::pair<NodeId, double>, 4> offsets{};
    int count = 0;
    const auto pit = prev.find(id);
    if (pit != prev.end() && wmNodes.count(pit->second)) {
      offsets[count++] = {pit->second, config_.bayesTransPrev};
    }
    offsets[count++] = {id, config_.bayesTransSelf};
    const auto nit = next.find(id);
    if (nit != next.end() && wmNodes.count(nit->second)) {
      offsets[count++] = {nit->second, config_.bayesTransNext};
      const auto n2it = next.find(nit->second);
      if (n2it != next.end() && wmNodes.count(n2it->second)) {
        offsets[count++] = {n2it->second, config_.bayesTransNext2};
      }
    }
    double weightSum = 0.0;
    for (int i = 0; i < count; ++i) {
      weightSum += offsets[i].second;
    }
    // Missing chain neighbors renormalize onto the available targets.
    const double scale = (1.0 - loopToNewPlace) / weightSum;
    for (int i = 0; i < count; ++i) {
      predicted[offsets[i].first] += offsets[i].second * scale * p;
    }
    predictedNewPlace += loopToNewPlace * p;
  }

  // Correction by the likelihood, then normalization.
  double total = predictedNewPlace * likelihood.newPlace;
  newPlace_ = predictedNewPlace * likelihood.newPlace;
  posterior_.clear();
  for (const NodeId id : wmNodes) {
    const auto it = likelihood.values.find(id);
    const double lk = it != likelihood.values.end() ? it->second : 1.0;
    const double v = predicted[id] * lk;
    posterior_[id] = v;
    total += v;
  }
  if (total > 0.0) {
    newPlace_ /= total;
    for (auto& [id, p] : posterior_) {
      (void)id;
      p /= total;
    }
  } else {
    newPlace_ = 1.0;
  }
}

std::optional<NodeId> HypothesisFilter::detectLoop(double threshold) const {
  const auto best = highestHypothesis();
  if (best && posterior_.at(*best) >= threshold) {
    return best;
  }
  return std::nullopt;
}

std::optional<NodeId> HypothesisFilter::highestHypothesis() const {
  std::optional<NodeId> best;
  double bestP = -1.0;
  for (const auto& [id, p] : posterior_) {
    if (p > bestP) {
      bestP = p;
      best = id;
    }
  }
  return best;
}

double HypothesisFilter::posterior(NodeId id) const {
  const auto it = posterior_.find(id);
  return it != posterior_.end() ? it->second : 0.0;
}

double HypothesisFilter::sum() const {
  double s = newPlace_;
  for (const auto& [id, p] : posterior_) {
    (void)id;
    s += p;
  }
  return s;
}

void HypothesisFilter::reset() {
  posterior_.clear();
  newPlace_ = 1.0;
}

}  // namespace gslam
