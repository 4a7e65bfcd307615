#include "ambislam/max_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ambislam {

MaxMixtureFactor::MaxMixtureFactor(Key robot, Key landmark, std::vector<MixtureComponent> components)
    : keys_{robot, landmark}, components_(std::move(components)) {
  if (robot == landmark) throw std::invalid_argument("MaxMixtureFactor: endpoints must differ");
  if (components_.empty()) throw std::invalid_argument("MaxMixtureFactor: needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw std::invalid_argument("MaxMixtureFactor: weights must be positive");
    }
    total += c.weight;
  }
  for (auto& c : components_) c.weight /= total;

  constants_.resize(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    constants_[i] = -std::log(components_[i].weight) + components_[i].noise.logNormalizer();
  }
  const double lowest = *std::min_element(constants_.begin(), constants_.end());
  for (double& c : constants_) c -= lowest;
}

MaxMixtureFactor MaxMixtureFactor::uniform(Key robot, Key landmark, const std::vector<Pose3d>& hypotheses,
                                           const GaussianNoiseModel& noise) {
  std::vector<MixtureComponent> comps;
  comps.reserve(hypotheses.size());
  for (const auto& h : hypotheses) comps.push_back({h, noise, 1.0});
  return MaxMixtureFactor(robot, landmark, std::move(comps));
}

double MaxMixtureFactor::componentError(std::size_t i, const Values& values) const {
  const auto& c = components_.at(i);
  const Pose3d predicted = between(values.at(keys_[0]), values.at(keys_[1]));
  const Twist6d r = logPrincipal(between(c.measured, predicted));
  return 0.5 * c.noise.squaredMahalanobis(r) + constants_[i];
}

std::size_t MaxMixtureFactor::selectComponent(const Values& values) const {
  const Pose3d predicted = between(values.at(keys_[0]), values.at(keys_[1]));
  std::size_t best = 0;
  double best_error = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const auto& c = components_[i];
    const double e = 0.5 * c.noise.squaredMahalanobis(logPrincipal(between(c.measured, predicted))) + constants_[i];
    if (e < best_error) {
      best_error = e;
      best = i;
    }
  }
  return best;
}

double MaxMixtureFactor::error(const Values& values) const {
  return componentError(selectComponent(values), values);
}

LinearizedFactor MaxMixtureFactor::linearize(const Values& values) const {
  const auto& c = components_[selectComponent(values)];
  LinearizedFactor lf;
  lf.keys = keys_;
  lf.jacobians.resize(2);
  linearizeBetween(c.measured, c.noise, values.at(keys_[0]), values.at(keys_[1]), lf.residual, lf.jacobians[0],
                   lf.jacobians[1]);
  return lf;
}

double MaxMixtureFactor::minMutualHypothesisDistance(double lambda) const {
  if (components_.size() < 2) throw std::logic_error("minMutualHypothesisDistance: needs at least two hypotheses");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < components_.size(); ++i) {
    for (std::size_t k = i + 1; k < components_.size(); ++k) {
      best = std::min(best, distance(components_[i].measured, components_[k].measured, lambda));
    }
  }
  return best;
}

}  // namespace ambislam
