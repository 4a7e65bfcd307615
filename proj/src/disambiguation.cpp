#include "ambislam/disambiguation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace ambislam {

void RansacConfig::validate() const {
  if (subset_size < 1) throw std::invalid_argument("ransac subset_size must be >= 1");
  if (!(consensus_fraction > 0.0 && consensus_fraction <= 1.0)) {
    throw std::invalid_argument("ransac consensus_fraction must be in (0, 1]");
  }
  if (max_iterations < 1) throw std::invalid_argument("ransac max_iterations must be >= 1");
  if (!(inlier_threshold > 0.0)) throw std::invalid_argument("ransac inlier_threshold must be positive");
}

void ReinitConfig::validate() const {
  if (!(tol > 0.0)) throw std::invalid_argument("reinit tol must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("reinit kappa must be in (0, 1)");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
}

Pose3d karcherMean(const std::vector<Pose3d>& poses) {
  if (poses.empty()) throw std::invalid_argument("karcherMean: empty pose list");
  if (poses.size() == 1) return poses.front();

  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  for (const auto& p : poses) t += p.translation();
  t /= static_cast<double>(poses.size());

  Eigen::Quaterniond q = poses.front().rotation();
  constexpr double kTolerance = 1e-9;
  constexpr int kMaxIterations = 50;
  for (int it = 0; it < kMaxIterations; ++it) {
    Eigen::Vector3d delta = Eigen::Vector3d::Zero();
    for (const auto& p : poses) delta += so3::log<double>(q.conjugate() * p.rotation());
    delta /= static_cast<double>(poses.size());
    q = (q * so3::exp<double>(delta)).normalized();
    if (delta.norm() < kTolerance) return Pose3d(q, t);
  }
  throw NonConvergenceError("karcherMean: rotation mean did not converge (near-antipodal set?)");
}

std::optional<Consensus> robustPoseAverage(const std::vector<Pose3d>& poses, const RansacConfig& cfg, double lambda) {
  cfg.validate();
  if (poses.empty()) throw std::invalid_argument("robustPoseAverage: empty cache");
  const std::size_t n = poses.size();
  const auto s = static_cast<std::size_t>(std::ceil(cfg.consensus_fraction * static_cast<double>(n) - 1e-12));
  const std::size_t k = std::min<std::size_t>(cfg.subset_size, n);

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::vector<Pose3d> subset;
  std::vector<std::size_t> inliers;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    std::iota(order.begin(), order.end(), 0);
    // partial Fisher-Yates for k distinct indices
    subset.clear();
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(order[i], order[pick(rng)]);
      subset.push_back(poses[order[i]]);
    }
    Pose3d mean;
    try {
      mean = karcherMean(subset);
    } catch (const NonConvergenceError&) {
      continue;
    }
    inliers.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (distance(poses[i], mean, lambda) <= cfg.inlier_threshold) inliers.push_back(i);
    }
    if (inliers.size() > s || inliers.size() == n) {
      std::vector<Pose3d> selected;
      for (std::size_t i : inliers) selected.push_back(poses[i]);
      try {
        return Consensus{karcherMean(selected), inliers};
      } catch (const NonConvergenceError&) {
        continue;
      }
    }
  }
  return std::nullopt;
}

Thresholds adaptiveThresholds(const MaxMixtureFactor& factor, const Thresholds& prior, const ReinitConfig& cfg) {
  if (factor.size() < 2) return prior;
  const double target = cfg.kappa * factor.minMutualHypothesisDistance(cfg.lambda);
  return {std::max(cfg.tol, std::min(target, prior.d)), std::max(cfg.tol, std::min(target, prior.r))};
}

const char* toString(ActionKind kind) {
  switch (kind) {
    case ActionKind::Init: return "init";
    case ActionKind::Reinit: return "reinit";
    case ActionKind::Append: return "append";
  }
  return "?";
}

DynamicReinit::DynamicReinit(DisambiguationConfig config) : config_(std::move(config)) {
  config_.ransac.validate();
  config_.reinit.validate();
}

MeasurementAction DynamicReinit::process(IncrementalSolver& solver, std::uint32_t step,
                                         const std::shared_ptr<const MaxMixtureFactor>& factor) {
  const Key robot = factor->robotKey();
  const Key landmark = factor->landmarkKey();
  if (!solver.estimate().contains(robot)) throw MissingKeyError(robot);
  const Pose3d x = solver.estimate().at(robot);

  MeasurementAction action;
  action.step = step;
  action.landmark = landmark;

  if (config_.enable_reinit) thresholds_ = adaptiveThresholds(*factor, thresholds_, config_.reinit);

  auto it = caches_.find(landmark);
  if (it == caches_.end()) {
    if (solver.estimate().contains(landmark) || pending_values_.contains(landmark)) {
      throw DuplicateKeyError(landmark);
    }
    const auto& comps = factor->components();
    std::size_t best = 0;
    for (std::size_t i = 1; i < comps.size(); ++i) {
      if (comps[i].weight > comps[best].weight) best = i;
    }
    PoseCache cache{landmark, {}, compose(x, comps[best].measured)};
    pending_values_.insert(landmark, cache.last_init);
    it = caches_.emplace(landmark, std::move(cache)).first;
    action.kind = ActionKind::Init;
  } else if (config_.enable_reinit) {
    RansacConfig ransac = config_.ransac;
    ransac.inlier_threshold = thresholds_.r;
    // a distinct but reproducible stream per (seed, step, landmark)
    std::seed_seq seq{static_cast<std::uint32_t>(config_.ransac.seed), static_cast<std::uint32_t>(config_.ransac.seed >> 32),
                      step, static_cast<std::uint32_t>(landmark.kind), landmark.index};
    std::uint32_t words[2];
    seq.generate(words, words + 2);
    ransac.seed = (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
    if (auto consensus = robustPoseAverage(it->second.poses, ransac, config_.reinit.lambda)) {
      action.consensus = consensus->mean;
      if (distance(consensus->mean, it->second.last_init, config_.reinit.lambda) > thresholds_.d) {
        if (!solver.graph().hasVariable(landmark)) flush(solver);
        reinit_results_.push_back(
            solver.reinitializeLandmark(landmark, consensus->mean, pending_factors_, pending_values_));
        pending_factors_.clear();
        pending_values_ = Values();
        it->second.last_init = consensus->mean;
        action.kind = ActionKind::Reinit;
        ++reinits_;
      }
    }
  }

  pending_factors_.push_back(factor);
  for (const auto& c : factor->components()) it->second.poses.push_back(compose(x, c.measured));
  action.thresholds = thresholds_;
  return action;
}

std::optional<UpdateResult> DynamicReinit::flush(IncrementalSolver& solver) {
  if (pending_factors_.empty() && pending_values_.empty()) return std::nullopt;
  auto result = solver.update(pending_factors_, pending_values_);
  pending_factors_.clear();
  pending_values_ = Values();
  return result;
}

std::vector<UpdateResult> DynamicReinit::takeReinitResults() {
  std::vector<UpdateResult> out;
  out.swap(reinit_results_);
  return out;
}

}  // namespace ambislam
