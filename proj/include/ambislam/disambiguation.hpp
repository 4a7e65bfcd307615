#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ambislam/incremental_solver.hpp"
#include "ambislam/max_mixture.hpp"

namespace ambislam {

/// World-frame hypothesis poses collected for one landmark.
struct PoseCache {
  Key landmark;
  std::vector<Pose3d> poses;
  Pose3d last_init;
};

struct RansacConfig {
  int subset_size = 1;
  double inlier_threshold = std::numeric_limits<double>::infinity();
  double consensus_fraction = 0.5;
  int max_iterations = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ReinitConfig {
  double kappa = 0.5;
  double tol = 1e-2;
  double lambda = 1.0;

  void validate() const;
};

struct Thresholds {
  double d = std::numeric_limits<double>::infinity();
  double r = std::numeric_limits<double>::infinity();
};

class NonConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Arithmetic mean of translations and geodesic mean of rotations.
/// Throws std::invalid_argument on an empty list and NonConvergenceError if
/// the rotation iteration does not settle within 50 steps.
Pose3d karcherMean(const std::vector<Pose3d>& poses);

struct Consensus {
  Pose3d mean;
  std::vector<std::size_t> inliers;
};

/// RANSAC over the cache: mean of a random subset, inliers within r of it,
/// accepted when the inlier count exceeds ceil(fraction * n) or covers the
/// whole cache. Returns the mean of the accepted inliers.
std::optional<Consensus> robustPoseAverage(const std::vector<Pose3d>& poses, const RansacConfig& cfg, double lambda);

/// Tightens d and r to kappa times the smallest hypothesis separation of the
/// factor, never below tol. Single-hypothesis factors change nothing.
Thresholds adaptiveThresholds(const MaxMixtureFactor& factor, const Thresholds& prior, const ReinitConfig& cfg);

struct DisambiguationConfig {
  RansacConfig ransac;
  ReinitConfig reinit;
  /// Turns consensus re-initialization off, leaving plain max-mixtures.
  bool enable_reinit = true;
};

enum class ActionKind { Init, Reinit, Append };
const char* toString(ActionKind kind);

struct MeasurementAction {
  std::uint32_t step = 0;
  Key landmark;
  ActionKind kind = ActionKind::Append;
  std::optional<Pose3d> consensus;
  Thresholds thresholds;
};

/// Per-landmark caches and the re-initialization loop run on every landmark
/// measurement. Factors are buffered and handed to the solver in one update
/// per step, or together with a re-initialization when one fires.
class DynamicReinit {
 public:
  explicit DynamicReinit(DisambiguationConfig config = {});

  /// The robot pose must already be in the solver estimate.
  MeasurementAction process(IncrementalSolver& solver, std::uint32_t step,
                            const std::shared_ptr<const MaxMixtureFactor>& factor);

  /// Sends buffered factors and values to the solver; returns nothing when
  /// the buffer is empty.
  std::optional<UpdateResult> flush(IncrementalSolver& solver);

  const std::map<Key, PoseCache>& caches() const { return caches_; }
  const Thresholds& thresholds() const { return thresholds_; }
  const DisambiguationConfig& config() const { return config_; }
  std::size_t reinitCount() const { return reinits_; }
  /// Results of re-initialization solves since the last call.
  std::vector<UpdateResult> takeReinitResults();

 private:
  DisambiguationConfig config_;
  std::map<Key, PoseCache> caches_;
  Thresholds thresholds_;
  std::vector<FactorPtr> pending_factors_;
  Values pending_values_;
  std::vector<UpdateResult> reinit_results_;
  std::size_t reinits_ = 0;
};

}  // namespace ambislam
