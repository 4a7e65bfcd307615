#pragma once

#include <optional>
#include <set>
#include <vector>

#include "ambislam/factor_graph.hpp"
#include "ambislam/optimizer.hpp"

namespace ambislam {

struct IncrementalConfig {
  /// A variable is relinearized when its tangent update exceeds this norm.
  double relinearize_threshold = 1e-3;
  /// Run a full batch step after every this many updates; 0 disables.
  int batch_interval = 25;
  /// Cap on relinearize-and-solve rounds per update.
  int max_inner_iterations = 20;
  /// Stop the inner rounds once the error decrease falls below this fraction.
  double rtol = 1e-6;
  OptimizerConfig batch;
};

enum class StepKind { Plain, Reinit, Batch };

const char* toString(StepKind kind);

struct UpdateResult {
  Values estimate;
  int relinearized = 0;
  double wall_time = 0.0;  // seconds
  StepKind kind = StepKind::Plain;
};

/// Incremental nonlinear least squares over a growing factor graph.
///
/// Linearizations are cached per factor and refreshed only for factors that
/// touch a variable whose linearization point moved by more than the
/// relinearization threshold (or that are new). Every update solves the full
/// sparse system assembled from the cache; the estimate is the linearization
/// point retracted by that solution. Landmark variables can be cut out of the
/// graph and put back with a new linearization point.
class IncrementalSolver {
 public:
  explicit IncrementalSolver(IncrementalConfig config = {});

  /// Adds new variables (with initial values) and factors, then re-solves.
  /// Throws DuplicateKeyError if a new key already exists and
  /// MissingKeyError if a factor references an unknown key; the state is
  /// unchanged in both cases.
  UpdateResult update(const std::vector<FactorPtr>& factors, const Values& initial);

  /// Removes a landmark and every incident factor. Robot poses are refused
  /// with std::invalid_argument because they hold the trajectory together.
  std::vector<FactorPtr> removeVariable(const Key& landmark);

  /// Removes the landmark with its factors, puts both back with linearization
  /// point init (factors keep their slots), adds the optional new factors and
  /// values, and re-solves.
  UpdateResult reinitializeLandmark(const Key& landmark, const Pose3d& init, const std::vector<FactorPtr>& factors = {},
                                    const Values& initial = {});

  /// Relinearizes everything at the current estimate and iterates to
  /// convergence with the batch optimizer.
  UpdateResult batchStep();

  const Values& estimate() const { return estimate_; }
  const Values& linearizationPoint() const { return theta_; }
  const FactorGraph& graph() const { return graph_; }
  const IncrementalConfig& config() const { return config_; }
  const std::set<Key>& dirty() const { return dirty_; }
  double totalError() const { return graph_.totalError(estimate_); }
  std::size_t updateCount() const { return updates_; }

 private:
  void validate(const std::vector<FactorPtr>& factors, const Values& initial) const;
  void insert(const std::vector<FactorPtr>& factors, const Values& initial);
  int solve();

  IncrementalConfig config_;
  FactorGraph graph_;
  Values theta_;
  Values estimate_;
  std::set<Key> dirty_;
  std::vector<std::optional<LinearizedFactor>> cache_;
  std::size_t updates_ = 0;
  int relinearized_pending_ = 0;
};

}  // namespace ambislam
