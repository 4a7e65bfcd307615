#include "ambislam/incremental_solver.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ambislam/linear_system.hpp"

namespace ambislam {

namespace {

using Clock = std::chrono::steady_clock;

double secondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

const char* toString(StepKind kind) {
  switch (kind) {
    case StepKind::Plain: return "plain";
    case StepKind::Reinit: return "reinit";
    case StepKind::Batch: return "batch";
  }
  return "?";
}

IncrementalSolver::IncrementalSolver(IncrementalConfig config) : config_(std::move(config)) {}

void IncrementalSolver::validate(const std::vector<FactorPtr>& factors, const Values& initial) const {
  for (const auto& [k, _] : initial) {
    if (graph_.hasVariable(k)) throw DuplicateKeyError(k);
  }
  for (const auto& f : factors) {
    if (!f) throw std::invalid_argument("IncrementalSolver: null factor");
    for (const Key& k : f->keys()) {
      if (!graph_.hasVariable(k) && !initial.contains(k)) throw MissingKeyError(k);
    }
  }
}

void IncrementalSolver::insert(const std::vector<FactorPtr>& factors, const Values& initial) {
  for (const auto& [k, p] : initial) {
    graph_.addVariable(k);
    theta_.insert(k, p);
    estimate_.insert(k, p);
    dirty_.insert(k);
    ++relinearized_pending_;
  }
  for (const auto& f : factors) {
    const FactorId id = graph_.add(f);
    if (cache_.size() <= id) cache_.resize(id + 1);
    cache_[id].reset();
  }
}

UpdateResult IncrementalSolver::update(const std::vector<FactorPtr>& factors, const Values& initial) {
  const auto start = Clock::now();
  validate(factors, initial);
  insert(factors, initial);
  ++updates_;
  UpdateResult result;
  result.relinearized = solve();
  result.kind = StepKind::Plain;
  if (config_.batch_interval > 0 && updates_ % static_cast<std::size_t>(config_.batch_interval) == 0) {
    const UpdateResult batch = batchStep();
    result.relinearized += batch.relinearized;
    result.kind = StepKind::Batch;
  }
  result.estimate = estimate_;
  result.wall_time = secondsSince(start);
  return result;
}

std::vector<FactorPtr> IncrementalSolver::removeVariable(const Key& landmark) {
  if (!graph_.hasVariable(landmark)) throw MissingKeyError(landmark);
  if (!landmark.isLandmark()) {
    throw std::invalid_argument("removeVariable: refusing to remove robot pose " + landmark.str());
  }
  auto removed = graph_.removeVariable(landmark);
  std::vector<FactorPtr> out;
  out.reserve(removed.size());
  for (auto& [id, f] : removed) {
    cache_[id].reset();
    out.push_back(std::move(f));
  }
  theta_.erase(landmark);
  estimate_.erase(landmark);
  dirty_.erase(landmark);
  return out;
}

UpdateResult IncrementalSolver::reinitializeLandmark(const Key& landmark, const Pose3d& init,
                                                     const std::vector<FactorPtr>& factors, const Values& initial) {
  const auto start = Clock::now();
  if (!graph_.hasVariable(landmark)) throw MissingKeyError(landmark);
  if (!landmark.isLandmark()) {
    throw std::invalid_argument("reinitializeLandmark: " + landmark.str() + " is not a landmark");
  }
  validate(factors, initial);

  auto removed = graph_.removeVariable(landmark);
  graph_.addVariable(landmark);
  for (auto& [id, f] : removed) {
    graph_.reinsert(id, std::move(f));
    cache_[id].reset();
  }
  theta_.update(landmark, init);
  estimate_.update(landmark, init);
  dirty_.insert(landmark);
  ++relinearized_pending_;

  insert(factors, initial);
  ++updates_;
  UpdateResult result;
  result.relinearized = solve();
  result.kind = StepKind::Reinit;
  result.estimate = estimate_;
  result.wall_time = secondsSince(start);
  return result;
}

UpdateResult IncrementalSolver::batchStep() {
  const auto start = Clock::now();
  UpdateResult result;
  result.kind = StepKind::Batch;
  if (graph_.variableCount() > 0) {
    BatchResult batch = optimizeBatch(graph_, estimate_, config_.batch);
    estimate_ = batch.values;
    theta_ = estimate_;
    for (auto& c : cache_) c.reset();
    dirty_.clear();
    result.relinearized = static_cast<int>(theta_.size());
  }
  result.estimate = estimate_;
  result.wall_time = secondsSince(start);
  return result;
}

int IncrementalSolver::solve() {
  int relinearized = relinearized_pending_;
  relinearized_pending_ = 0;
  if (graph_.variableCount() == 0) return relinearized;

  const VariableOrdering ordering(graph_.variables());
  double reference_error = graph_.totalError(theta_);
  double previous_error = reference_error;
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(ordering.dimension());

  NormalEquationSolver linear;
  for (int round = 0; round < config_.max_inner_iterations; ++round) {
    NormalEquations system(ordering);
    graph_.forEachFactor([&](FactorId id, const Factor& f) {
      bool stale = !cache_[id].has_value();
      if (!stale) {
        for (const Key& k : f.keys()) {
          if (dirty_.count(k)) {
            stale = true;
            break;
          }
        }
      }
      if (stale) cache_[id] = f.linearize(theta_);
      system.add(*cache_[id]);
    });
    dirty_.clear();

    const Eigen::SparseMatrix<double> H = system.hessian();
    std::optional<Eigen::VectorXd> step = linear.solve(H, system.gradient(), 0.0);
    if (!step) {
      checkGaugeFixed(graph_);
      step = linear.solve(H, system.gradient(), config_.batch.initial_lambda);
      if (!step) throw NumericalError("incremental update: normal equations are singular");
    }
    double candidate_error = graph_.totalError(retract(theta_, ordering, *step));
    // Damped retries when the full Gauss-Newton step overshoots.
    for (double lambda = 1e-4; !(candidate_error <= reference_error) && lambda <= 1e4; lambda *= 10.0) {
      auto damped = linear.solve(H, system.gradient(), lambda);
      if (!damped) continue;
      const double e = graph_.totalError(retract(theta_, ordering, *damped));
      if (e < candidate_error || !std::isfinite(candidate_error)) {
        step = damped;
        candidate_error = e;
      }
    }
    if (!std::isfinite(candidate_error)) throw NumericalError("incremental update: non-finite error");
    if (!(candidate_error <= reference_error)) {
      dx.setZero();
      break;
    }
    dx = *step;

    int moved = 0;
    for (int i = 0; i < ordering.size(); ++i) {
      const Twist6d d = blockOf(dx, i);
      if (d.norm() > config_.relinearize_threshold) {
        const Key& k = ordering.keys()[i];
        theta_.update(k, compose(theta_.at(k), exp<double>(d)));
        dx.segment<6>(6 * i).setZero();
        dirty_.insert(k);
        ++moved;
      }
    }
    relinearized += moved;
    const double decrease = previous_error - candidate_error;
    previous_error = candidate_error;
    if (moved == 0) break;
    reference_error = graph_.totalError(theta_);
    if (decrease <= config_.rtol * candidate_error && round > 0) break;
  }

  estimate_ = retract(theta_, ordering, dx);
  return relinearized;
}

}  // namespace ambislam
