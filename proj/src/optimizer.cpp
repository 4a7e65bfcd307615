#include "ambislam/optimizer.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "ambislam/linear_system.hpp"

namespace ambislam {

namespace {

struct DisjointSets {
  explicit DisjointSets(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<int> parent;
};

double checkedError(const FactorGraph& graph, const Values& values) {
  const double e = graph.totalError(values);
  if (!std::isfinite(e)) throw NumericalError("total error is not finite");
  return e;
}

}  // namespace

void checkGaugeFixed(const FactorGraph& graph) {
  const VariableOrdering ordering(graph.variables());
  DisjointSets sets(ordering.size());
  std::vector<bool> anchored(ordering.size(), false);
  graph.forEachFactor([&](FactorId, const Factor& f) {
    const auto& keys = f.keys();
    const int first = ordering.blockOf(keys[0]);
    if (keys.size() == 1) anchored[first] = true;
    for (std::size_t i = 1; i < keys.size(); ++i) sets.unite(first, ordering.blockOf(keys[i]));
  });
  std::vector<bool> root_anchored(ordering.size(), false);
  for (int i = 0; i < ordering.size(); ++i) {
    if (anchored[i]) root_anchored[sets.find(i)] = true;
  }
  for (int i = 0; i < ordering.size(); ++i) {
    const int root = sets.find(i);
    if (root_anchored[root]) continue;
    std::vector<Key> component;
    for (int j = 0; j < ordering.size(); ++j) {
      if (sets.find(j) == root) component.push_back(ordering.keys()[j]);
    }
    std::ostringstream msg;
    msg << "underconstrained: component containing " << component.front() << " (" << component.size()
        << " variables) has no prior";
    throw UnderconstrainedError(msg.str(), std::move(component));
  }
}

NormalEquations linearizeGraph(const FactorGraph& graph, const Values& values, const VariableOrdering& ordering) {
  NormalEquations system(ordering);
  graph.forEachFactor([&](FactorId, const Factor& f) { system.add(f.linearize(values)); });
  return system;
}

BatchResult optimizeBatch(const FactorGraph& graph, const Values& initial, const OptimizerConfig& config) {
  for (const Key& k : graph.variables()) {
    if (!initial.contains(k)) throw MissingKeyError(k);
  }
  if (initial.size() != graph.variableCount()) {
    throw std::invalid_argument("optimizeBatch: initial values contain variables not in the graph");
  }
  checkGaugeFixed(graph);

  const VariableOrdering ordering(graph.variables());
  BatchResult result;
  result.values = initial;
  double error = checkedError(graph, result.values);
  result.errors.push_back(error);
  double lambda = config.initial_lambda;
  const bool lm = config.method == OptimizerConfig::Method::LevenbergMarquardt;

  NormalEquationSolver linear;
  while (result.iterations < config.max_iterations) {
    if (error <= config.atol) {
      result.converged = true;
      break;
    }
    const NormalEquations system = linearizeGraph(graph, result.values, ordering);
    const Eigen::SparseMatrix<double> H = system.hessian();

    bool accepted = false;
    double new_error = error;
    Values candidate;
    if (lm) {
      while (lambda <= config.max_lambda) {
        auto dx = linear.solve(H, system.gradient(), lambda);
        if (dx) {
          candidate = retract(result.values, ordering, *dx);
          new_error = graph.totalError(candidate);
          if (std::isfinite(new_error) && new_error <= error) {
            accepted = true;
            lambda = std::max(lambda / config.lambda_factor, 1e-12);
            break;
          }
        }
        lambda *= config.lambda_factor;
      }
    } else {
      auto dx = linear.solve(H, system.gradient(), 0.0);
      if (!dx) throw NumericalError("Gauss-Newton: normal equations are singular");
      candidate = retract(result.values, ordering, *dx);
      new_error = checkedError(graph, candidate);
      accepted = true;
    }
    ++result.iterations;
    if (!accepted) {
      // No damped step decreases the error: local minimum at working precision.
      result.errors.push_back(error);
      result.converged = true;
      break;
    }
    result.values = std::move(candidate);
    const double decrease = error - new_error;
    error = new_error;
    result.errors.push_back(error);
    if (std::abs(decrease) < config.atol || std::abs(decrease) < config.rtol * std::abs(error + decrease)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace ambislam
