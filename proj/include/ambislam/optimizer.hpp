#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ambislam/factor_graph.hpp"
#include "ambislam/linear_system.hpp"

namespace ambislam {

struct OptimizerConfig {
  enum class Method { LevenbergMarquardt, GaussNewton };

  Method method = Method::LevenbergMarquardt;
  double initial_lambda = 1e-5;
  double lambda_factor = 10.0;
  double max_lambda = 1e10;
  double rtol = 1e-8;
  double atol = 1e-10;
  int max_iterations = 100;
};

struct BatchResult {
  Values values;
  /// Total error before the first iteration, then after every iteration.
  std::vector<double> errors;
  int iterations = 0;
  bool converged = false;
};

/// Raised when some connected set of variables is not anchored by any unary
/// factor, leaving a gauge freedom.
class UnderconstrainedError : public std::runtime_error {
 public:
  UnderconstrainedError(const std::string& what, std::vector<Key> component)
      : std::runtime_error(what), component(std::move(component)) {}
  std::vector<Key> component;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws UnderconstrainedError for the first connected component (in key
/// order) that has no unary factor.
void checkGaugeFixed(const FactorGraph& graph);

/// Linearizes every factor at values and assembles the normal equations.
NormalEquations linearizeGraph(const FactorGraph& graph, const Values& values, const VariableOrdering& ordering);

BatchResult optimizeBatch(const FactorGraph& graph, const Values& initial, const OptimizerConfig& config = {});

}  // namespace ambislam
