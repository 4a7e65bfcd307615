#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <map>
#include <optional>
#include <vector>

#include "ambislam/factor.hpp"

namespace ambislam {

/// Maps keys to 6-wide column blocks.
class VariableOrdering {
 public:
  VariableOrdering() = default;
  explicit VariableOrdering(std::vector<Key> keys);

  int blockOf(const Key& k) const;
  const std::vector<Key>& keys() const { return keys_; }
  int size() const { return static_cast<int>(keys_.size()); }
  int dimension() const { return 6 * size(); }

 private:
  std::vector<Key> keys_;
  std::map<Key, int> index_;
};

/// Gauss-Newton normal equations H dx = -g accumulated from whitened linear
/// factors, stored block-sparse until assembled.
class NormalEquations {
 public:
  explicit NormalEquations(const VariableOrdering& ordering);

  void add(const LinearizedFactor& lf);

  Eigen::SparseMatrix<double> hessian() const;
  const Eigen::VectorXd& gradient() const { return gradient_; }
  /// 0.5 * sum of squared whitened residuals of the added factors.
  double linearError() const { return linear_error_; }

 private:
  const VariableOrdering* ordering_;
  std::map<std::pair<int, int>, Matrix6d> blocks_;  // lower triangle, row >= col
  Eigen::VectorXd gradient_;
  double linear_error_ = 0.0;
};

/// Sparse LL^T solver for (H + damping * diag(H)) dx = -g with a
/// fill-reducing AMD ordering. The symbolic factorization is kept and reused
/// while the sparsity pattern of H stays the same.
class NormalEquationSolver {
 public:
  /// Returns nullopt if the factorization fails.
  std::optional<Eigen::VectorXd> solve(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g, double damping);

 private:
  bool samePattern(const Eigen::SparseMatrix<double>& A) const;

  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> llt_;
  std::vector<int> outer_;
  std::vector<int> inner_;
  bool analyzed_ = false;
};

/// One-shot convenience wrapper around NormalEquationSolver.
std::optional<Eigen::VectorXd> solveNormalEquations(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g,
                                                    double damping);

/// Applies x_k <- x_k * exp(dx_k) to each ordered variable.
Values retract(const Values& values, const VariableOrdering& ordering, const Eigen::VectorXd& delta);

inline Twist6d blockOf(const Eigen::VectorXd& delta, int block) { return delta.segment<6>(6 * block); }

}  // namespace ambislam
