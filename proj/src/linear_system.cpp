#include "ambislam/linear_system.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <stdexcept>

namespace ambislam {

VariableOrdering::VariableOrdering(std::vector<Key> keys) : keys_(std::move(keys)) {
  for (int i = 0; i < static_cast<int>(keys_.size()); ++i) {
    if (!index_.emplace(keys_[i], i).second) throw DuplicateKeyError(keys_[i]);
  }
}

int VariableOrdering::blockOf(const Key& k) const {
  auto it = index_.find(k);
  if (it == index_.end()) throw MissingKeyError(k);
  return it->second;
}

NormalEquations::NormalEquations(const VariableOrdering& ordering)
    : ordering_(&ordering), gradient_(Eigen::VectorXd::Zero(ordering.dimension())) {}

void NormalEquations::add(const LinearizedFactor& lf) {
  const std::size_t n = lf.keys.size();
  std::vector<int> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = ordering_->blockOf(lf.keys[i]);
  for (std::size_t i = 0; i < n; ++i) {
    gradient_.segment<6>(6 * idx[i]) += lf.jacobians[i].transpose() * lf.residual;
    for (std::size_t j = 0; j < n; ++j) {
      if (idx[i] < idx[j]) continue;
      auto [it, inserted] = blocks_.try_emplace({idx[i], idx[j]}, Matrix6d::Zero());
      it->second.noalias() += lf.jacobians[i].transpose() * lf.jacobians[j];
    }
  }
  linear_error_ += 0.5 * lf.residual.squaredNorm();
}

Eigen::SparseMatrix<double> NormalEquations::hessian() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(blocks_.size() * 36 * 2);
  for (const auto& [rc, block] : blocks_) {
    const int r0 = 6 * rc.first;
    const int c0 = 6 * rc.second;
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) {
        triplets.emplace_back(r0 + i, c0 + j, block(i, j));
        if (rc.first != rc.second) triplets.emplace_back(c0 + j, r0 + i, block(i, j));
      }
    }
  }
  const int dim = ordering_->dimension();
  Eigen::SparseMatrix<double> H(dim, dim);
  H.setFromTriplets(triplets.begin(), triplets.end());
  return H;
}

bool NormalEquationSolver::samePattern(const Eigen::SparseMatrix<double>& A) const {
  const auto outer = static_cast<std::size_t>(A.outerSize() + 1);
  const auto nnz = static_cast<std::size_t>(A.nonZeros());
  return analyzed_ && outer_.size() == outer && inner_.size() == nnz &&
         std::equal(outer_.begin(), outer_.end(), A.outerIndexPtr()) &&
         std::equal(inner_.begin(), inner_.end(), A.innerIndexPtr());
}

std::optional<Eigen::VectorXd> NormalEquationSolver::solve(const Eigen::SparseMatrix<double>& H,
                                                           const Eigen::VectorXd& g, double damping) {
  Eigen::SparseMatrix<double> A = H;
  A.makeCompressed();
  if (damping > 0.0) {
    for (int i = 0; i < A.rows(); ++i) {
      const double d = std::max(H.coeff(i, i), 1e-9);
      A.coeffRef(i, i) += damping * d;
    }
  }
  if (!samePattern(A)) {
    llt_.analyzePattern(A);
    outer_.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
    inner_.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
    analyzed_ = true;
  }
  llt_.factorize(A);
  if (llt_.info() != Eigen::Success) return std::nullopt;
  Eigen::VectorXd dx = llt_.solve(-g);
  if (llt_.info() != Eigen::Success || !dx.allFinite()) return std::nullopt;
  return dx;
}

std::optional<Eigen::VectorXd> solveNormalEquations(const Eigen::SparseMatrix<double>& H, const Eigen::VectorXd& g,
                                                    double damping) {
  NormalEquationSolver solver;
  return solver.solve(H, g, damping);
}

Values retract(const Values& values, const VariableOrdering& ordering, const Eigen::VectorXd& delta) {
  Values out = values;
  for (int i = 0; i < ordering.size(); ++i) {
    const Key& k = ordering.keys()[i];
    out.update(k, compose(values.at(k), exp<double>(blockOf(delta, i))));
  }
  return out;
}

}  // namespace ambislam
