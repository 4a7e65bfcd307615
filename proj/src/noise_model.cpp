#include "ambislam/noise_model.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambislam {

void requireSymmetricPositiveDefinite(const Matrix6d& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument(std::string(what) + ": matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix6d> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0)) {
    throw std::invalid_argument(std::string(what) + ": matrix is not positive definite");
  }
}

GaussianNoiseModel GaussianNoiseModel::fromCovariance(const Covariance6d& covariance) {
  requireSymmetricPositiveDefinite(covariance, "covariance");
  GaussianNoiseModel n;
  n.covariance_ = covariance;
  n.information_ = covariance.llt().solve(Matrix6d::Identity());
  n.information_ = 0.5 * (n.information_ + n.information_.transpose()).eval();
  n.finish();
  return n;
}

GaussianNoiseModel GaussianNoiseModel::fromInformation(const Matrix6d& information) {
  requireSymmetricPositiveDefinite(information, "information");
  GaussianNoiseModel n;
  n.information_ = information;
  n.covariance_ = information.llt().solve(Matrix6d::Identity());
  n.covariance_ = 0.5 * (n.covariance_ + n.covariance_.transpose()).eval();
  n.finish();
  return n;
}

GaussianNoiseModel GaussianNoiseModel::isotropic(double sigma) {
  return diagonalVariances(Twist6d::Constant(sigma * sigma));
}

GaussianNoiseModel GaussianNoiseModel::diagonalVariances(const Twist6d& variances) {
  return fromCovariance(variances.asDiagonal());
}

GaussianNoiseModel GaussianNoiseModel::scaled(double factor) const {
  if (!(factor > 0.0)) throw std::invalid_argument("noise scale must be positive");
  return fromCovariance(covariance_ * factor);
}

void GaussianNoiseModel::finish() {
  Eigen::LLT<Matrix6d> llt(information_);
  sqrt_information_ = llt.matrixU();
  // log det Sigma = -log det Lambda = -2 sum log diag(R)
  const double log_det_cov = -2.0 * sqrt_information_.diagonal().array().log().sum();
  log_normalizer_ = 0.5 * (6.0 * std::log(2.0 * M_PI) + log_det_cov);
}

}  // namespace ambislam
