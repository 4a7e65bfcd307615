#pragma once

#include "ambislam/se3.hpp"

namespace ambislam {

/// Gaussian noise over twist coordinates. Keeps the matrix it was built from
/// verbatim so that file round trips are exact.
class GaussianNoiseModel {
 public:
  static GaussianNoiseModel fromCovariance(const Covariance6d& covariance);
  static GaussianNoiseModel fromInformation(const Matrix6d& information);
  static GaussianNoiseModel isotropic(double sigma);
  /// Diagonal covariance with the given per-component variances.
  static GaussianNoiseModel diagonalVariances(const Twist6d& variances);

  const Covariance6d& covariance() const { return covariance_; }
  const Matrix6d& information() const { return information_; }
  /// Upper-triangular R with R^T R = information.
  const Matrix6d& sqrtInformation() const { return sqrt_information_; }
  /// 0.5 * log det(2 pi Sigma)
  double logNormalizer() const { return log_normalizer_; }

  Twist6d whiten(const Twist6d& r) const { return sqrt_information_ * r; }
  double squaredMahalanobis(const Twist6d& r) const { return whiten(r).squaredNorm(); }

  /// Same noise with covariance multiplied by factor.
  GaussianNoiseModel scaled(double factor) const;

  friend bool operator==(const GaussianNoiseModel& a, const GaussianNoiseModel& b) {
    return a.covariance_ == b.covariance_ && a.information_ == b.information_;
  }

 private:
  GaussianNoiseModel() = default;
  void finish();

  Covariance6d covariance_;
  Matrix6d information_;
  Matrix6d sqrt_information_;
  double log_normalizer_ = 0.0;
};

/// Throws std::invalid_argument unless m is symmetric (within 1e-12
/// relative) with strictly positive eigenvalues.
void requireSymmetricPositiveDefinite(const Matrix6d& m, const char* what);

}  // namespace ambislam
