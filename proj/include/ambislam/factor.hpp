#pragma once

#include <memory>
#include <vector>

#include "ambislam/key.hpp"
#include "ambislam/noise_model.hpp"
#include "ambislam/values.hpp"

namespace ambislam {

/// Whitened first-order model of a factor: r(d) ~ residual + sum_k J_k d_k,
/// where d_k perturbs variable k on the right.
struct LinearizedFactor {
  std::vector<Key> keys;
  std::vector<Matrix6d> jacobians;
  Twist6d residual = Twist6d::Zero();
};

class Factor {
 public:
  virtual ~Factor() = default;

  virtual const std::vector<Key>& keys() const = 0;

  /// Negative log-likelihood up to a factor-independent constant; >= 0.
  virtual double error(const Values& values) const = 0;

  virtual LinearizedFactor linearize(const Values& values) const = 0;

 protected:
  Factor() = default;
  Factor(const Factor&) = default;
  Factor& operator=(const Factor&) = default;
};

using FactorPtr = std::shared_ptr<const Factor>;

/// Unary factor: residual log(measured^-1 * x).
class PriorFactor final : public Factor {
 public:
  PriorFactor(Key key, const Pose3d& measured, GaussianNoiseModel noise);

  const std::vector<Key>& keys() const override { return keys_; }
  double error(const Values& values) const override;
  LinearizedFactor linearize(const Values& values) const override;

  Key key() const { return keys_[0]; }
  const Pose3d& measured() const { return measured_; }
  const GaussianNoiseModel& noise() const { return noise_; }

 private:
  std::vector<Key> keys_;
  Pose3d measured_;
  GaussianNoiseModel noise_;
};

/// Relative pose factor: residual log(measured^-1 * between(a, b)).
class BetweenFactor final : public Factor {
 public:
  BetweenFactor(Key a, Key b, const Pose3d& measured, GaussianNoiseModel noise);

  const std::vector<Key>& keys() const override { return keys_; }
  double error(const Values& values) const override;
  LinearizedFactor linearize(const Values& values) const override;

  Key keyA() const { return keys_[0]; }
  Key keyB() const { return keys_[1]; }
  const Pose3d& measured() const { return measured_; }
  const GaussianNoiseModel& noise() const { return noise_; }

  /// Unwhitened tangent residual.
  Twist6d residual(const Pose3d& a, const Pose3d& b) const;

 private:
  std::vector<Key> keys_;
  Pose3d measured_;
  GaussianNoiseModel noise_;
};

/// Shared by BetweenFactor and the max-mixture components: whitened residual
/// and Jacobians of log(measured^-1 * a^-1 * b) w.r.t. right perturbations.
void linearizeBetween(const Pose3d& measured, const GaussianNoiseModel& noise, const Pose3d& a, const Pose3d& b,
                      Twist6d& whitened_residual, Matrix6d& J_a, Matrix6d& J_b);

}  // namespace ambislam
