#include "ambislam/factor.hpp"

#include <stdexcept>

namespace ambislam {

PriorFactor::PriorFactor(Key key, const Pose3d& measured, GaussianNoiseModel noise)
    : keys_{key}, measured_(measured), noise_(std::move(noise)) {}

double PriorFactor::error(const Values& values) const {
  const Twist6d r = logPrincipal(between(measured_, values.at(keys_[0])));
  return 0.5 * noise_.squaredMahalanobis(r);
}

LinearizedFactor PriorFactor::linearize(const Values& values) const {
  const Twist6d r = logPrincipal(between(measured_, values.at(keys_[0])));
  LinearizedFactor lf;
  lf.keys = keys_;
  lf.jacobians.push_back(noise_.sqrtInformation() * rightJacobianInverse(r));
  lf.residual = noise_.whiten(r);
  return lf;
}

BetweenFactor::BetweenFactor(Key a, Key b, const Pose3d& measured, GaussianNoiseModel noise)
    : keys_{a, b}, measured_(measured), noise_(std::move(noise)) {
  if (a == b) throw std::invalid_argument("BetweenFactor: endpoints must differ");
}

Twist6d BetweenFactor::residual(const Pose3d& a, const Pose3d& b) const {
  return logPrincipal(between(measured_, between(a, b)));
}

double BetweenFactor::error(const Values& values) const {
  return 0.5 * noise_.squaredMahalanobis(residual(values.at(keys_[0]), values.at(keys_[1])));
}

LinearizedFactor BetweenFactor::linearize(const Values& values) const {
  LinearizedFactor lf;
  lf.keys = keys_;
  lf.jacobians.resize(2);
  linearizeBetween(measured_, noise_, values.at(keys_[0]), values.at(keys_[1]), lf.residual, lf.jacobians[0],
                   lf.jacobians[1]);
  return lf;
}

void linearizeBetween(const Pose3d& measured, const GaussianNoiseModel& noise, const Pose3d& a, const Pose3d& b,
                      Twist6d& whitened_residual, Matrix6d& J_a, Matrix6d& J_b) {
  const Twist6d r = logPrincipal(between(measured, between(a, b)));
  const Matrix6d Jr_inv = rightJacobianInverse(r);
  // a -> a exp(d) changes a^-1 b into (a^-1 b) exp(-Ad(b^-1 a) d)
  J_a = -noise.sqrtInformation() * Jr_inv * adjoint(between(b, a));
  J_b = noise.sqrtInformation() * Jr_inv;
  whitened_residual = noise.whiten(r);
}

}  // namespace ambislam
