#pragma once

#include <vector>

#include "ambislam/factor.hpp"

namespace ambislam {

/// One pose hypothesis of a multi-hypothesis relative measurement.
struct MixtureComponent {
  Pose3d measured;
  GaussianNoiseModel noise;
  double weight = 1.0;
};

/// Relative-pose factor between a robot pose and a landmark whose likelihood
/// is the best weighted Gaussian among N hypotheses:
///
///   phi(x, l) = max_i w_i N(log(z_i^-1 x^-1 l); 0, Sigma_i)
///
/// The negative log of the winning term is
///
///   0.5 |r_i|^2_Sigma_i - log w_i + 0.5 log det(2 pi Sigma_i)
///
/// and the selection is re-done at every evaluation. Each component carries
/// the constant part of that expression shifted by the smallest constant in
/// the factor, so errors stay non-negative while the differences between
/// components are exact. Only the whitened residual of the selected
/// component reaches the linear solver.
class MaxMixtureFactor final : public Factor {
 public:
  /// Weights are normalized to sum to one. Throws on an empty component
  /// list or a non-positive weight.
  MaxMixtureFactor(Key robot, Key landmark, std::vector<MixtureComponent> components);

  /// Uniform weights 1/N, shared noise.
  static MaxMixtureFactor uniform(Key robot, Key landmark, const std::vector<Pose3d>& hypotheses,
                                  const GaussianNoiseModel& noise);

  const std::vector<Key>& keys() const override { return keys_; }
  double error(const Values& values) const override;
  LinearizedFactor linearize(const Values& values) const override;

  Key robotKey() const { return keys_[0]; }
  Key landmarkKey() const { return keys_[1]; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  std::size_t size() const { return components_.size(); }

  /// -log w_i + 0.5 log det(2 pi Sigma_i) - min_k(same for k)
  double componentConstant(std::size_t i) const { return constants_[i]; }
  /// 0.5 |r_i|^2 + componentConstant(i)
  double componentError(std::size_t i, const Values& values) const;
  /// Index of the most likely component; lowest index on ties.
  std::size_t selectComponent(const Values& values) const;

  /// Smallest pairwise pose distance between the hypotheses. Throws
  /// std::logic_error when N < 2.
  double minMutualHypothesisDistance(double lambda = 1.0) const;

 private:
  std::vector<Key> keys_;
  std::vector<MixtureComponent> components_;
  std::vector<double> constants_;
};

}  // namespace ambislam
