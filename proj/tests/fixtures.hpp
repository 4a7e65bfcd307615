#pragma once

#include <cmath>
#include <random>

#include "ambislam/disambiguation.hpp"
#include "ambislam/incremental_solver.hpp"
#include "ambislam/max_mixture.hpp"
#include "test_util.hpp"

namespace ambislam::testing {

/// Random chain of robot poses with a handful of landmarks, used to compare
/// incremental against batch solutions.
struct RandomProblem {
  /// Factors and values grouped per incremental step.
  std::vector<std::vector<FactorPtr>> step_factors;
  std::vector<Values> step_values;
  FactorGraph graph;
  Values initial;
};

inline RandomProblem randomProblem(std::uint64_t seed, int poses, int landmarks) {
  std::mt19937_64 rng(seed);
  RandomProblem p;
  const auto odo = GaussianNoiseModel::diagonalVariances((Twist6d() << 1e-4, 1e-4, 1e-3, 1e-2, 1e-2, 1e-3).finished());
  const auto meas = GaussianNoiseModel::diagonalVariances((Twist6d() << 4e-3, 4e-3, 4e-3, 0.02, 0.02, 0.02).finished());
  std::vector<Pose3d> truth_x;
  std::vector<Pose3d> truth_l;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int j = 0; j < landmarks; ++j) {
    truth_l.push_back(yawPose(M_PI * u(rng), Eigen::Vector3d(8 * u(rng), 8 * u(rng), 0.5 * u(rng))));
  }
  Pose3d est;
  std::vector<bool> seen(landmarks, false);
  for (int t = 0; t < poses; ++t) {
    std::vector<FactorPtr> fs;
    Values vs;
    const double a = 0.15 * t;
    truth_x.push_back(yawPose(a + M_PI / 2, Eigen::Vector3d(6 * std::cos(a), 6 * std::sin(a), 0)));
    if (t == 0) {
      est = truth_x[0];
      fs.push_back(std::make_shared<PriorFactor>(X(0), est, GaussianNoiseModel::isotropic(1e-3)));
    } else {
      const Pose3d z = compose(between(truth_x[t - 1], truth_x[t]),
                               exp<double>(samplePerturbation<double>(odo.covariance(), rng)));
      fs.push_back(std::make_shared<BetweenFactor>(X(t - 1), X(t), z, odo));
      est = compose(est, z);
    }
    vs.insert(X(t), est);
    for (int j = 0; j < landmarks; ++j) {
      if ((t + j) % 3 != 0) continue;
      const Pose3d z = compose(between(truth_x[t], truth_l[j]),
                               exp<double>(samplePerturbation<double>(meas.covariance(), rng)));
      fs.push_back(std::make_shared<BetweenFactor>(X(t), L(j), z, meas));
      if (!seen[j]) {
        seen[j] = true;
        vs.insert(L(j), compose(est, z));
      }
    }
    for (const auto& [k, v] : vs) {
      p.graph.addVariable(k);
      p.initial.insert(k, v);
    }
    for (const auto& f : fs) p.graph.add(f);
    p.step_factors.push_back(std::move(fs));
    p.step_values.push_back(std::move(vs));
  }
  return p;
}

/// Three robot poses observing one landmark through two-hypothesis
/// measurements. The truth T is the landmark pose; the first hypothesis of
/// z1 is the half-turn W, so initializing from it starts in the wrong mode.
///   z1 = {W, T}, z2 = {T * Rz(+90), T}, z3 = {T, T * Rz(-90)}
struct SurgeryFixture {
  Pose3d landmark_truth;
  Pose3d wrong_init;
  std::vector<Pose3d> robots;
  std::vector<std::vector<Pose3d>> hypotheses;  // relative, per measurement
  GaussianNoiseModel robot_noise = GaussianNoiseModel::isotropic(1e-3);
  GaussianNoiseModel measurement_noise = GaussianNoiseModel::isotropic(0.1);
};

inline SurgeryFixture surgeryFixture() {
  SurgeryFixture fx;
  fx.landmark_truth = yawPose(0.3, Eigen::Vector3d(2.0, 1.0, 0.0));
  fx.wrong_init = compose(fx.landmark_truth, yawPose(M_PI));
  for (int i = 0; i < 3; ++i) fx.robots.push_back(yawPose(0.1 * i, Eigen::Vector3d(0.5 * i, 0.0, 0.0)));
  const Pose3d T = fx.landmark_truth;
  const std::vector<std::vector<Pose3d>> world{
      {fx.wrong_init, T}, {compose(T, yawPose(M_PI / 2)), T}, {T, compose(T, yawPose(-M_PI / 2))}};
  for (int i = 0; i < 3; ++i) {
    std::vector<Pose3d> rel;
    for (const auto& w : world[i]) rel.push_back(between(fx.robots[i], w));
    fx.hypotheses.push_back(rel);
  }
  return fx;
}

/// Eight poses: six within 0.05 of center (indices 0, 1, 3, 4, 5, 6) and
/// two outliers 3 m away.
inline std::vector<Pose3d> clusteredFixture(std::mt19937_64& rng, Pose3d& center) {
  center = randomPose(rng);
  std::vector<Pose3d> poses;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 6; ++i) {
    // rotation and translation offsets keep each pose within 0.05 of the center
    const Twist6d xi = (Twist6d() << 0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng), 0.01 * u(rng),
                        0.01 * u(rng)).finished();
    poses.push_back(compose(center, exp<double>(xi)));
  }
  const Twist6d far1 = (Twist6d() << 0, 0, 0, 3.0, 0, 0).finished();
  const Twist6d far2 = (Twist6d() << 0, 0, 0, 0, -3.0, 0).finished();
  poses.insert(poses.begin() + 2, compose(center, exp<double>(far1)));
  poses.push_back(compose(center, exp<double>(far2)));
  return poses;
}

/// Four poses around a and four around a half-turned, shifted copy of a.
inline std::vector<Pose3d> evenSplitFixture(std::mt19937_64& rng) {
  const Pose3d a = randomPose(rng);
  const Pose3d b = compose(a, yawPose(M_PI, Eigen::Vector3d(1, 0, 0)));
  std::vector<Pose3d> poses;
  for (int i = 0; i < 4; ++i) {
    poses.push_back(compose(a, exp<double>(randomTwist(rng, 0.02, 0.02))));
    poses.push_back(compose(b, exp<double>(randomTwist(rng, 0.02, 0.02))));
  }
  return poses;
}

/// Every subset S larger than ceil(fraction * n) that is closed under the
/// inlier test: a pose lies within r of the Karcher mean of S iff it is in S.
inline std::vector<std::vector<std::size_t>> closedClusters(const std::vector<Pose3d>& poses, double r,
                                                            double fraction) {
  const std::size_t n = poses.size();
  const auto s = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  std::vector<std::vector<std::size_t>> winners;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    std::vector<std::size_t> idx;
    std::vector<Pose3d> sel;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        idx.push_back(i);
        sel.push_back(poses[i]);
      }
    }
    if (idx.size() <= s) continue;
    const Pose3d m = karcherMean(sel);
    bool closed = true;
    for (std::size_t i = 0; i < n; ++i) {
      const bool in = distance(poses[i], m) <= r;
      if (in != static_cast<bool>(mask & (1u << i))) closed = false;
    }
    if (closed) winners.push_back(idx);
  }
  return winners;
}

/// Incremental solver plus re-initialization, fed one factor at a time.
struct ReinitDriver {
  IncrementalSolver solver;
  DynamicReinit reinit;
  std::vector<MeasurementAction> actions;

  explicit ReinitDriver(DisambiguationConfig cfg) : reinit(std::move(cfg)) {}

  void addRobot(std::uint32_t t, const Pose3d& pose, const GaussianNoiseModel& noise) {
    Values v;
    v.insert(X(t), pose);
    solver.update({std::make_shared<PriorFactor>(X(t), pose, noise)}, v);
  }
  void measure(std::uint32_t t, std::uint32_t j, const std::vector<Pose3d>& hyps, const GaussianNoiseModel& noise) {
    actions.push_back(
        reinit.process(solver, t, std::make_shared<MaxMixtureFactor>(MaxMixtureFactor::uniform(X(t), L(j), hyps, noise))));
  }
};

}  // namespace ambislam::testing
