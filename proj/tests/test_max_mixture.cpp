#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ambislam/max_mixture.hpp"
#include "test_util.hpp"

using namespace ambislam;
using ambislam::testing::numericJacobian;
using ambislam::testing::randomPose;
using ambislam::testing::randomTwist;

namespace {

Values pair(const Pose3d& x, const Pose3d& l) {
  Values v;
  v.insert(X(0), x);
  v.insert(L(0), l);
  return v;
}

}  // namespace

TEST_CASE("component selection") {
  const auto noise = GaussianNoiseModel::isotropic(0.1);
  std::mt19937_64 rng(5);
  const Pose3d x = randomPose(rng), l = randomPose(rng);
  const Values v = pair(x, l);
  const Pose3d z = between(x, l);

  SUBCASE("single component") {
    const auto f = MaxMixtureFactor::uniform(X(0), L(0), {compose(z, yawPose(1.0))}, noise);
    CHECK(f.selectComponent(v) == 0);
  }
  SUBCASE("zero residual wins") {
    const auto f = MaxMixtureFactor::uniform(X(0), L(0), {compose(z, yawPose(0.5)), compose(z, yawPose(-0.5)), z}, noise);
    CHECK(f.selectComponent(v) == 2);
  }
  SUBCASE("equal residuals are decided by weight") {
    // both components sit 0.2 rad of yaw from the prediction; -log 0.9 < -log 0.1
    std::vector<MixtureComponent> comps{{compose(z, yawPose(0.2)), noise, 0.1}, {compose(z, yawPose(-0.2)), noise, 0.9}};
    const MaxMixtureFactor f(X(0), L(0), comps);
    CHECK(f.componentError(0, v) - f.componentError(1, v) == doctest::Approx(std::log(9.0)).epsilon(1e-9));
    CHECK(f.selectComponent(v) == 1);
  }
  SUBCASE("exact ties go to the lowest index") {
    const auto f = MaxMixtureFactor::uniform(X(0), L(0), {compose(z, yawPose(0.2)), compose(z, yawPose(0.2))}, noise);
    CHECK(f.componentError(0, v) == f.componentError(1, v));
    CHECK(f.selectComponent(v) == 0);
  }
  SUBCASE("normalizer takes part when covariances differ") {
    const auto tight = GaussianNoiseModel::isotropic(0.05);
    const auto broad = GaussianNoiseModel::isotropic(0.5);
    const MaxMixtureFactor f(X(0), L(0), {{z, broad, 1.0}, {z, tight, 1.0}});
    CHECK(f.selectComponent(v) == 1);
    // far from the measurement the broad component explains the residual better
    const Values far = pair(x, compose(l, exp<double>((Twist6d() << 0, 0, 0.3, 0.4, 0, 0).finished())));
    CHECK(f.selectComponent(far) == 0);
  }
  SUBCASE("weights scaled by a constant select the same component") {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<MixtureComponent> comps;
      for (int i = 0; i < 3; ++i) comps.push_back({compose(z, exp<double>(randomTwist(rng, 1.0, 0.3))), noise, 0.2 + 0.3 * i});
      auto scaled = comps;
      for (auto& c : scaled) c.weight *= 7.5;
      const Values w = pair(compose(x, exp<double>(randomTwist(rng, 0.5, 0.2))), l);
      CHECK(MaxMixtureFactor(X(0), L(0), comps).selectComponent(w) ==
            MaxMixtureFactor(X(0), L(0), scaled).selectComponent(w));
    }
  }
}

TEST_CASE("construction checks") {
  const auto noise = GaussianNoiseModel::isotropic(0.1);
  CHECK_THROWS_AS(MaxMixtureFactor(X(0), L(0), {}), std::invalid_argument);
  CHECK_THROWS_AS(MaxMixtureFactor(X(0), L(0), {{Pose3d(), noise, 0.0}}), std::invalid_argument);
  const MaxMixtureFactor f(X(0), L(0), {{Pose3d(), noise, 2.0}, {Pose3d(), noise, 6.0}});
  CHECK(f.components()[0].weight == doctest::Approx(0.25));
  CHECK(f.components()[1].weight == doctest::Approx(0.75));
}

TEST_CASE("single component reduces to a between factor") {
  std::mt19937_64 rng(13);
  const auto noise = GaussianNoiseModel::diagonalVariances((Twist6d() << 0.01, 0.02, 0.03, 0.2, 0.1, 0.3).finished());
  const Pose3d z = randomPose(rng);
  const MaxMixtureFactor mm(X(0), L(0), {{z, noise, 1.0}});
  const BetweenFactor bf(X(0), L(0), z, noise);
  const double offset = mm.componentConstant(0);
  for (int i = 0; i < 100; ++i) {
    const Values v = pair(randomPose(rng), randomPose(rng));
    CHECK(std::abs((mm.error(v) - bf.error(v)) - offset) < 1e-12);
  }
}

TEST_CASE("error is the brute-force minimum over components") {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 100; ++i) {
    const Pose3d x = randomPose(rng), l = randomPose(rng);
    const Pose3d z = between(x, l);
    std::vector<MixtureComponent> comps;
    for (int k = 0; k < 3; ++k) {
      comps.push_back({compose(z, exp<double>(randomTwist(rng, 1.5, 1.0))),
                       GaussianNoiseModel::isotropic(0.05 + 0.2 * k), 0.1 + 0.4 * k});
    }
    const MaxMixtureFactor f(X(0), L(0), comps);
    const Values v = pair(x, l);
    double brute = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < f.size(); ++k) {
      const Twist6d r = logPrincipal(between(f.components()[k].measured, between(x, l)));
      const double e = 0.5 * f.components()[k].noise.squaredMahalanobis(r) + f.componentConstant(k);
      brute = std::min(brute, e);
      CHECK(f.error(v) <= f.componentError(k, v));
    }
    CHECK(std::abs(f.error(v) - brute) <= 1e-12);
  }
}

TEST_CASE("identical components behave like one") {
  std::mt19937_64 rng(2);
  const auto noise = GaussianNoiseModel::isotropic(0.2);
  const Pose3d z = randomPose(rng);
  const auto triple = MaxMixtureFactor::uniform(X(0), L(0), {z, z, z}, noise);
  const auto single = MaxMixtureFactor::uniform(X(0), L(0), {z}, noise);
  for (int i = 0; i < 50; ++i) {
    const Values v = pair(randomPose(rng), randomPose(rng));
    CHECK(triple.error(v) == doctest::Approx(single.error(v)).epsilon(1e-14));
  }
}

TEST_CASE("Jacobians of the selected branch match central differences") {
  std::mt19937_64 rng(99);
  double worst = 0;
  int checked = 0;
  while (checked < 200) {
    const Pose3d x = randomPose(rng), l = randomPose(rng);
    const Pose3d z = between(x, l);
    std::vector<Pose3d> hyps;
    for (int k = 0; k < 3; ++k) hyps.push_back(compose(z, exp<double>(randomTwist(rng, 2.0, 1.0))));
    const auto f = MaxMixtureFactor::uniform(X(0), L(0), hyps, GaussianNoiseModel::isotropic(0.3));
    const Values v = pair(x, l);
    // skip states near a selection boundary
    std::vector<double> errs;
    for (std::size_t k = 0; k < f.size(); ++k) errs.push_back(f.componentError(k, v));
    std::sort(errs.begin(), errs.end());
    if (errs[1] - errs[0] < 1e-3) continue;
    const auto lf = f.linearize(v);
    worst = std::max(worst, (lf.jacobians[0] - numericJacobian(f, v, X(0))).cwiseAbs().maxCoeff());
    worst = std::max(worst, (lf.jacobians[1] - numericJacobian(f, v, L(0))).cwiseAbs().maxCoeff());
    ++checked;
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("minimum mutual hypothesis distance") {
  const auto noise = GaussianNoiseModel::isotropic(0.1);
  const Pose3d z = yawPose(0.4, Eigen::Vector3d(1, 2, 0));
  const auto card = MaxMixtureFactor::uniform(X(0), L(0), {z, compose(z, yawPose(M_PI))}, noise);
  CHECK(card.minMutualHypothesisDistance(1.0) == doctest::Approx(M_PI).epsilon(1e-12));

  const auto mug = MaxMixtureFactor::uniform(
      X(0), L(0), {z, compose(z, yawPose(M_PI / 6)), compose(z, yawPose(-M_PI / 6))}, noise);
  CHECK(mug.minMutualHypothesisDistance(1.0) == doctest::Approx(M_PI / 6).epsilon(1e-12));

  const auto dup = MaxMixtureFactor::uniform(X(0), L(0), {z, z}, noise);
  CHECK(dup.minMutualHypothesisDistance(1.0) == 0.0);

  const auto one = MaxMixtureFactor::uniform(X(0), L(0), {z}, noise);
  CHECK_THROWS_AS(one.minMutualHypothesisDistance(1.0), std::logic_error);
}
