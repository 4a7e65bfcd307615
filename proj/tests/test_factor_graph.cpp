#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ambislam/optimizer.hpp"
#include "test_util.hpp"

using namespace ambislam;
using ambislam::testing::numericJacobian;
using ambislam::testing::randomNoise;
using ambislam::testing::randomPose;
using ambislam::testing::randomTwist;

namespace {

/// Noisy circle of poses with odometry, one loop closure and a prior on x0.
struct CircleFixture {
  FactorGraph graph;
  Values truth;
  Values initial;
};

CircleFixture noisyCircle(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  CircleFixture fx;
  const auto odo_noise = GaussianNoiseModel::diagonalVariances((Twist6d() << 1e-4, 1e-4, 4e-4, 4e-3, 4e-3, 1e-3).finished());
  for (int i = 0; i < n; ++i) {
    const double a = 2 * M_PI * i / n;
    fx.truth.insert(X(i), yawPose(a + M_PI / 2, Eigen::Vector3d(10 * std::cos(a), 10 * std::sin(a), 0)));
    fx.graph.addVariable(X(i));
  }
  fx.graph.add(std::make_shared<PriorFactor>(X(0), fx.truth.at(X(0)), GaussianNoiseModel::isotropic(1e-3)));
  Pose3d dead_reckoned = fx.truth.at(X(0));
  fx.initial.insert(X(0), dead_reckoned);
  for (int i = 1; i <= n; ++i) {
    const int j = i % n;
    const Pose3d rel = between(fx.truth.at(X(i - 1)), fx.truth.at(X(j)));
    const Pose3d noisy = compose(rel, exp<double>(samplePerturbation<double>(odo_noise.covariance(), rng)));
    fx.graph.add(std::make_shared<BetweenFactor>(X(i - 1), X(j), noisy, odo_noise));
    if (i < n) {
      dead_reckoned = compose(dead_reckoned, noisy);
      fx.initial.insert(X(i), dead_reckoned);
    }
  }
  return fx;
}

}  // namespace

TEST_CASE("factor errors at known points") {
  std::mt19937_64 rng(1);
  const Pose3d a = randomPose(rng), b = randomPose(rng);
  Values v;
  v.insert(X(0), a);
  v.insert(L(0), b);
  const auto noise = GaussianNoiseModel::isotropic(0.3);

  CHECK(BetweenFactor(X(0), L(0), between(a, b), noise).error(v) < 1e-20);
  CHECK(PriorFactor(X(0), a, noise).error(v) < 1e-20);

  // x = m exp(xi) gives residual exactly xi
  Twist6d xi;
  xi << 0.01, -0.02, 0.005, 0.03, 0.01, -0.02;
  Values w;
  w.insert(X(0), compose(a, exp<double>(xi)));
  const PriorFactor unit(X(0), a, GaussianNoiseModel::isotropic(1.0));
  CHECK(unit.error(w) == doctest::Approx(0.5 * xi.squaredNorm()).epsilon(1e-10));

  Values missing;
  CHECK_THROWS_AS(unit.error(missing), MissingKeyError);
  CHECK_THROWS_AS(BetweenFactor(X(0), L(0), a, noise).linearize(w), MissingKeyError);
}

TEST_CASE("analytic Jacobians match central differences") {
  std::mt19937_64 rng(42);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    const Pose3d a = randomPose(rng), b = randomPose(rng);
    Values v;
    v.insert(X(1), a);
    v.insert(L(2), b);
    // measurements near the prediction, so residual angles stay below pi
    const Pose3d m_between = compose(between(a, b), exp<double>(randomTwist(rng, 2.0, 1.0)));
    const Pose3d m_prior = compose(a, exp<double>(randomTwist(rng, 2.0, 1.0)));
    const BetweenFactor bf(X(1), L(2), m_between, randomNoise(rng));
    const PriorFactor pf(X(1), m_prior, randomNoise(rng));

    const LinearizedFactor lb = bf.linearize(v);
    worst = std::max(worst, (lb.jacobians[0] - numericJacobian(bf, v, X(1))).cwiseAbs().maxCoeff());
    worst = std::max(worst, (lb.jacobians[1] - numericJacobian(bf, v, L(2))).cwiseAbs().maxCoeff());
    const LinearizedFactor lp = pf.linearize(v);
    worst = std::max(worst, (lp.jacobians[0] - numericJacobian(pf, v, X(1))).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("prior at identity linearizes to the whitening block") {
  Values v;
  v.insert(X(0), Pose3d::Identity());
  const PriorFactor pf(X(0), Pose3d::Identity(), GaussianNoiseModel::isotropic(1.0));
  const auto lf = pf.linearize(v);
  CHECK(lf.residual.isZero(0.0));
  CHECK(lf.jacobians[0].isApprox(Matrix6d::Identity(), 1e-15));
}

TEST_CASE("between factor is invariant to a shared left motion") {
  // Under right perturbations, a common left motion exp(d)*p is the body
  // perturbation Ad(p^-1) d on each endpoint; the residual must not change.
  std::mt19937_64 rng(8);
  for (int i = 0; i < 50; ++i) {
    const Pose3d a = randomPose(rng), b = randomPose(rng);
    Values v;
    v.insert(X(0), a);
    v.insert(X(1), b);
    const BetweenFactor bf(X(0), X(1), compose(between(a, b), exp<double>(randomTwist(rng, 1.0, 0.5))),
                           GaussianNoiseModel::isotropic(0.5));
    const auto lf = bf.linearize(v);
    const Twist6d d = randomTwist(rng, 1.0, 1.0);
    const Twist6d combined = lf.jacobians[0] * adjoint(a.inverse()) * d + lf.jacobians[1] * adjoint(b.inverse()) * d;
    CHECK(combined.norm() < 1e-10);
  }
}

TEST_CASE("graph bookkeeping") {
  FactorGraph g;
  g.addVariable(X(0));
  g.addVariable(L(0));
  CHECK_THROWS_AS(g.addVariable(X(0)), DuplicateKeyError);
  const auto noise = GaussianNoiseModel::isotropic(1.0);
  CHECK_THROWS_AS(g.add(std::make_shared<BetweenFactor>(X(0), X(9), Pose3d(), noise)), MissingKeyError);
  CHECK(g.size() == 0);

  const FactorId p = g.add(std::make_shared<PriorFactor>(X(0), Pose3d(), noise));
  const FactorId b = g.add(std::make_shared<BetweenFactor>(X(0), L(0), Pose3d(), noise));
  CHECK(g.incidentFactors(X(0)) == std::set<FactorId>{p, b});
  CHECK(g.incidentFactors(L(0)) == std::set<FactorId>{b});

  auto removed = g.removeVariable(L(0));
  REQUIRE(removed.size() == 1);
  CHECK(removed[0].first == b);
  CHECK(g.size() == 1);
  CHECK(g.incidentFactors(X(0)) == std::set<FactorId>{p});
  CHECK_FALSE(g.hasVariable(L(0)));
  CHECK_THROWS_AS(g.removeVariable(L(0)), MissingKeyError);
}

TEST_CASE("total error is the slot-ordered sum and survives remove/reinsert") {
  auto fx = noisyCircle(20, 3);
  double sum = 0.0;
  fx.graph.forEachFactor([&](FactorId, const Factor& f) { sum += f.error(fx.truth); });
  const double total = fx.graph.totalError(fx.truth);
  CHECK(total == sum);

  const FactorPtr f = fx.graph.removeFactor(5);
  CHECK(fx.graph.totalError(fx.truth) != total);
  fx.graph.reinsert(5, f);
  CHECK(fx.graph.totalError(fx.truth) == total);
}

TEST_CASE("batch optimization on exact and noisy problems") {
  SUBCASE("three-pose chain with exact measurements") {
    FactorGraph g;
    Values truth, init;
    std::mt19937_64 rng(4);
    const auto noise = GaussianNoiseModel::isotropic(0.1);
    for (int i = 0; i < 3; ++i) {
      g.addVariable(X(i));
      truth.insert(X(i), randomPose(rng));
      init.insert(X(i), compose(truth.at(X(i)), exp<double>(randomTwist(rng, 0.3, 0.3))));
    }
    g.add(std::make_shared<PriorFactor>(X(0), truth.at(X(0)), noise));
    for (int i = 1; i < 3; ++i) {
      g.add(std::make_shared<BetweenFactor>(X(i - 1), X(i), between(truth.at(X(i - 1)), truth.at(X(i))), noise));
    }
    const BatchResult r = optimizeBatch(g, init);
    CHECK(r.converged);
    for (int i = 0; i < 3; ++i) CHECK(isApprox(r.values.at(X(i)), truth.at(X(i)), 1e-8));
  }

  SUBCASE("single prior and between") {
    FactorGraph g;
    g.addVariable(X(0));
    g.addVariable(X(1));
    const auto noise = GaussianNoiseModel::isotropic(0.2);
    g.add(std::make_shared<PriorFactor>(X(0), yawPose(0.3), noise));
    g.add(std::make_shared<BetweenFactor>(X(0), X(1), yawPose(0.5, Eigen::Vector3d(1, 0, 0)), noise));
    Values init;
    init.insert(X(0), Pose3d());
    init.insert(X(1), Pose3d());
    const BatchResult r = optimizeBatch(g, init);
    CHECK(r.errors.back() < 1e-10);
    CHECK(isApprox(r.values.at(X(1)), compose(yawPose(0.3), yawPose(0.5, Eigen::Vector3d(1, 0, 0))), 1e-5));
  }

  SUBCASE("noisy circle reaches at least the ground-truth error, monotonically") {
    auto fx = noisyCircle(50, 17);
    const BatchResult r = optimizeBatch(fx.graph, fx.initial);
    CHECK(r.converged);
    CHECK(r.errors.back() <= fx.graph.totalError(fx.truth));
    for (std::size_t i = 1; i < r.errors.size(); ++i) CHECK(r.errors[i] <= r.errors[i - 1]);

    const BatchResult again = optimizeBatch(fx.graph, fx.initial);
    CHECK(again.values == r.values);
    CHECK(again.errors == r.errors);

    OptimizerConfig gn;
    gn.method = OptimizerConfig::Method::GaussNewton;
    const BatchResult g = optimizeBatch(fx.graph, fx.initial, gn);
    CHECK(g.errors.back() == doctest::Approx(r.errors.back()).epsilon(1e-6));
  }
}

TEST_CASE("gauge freedom is reported") {
  FactorGraph g;
  Values v;
  for (int i = 0; i < 3; ++i) {
    g.addVariable(X(i));
    v.insert(X(i), Pose3d());
  }
  g.addVariable(L(4));
  v.insert(L(4), Pose3d());
  const auto noise = GaussianNoiseModel::isotropic(1.0);
  g.add(std::make_shared<PriorFactor>(X(0), Pose3d(), noise));
  g.add(std::make_shared<BetweenFactor>(X(0), X(1), Pose3d(), noise));
  g.add(std::make_shared<BetweenFactor>(X(2), L(4), Pose3d(), noise));
  try {
    optimizeBatch(g, v);
    FAIL("expected UnderconstrainedError");
  } catch (const UnderconstrainedError& e) {
    CHECK(e.component == std::vector<Key>{X(2), L(4)});
  }

  Values partial;
  partial.insert(X(0), Pose3d());
  CHECK_THROWS_AS(optimizeBatch(g, partial), MissingKeyError);
}

TEST_CASE("non-finite measurements abort the solve") {
  FactorGraph g;
  g.addVariable(X(0));
  const Pose3d bad = Pose3d::fromUnitQuaternion(Eigen::Quaterniond::Identity(),
                                                Eigen::Vector3d(std::numeric_limits<double>::infinity(), 0, 0));
  g.add(std::make_shared<PriorFactor>(X(0), bad, GaussianNoiseModel::isotropic(1.0)));
  Values v;
  v.insert(X(0), Pose3d());
  CHECK_THROWS_AS(optimizeBatch(g, v), NumericalError);
}
