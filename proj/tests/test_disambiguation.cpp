#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ambislam/disambiguation.hpp"
#include "fixtures.hpp"

using namespace ambislam;
using namespace ambislam::testing;

namespace {

constexpr double kDeg = M_PI / 180.0;

/// Gradient of the summed squared geodesic distance vanishes at the mean.
Eigen::Vector3d rotationGradient(const std::vector<Pose3d>& poses, const Pose3d& mean) {
  Eigen::Vector3d g = Eigen::Vector3d::Zero();
  for (const auto& p : poses) g += so3::log<double>(mean.rotation().conjugate() * p.rotation());
  return g;
}

}  // namespace

TEST_CASE("karcher mean examples") {
  std::mt19937_64 rng(2);
  const Pose3d p = randomPose(rng);
  CHECK(karcherMean({p}) == p);
  CHECK_THROWS_AS(karcherMean({}), std::invalid_argument);

  const Eigen::Vector3d t(1, 2, 3);
  const Pose3d m2 = karcherMean({yawPose(10 * kDeg, t), yawPose(-10 * kDeg, t)});
  CHECK(isApprox(m2, yawPose(0.0, t), 1e-9));

  // coplanar rotations about one axis average their angles
  const Pose3d m3 = karcherMean({yawPose(0.0, Eigen::Vector3d(0, 0, 0)), yawPose(30 * kDeg, Eigen::Vector3d(1, 0, 0)),
                                 yawPose(60 * kDeg, Eigen::Vector3d(2, 0, 0))});
  CHECK(yawOf(m3) == doctest::Approx(30 * kDeg).epsilon(1e-9));
  CHECK((m3.translation() - Eigen::Vector3d(1, 0, 0)).norm() < 1e-12);
}

TEST_CASE("karcher mean is a stationary point") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose3d c = randomPose(rng);
    std::vector<Pose3d> poses;
    for (int i = 0; i < 7; ++i) poses.push_back(compose(c, exp<double>(randomTwist(rng, 0.8, 1.0))));
    const Pose3d m = karcherMean(poses);
    CHECK(rotationGradient(poses, m).norm() < 1e-8);
  }
}

TEST_CASE("consensus on the six-inlier fixture") {
  std::mt19937_64 rng(11);
  Pose3d center;
  const auto poses = clusteredFixture(rng, center);
  RansacConfig cfg;
  cfg.inlier_threshold = 0.5;

  // brute force: the only subset whose members all lie within r of their own
  // mean and whose size clears the consensus bar is the six-pose cluster
  const auto winners = closedClusters(poses, cfg.inlier_threshold, cfg.consensus_fraction);
  REQUIRE(winners.size() == 1);
  const std::vector<std::size_t> expected{0, 1, 3, 4, 5, 6};
  CHECK(winners[0] == expected);

  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    cfg.seed = seed;
    const auto c = robustPoseAverage(poses, cfg, 1.0);
    if (c && c->inliers == expected && distance(c->mean, center) < 0.05) ++hits;
  }
  CHECK(hits == 100);
}

TEST_CASE("consensus edge cases") {
  std::mt19937_64 rng(12);
  RansacConfig cfg;
  cfg.inlier_threshold = 0.3;

  SUBCASE("identical poses") {
    const Pose3d p = randomPose(rng);
    const auto c = robustPoseAverage(std::vector<Pose3d>(5, p), cfg, 1.0);
    REQUIRE(c);
    CHECK(isApprox(c->mean, p, 1e-12));
    CHECK(c->inliers.size() == 5);
  }
  SUBCASE("even split has no consensus") {
    const auto poses = evenSplitFixture(rng);
    cfg.consensus_fraction = 0.6;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      cfg.seed = seed;
      CHECK_FALSE(robustPoseAverage(poses, cfg, 1.0).has_value());
    }
  }
  SUBCASE("outlier-free caches give the full mean for any fraction") {
    for (int trial = 0; trial < 50; ++trial) {
      const Pose3d c = randomPose(rng);
      std::vector<Pose3d> poses;
      for (int i = 0; i < 9; ++i) poses.push_back(compose(c, exp<double>(randomTwist(rng, 0.03, 0.03))));
      RansacConfig all = cfg;
      all.consensus_fraction = std::uniform_real_distribution<double>(0.01, 1.0)(rng);
      all.seed = trial;
      const auto res = robustPoseAverage(poses, all, 1.0);
      REQUIRE(res);
      CHECK(res->inliers.size() == poses.size());
      CHECK(isApprox(res->mean, karcherMean(poses), 1e-9));
    }
  }
  SUBCASE("fixed seed reproduces the result") {
    Pose3d center;
    const auto poses = clusteredFixture(rng, center);
    cfg.inlier_threshold = 0.5;
    cfg.seed = 77;
    const auto a = robustPoseAverage(poses, cfg, 1.0);
    const auto b = robustPoseAverage(poses, cfg, 1.0);
    REQUIRE(a);
    REQUIRE(b);
    CHECK(a->mean == b->mean);
    CHECK(a->inliers == b->inliers);
  }
  SUBCASE("configuration checks") {
    const std::vector<Pose3d> one{Pose3d()};
    RansacConfig bad = cfg;
    bad.consensus_fraction = 0.0;
    CHECK_THROWS_AS(robustPoseAverage(one, bad, 1.0), std::invalid_argument);
    bad = cfg;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(robustPoseAverage(one, bad, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(robustPoseAverage({}, cfg, 1.0), std::invalid_argument);
    ReinitConfig rc;
    rc.tol = 0.0;
    CHECK_THROWS_AS(rc.validate(), std::invalid_argument);
  }
}

TEST_CASE("adaptive thresholds") {
  const auto noise = GaussianNoiseModel::isotropic(0.1);
  const Pose3d z = yawPose(0.2, Eigen::Vector3d(1, 1, 0));
  const ReinitConfig cfg;
  const auto card = MaxMixtureFactor::uniform(X(0), L(0), {z, compose(z, yawPose(M_PI))}, noise);
  const auto mug = MaxMixtureFactor::uniform(X(0), L(1), {z, compose(z, yawPose(M_PI / 6)), compose(z, yawPose(-M_PI / 6))}, noise);
  const auto single = MaxMixtureFactor::uniform(X(0), L(2), {z}, noise);

  const Thresholds fresh;
  const Thresholds after_card = adaptiveThresholds(card, fresh, cfg);
  CHECK(after_card.d == doctest::Approx(M_PI / 2).epsilon(1e-12));
  CHECK(after_card.r == doctest::Approx(M_PI / 2).epsilon(1e-12));
  const Thresholds after_mug = adaptiveThresholds(mug, after_card, cfg);
  CHECK(after_mug.d == doctest::Approx(M_PI / 12).epsilon(1e-9));
  // thresholds never loosen again
  CHECK(adaptiveThresholds(card, after_mug, cfg).d == after_mug.d);
  const Thresholds after_single = adaptiveThresholds(single, after_mug, cfg);
  CHECK(after_single.d == after_mug.d);
  CHECK(after_single.r == after_mug.r);

  const auto tiny = MaxMixtureFactor::uniform(X(0), L(3), {z, compose(z, yawPose(1e-4))}, noise);
  CHECK(adaptiveThresholds(tiny, after_mug, cfg).d == cfg.tol);
}


TEST_CASE("first observation initializes from the leading hypothesis") {
  ReinitDriver drv{DisambiguationConfig{}};
  const auto noise = GaussianNoiseModel::isotropic(0.1);
  const Pose3d x = yawPose(0.4, Eigen::Vector3d(1, 0, 0));
  drv.addRobot(0, x, noise);
  const Pose3d z = yawPose(0.1, Eigen::Vector3d(2, 0, 0));
  drv.measure(0, 0, {z, compose(z, yawPose(M_PI))}, noise);
  CHECK((drv.actions[0].kind == ActionKind::Init));
  CHECK(drv.reinit.caches().at(L(0)).poses.size() == 2);
  drv.reinit.flush(drv.solver);
  CHECK(isApprox(drv.solver.estimate().at(L(0)), compose(x, z), 1e-9));
  CHECK_THROWS_AS(drv.measure(5, 0, {z}, noise), MissingKeyError);
}

TEST_CASE("the disambiguating measurement triggers one re-initialization") {
  const auto fx = surgeryFixture();
  DisambiguationConfig cfg;
  cfg.ransac.consensus_fraction = 0.25;
  ReinitDriver drv{cfg};
  for (int i = 0; i < 3; ++i) drv.addRobot(i, fx.robots[i], fx.robot_noise);

  drv.measure(0, 1, fx.hypotheses[0], fx.measurement_noise);
  drv.reinit.flush(drv.solver);
  drv.measure(1, 1, fx.hypotheses[1], fx.measurement_noise);
  drv.reinit.flush(drv.solver);
  const double pre = drv.solver.totalError();
  CHECK(rotationDistance(drv.solver.estimate().at(L(1)), fx.landmark_truth) > M_PI / 4);
  drv.measure(2, 1, fx.hypotheses[2], fx.measurement_noise);
  const double post = drv.solver.totalError();
  drv.reinit.flush(drv.solver);

  REQUIRE(drv.actions.size() == 3);
  CHECK((drv.actions[0].kind == ActionKind::Init));
  CHECK((drv.actions[1].kind == ActionKind::Append));
  CHECK((drv.actions[2].kind == ActionKind::Reinit));
  CHECK(drv.reinit.reinitCount() == 1);
  CHECK(post < pre);
  CHECK(rotationDistance(drv.solver.estimate().at(L(1)), fx.landmark_truth) < 5 * kDeg);
  CHECK(drv.reinit.caches().at(L(1)).poses.size() == 6);
}

TEST_CASE("consistent observations never re-initialize") {
  std::mt19937_64 rng(21);
  ReinitDriver drv{DisambiguationConfig{}};
  const auto noise = GaussianNoiseModel::isotropic(0.05);
  const Pose3d lmk = yawPose(0.5, Eigen::Vector3d(3, 2, 0));
  std::size_t expected_cache = 0;
  for (std::uint32_t t = 0; t < 40; ++t) {
    const Pose3d x = yawPose(0.05 * t, Eigen::Vector3d(0.1 * t, 0, 0));
    drv.addRobot(t, x, GaussianNoiseModel::isotropic(1e-3));
    const Pose3d z = compose(between(x, lmk), exp<double>(randomTwist(rng, 0.01, 0.01)));
    if (t % 2 == 0) {
      drv.measure(t, 0, {z, compose(z, yawPose(M_PI / 6)), compose(z, yawPose(-M_PI / 6))}, noise);
      expected_cache += 3;
    } else {
      drv.measure(t, 0, {z}, noise);
      expected_cache += 1;
    }
    drv.reinit.flush(drv.solver);
    CHECK(drv.reinit.caches().at(L(0)).poses.size() == expected_cache);
  }
  CHECK(drv.reinit.reinitCount() == 0);
  for (const auto& a : drv.actions) CHECK((a.kind != ActionKind::Reinit));
}

TEST_CASE("re-initialization trigger is sharp at d") {
  // z1 = {A, A*Rz(1)} sets d = r = 0.5 and anchors the landmark at A; three
  // unimodal sightings at A shifted by delta along x then form the consensus
  const auto run = [](double delta) {
    DisambiguationConfig cfg;
    cfg.ransac.consensus_fraction = 0.5;
    ReinitDriver drv{cfg};
    const auto noise = GaussianNoiseModel::isotropic(0.1);
    const Pose3d A = yawPose(0.3, Eigen::Vector3d(2, 1, 0));
    const Pose3d E(A.rotation(), A.translation() + Eigen::Vector3d(delta, 0, 0));
    drv.addRobot(0, Pose3d(), noise);
    drv.measure(0, 0, {A, compose(A, yawPose(1.0))}, noise);
    drv.reinit.flush(drv.solver);
    for (std::uint32_t t = 1; t <= 5; ++t) {
      drv.addRobot(t, Pose3d(), noise);
      drv.measure(t, 0, {E}, noise);
      drv.reinit.flush(drv.solver);
    }
    return drv;
  };
  const double d = 0.5;
  for (double eps : {1e-3, 1e-6}) {
    auto below = run(d - eps);
    auto above = run(d + eps);
    CHECK(below.reinit.thresholds().d == doctest::Approx(d).epsilon(1e-12));
    CHECK(below.reinit.reinitCount() == 0);
    CHECK(above.reinit.reinitCount() == 1);
  }
}
