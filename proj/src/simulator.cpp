#include "ambislam/simulator.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "ambislam/noise_model.hpp"

namespace ambislam {

const char* toString(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Cards: return "cards";
    case ScenarioKind::Mugs: return "mugs";
    case ScenarioKind::Custom: return "custom";
  }
  return "?";
}

const char* toString(AmbiguityKind k) {
  switch (k) {
    case AmbiguityKind::CentralSymmetry2: return "central_symmetry_2";
    case AmbiguityKind::Occlusion3: return "occlusion_3";
    case AmbiguityKind::Unimodal: return "unimodal";
  }
  return "?";
}

ScenarioKind parseScenarioKind(const std::string& s) {
  if (s == "cards") return ScenarioKind::Cards;
  if (s == "mugs") return ScenarioKind::Mugs;
  if (s == "custom") return ScenarioKind::Custom;
  throw std::invalid_argument("unknown scenario kind '" + s + "'");
}

AmbiguityKind parseAmbiguityKind(const std::string& s) {
  if (s == "central_symmetry_2") return AmbiguityKind::CentralSymmetry2;
  if (s == "occlusion_3") return AmbiguityKind::Occlusion3;
  if (s == "unimodal") return AmbiguityKind::Unimodal;
  throw std::invalid_argument("unknown ambiguity model '" + s + "'");
}

namespace {

void requirePsd(const Covariance6d& c, const char* what) {
  if (!c.allFinite() || (c - c.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument(std::string(what) + " must be symmetric and finite");
  }
  Eigen::SelfAdjointEigenSolver<Covariance6d> es(c);
  if (es.eigenvalues().minCoeff() < 0.0) throw std::invalid_argument(std::string(what) + " must be positive semi-definite");
}

}  // namespace

void ScenarioConfig::validate() const {
  // zero covariances are allowed for noiseless round trips
  requirePsd(odometry_covariance, "odometry covariance");
  requirePsd(measurement_covariance, "measurement covariance");
  requireSymmetricPositiveDefinite(prior_covariance, "prior covariance");
  if (!(covariance_scale > 0.0)) throw std::invalid_argument("covariance scale must be positive");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (kind != ScenarioKind::Custom && landmark_count < 0) throw std::invalid_argument("landmark count must be >= 0");
  if (class_count < 1) throw std::invalid_argument("class count must be >= 1");
  if (!(sensor_range > 0.0)) throw std::invalid_argument("sensor range must be positive");
  if (!(fov_half_angle > 0.0 && fov_half_angle <= M_PI)) throw std::invalid_argument("fov half angle must be in (0, pi]");
  if (!(trajectory.step > 0.0)) throw std::invalid_argument("trajectory step must be positive");
  if (trajectory.kind == TrajectorySpec::Kind::Lawnmower) {
    if (trajectory.rows < 1 || trajectory.cols < 1) throw std::invalid_argument("lawnmower rows and cols must be >= 1");
    if (!(trajectory.spacing > 0.0)) throw std::invalid_argument("lawnmower spacing must be positive");
  } else if (trajectory.waypoints.size() < 2) {
    throw std::invalid_argument("waypoint trajectory needs at least two waypoints");
  }
  if (model.kind != AmbiguityKind::Unimodal && std::abs(std::remainder(model.corruption_angle, 2 * M_PI)) < 1e-9) {
    throw std::invalid_argument("corruption angle must be nonzero");
  }
}

Covariance6d defaultMugSigma() {
  Twist6d d;
  d << 0.01, 0.01, 0.01, 0.2, 0.2, 0.02;
  return d.asDiagonal();
}

ScenarioConfig mugScenario(double covariance_scale, std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Mugs;
  cfg.model.kind = AmbiguityKind::Occlusion3;
  cfg.trajectory.rows = 3;
  cfg.trajectory.cols = 4;
  cfg.trajectory.spacing = 3.0;
  cfg.trajectory.step = 0.4;
  cfg.steps = 200;
  cfg.landmark_count = 10;
  cfg.class_count = 1;
  cfg.label_prefix = "mug";
  Twist6d odo;
  odo << 2.5e-5, 2.5e-5, 1e-4, 4e-4, 4e-4, 1e-4;
  cfg.odometry_covariance = odo.asDiagonal();
  cfg.measurement_covariance = defaultMugSigma();
  cfg.covariance_scale = covariance_scale;
  cfg.seed = seed;
  return cfg;
}

ScenarioConfig cardScenario(std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.kind = ScenarioKind::Cards;
  cfg.model.kind = AmbiguityKind::CentralSymmetry2;
  cfg.trajectory.rows = 3;
  cfg.trajectory.cols = 5;
  cfg.trajectory.spacing = 2.0;
  cfg.trajectory.step = 0.25;
  cfg.steps = 0;
  cfg.landmark_count = 8;
  cfg.class_count = 6;
  cfg.label_prefix = "card";
  Twist6d odo;
  odo << 1e-5, 1e-5, 4e-5, 1e-4, 1e-4, 1e-5;
  cfg.odometry_covariance = odo.asDiagonal();
  Twist6d meas;
  meas << 1e-3, 1e-3, 1e-3, 2.5e-3, 2.5e-3, 1e-3;
  cfg.measurement_covariance = meas.asDiagonal();
  cfg.sensor_range = 2.5;
  cfg.fov_half_angle = M_PI / 3;
  cfg.seed = seed;
  return cfg;
}

namespace {

void appendSegment(std::vector<Pose3d>& out, const Eigen::Vector2d& a, const Eigen::Vector2d& b, double step) {
  const Eigen::Vector2d d = b - a;
  const double len = d.norm();
  if (len == 0.0) return;
  const double heading = std::atan2(d.y(), d.x());
  const int n = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
  for (int i = 0; i <= n; ++i) {
    const Eigen::Vector2d p = a + d * (static_cast<double>(i) / n);
    out.push_back(yawPose(heading, Eigen::Vector3d(p.x(), p.y(), 0.0)));
  }
}

std::vector<Eigen::Vector2d> serpentine(int rows, int cols, double spacing) {
  std::vector<Eigen::Vector2d> pts;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int cc = (r % 2 == 0) ? c : cols - 1 - c;
      pts.emplace_back(cc * spacing, r * spacing);
    }
  }
  return pts;
}

}  // namespace

std::vector<Pose3d> waypointTrajectory(const std::vector<Eigen::Vector2d>& waypoints, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("trajectory step must be positive");
  std::vector<Pose3d> out;
  if (waypoints.size() == 1) {
    out.push_back(yawPose(0.0, Eigen::Vector3d(waypoints[0].x(), waypoints[0].y(), 0.0)));
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) appendSegment(out, waypoints[i - 1], waypoints[i], step);
  return out;
}

std::vector<Pose3d> lawnmowerTrajectory(int rows, int cols, double spacing, double step) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("lawnmower rows and cols must be >= 1");
  std::vector<Eigen::Vector2d> pts = serpentine(rows, cols, spacing);
  std::vector<Eigen::Vector2d> round = pts;
  round.insert(round.end(), pts.rbegin(), pts.rend());
  std::vector<Pose3d> out;
  for (std::size_t i = 1; i < round.size(); ++i) appendSegment(out, round[i - 1], round[i], step);
  if (out.empty()) out.push_back(Pose3d());
  return out;
}

bool isVisible(const Pose3d& robot, const Pose3d& landmark, double range, double fov_half_angle) {
  const Eigen::Vector3d p = robot.rotation().conjugate() * (landmark.translation() - robot.translation());
  const double dist = p.norm();
  if (dist > range || dist == 0.0) return false;
  return std::abs(std::atan2(p.y(), p.x())) < fov_half_angle;
}

bool handleOccluded(const Pose3d& robot, const Pose3d& landmark) {
  const Eigen::Vector3d handle = landmark.rotation() * Eigen::Vector3d::UnitX();
  const Eigen::Vector3d away = landmark.translation() - robot.translation();
  return handle.dot(away) > 0.0;
}

namespace {

std::vector<Pose3d> buildTrajectory(const ScenarioConfig& cfg) {
  std::vector<Pose3d> path;
  if (cfg.trajectory.kind == TrajectorySpec::Kind::Lawnmower) {
    path = lawnmowerTrajectory(cfg.trajectory.rows, cfg.trajectory.cols, cfg.trajectory.spacing, cfg.trajectory.step);
  } else {
    path = waypointTrajectory(cfg.trajectory.waypoints, cfg.trajectory.step);
  }
  if (cfg.steps == 0) return path;
  std::vector<Pose3d> out;
  out.reserve(cfg.steps);
  // further laps repeat the path; its round trips end where they started
  for (int i = 0; i < cfg.steps; ++i) out.push_back(path[i % path.size()]);
  return out;
}

std::vector<LandmarkSpec> buildLandmarks(const ScenarioConfig& cfg, const std::vector<Pose3d>& path,
                                         std::mt19937_64& rng) {
  if (cfg.kind == ScenarioKind::Custom) return cfg.landmarks;
  std::uniform_real_distribution<double> yaw(-M_PI, M_PI);
  std::vector<LandmarkSpec> out;
  const auto label = [&](int j) { return cfg.label_prefix + std::to_string(j % cfg.class_count); };

  if (cfg.kind == ScenarioKind::Cards) {
    // cards sit on the grid between neighbouring sweep lanes
    const double s = cfg.trajectory.spacing;
    const int lanes = std::max(1, cfg.trajectory.rows - 1);
    const int per_lane = std::max(1, (cfg.landmark_count + lanes - 1) / lanes);
    for (int j = 0; j < cfg.landmark_count; ++j) {
      const int row = j / per_lane;
      const int col = j % per_lane;
      const Eigen::Vector3d t((col + 0.5) * s, (row + 0.5) * s, 0.0);
      out.push_back({yawPose(yaw(rng), t), label(j)});
    }
    return out;
  }

  Eigen::Vector2d lo(1e300, 1e300), hi(-1e300, -1e300);
  for (const auto& p : path) {
    lo = lo.cwiseMin(p.translation().head<2>());
    hi = hi.cwiseMax(p.translation().head<2>());
  }
  lo.array() -= cfg.layout_margin;
  hi.array() += cfg.layout_margin;
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  for (int j = 0; j < cfg.landmark_count; ++j) {
    Eigen::Vector3d t;
    for (int attempt = 0;; ++attempt) {
      t = Eigen::Vector3d(ux(rng), uy(rng), 0.0);
      bool ok = true;
      for (const auto& l : out) ok = ok && (l.pose.translation() - t).norm() >= cfg.min_separation;
      for (const auto& p : path) ok = ok && (p.translation() - t).norm() >= 0.5 * cfg.min_separation;
      if (ok || attempt > 1000) break;
    }
    out.push_back({yawPose(yaw(rng), t), label(j)});
  }
  return out;
}

}  // namespace

std::pair<GroundTruth, MeasurementLog> generate(const ScenarioConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  GroundTruth truth;
  truth.trajectory = buildTrajectory(cfg);
  const auto landmarks = buildLandmarks(cfg, truth.trajectory, rng);
  for (std::size_t j = 0; j < landmarks.size(); ++j) {
    truth.landmarks[static_cast<std::uint32_t>(j)] = landmarks[j].pose;
    truth.labels[static_cast<std::uint32_t>(j)] = landmarks[j].label;
  }

  MeasurementLog log;
  const Covariance6d meas_cov = cfg.covariance_scale * cfg.measurement_covariance;
  log.records.push_back(PriorRecord{0, truth.trajectory[0], cfg.prior_covariance});
  for (std::uint32_t t = 0; t < truth.trajectory.size(); ++t) {
    const Pose3d& x = truth.trajectory[t];
    if (t > 0) {
      const Pose3d rel = between(truth.trajectory[t - 1], x);
      const Pose3d z = compose(rel, exp<double>(samplePerturbation<double>(cfg.odometry_covariance, rng)));
      log.records.push_back(OdometryRecord{t - 1, t, z, cfg.odometry_covariance});
    }
    for (std::uint32_t j = 0; j < landmarks.size(); ++j) {
      const Pose3d& l = landmarks[j].pose;
      if (!isVisible(x, l, cfg.sensor_range, cfg.fov_half_angle)) continue;
      // one perturbation shared by all hypotheses of the detection
      const Pose3d z = compose(between(x, l), exp<double>(samplePerturbation<double>(meas_cov, rng)));
      LandmarkRecord rec{t, j, landmarks[j].label, {}, meas_cov};
      switch (cfg.model.kind) {
        case AmbiguityKind::Unimodal:
          rec.hypotheses = {{1.0, z}};
          break;
        case AmbiguityKind::CentralSymmetry2: {
          const Pose3d flipped = compose(z, yawPose(M_PI));
          // the reading that looks upright from the camera comes first
          const bool upright = std::abs(yawOf(z)) <= M_PI / 2;
          rec.hypotheses = upright ? std::vector<WeightedHypothesis>{{0.5, z}, {0.5, flipped}}
                                   : std::vector<WeightedHypothesis>{{0.5, flipped}, {0.5, z}};
          break;
        }
        case AmbiguityKind::Occlusion3:
          if (handleOccluded(x, l)) {
            const double a = cfg.model.corruption_angle;
            rec.hypotheses = {{1.0 / 3, z}, {1.0 / 3, compose(z, yawPose(a))}, {1.0 / 3, compose(z, yawPose(-a))}};
            std::shuffle(rec.hypotheses.begin(), rec.hypotheses.end(), rng);
          } else {
            rec.hypotheses = {{1.0, z}};
          }
          break;
      }
      log.records.push_back(std::move(rec));
    }
  }
  return {std::move(truth), std::move(log)};
}

}  // namespace ambislam
