#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ambislam/measurement_log.hpp"

namespace ambislam {

enum class ScenarioKind { Cards, Mugs, Custom };
enum class AmbiguityKind { CentralSymmetry2, Occlusion3, Unimodal };

const char* toString(ScenarioKind k);
const char* toString(AmbiguityKind k);
ScenarioKind parseScenarioKind(const std::string& s);
AmbiguityKind parseAmbiguityKind(const std::string& s);

struct MeasurementModel {
  AmbiguityKind kind = AmbiguityKind::Occlusion3;
  /// Yaw of the spurious occlusion hypotheses, radians.
  double corruption_angle = M_PI / 6;
};

struct TrajectorySpec {
  enum class Kind { Lawnmower, Waypoints };
  Kind kind = Kind::Lawnmower;
  int rows = 3;
  int cols = 4;
  double spacing = 3.0;
  /// Waypoint positions (x, y) for Kind::Waypoints.
  std::vector<Eigen::Vector2d> waypoints;
  /// Distance between consecutive poses along a segment.
  double step = 0.4;
};

struct LandmarkSpec {
  Pose3d pose;
  std::string label;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Mugs;
  MeasurementModel model;
  TrajectorySpec trajectory;
  /// Number of poses; the round trip is repeated or cut to fit. 0 keeps one
  /// round trip as generated.
  int steps = 200;

  int landmark_count = 10;
  /// Distinct class labels; landmark j gets label j mod class_count.
  int class_count = 1;
  std::string label_prefix = "mug";
  /// Landmarks are scattered over the trajectory bounding box grown by this.
  double layout_margin = 1.5;
  double min_separation = 1.0;
  /// Explicit landmarks for ScenarioKind::Custom.
  std::vector<LandmarkSpec> landmarks;

  Covariance6d odometry_covariance = Covariance6d::Identity() * 1e-4;
  Covariance6d measurement_covariance = Covariance6d::Identity() * 1e-2;
  double covariance_scale = 1.0;
  Covariance6d prior_covariance = Covariance6d::Identity() * 1e-6;

  double sensor_range = 5.0;
  double fov_half_angle = M_PI / 3;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Landmark measurement covariance of the mug experiments, diag(0.01, 0.01,
/// 0.01, 0.2, 0.2, 0.02) in rotation-first twist order.
Covariance6d defaultMugSigma();

/// Desk-scale presets.
ScenarioConfig mugScenario(double covariance_scale = 1.0, std::uint64_t seed = 0);
ScenarioConfig cardScenario(std::uint64_t seed = 0);

/// Serpentine sweep over a rows x cols grid followed by the reverse path.
/// Every segment contributes poses from its start to its end (inclusive)
/// with the segment heading, so corners turn in place.
std::vector<Pose3d> lawnmowerTrajectory(int rows, int cols, double spacing, double step);

/// Same sampling for an explicit waypoint polyline, without the return trip.
std::vector<Pose3d> waypointTrajectory(const std::vector<Eigen::Vector2d>& waypoints, double step);

/// Whether a landmark is measured from a robot pose.
bool isVisible(const Pose3d& robot, const Pose3d& landmark, double range, double fov_half_angle);

/// Whether the handle (landmark +x axis) points away from the camera.
bool handleOccluded(const Pose3d& robot, const Pose3d& landmark);

std::pair<GroundTruth, MeasurementLog> generate(const ScenarioConfig& cfg);

}  // namespace ambislam
