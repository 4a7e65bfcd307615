#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ambislam/se3.hpp"

namespace ambislam {

struct PriorRecord {
  std::uint32_t step = 0;
  Pose3d pose;
  Covariance6d covariance = Covariance6d::Identity();
};

struct OdometryRecord {
  std::uint32_t from = 0;
  std::uint32_t to = 0;
  Pose3d measured;
  Covariance6d covariance = Covariance6d::Identity();
};

struct WeightedHypothesis {
  double weight = 1.0;
  Pose3d pose;
};

struct LandmarkRecord {
  std::uint32_t step = 0;
  std::uint32_t true_id = 0;
  std::string label;
  std::vector<WeightedHypothesis> hypotheses;
  Covariance6d covariance = Covariance6d::Identity();
};

using LogRecord = std::variant<PriorRecord, OdometryRecord, LandmarkRecord>;

/// Time-ordered stream of everything the estimator gets to see.
struct MeasurementLog {
  std::vector<LogRecord> records;

  std::uint32_t stepCount() const;
};

/// Step of the record (the later pose for odometry).
std::uint32_t recordStep(const LogRecord& r);

struct GroundTruth {
  std::vector<Pose3d> trajectory;
  std::map<std::uint32_t, Pose3d> landmarks;
  std::map<std::uint32_t, std::string> labels;
};

}  // namespace ambislam
