#pragma once

#include <limits>
#include <map>
#include <optional>
#include <string>

#include "ambislam/measurement_log.hpp"
#include "ambislam/values.hpp"

namespace ambislam {

struct AssociationConfig {
  enum class Mode { Oracle, NearestNeighbor };
  Mode mode = Mode::Oracle;
  double gate = 1.0;
  double lambda = 1.0;
  bool class_gating = true;

  void validate() const;
};

const char* toString(AssociationConfig::Mode m);
AssociationConfig::Mode parseAssociationMode(const std::string& s);

/// Landmarks known to the estimator: current pose estimates and class labels.
struct LandmarkMap {
  std::map<Key, Pose3d> poses;
  std::map<Key, std::string> labels;
};

/// Existing landmark for the measurement, or nothing for a new one. Oracle
/// mode trusts the logged id. Nearest-neighbour mode places every hypothesis
/// in the world through robot_pose and picks the (same-class) landmark with
/// the smallest distance to any of them, if it is inside the gate; ties go
/// to the lowest landmark index.
std::optional<Key> associate(const LandmarkRecord& record, const Pose3d& robot_pose, const LandmarkMap& map,
                             const AssociationConfig& cfg);

}  // namespace ambislam
