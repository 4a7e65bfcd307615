#include "ambislam/association.hpp"

#include <stdexcept>

namespace ambislam {

void AssociationConfig::validate() const {
  if (!(gate > 0.0)) throw std::invalid_argument("association gate must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("association lambda must be positive");
}

const char* toString(AssociationConfig::Mode m) {
  return m == AssociationConfig::Mode::Oracle ? "oracle" : "nearest_neighbor";
}

AssociationConfig::Mode parseAssociationMode(const std::string& s) {
  if (s == "oracle") return AssociationConfig::Mode::Oracle;
  if (s == "nearest_neighbor") return AssociationConfig::Mode::NearestNeighbor;
  throw std::invalid_argument("unknown association mode '" + s + "'");
}

std::optional<Key> associate(const LandmarkRecord& record, const Pose3d& robot_pose, const LandmarkMap& map,
                             const AssociationConfig& cfg) {
  if (cfg.mode == AssociationConfig::Mode::Oracle) {
    const Key k = L(record.true_id);
    if (map.poses.count(k)) return k;
    return std::nullopt;
  }
  std::optional<Key> best;
  double best_dist = std::numeric_limits<double>::infinity();
  // map iteration is in key order, so strict comparison keeps the lowest index
  for (const auto& [key, pose] : map.poses) {
    if (cfg.class_gating) {
      const auto it = map.labels.find(key);
      if (it == map.labels.end() || it->second != record.label) continue;
    }
    double d = std::numeric_limits<double>::infinity();
    for (const auto& h : record.hypotheses) d = std::min(d, distance(compose(robot_pose, h.pose), pose, cfg.lambda));
    if (d < best_dist) {
      best_dist = d;
      best = key;
    }
  }
  if (best && best_dist < cfg.gate) return best;
  return std::nullopt;
}

}  // namespace ambislam
