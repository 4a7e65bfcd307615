#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ambislam/association.hpp"
#include "ambislam/disambiguation.hpp"
#include "ambislam/measurement_log.hpp"

namespace ambislam {

/// sh: keep the leading hypothesis; sh-random: keep a seeded random one;
/// mm: max-mixture factors; mm-reinit: max-mixtures with consensus re-init.
enum class Method { SH, SHRandom, MM, MMReinit };

const char* toString(Method m);
Method parseMethod(const std::string& s);

struct PipelineConfig {
  IncrementalConfig solver;
  DisambiguationConfig disambiguation;
  AssociationConfig association;
  /// Seed for the random pick of sh-random.
  std::uint64_t seed = 0;
};

struct RunResult {
  Method method = Method::MMReinit;
  Values estimate;
  std::map<Key, std::string> labels;
  /// Logged id of the detection that created each landmark.
  std::map<Key, std::uint32_t> origin;
  std::vector<MeasurementAction> actions;
  double wall_time = 0.0;
  std::uint64_t log_checksum = 0;
};

using StepCallback = std::function<void(std::uint32_t step, const Values& estimate)>;

/// Replays the log step by step. on_step sees the estimate after each step.
RunResult runPipeline(const MeasurementLog& log, Method method, const PipelineConfig& cfg,
                      const StepCallback& on_step = {});

/// FNV-1a over the binary content of every record.
std::uint64_t checksum(const MeasurementLog& log);

}  // namespace ambislam
