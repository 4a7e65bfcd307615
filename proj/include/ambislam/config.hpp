#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ambislam/evaluation.hpp"
#include "ambislam/simulator.hpp"

namespace ambislam {

/// Invalid run configuration: malformed JSON, unknown keys, wrong types or
/// out-of-range values. what() names the file, line and key path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ComparisonConfig {
  std::vector<Method> methods{Method::SH, Method::MM, Method::MMReinit};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
};

/// Everything a CLI command needs besides its input files.
struct RunConfig {
  /// Master seed; copied into every seeded component by applySeed.
  std::uint64_t seed = 0;
  Method method = Method::MMReinit;
  ScenarioConfig scenario = mugScenario();
  PipelineConfig pipeline;
  BenchConfig bench;
  ComparisonConfig comparison;

  /// Throws ConfigError.
  void validate() const;
};

/// Sets the scenario, single-hypothesis, RANSAC and benchmark seeds.
void applySeed(RunConfig& cfg, std::uint64_t seed);

/// Parses a JSON document. Keys that are absent keep their defaults; a
/// "scenario.kind" selects the preset the other scenario keys override.
RunConfig parseRunConfig(const std::string& text, const std::string& source = "<config>");

/// JSON with every field spelled out; parseRunConfig(dumpRunConfig(c))
/// reproduces c.
std::string dumpRunConfig(const RunConfig& cfg);

}  // namespace ambislam
