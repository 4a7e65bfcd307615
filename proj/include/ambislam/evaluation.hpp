#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ambislam/pipeline.hpp"

namespace ambislam {

/// Translation errors in meters, rotation errors in degrees.
struct ErrorMetrics {
  double mte_robot = 0.0;
  double mte_landmark = 0.0;
  double mre_robot = 0.0;
  double mre_landmark = 0.0;
  std::size_t robots = 0;
  std::size_t landmarks = 0;
};

/// Robot keys x_t are scored against trajectory[t]. Landmark keys are scored
/// against the truth id given by landmark_ids, or their own index when the
/// map is empty. No alignment: the prior on x0 fixes the frame. Throws
/// std::invalid_argument when no key can be scored.
ErrorMetrics computeErrors(const Values& estimate, const GroundTruth& truth,
                           const std::map<Key, std::uint32_t>& landmark_ids = {});

/// Pairs every estimated landmark with the nearest true landmark of the same
/// class (ties to the lowest id).
std::map<Key, std::uint32_t> matchLandmarks(const Values& estimate, const std::map<Key, std::string>& labels,
                                            const GroundTruth& truth);

struct SeriesPoint {
  std::uint32_t step = 0;
  double mte_robot = 0.0;
  double mte_landmark = 0.0;
};

struct MethodReport {
  Method method = Method::MMReinit;
  ErrorMetrics metrics;
  double wall_time = 0.0;
  std::size_t reinit_count = 0;
  std::vector<SeriesPoint> series;
  Values estimate;
  std::vector<MeasurementAction> actions;
};

/// Runs every method on the same log. Throws std::logic_error if the methods
/// did not consume identical measurement streams.
std::vector<MethodReport> runComparison(const MeasurementLog& log, const GroundTruth& truth,
                                        const std::vector<Method>& methods, const PipelineConfig& cfg,
                                        bool with_series = true);

struct BenchConfig {
  int chain_length = 1000;
  std::vector<int> landmark_counts{1, 5, 10};
  std::vector<int> edge_counts{10, 25, 50};
  int repetitions = 10;
  std::uint64_t seed = 0;
  IncrementalConfig solver;

  void validate() const;
};

struct TimingStats {
  double median = 0.0;
  double mean = 0.0;
  std::vector<double> samples;
};

struct BenchRow {
  int poses = 0;
  int landmarks = 0;
  int edges = 0;
  TimingStats plain;
  TimingStats reinit;
  TimingStats batch;
};

/// Times one incremental step, one incremental step with a landmark
/// re-initialization, and one batch step on random chains with sparse
/// landmark edges.
std::vector<BenchRow> benchReinit(const BenchConfig& cfg);

TimingStats summarize(std::vector<double> samples);

}  // namespace ambislam
