#include "ambislam/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ambislam {

namespace {

constexpr double kRadToDeg = 180.0 / M_PI;

}  // namespace

ErrorMetrics computeErrors(const Values& estimate, const GroundTruth& truth,
                           const std::map<Key, std::uint32_t>& landmark_ids) {
  ErrorMetrics m;
  for (const auto& [k, p] : estimate) {
    if (k.isRobot()) {
      if (k.index >= truth.trajectory.size()) continue;
      const Pose3d& gt = truth.trajectory[k.index];
      m.mte_robot += (p.translation() - gt.translation()).norm();
      m.mre_robot += rotationDistance(p, gt) * kRadToDeg;
      ++m.robots;
    } else {
      std::uint32_t id = k.index;
      if (!landmark_ids.empty()) {
        const auto it = landmark_ids.find(k);
        if (it == landmark_ids.end()) continue;
        id = it->second;
      }
      const auto it = truth.landmarks.find(id);
      if (it == truth.landmarks.end()) continue;
      m.mte_landmark += (p.translation() - it->second.translation()).norm();
      m.mre_landmark += rotationDistance(p, it->second) * kRadToDeg;
      ++m.landmarks;
    }
  }
  if (m.robots == 0 && m.landmarks == 0) throw std::invalid_argument("computeErrors: estimate and truth share no keys");
  if (m.robots > 0) {
    m.mte_robot /= static_cast<double>(m.robots);
    m.mre_robot /= static_cast<double>(m.robots);
  }
  if (m.landmarks > 0) {
    m.mte_landmark /= static_cast<double>(m.landmarks);
    m.mre_landmark /= static_cast<double>(m.landmarks);
  }
  return m;
}

std::map<Key, std::uint32_t> matchLandmarks(const Values& estimate, const std::map<Key, std::string>& labels,
                                            const GroundTruth& truth) {
  std::map<Key, std::uint32_t> out;
  for (const auto& [k, p] : estimate) {
    if (!k.isLandmark()) continue;
    const auto lab = labels.find(k);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [id, gt] : truth.landmarks) {
      if (lab != labels.end()) {
        const auto tl = truth.labels.find(id);
        if (tl != truth.labels.end() && tl->second != lab->second) continue;
      }
      const double d = (p.translation() - gt.translation()).norm();
      if (d < best) {
        best = d;
        out[k] = id;
      }
    }
  }
  return out;
}

std::vector<MethodReport> runComparison(const MeasurementLog& log, const GroundTruth& truth,
                                        const std::vector<Method>& methods, const PipelineConfig& cfg,
                                        bool with_series) {
  const bool oracle = cfg.association.mode == AssociationConfig::Mode::Oracle;
  const std::uint64_t expected = checksum(log);
  std::vector<MethodReport> reports;
  for (Method method : methods) {
    MethodReport report;
    report.method = method;
    std::map<Key, std::string> labels;
    StepCallback on_step;
    if (with_series) {
      on_step = [&](std::uint32_t step, const Values& est) {
        SeriesPoint sp;
        sp.step = step;
        ErrorMetrics m;
        try {
          m = computeErrors(est, truth, oracle ? std::map<Key, std::uint32_t>{} : matchLandmarks(est, {}, truth));
        } catch (const std::invalid_argument&) {
          return;
        }
        sp.mte_robot = m.mte_robot;
        sp.mte_landmark = m.mte_landmark;
        report.series.push_back(sp);
      };
    }
    RunResult run = runPipeline(log, method, cfg, on_step);
    if (run.log_checksum != expected) throw std::logic_error("runComparison: measurement stream differs between methods");
    report.metrics = computeErrors(run.estimate, truth, oracle ? std::map<Key, std::uint32_t>{}
                                                               : matchLandmarks(run.estimate, run.labels, truth));
    report.wall_time = run.wall_time;
    report.reinit_count = static_cast<std::size_t>(
        std::count_if(run.actions.begin(), run.actions.end(), [](const auto& a) { return a.kind == ActionKind::Reinit; }));
    report.estimate = std::move(run.estimate);
    report.actions = std::move(run.actions);
    reports.push_back(std::move(report));
  }
  return reports;
}

void BenchConfig::validate() const {
  if (chain_length < 2) throw std::invalid_argument("bench chain length must be >= 2");
  if (repetitions < 1) throw std::invalid_argument("bench repetitions must be >= 1");
  if (landmark_counts.empty() || edge_counts.empty()) throw std::invalid_argument("bench needs landmark and edge counts");
  for (int l : landmark_counts) {
    if (l < 1) throw std::invalid_argument("bench landmark counts must be >= 1");
  }
  for (int e : edge_counts) {
    if (e < 1) throw std::invalid_argument("bench edge counts must be >= 1");
  }
}

TimingStats summarize(std::vector<double> samples) {
  TimingStats s;
  s.samples = samples;
  if (samples.empty()) return s;
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(n);
  return s;
}

namespace {

struct BenchProblem {
  std::vector<FactorPtr> factors;  // everything up to the second-to-last pose
  Values initial;
  std::vector<FactorPtr> last_factors;  // the step being timed
  Values last_initial;
  int landmarks = 0;
};

BenchProblem benchProblem(int poses, int landmarks, int edges, std::mt19937_64& rng) {
  BenchProblem p;
  p.landmarks = landmarks;
  const auto odo = GaussianNoiseModel::diagonalVariances((Twist6d() << 1e-4, 1e-4, 1e-4, 1e-3, 1e-3, 1e-3).finished());
  const auto meas = GaussianNoiseModel::diagonalVariances((Twist6d() << 1e-3, 1e-3, 1e-3, 1e-2, 1e-2, 1e-2).finished());
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u(-1.0, 1.0);

  std::vector<Pose3d> truth{Pose3d()};
  for (int t = 1; t < poses; ++t) {
    const Twist6d xi = (Twist6d() << 0.02 * n01(rng), 0.02 * n01(rng), 0.1 * u(rng), 0.5, 0.05 * n01(rng), 0.01 * n01(rng)).finished();
    truth.push_back(compose(truth.back(), exp<double>(xi)));
  }
  // each landmark sits near a random pose of the chain
  std::vector<Pose3d> lmk;
  std::vector<int> anchor;
  for (int j = 0; j < landmarks; ++j) {
    const int a = std::uniform_int_distribution<int>(0, poses - 1)(rng);
    anchor.push_back(a);
    lmk.push_back(compose(truth[a], exp<double>((Twist6d() << u(rng), u(rng), u(rng), 2 * u(rng), 2 * u(rng), u(rng)).finished())));
  }
  std::vector<std::pair<int, int>> edge_list;  // (pose, landmark)
  for (int e = 0; e < edges; ++e) {
    const int j = e < landmarks ? e : std::uniform_int_distribution<int>(0, landmarks - 1)(rng);
    const int spread = std::uniform_int_distribution<int>(-20, 20)(rng);
    const int t = std::clamp(anchor[j] + spread, 0, poses - 2);
    edge_list.emplace_back(t, j);
  }
  // random edges precede the timed step, which always gets one more edge
  edge_list.emplace_back(poses - 1, std::uniform_int_distribution<int>(0, landmarks - 1)(rng));
  std::sort(edge_list.begin(), edge_list.end());

  Pose3d est = truth[0];
  std::vector<bool> seen(landmarks, false);
  std::size_t next_edge = 0;
  for (int t = 0; t < poses; ++t) {
    const bool last = (t == poses - 1);
    auto& fs = last ? p.last_factors : p.factors;
    auto& vs = last ? p.last_initial : p.initial;
    if (t == 0) {
      fs.push_back(std::make_shared<PriorFactor>(X(0), truth[0], GaussianNoiseModel::isotropic(1e-3)));
    } else {
      const Pose3d z = compose(between(truth[t - 1], truth[t]), exp<double>(samplePerturbation<double>(odo.covariance(), rng)));
      fs.push_back(std::make_shared<BetweenFactor>(X(t - 1), X(t), z, odo));
      est = compose(est, z);
    }
    vs.insert(X(t), est);
    for (; next_edge < edge_list.size() && edge_list[next_edge].first == t; ++next_edge) {
      const int j = edge_list[next_edge].second;
      const Pose3d z = compose(between(truth[t], lmk[j]), exp<double>(samplePerturbation<double>(meas.covariance(), rng)));
      fs.push_back(std::make_shared<BetweenFactor>(X(t), L(j), z, meas));
      if (!seen[j]) {
        seen[j] = true;
        vs.insert(L(j), compose(est, z));
      }
    }
  }
  return p;
}

template <typename F>
double timed(F&& f) {
  const auto start = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Initial values for the timed step chained off the current estimate, the
/// way a front end seeds them: the new pose from its odometry edge, a new
/// landmark from its first measurement.
Values chainedInitial(const BenchProblem& p, const Values& estimate) {
  Values known = estimate;
  Values out;
  for (const auto& f : p.last_factors) {
    const auto* b = dynamic_cast<const BetweenFactor*>(f.get());
    if (!b) continue;
    const Key& from = b->keys()[0];
    const Key& to = b->keys()[1];
    if (p.last_initial.contains(to) && !out.contains(to)) {
      const Pose3d v = compose(known.at(from), b->measured());
      out.insert(to, v);
      known.insert(to, v);
    }
  }
  if (out.size() != p.last_initial.size()) throw std::logic_error("benchReinit: unreachable new variable");
  return out;
}

}  // namespace

std::vector<BenchRow> benchReinit(const BenchConfig& cfg) {
  cfg.validate();
  std::vector<BenchRow> rows;
  std::uint64_t config_index = 0;
  for (int landmarks : cfg.landmark_counts) {
    for (int edges : cfg.edge_counts) {
      BenchRow row;
      row.poses = cfg.chain_length;
      row.landmarks = landmarks;
      row.edges = edges;
      std::vector<double> plain, reinit, batch;
      for (int rep = 0; rep < cfg.repetitions; ++rep) {
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(config_index), static_cast<std::uint32_t>(rep)};
        std::mt19937_64 rng(seq);
        const BenchProblem p = benchProblem(cfg.chain_length, landmarks, edges, rng);

        IncrementalConfig solver_cfg = cfg.solver;
        solver_cfg.batch_interval = 0;
        IncrementalSolver base(solver_cfg);
        base.update(p.factors, p.initial);

        const Values last_initial = chainedInitial(p, base.estimate());

        // a random landmark that is not a brand-new variable of the timed step
        std::vector<Key> existing;
        for (int j = 0; j < landmarks; ++j) {
          if (base.estimate().contains(L(j))) existing.push_back(L(j));
        }
        const Key target = existing[std::uniform_int_distribution<std::size_t>(0, existing.size() - 1)(rng)];
        const Pose3d moved = compose(base.estimate().at(target),
                                     exp<double>((Twist6d() << 0.0, 0.0, M_PI / 2, 0.5, -0.5, 0.0).finished()));

        IncrementalSolver a = base;
        plain.push_back(timed([&] { a.update(p.last_factors, last_initial); }));
        IncrementalSolver b = base;
        reinit.push_back(timed([&] { b.reinitializeLandmark(target, moved, p.last_factors, last_initial); }));
        // the batch step rebuilds the graph and solves it from the previous estimate
        batch.push_back(timed([&] {
          FactorGraph graph;
          Values start = base.estimate();
          for (const auto& [k, v] : last_initial) start.insert(k, v);
          for (const auto& [k, v] : start) graph.addVariable(k);
          for (const auto& f : p.factors) graph.add(f);
          for (const auto& f : p.last_factors) graph.add(f);
          optimizeBatch(graph, start, cfg.solver.batch);
        }));
      }
      row.plain = summarize(plain);
      row.reinit = summarize(reinit);
      row.batch = summarize(batch);
      rows.push_back(std::move(row));
      ++config_index;
    }
  }
  return rows;
}

}  // namespace ambislam
