#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <sstream>

#include "ambislam/config.hpp"
#include "ambislam/evaluation.hpp"
#include "ambislam/io.hpp"
#include "ambislam/simulator.hpp"

using namespace ambislam;

namespace {

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
};

void addCommon(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  cmd->add_option("-s,--seed", opts.seed, "Master seed (overrides the configuration)");
}

RunConfig loadConfig(const CommonOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? parseRunConfig("{}") : parseRunConfig(readTextFile(opts.config_path), opts.config_path);
  if (opts.seed) applySeed(cfg, *opts.seed);
  return cfg;
}

template <typename Write>
void writeFile(const std::string& path, Write&& write) {
  std::ostringstream os;
  write(os);
  writeTextFile(path, os.str());
}

void printWarnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

MeasurementLog loadLog(const std::string& path) {
  std::istringstream is(readTextFile(path));
  std::vector<std::string> warnings;
  MeasurementLog log = readMeasurementLog(is, path, &warnings);
  printWarnings(warnings);
  return log;
}

GraphFile loadGraph(const std::string& path) {
  std::istringstream is(readTextFile(path));
  std::vector<std::string> warnings;
  GraphFile g = readGraph(is, path, &warnings);
  printWarnings(warnings);
  return g;
}

std::string metricsCsvHeader() { return "mte_robot,mte_landmark,mre_robot_deg,mre_landmark_deg,robots,landmarks"; }

std::string metricsCsv(const ErrorMetrics& m) {
  return formatDouble(m.mte_robot) + "," + formatDouble(m.mte_landmark) + "," + formatDouble(m.mre_robot) + "," +
         formatDouble(m.mre_landmark) + "," + std::to_string(m.robots) + "," + std::to_string(m.landmarks);
}

int simulate(const CommonOptions& opts, const std::string& out, std::string truth_path) {
  const RunConfig cfg = loadConfig(opts);
  const auto [truth, log] = generate(cfg.scenario);
  if (truth_path.empty()) truth_path = out + ".truth";
  writeFile(out, [&](std::ostream& os) { writeMeasurementLog(os, log); });
  writeFile(truth_path, [&](std::ostream& os) { writeGraph(os, truthGraph(truth)); });
  std::cerr << "simulate: " << truth.trajectory.size() << " poses, " << truth.landmarks.size() << " landmarks, "
            << log.records.size() << " records\n";
  return 0;
}

int solve(const CommonOptions& opts, const std::string& log_path, const std::string& method_name, const std::string& out,
          const std::string& actions_path) {
  RunConfig cfg = loadConfig(opts);
  if (!method_name.empty()) cfg.method = parseMethod(method_name);
  const MeasurementLog log = loadLog(log_path);
  const RunResult run = runPipeline(log, cfg.method, cfg.pipeline);
  writeFile(out, [&](std::ostream& os) { writeGraph(os, toGraphFile({}, run.estimate, run.labels)); });
  if (!actions_path.empty()) writeFile(actions_path, [&](std::ostream& os) { writeActionLog(os, run.actions); });
  const auto reinits = std::count_if(run.actions.begin(), run.actions.end(),
                                     [](const MeasurementAction& a) { return a.kind == ActionKind::Reinit; });
  std::cerr << "solve: " << toString(cfg.method) << ", " << run.estimate.size() << " variables, " << reinits
            << " re-initializations\n";
  return 0;
}

int evaluate(const std::string& estimate_path, const std::string& truth_path, const std::string& match,
             const std::string& out) {
  const GraphFile est = loadGraph(estimate_path);
  const GroundTruth truth = truthFromGraph(loadGraph(truth_path));
  std::map<Key, std::uint32_t> ids;
  for (const auto& [k, p] : est.vertices) {
    if (k.isRobot() && k.index >= truth.trajectory.size()) {
      throw std::runtime_error("mismatched key sets: " + k.str() + " is not in the ground truth");
    }
    if (k.isLandmark() && match == "oracle" && !truth.landmarks.count(k.index)) {
      throw std::runtime_error("mismatched key sets: " + k.str() + " is not in the ground truth");
    }
  }
  if (match == "nearest") ids = matchLandmarks(est.vertices, est.labels, truth);
  const ErrorMetrics m = computeErrors(est.vertices, truth, ids);
  const std::string text = metricsCsvHeader() + "\n" + metricsCsv(m) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    writeTextFile(out, text);
  }
  return 0;
}

int benchReinitCommand(const CommonOptions& opts, const std::string& out, const std::string& samples_path) {
  const RunConfig cfg = loadConfig(opts);
  BenchConfig bench = cfg.bench;
  bench.solver = cfg.pipeline.solver;
  const auto rows = benchReinit(bench);
  writeFile(out, [&](std::ostream& os) {
    os << "poses,landmarks,edges,plain_s,reinit_s,batch_s\n";
    for (const auto& r : rows) {
      os << r.poses << ',' << r.landmarks << ',' << r.edges << ',' << formatDouble(r.plain.median) << ','
         << formatDouble(r.reinit.median) << ',' << formatDouble(r.batch.median) << '\n';
    }
  });
  if (!samples_path.empty()) {
    nlohmann::ordered_json j = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json row;
      row["poses"] = r.poses;
      row["landmarks"] = r.landmarks;
      row["edges"] = r.edges;
      for (const auto& [name, t] : {std::pair{"plain", &r.plain}, {"reinit", &r.reinit}, {"batch", &r.batch}}) {
        row[name] = {{"median", t->median}, {"mean", t->mean}, {"samples", t->samples}};
      }
      j.push_back(row);
    }
    writeTextFile(samples_path, j.dump(2) + "\n");
  }
  for (const auto& r : rows) {
    std::cerr << "bench-reinit: L" << r.landmarks << " E" << r.edges << "  plain " << r.plain.median << " s  reinit "
              << r.reinit.median << " s  batch " << r.batch.median << " s\n";
  }
  return 0;
}

int compare(const CommonOptions& opts, const std::string& out, const std::string& series_path,
            const std::string& timing_path) {
  const RunConfig base = loadConfig(opts);
  std::ostringstream table, series, timing;
  table << "method,seed," << metricsCsvHeader() << ",reinits\n";
  series << "method,seed,step,mte_robot,mte_landmark\n";
  timing << "method,seed,wall_time_s\n";
  const std::vector<std::uint64_t> seeds = opts.seed ? std::vector<std::uint64_t>{*opts.seed} : base.comparison.seeds;
  for (std::uint64_t seed : seeds) {
    RunConfig cfg = base;
    applySeed(cfg, seed);
    const auto [truth, log] = generate(cfg.scenario);
    const auto reports = runComparison(log, truth, cfg.comparison.methods, cfg.pipeline, !series_path.empty());
    for (const auto& r : reports) {
      table << toString(r.method) << ',' << seed << ',' << metricsCsv(r.metrics) << ',' << r.reinit_count << '\n';
      for (const auto& p : r.series) {
        series << toString(r.method) << ',' << seed << ',' << p.step << ',' << formatDouble(p.mte_robot) << ','
               << formatDouble(p.mte_landmark) << '\n';
      }
      timing << toString(r.method) << ',' << seed << ',' << formatDouble(r.wall_time) << '\n';
      std::cerr << "compare: seed " << seed << ' ' << toString(r.method) << "  MTE robot " << r.metrics.mte_robot
                << " m, landmark " << r.metrics.mte_landmark << " m\n";
    }
  }
  writeTextFile(out, table.str());
  if (!series_path.empty()) writeTextFile(series_path, series.str());
  if (!timing_path.empty()) writeTextFile(timing_path, timing.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-hypothesis object SLAM with max-mixture factors and landmark re-initialization"};
  app.require_subcommand(1);

  CommonOptions common;

  auto* sim = app.add_subcommand("simulate", "Generate a measurement log and its ground truth");
  std::string sim_out, sim_truth;
  addCommon(sim, common);
  sim->add_option("-o,--out", sim_out, "Measurement log to write")->required();
  sim->add_option("--truth", sim_truth, "Ground-truth graph to write (default: <out>.truth)");

  auto* sol = app.add_subcommand("solve", "Run one estimator over a measurement log");
  std::string sol_log, sol_method, sol_out, sol_actions;
  addCommon(sol, common);
  sol->add_option("-l,--log", sol_log, "Measurement log")->required()->check(CLI::ExistingFile);
  sol->add_option("-m,--method", sol_method, "sh, sh-random, mm or mm-reinit (default: from the configuration)");
  sol->add_option("-o,--out", sol_out, "Estimate graph to write")->required();
  sol->add_option("--actions", sol_actions, "Per-measurement action log (JSON lines) to write");

  auto* ev = app.add_subcommand("eval", "Score an estimate against ground truth");
  std::string ev_est, ev_truth, ev_match = "oracle", ev_out;
  ev->add_option("-e,--estimate", ev_est, "Estimate graph")->required()->check(CLI::ExistingFile);
  ev->add_option("-t,--truth", ev_truth, "Ground-truth graph")->required()->check(CLI::ExistingFile);
  ev->add_option("--match", ev_match, "Landmark matching: oracle (same key) or nearest")
      ->check(CLI::IsMember({"oracle", "nearest"}));
  ev->add_option("-o,--out", ev_out, "CSV to write (default: stdout)");

  auto* bench = app.add_subcommand("bench-reinit", "Time plain, re-initializing and batch steps");
  std::string bench_out, bench_samples;
  addCommon(bench, common);
  bench->add_option("-o,--out", bench_out, "CSV of median timings to write")->required();
  bench->add_option("--samples", bench_samples, "JSON with every timing sample to write");

  auto* cmp = app.add_subcommand("compare", "Run every configured method over every configured seed");
  std::string cmp_out, cmp_series, cmp_timing;
  addCommon(cmp, common);
  cmp->add_option("-o,--out", cmp_out, "CSV with one row per method and seed")->required();
  cmp->add_option("--series", cmp_series, "CSV of per-step errors to write");
  cmp->add_option("--timing", cmp_timing, "CSV of wall times to write");

  auto* cfg = app.add_subcommand("config", "Print the configuration with every default filled in");
  addCommon(cfg, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return simulate(common, sim_out, sim_truth);
    if (*sol) return solve(common, sol_log, sol_method, sol_out, sol_actions);
    if (*ev) return evaluate(ev_est, ev_truth, ev_match, ev_out);
    if (*bench) return benchReinitCommand(common, bench_out, bench_samples);
    if (*cmp) return compare(common, cmp_out, cmp_series, cmp_timing);
    if (*cfg) {
      std::cout << dumpRunConfig(loadConfig(common));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
