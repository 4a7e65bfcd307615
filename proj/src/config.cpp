#include "ambislam/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <limits>
#include <set>

namespace ambislam {

namespace {

using Json = nlohmann::ordered_json;

/// 1-based line of the key at the end of path, found by searching for each
/// quoted path component after the previous one. 0 when not found.
std::size_t locate(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& component : path) {
    const std::string key = component.substr(0, component.find('['));
    const std::string quoted = "\"" + key + "\"";
    for (;;) {
      pos = text.find(quoted, pos);
      if (pos == std::string::npos) return 0;
      std::size_t after = pos + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      pos += quoted.size();
    }
  }
  return static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n')) + 1;
}

std::string join(const std::vector<std::string>& path) {
  std::string out;
  for (const auto& p : path) out += (out.empty() ? "" : ".") + p;
  return out;
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
    std::string where = source_;
    if (const std::size_t line = locate(text_, path)) where += ":" + std::to_string(line);
    throw ConfigError(where + ": " + (path.empty() ? "" : join(path) + ": ") + message);
  }

  /// Rejects keys of obj outside allowed.
  void keys(const Json& obj, const std::vector<std::string>& path, std::initializer_list<const char*> allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [k, _] : obj.items()) {
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
        auto p = path;
        p.push_back(k);
        std::string list;
        for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(p, "unknown key (expected one of: " + list + ")");
      }
    }
  }

  template <typename T>
  T value(const Json& v, const std::vector<std::string>& p) const {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) fail(p, "expected true or false");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) fail(p, "expected an integer");
      if (std::is_unsigned_v<T> && !v.is_number_unsigned()) fail(p, "expected a non-negative integer");
      if (!std::is_unsigned_v<T> && v.is_number_unsigned() &&
          v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
        fail(p, "integer out of range");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) fail(p, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) fail(p, "expected a string");
    }
    return v.get<T>();
  }

  template <typename T>
  void get(const Json& obj, const std::vector<std::string>& path, const char* key, T& out) const {
    if (!obj.contains(key)) return;
    auto p = path;
    p.push_back(key);
    out = value<T>(obj.at(key), p);
  }

  template <typename T, typename Parse>
  void getEnum(const Json& obj, const std::vector<std::string>& path, const char* key, T& out, Parse parse) const {
    std::string s;
    if (!obj.contains(key)) return;
    get(obj, path, key, s);
    try {
      out = parse(s);
    } catch (const std::invalid_argument& e) {
      auto p = path;
      p.push_back(key);
      fail(p, e.what());
    }
  }

  template <typename T>
  void getList(const Json& obj, const std::vector<std::string>& path, const char* key, std::vector<T>& out) const {
    if (!obj.contains(key)) return;
    auto p = path;
    p.push_back(key);
    const Json& v = obj.at(key);
    if (!v.is_array()) fail(p, "expected an array");
    std::vector<T> items;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto pi = p;
      pi.back() += "[" + std::to_string(i) + "]";
      items.push_back(value<T>(v[i], pi));
    }
    out = std::move(items);
  }

  void getMatrix(const Json& obj, const std::vector<std::string>& path, const char* key, Covariance6d& out) const {
    if (!obj.contains(key)) return;
    auto p = path;
    p.push_back(key);
    const Json& v = obj.at(key);
    const auto number = [&](const Json& x) {
      if (!x.is_number()) fail(p, "expected numbers");
      return x.get<double>();
    };
    if (!v.is_array() || v.size() != 6) fail(p, "expected 6 diagonal entries or a 6x6 array");
    if (v[0].is_array()) {
      for (int i = 0; i < 6; ++i) {
        if (!v[i].is_array() || v[i].size() != 6) fail(p, "expected a 6x6 array");
        for (int j = 0; j < 6; ++j) out(i, j) = number(v[i][j]);
      }
    } else {
      out.setZero();
      for (int i = 0; i < 6; ++i) out(i, i) = number(v[i]);
    }
  }

  Pose3d pose(const Json& v, const std::vector<std::string>& p) const {
    if (!v.is_array() || v.size() != 7) fail(p, "expected [tx, ty, tz, qx, qy, qz, qw]");
    double c[7];
    for (int i = 0; i < 7; ++i) {
      if (!v[i].is_number()) fail(p, "expected numbers");
      c[i] = v[i].get<double>();
    }
    const Eigen::Quaterniond q(c[6], c[3], c[4], c[5]);
    const double n = q.norm();
    if (std::abs(n - 1.0) > 1e-6) fail(p, "quaternion is not unit norm");
    if (std::abs(n - 1.0) <= 1e-12) return Pose3d::fromUnitQuaternion(q, Eigen::Vector3d(c[0], c[1], c[2]));
    return Pose3d(q, Eigen::Vector3d(c[0], c[1], c[2]));
  }

 private:
  const std::string& text_;
  const std::string& source_;
};

void readTrajectory(const Reader& r, const Json& j, const std::vector<std::string>& path, TrajectorySpec& t) {
  r.keys(j, path, {"kind", "rows", "cols", "spacing", "step", "waypoints"});
  r.getEnum(j, path, "kind", t.kind, [](const std::string& s) {
    if (s == "lawnmower") return TrajectorySpec::Kind::Lawnmower;
    if (s == "waypoints") return TrajectorySpec::Kind::Waypoints;
    throw std::invalid_argument("unknown trajectory kind '" + s + "' (expected lawnmower or waypoints)");
  });
  r.get(j, path, "rows", t.rows);
  r.get(j, path, "cols", t.cols);
  r.get(j, path, "spacing", t.spacing);
  r.get(j, path, "step", t.step);
  if (j.contains("waypoints")) {
    auto p = path;
    p.push_back("waypoints");
    const Json& w = j.at("waypoints");
    if (!w.is_array()) r.fail(p, "expected an array of [x, y]");
    t.waypoints.clear();
    for (const auto& xy : w) {
      if (!xy.is_array() || xy.size() != 2 || !xy[0].is_number() || !xy[1].is_number()) r.fail(p, "expected [x, y] pairs");
      t.waypoints.emplace_back(xy[0].get<double>(), xy[1].get<double>());
    }
  }
}

void readScenario(const Reader& r, const Json& j, const std::vector<std::string>& path, ScenarioConfig& s) {
  r.keys(j, path,
         {"kind", "ambiguity", "corruption_angle", "trajectory", "steps", "landmark_count", "class_count", "label_prefix",
          "layout_margin", "min_separation", "landmarks", "odometry_covariance", "measurement_covariance",
          "covariance_scale", "prior_covariance", "sensor_range", "fov_half_angle"});
  if (j.contains("kind")) {
    ScenarioKind kind = s.kind;
    r.getEnum(j, path, "kind", kind, parseScenarioKind);
    const std::uint64_t seed = s.seed;
    switch (kind) {
      case ScenarioKind::Mugs: s = mugScenario(); break;
      case ScenarioKind::Cards: s = cardScenario(); break;
      case ScenarioKind::Custom:
        s = ScenarioConfig{};
        s.kind = ScenarioKind::Custom;
        s.landmark_count = 0;
        break;
    }
    s.seed = seed;
  }
  r.getEnum(j, path, "ambiguity", s.model.kind, parseAmbiguityKind);
  r.get(j, path, "corruption_angle", s.model.corruption_angle);
  if (j.contains("trajectory")) {
    auto p = path;
    p.push_back("trajectory");
    readTrajectory(r, j.at("trajectory"), p, s.trajectory);
  }
  r.get(j, path, "steps", s.steps);
  r.get(j, path, "landmark_count", s.landmark_count);
  r.get(j, path, "class_count", s.class_count);
  r.get(j, path, "label_prefix", s.label_prefix);
  r.get(j, path, "layout_margin", s.layout_margin);
  r.get(j, path, "min_separation", s.min_separation);
  if (j.contains("landmarks")) {
    auto p = path;
    p.push_back("landmarks");
    const Json& arr = j.at("landmarks");
    if (!arr.is_array()) r.fail(p, "expected an array");
    s.landmarks.clear();
    for (const auto& item : arr) {
      r.keys(item, p, {"pose", "label"});
      LandmarkSpec spec;
      if (!item.contains("pose")) r.fail(p, "landmark without pose");
      auto pp = p;
      pp.push_back("pose");
      spec.pose = r.pose(item.at("pose"), pp);
      r.get(item, p, "label", spec.label);
      s.landmarks.push_back(spec);
    }
  }
  r.getMatrix(j, path, "odometry_covariance", s.odometry_covariance);
  r.getMatrix(j, path, "measurement_covariance", s.measurement_covariance);
  r.get(j, path, "covariance_scale", s.covariance_scale);
  r.getMatrix(j, path, "prior_covariance", s.prior_covariance);
  r.get(j, path, "sensor_range", s.sensor_range);
  r.get(j, path, "fov_half_angle", s.fov_half_angle);
}

void readSolver(const Reader& r, const Json& j, const std::vector<std::string>& path, IncrementalConfig& s) {
  r.keys(j, path, {"relinearize_threshold", "batch_interval", "max_inner_iterations", "rtol", "batch"});
  r.get(j, path, "relinearize_threshold", s.relinearize_threshold);
  r.get(j, path, "batch_interval", s.batch_interval);
  r.get(j, path, "max_inner_iterations", s.max_inner_iterations);
  r.get(j, path, "rtol", s.rtol);
  if (!j.contains("batch")) return;
  auto p = path;
  p.push_back("batch");
  const Json& b = j.at("batch");
  r.keys(b, p, {"method", "initial_lambda", "lambda_factor", "max_lambda", "rtol", "atol", "max_iterations"});
  r.getEnum(b, p, "method", s.batch.method, [](const std::string& m) {
    if (m == "levenberg_marquardt") return OptimizerConfig::Method::LevenbergMarquardt;
    if (m == "gauss_newton") return OptimizerConfig::Method::GaussNewton;
    throw std::invalid_argument("unknown optimizer '" + m + "' (expected levenberg_marquardt or gauss_newton)");
  });
  r.get(b, p, "initial_lambda", s.batch.initial_lambda);
  r.get(b, p, "lambda_factor", s.batch.lambda_factor);
  r.get(b, p, "max_lambda", s.batch.max_lambda);
  r.get(b, p, "rtol", s.batch.rtol);
  r.get(b, p, "atol", s.batch.atol);
  r.get(b, p, "max_iterations", s.batch.max_iterations);
}

void readDisambiguation(const Reader& r, const Json& j, const std::vector<std::string>& path, DisambiguationConfig& d) {
  r.keys(j, path, {"kappa", "tol", "lambda", "ransac"});
  r.get(j, path, "kappa", d.reinit.kappa);
  r.get(j, path, "tol", d.reinit.tol);
  r.get(j, path, "lambda", d.reinit.lambda);
  if (!j.contains("ransac")) return;
  auto p = path;
  p.push_back("ransac");
  const Json& rs = j.at("ransac");
  r.keys(rs, p, {"subset_size", "consensus_fraction", "max_iterations"});
  r.get(rs, p, "subset_size", d.ransac.subset_size);
  r.get(rs, p, "consensus_fraction", d.ransac.consensus_fraction);
  r.get(rs, p, "max_iterations", d.ransac.max_iterations);
}

void readAssociation(const Reader& r, const Json& j, const std::vector<std::string>& path, AssociationConfig& a) {
  r.keys(j, path, {"mode", "gate", "lambda", "class_gating"});
  r.getEnum(j, path, "mode", a.mode, parseAssociationMode);
  r.get(j, path, "gate", a.gate);
  r.get(j, path, "lambda", a.lambda);
  r.get(j, path, "class_gating", a.class_gating);
}

void readBench(const Reader& r, const Json& j, const std::vector<std::string>& path, BenchConfig& b) {
  r.keys(j, path, {"chain_length", "landmark_counts", "edge_counts", "repetitions"});
  r.get(j, path, "chain_length", b.chain_length);
  r.getList(j, path, "landmark_counts", b.landmark_counts);
  r.getList(j, path, "edge_counts", b.edge_counts);
  r.get(j, path, "repetitions", b.repetitions);
}

void readComparison(const Reader& r, const Json& j, const std::vector<std::string>& path, ComparisonConfig& c) {
  r.keys(j, path, {"methods", "seeds"});
  if (j.contains("methods")) {
    std::vector<std::string> names;
    r.getList(j, path, "methods", names);
    c.methods.clear();
    for (const auto& n : names) {
      try {
        c.methods.push_back(parseMethod(n));
      } catch (const std::invalid_argument& e) {
        r.fail({path.begin(), path.end()}, e.what());
      }
    }
  }
  r.getList(j, path, "seeds", c.seeds);
}

Json matrixJson(const Covariance6d& m) {
  Covariance6d diag = Covariance6d::Zero();
  diag.diagonal() = m.diagonal();
  Json out = Json::array();
  if (m == diag) {
    for (int i = 0; i < 6; ++i) out.push_back(m(i, i));
    return out;
  }
  for (int i = 0; i < 6; ++i) {
    Json row = Json::array();
    for (int j = 0; j < 6; ++j) row.push_back(m(i, j));
    out.push_back(row);
  }
  return out;
}

Json poseJson(const Pose3d& p) {
  const auto& t = p.translation();
  const auto& q = p.rotation();
  return Json::array({t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()});
}

}  // namespace

void RunConfig::validate() const {
  try {
    scenario.validate();
    pipeline.disambiguation.ransac.validate();
    pipeline.disambiguation.reinit.validate();
    pipeline.association.validate();
    bench.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(pipeline.solver.relinearize_threshold > 0.0)) throw ConfigError("solver.relinearize_threshold must be positive");
  if (pipeline.solver.batch_interval < 0) throw ConfigError("solver.batch_interval must be >= 0");
  if (pipeline.solver.max_inner_iterations < 1) throw ConfigError("solver.max_inner_iterations must be >= 1");
  if (pipeline.solver.batch.max_iterations < 1) throw ConfigError("solver.batch.max_iterations must be >= 1");
  if (comparison.methods.empty()) throw ConfigError("comparison.methods must not be empty");
  if (comparison.seeds.empty()) throw ConfigError("comparison.seeds must not be empty");
}

void applySeed(RunConfig& cfg, std::uint64_t seed) {
  cfg.seed = seed;
  cfg.scenario.seed = seed;
  cfg.pipeline.seed = seed;
  cfg.pipeline.disambiguation.ransac.seed = seed;
  cfg.bench.seed = seed;
}

RunConfig parseRunConfig(const std::string& text, const std::string& source) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  const Reader r(text, source);
  r.keys(j, {}, {"seed", "method", "scenario", "solver", "disambiguation", "association", "bench", "comparison"});
  RunConfig cfg;
  std::uint64_t seed = 0;
  r.get(j, {}, "seed", seed);
  applySeed(cfg, seed);
  r.getEnum(j, {}, "method", cfg.method, parseMethod);
  if (j.contains("scenario")) readScenario(r, j.at("scenario"), {"scenario"}, cfg.scenario);
  if (j.contains("solver")) readSolver(r, j.at("solver"), {"solver"}, cfg.pipeline.solver);
  if (j.contains("disambiguation")) readDisambiguation(r, j.at("disambiguation"), {"disambiguation"}, cfg.pipeline.disambiguation);
  if (j.contains("association")) readAssociation(r, j.at("association"), {"association"}, cfg.pipeline.association);
  if (j.contains("bench")) readBench(r, j.at("bench"), {"bench"}, cfg.bench);
  if (j.contains("comparison")) readComparison(r, j.at("comparison"), {"comparison"}, cfg.comparison);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

std::string dumpRunConfig(const RunConfig& cfg) {
  const ScenarioConfig& s = cfg.scenario;
  Json scenario;
  scenario["kind"] = toString(s.kind);
  scenario["ambiguity"] = toString(s.model.kind);
  scenario["corruption_angle"] = s.model.corruption_angle;
  Json traj;
  traj["kind"] = s.trajectory.kind == TrajectorySpec::Kind::Lawnmower ? "lawnmower" : "waypoints";
  traj["rows"] = s.trajectory.rows;
  traj["cols"] = s.trajectory.cols;
  traj["spacing"] = s.trajectory.spacing;
  traj["step"] = s.trajectory.step;
  traj["waypoints"] = Json::array();
  for (const auto& w : s.trajectory.waypoints) traj["waypoints"].push_back(Json::array({w.x(), w.y()}));
  scenario["trajectory"] = traj;
  scenario["steps"] = s.steps;
  scenario["landmark_count"] = s.landmark_count;
  scenario["class_count"] = s.class_count;
  scenario["label_prefix"] = s.label_prefix;
  scenario["layout_margin"] = s.layout_margin;
  scenario["min_separation"] = s.min_separation;
  scenario["landmarks"] = Json::array();
  for (const auto& l : s.landmarks) scenario["landmarks"].push_back({{"pose", poseJson(l.pose)}, {"label", l.label}});
  scenario["odometry_covariance"] = matrixJson(s.odometry_covariance);
  scenario["measurement_covariance"] = matrixJson(s.measurement_covariance);
  scenario["covariance_scale"] = s.covariance_scale;
  scenario["prior_covariance"] = matrixJson(s.prior_covariance);
  scenario["sensor_range"] = s.sensor_range;
  scenario["fov_half_angle"] = s.fov_half_angle;

  const IncrementalConfig& sv = cfg.pipeline.solver;
  Json solver;
  solver["relinearize_threshold"] = sv.relinearize_threshold;
  solver["batch_interval"] = sv.batch_interval;
  solver["max_inner_iterations"] = sv.max_inner_iterations;
  solver["rtol"] = sv.rtol;
  solver["batch"] = {
      {"method", sv.batch.method == OptimizerConfig::Method::LevenbergMarquardt ? "levenberg_marquardt" : "gauss_newton"},
      {"initial_lambda", sv.batch.initial_lambda},
      {"lambda_factor", sv.batch.lambda_factor},
      {"max_lambda", sv.batch.max_lambda},
      {"rtol", sv.batch.rtol},
      {"atol", sv.batch.atol},
      {"max_iterations", sv.batch.max_iterations}};

  const DisambiguationConfig& d = cfg.pipeline.disambiguation;
  Json dis;
  dis["kappa"] = d.reinit.kappa;
  dis["tol"] = d.reinit.tol;
  dis["lambda"] = d.reinit.lambda;
  dis["ransac"] = {{"subset_size", d.ransac.subset_size},
                   {"consensus_fraction", d.ransac.consensus_fraction},
                   {"max_iterations", d.ransac.max_iterations}};

  const AssociationConfig& a = cfg.pipeline.association;
  Json assoc = {{"mode", toString(a.mode)}, {"gate", a.gate}, {"lambda", a.lambda}, {"class_gating", a.class_gating}};

  Json bench = {{"chain_length", cfg.bench.chain_length},
                {"landmark_counts", cfg.bench.landmark_counts},
                {"edge_counts", cfg.bench.edge_counts},
                {"repetitions", cfg.bench.repetitions}};

  Json methods = Json::array();
  for (Method m : cfg.comparison.methods) methods.push_back(toString(m));
  Json comparison = {{"methods", methods}, {"seeds", cfg.comparison.seeds}};

  Json out;
  out["seed"] = cfg.seed;
  out["method"] = toString(cfg.method);
  out["scenario"] = scenario;
  out["solver"] = solver;
  out["disambiguation"] = dis;
  out["association"] = assoc;
  out["bench"] = bench;
  out["comparison"] = comparison;
  return out.dump(2) + "\n";
}

}  // namespace ambislam
