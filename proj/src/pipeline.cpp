#include "ambislam/pipeline.hpp"

#include <chrono>
#include <cstring>
#include <random>
#include <stdexcept>

namespace ambislam {

const char* toString(Method m) {
  switch (m) {
    case Method::SH: return "sh";
    case Method::SHRandom: return "sh-random";
    case Method::MM: return "mm";
    case Method::MMReinit: return "mm-reinit";
  }
  return "?";
}

Method parseMethod(const std::string& s) {
  if (s == "sh") return Method::SH;
  if (s == "sh-random") return Method::SHRandom;
  if (s == "mm") return Method::MM;
  if (s == "mm-reinit") return Method::MMReinit;
  throw std::invalid_argument("unknown method '" + s + "' (expected sh, sh-random, mm or mm-reinit)");
}

namespace {

class Fnv {
 public:
  template <typename T>
  void add(const T& v) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &v, sizeof(T));
    for (unsigned char b : bytes) {
      h_ ^= b;
      h_ *= 1099511628211ull;
    }
  }
  void add(const Pose3d& p) {
    for (int i = 0; i < 4; ++i) add(p.rotation().coeffs()[i]);
    for (int i = 0; i < 3; ++i) add(p.translation()[i]);
  }
  void add(const Covariance6d& c) {
    for (int i = 0; i < 36; ++i) add(c.data()[i]);
  }
  void add(const std::string& s) {
    add(s.size());
    for (char ch : s) add(ch);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ull;
};

void hashRecord(Fnv& h, const LogRecord& r) {
  h.add(r.index());
  std::visit(
      [&](const auto& rec) {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, PriorRecord>) {
          h.add(rec.step);
          h.add(rec.pose);
          h.add(rec.covariance);
        } else if constexpr (std::is_same_v<T, OdometryRecord>) {
          h.add(rec.from);
          h.add(rec.to);
          h.add(rec.measured);
          h.add(rec.covariance);
        } else {
          h.add(rec.step);
          h.add(rec.true_id);
          h.add(rec.label);
          h.add(rec.hypotheses.size());
          for (const auto& hyp : rec.hypotheses) {
            h.add(hyp.weight);
            h.add(hyp.pose);
          }
          h.add(rec.covariance);
        }
      },
      r);
}

class Runner {
 public:
  Runner(Method method, const PipelineConfig& cfg, const StepCallback& on_step)
      : method_(method), cfg_(cfg), on_step_(on_step), solver_(cfg.solver), reinit_(disambiguationConfig(method, cfg)),
        rng_(cfg.seed) {
    cfg_.association.validate();
  }

  void consume(const LogRecord& r) {
    const std::uint32_t step = recordStep(r);
    if (started_ && step < current_) throw std::invalid_argument("log records are not in time order");
    if (started_ && step != current_) finishStep();
    started_ = true;
    current_ = step;
    std::visit([&](const auto& rec) { handle(rec); }, r);
  }

  RunResult finish() {
    if (started_) finishStep();
    RunResult out;
    out.method = method_;
    out.estimate = solver_.estimate();
    out.labels = labels_;
    out.origin = origin_;
    out.actions = std::move(actions_);
    return out;
  }

 private:
  static DisambiguationConfig disambiguationConfig(Method m, const PipelineConfig& cfg) {
    DisambiguationConfig d = cfg.disambiguation;
    d.enable_reinit = (m == Method::MMReinit);
    return d;
  }

  bool singleHypothesis() const { return method_ == Method::SH || method_ == Method::SHRandom; }

  void handle(const PriorRecord& rec) {
    Values v;
    v.insert(X(rec.step), rec.pose);
    solver_.update({std::make_shared<PriorFactor>(X(rec.step), rec.pose, GaussianNoiseModel::fromCovariance(rec.covariance))}, v);
  }

  void handle(const OdometryRecord& rec) {
    if (!solver_.estimate().contains(X(rec.from))) throw MissingKeyError(X(rec.from));
    Values v;
    v.insert(X(rec.to), compose(solver_.estimate().at(X(rec.from)), rec.measured));
    solver_.update(
        {std::make_shared<BetweenFactor>(X(rec.from), X(rec.to), rec.measured, GaussianNoiseModel::fromCovariance(rec.covariance))}, v);
  }

  void handle(const LandmarkRecord& rec) {
    if (rec.hypotheses.empty()) throw std::invalid_argument("landmark record without hypotheses");
    const Key robot = X(rec.step);
    if (!solver_.estimate().contains(robot)) throw MissingKeyError(robot);
    const Pose3d x = solver_.estimate().at(robot);

    LandmarkMap map;
    for (const auto& [k, p] : solver_.estimate()) {
      if (k.isLandmark()) map.poses.emplace(k, p);
    }
    for (const auto& [k, p] : sh_pending_values_) map.poses.emplace(k, p);
    for (const auto& [k, cache] : reinit_.caches()) map.poses.emplace(k, cache.last_init);
    map.labels = labels_;

    Key landmark;
    if (auto k = associate(rec, x, map, cfg_.association)) {
      landmark = *k;
    } else {
      landmark = cfg_.association.mode == AssociationConfig::Mode::Oracle ? L(rec.true_id) : L(next_landmark_);
      labels_[landmark] = rec.label;
      origin_[landmark] = rec.true_id;
    }
    if (landmark.index >= next_landmark_) next_landmark_ = landmark.index + 1;

    const auto noise = GaussianNoiseModel::fromCovariance(rec.covariance);
    if (singleHypothesis()) {
      std::size_t pick = 0;
      if (method_ == Method::SHRandom) {
        pick = std::uniform_int_distribution<std::size_t>(0, rec.hypotheses.size() - 1)(rng_);
      } else {
        for (std::size_t i = 1; i < rec.hypotheses.size(); ++i) {
          if (rec.hypotheses[i].weight > rec.hypotheses[pick].weight) pick = i;
        }
      }
      const Pose3d& z = rec.hypotheses[pick].pose;
      MeasurementAction action{rec.step, landmark, ActionKind::Append, std::nullopt, {}};
      if (!solver_.estimate().contains(landmark) && !sh_pending_values_.contains(landmark)) {
        sh_pending_values_.insert(landmark, compose(x, z));
        action.kind = ActionKind::Init;
      }
      sh_pending_factors_.push_back(std::make_shared<BetweenFactor>(robot, landmark, z, noise));
      actions_.push_back(action);
      return;
    }
    std::vector<MixtureComponent> comps;
    for (const auto& h : rec.hypotheses) comps.push_back({h.pose, noise, h.weight});
    actions_.push_back(reinit_.process(solver_, rec.step, std::make_shared<MaxMixtureFactor>(robot, landmark, comps)));
  }

  void finishStep() {
    if (singleHypothesis()) {
      if (!sh_pending_factors_.empty() || !sh_pending_values_.empty()) solver_.update(sh_pending_factors_, sh_pending_values_);
      sh_pending_factors_.clear();
      sh_pending_values_ = Values();
    } else {
      reinit_.flush(solver_);
    }
    if (on_step_) on_step_(current_, solver_.estimate());
  }

  Method method_;
  PipelineConfig cfg_;
  const StepCallback& on_step_;
  IncrementalSolver solver_;
  DynamicReinit reinit_;
  std::mt19937_64 rng_;
  std::vector<FactorPtr> sh_pending_factors_;
  Values sh_pending_values_;
  std::map<Key, std::string> labels_;
  std::map<Key, std::uint32_t> origin_;
  std::vector<MeasurementAction> actions_;
  std::uint32_t next_landmark_ = 0;
  std::uint32_t current_ = 0;
  bool started_ = false;
};

}  // namespace

std::uint64_t checksum(const MeasurementLog& log) {
  Fnv h;
  for (const auto& r : log.records) hashRecord(h, r);
  return h.value();
}

RunResult runPipeline(const MeasurementLog& log, Method method, const PipelineConfig& cfg, const StepCallback& on_step) {
  const auto start = std::chrono::steady_clock::now();
  Runner runner(method, cfg, on_step);
  Fnv h;
  for (const auto& r : log.records) {
    hashRecord(h, r);
    runner.consume(r);
  }
  RunResult out = runner.finish();
  out.log_checksum = h.value();
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace ambislam
