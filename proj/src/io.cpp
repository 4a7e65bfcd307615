#include "ambislam/io.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ambislam/max_mixture.hpp"

namespace ambislam {

ParseError::ParseError(const std::string& src, std::size_t ln, const std::string& message)
    : std::runtime_error(src + ":" + std::to_string(ln) + ": " + message), source(src), line(ln) {}

std::string formatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

constexpr double kUnitTolerance = 1e-6;

/// Whitespace-separated tokens of one non-comment line.
class Tokens {
 public:
  Tokens(std::vector<std::string> tokens, const std::string& source, std::size_t line)
      : tokens_(std::move(tokens)), source_(source), line_(line) {}

  [[noreturn]] void fail(const std::string& message) const { throw ParseError(source_, line_, message); }

  bool done() const { return pos_ == tokens_.size(); }

  const std::string& next(const char* what) {
    if (done()) fail(std::string("missing ") + what);
    return tokens_[pos_++];
  }

  double number(const char* what) {
    const std::string& t = next(what);
    double v = 0.0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) fail(std::string("bad ") + what + " '" + t + "'");
    if (!std::isfinite(v)) fail(std::string(what) + " must be finite");
    return v;
  }

  std::uint32_t index(const char* what) {
    const std::string& t = next(what);
    std::uint32_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size()) fail(std::string("bad ") + what + " '" + t + "'");
    return v;
  }

  Key key() {
    const std::string& t = next("key");
    try {
      return Key::parse(t);
    } catch (const std::invalid_argument&) {
      fail("bad key '" + t + "'");
    }
  }

  Pose3d pose(std::vector<std::string>* warnings) {
    Eigen::Vector3d t;
    for (int i = 0; i < 3; ++i) t[i] = number("translation");
    Eigen::Quaterniond q;
    q.x() = number("quaternion");
    q.y() = number("quaternion");
    q.z() = number("quaternion");
    q.w() = number("quaternion");
    const double n = q.norm();
    if (n == 0.0) fail("zero quaternion");
    if (std::abs(n - 1.0) > kUnitTolerance && warnings) {
      warnings->push_back(source_ + ":" + std::to_string(line_) + ": quaternion norm " + formatDouble(n) +
                          " renormalized");
    }
    // unit quaternions within rounding are kept bit for bit
    if (std::abs(n - 1.0) <= 1e-12) return Pose3d::fromUnitQuaternion(q, t);
    return Pose3d(q, t);
  }

  Matrix6d upperTriangle(const char* what) {
    Matrix6d m;
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) {
        m(i, j) = number(what);
        m(j, i) = m(i, j);
      }
    }
    return m;
  }

  void finish() const {
    if (!done()) fail("unexpected trailing token '" + tokens_[pos_] + "'");
  }

 private:
  std::vector<std::string> tokens_;
  const std::string& source_;
  std::size_t line_;
  std::size_t pos_ = 0;
};

template <typename Fn>
void forEachLine(std::istream& is, const std::string& source, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(is, line)) {
    ++number;
    std::istringstream ss(line);
    std::vector<std::string> tokens;
    for (std::string t; ss >> t;) tokens.push_back(t);
    if (tokens.empty() || tokens[0][0] == '#') continue;
    Tokens tok(std::move(tokens), source, number);
    fn(tok);
  }
}

void requirePositiveDefinite(Tokens& tok, const Matrix6d& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0)) tok.fail(std::string(what) + " is not positive definite");
}

void requirePositiveSemiDefinite(Tokens& tok, const Matrix6d& m, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(m, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() >= 0.0)) tok.fail(std::string(what) + " is not positive semi-definite");
}

void writePose(std::ostream& os, const Pose3d& p) {
  const auto& t = p.translation();
  const auto& q = p.rotation();
  os << formatDouble(t.x()) << ' ' << formatDouble(t.y()) << ' ' << formatDouble(t.z()) << ' ' << formatDouble(q.x())
     << ' ' << formatDouble(q.y()) << ' ' << formatDouble(q.z()) << ' ' << formatDouble(q.w());
}

void writeUpperTriangle(std::ostream& os, const Matrix6d& m, const char* what) {
  if (!(m == m.transpose())) throw std::invalid_argument(std::string(what) + " must be exactly symmetric to be written");
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) os << ' ' << formatDouble(m(i, j));
  }
}

void checkLabel(const std::string& label) {
  if (label.empty()) throw std::invalid_argument("labels must not be empty");
  if (label[0] == '#') throw std::invalid_argument("label '" + label + "' must not start with '#'");
  for (char c : label) {
    if (std::isspace(static_cast<unsigned char>(c))) throw std::invalid_argument("label '" + label + "' contains whitespace");
  }
}

}  // namespace

bool operator==(const GraphFile& a, const GraphFile& b) {
  if (!(a.vertices == b.vertices) || a.labels != b.labels || a.factors.size() != b.factors.size()) return false;
  for (std::size_t i = 0; i < a.factors.size(); ++i) {
    if (a.factors[i].index() != b.factors[i].index()) return false;
    const bool same = std::visit(
        [&](const auto& fa) {
          using T = std::decay_t<decltype(fa)>;
          const auto& fb = std::get<T>(b.factors[i]);
          if constexpr (std::is_same_v<T, GraphPrior>) {
            return fa.key == fb.key && fa.measured == fb.measured && fa.information == fb.information;
          } else if constexpr (std::is_same_v<T, GraphEdge>) {
            return fa.from == fb.from && fa.to == fb.to && fa.measured == fb.measured && fa.information == fb.information;
          } else {
            if (fa.from != fb.from || fa.to != fb.to || fa.components.size() != fb.components.size()) return false;
            for (std::size_t k = 0; k < fa.components.size(); ++k) {
              const auto& ca = fa.components[k];
              const auto& cb = fb.components[k];
              if (ca.weight != cb.weight || !(ca.measured == cb.measured) || ca.information != cb.information) return false;
            }
            return true;
          }
        },
        a.factors[i]);
    if (!same) return false;
  }
  return true;
}

void writeGraph(std::ostream& os, const GraphFile& graph) {
  os << "# ambislam graph v1\n"
        "# pose: tx ty tz qx qy qz qw\n"
        "# info: upper triangle of the information matrix, row-major, twist order wx wy wz vx vy vz\n";
  for (const auto& [k, p] : graph.vertices) {
    os << "VERTEX_SE3 " << k.str() << ' ';
    writePose(os, p);
    os << '\n';
  }
  for (const auto& rec : graph.factors) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GraphPrior>) {
            os << "PRIOR_SE3 " << f.key.str() << ' ';
            writePose(os, f.measured);
            writeUpperTriangle(os, f.information, "information");
          } else if constexpr (std::is_same_v<T, GraphEdge>) {
            os << "EDGE_SE3 " << f.from.str() << ' ' << f.to.str() << ' ';
            writePose(os, f.measured);
            writeUpperTriangle(os, f.information, "information");
          } else {
            os << "MMEDGE_SE3 " << f.from.str() << ' ' << f.to.str() << ' ' << f.components.size();
            for (const auto& c : f.components) {
              os << ' ' << formatDouble(c.weight) << ' ';
              writePose(os, c.measured);
              writeUpperTriangle(os, c.information, "information");
            }
          }
          os << '\n';
        },
        rec);
  }
  for (const auto& [k, label] : graph.labels) {
    checkLabel(label);
    os << "LABEL " << k.str() << ' ' << label << '\n';
  }
}

GraphFile readGraph(std::istream& is, const std::string& source, std::vector<std::string>* warnings) {
  GraphFile g;
  forEachLine(is, source, [&](Tokens& tok) {
    const std::string tag = tok.next("record type");
    if (tag == "VERTEX_SE3") {
      const Key k = tok.key();
      if (g.vertices.contains(k)) tok.fail("duplicate vertex " + k.str());
      g.vertices.insert(k, tok.pose(warnings));
    } else if (tag == "PRIOR_SE3") {
      GraphPrior p;
      p.key = tok.key();
      p.measured = tok.pose(warnings);
      p.information = tok.upperTriangle("information");
      requirePositiveDefinite(tok, p.information, "information");
      g.factors.emplace_back(p);
    } else if (tag == "EDGE_SE3") {
      GraphEdge e;
      e.from = tok.key();
      e.to = tok.key();
      e.measured = tok.pose(warnings);
      e.information = tok.upperTriangle("information");
      requirePositiveDefinite(tok, e.information, "information");
      g.factors.emplace_back(e);
    } else if (tag == "MMEDGE_SE3") {
      GraphMixtureEdge e;
      e.from = tok.key();
      e.to = tok.key();
      const std::uint32_t n = tok.index("component count");
      if (n == 0) tok.fail("mixture edge without components");
      for (std::uint32_t i = 0; i < n; ++i) {
        GraphMixtureComponent c;
        c.weight = tok.number("weight");
        if (!(c.weight > 0.0)) tok.fail("component weights must be positive");
        c.measured = tok.pose(warnings);
        c.information = tok.upperTriangle("information");
        requirePositiveDefinite(tok, c.information, "information");
        e.components.push_back(c);
      }
      g.factors.emplace_back(std::move(e));
    } else if (tag == "LABEL") {
      const Key k = tok.key();
      if (!g.labels.emplace(k, tok.next("label")).second) tok.fail("duplicate label for " + k.str());
    } else {
      tok.fail("unknown record type '" + tag + "'");
    }
    tok.finish();
  });
  return g;
}

std::vector<FactorPtr> graphFactors(const GraphFile& graph) {
  std::vector<FactorPtr> out;
  for (const auto& rec : graph.factors) {
    std::visit(
        [&](const auto& f) {
          using T = std::decay_t<decltype(f)>;
          if constexpr (std::is_same_v<T, GraphPrior>) {
            out.push_back(std::make_shared<PriorFactor>(f.key, f.measured, GaussianNoiseModel::fromInformation(f.information)));
          } else if constexpr (std::is_same_v<T, GraphEdge>) {
            out.push_back(std::make_shared<BetweenFactor>(f.from, f.to, f.measured,
                                                          GaussianNoiseModel::fromInformation(f.information)));
          } else {
            std::vector<MixtureComponent> comps;
            for (const auto& c : f.components) {
              comps.push_back({c.measured, GaussianNoiseModel::fromInformation(c.information), c.weight});
            }
            out.push_back(std::make_shared<MaxMixtureFactor>(f.from, f.to, std::move(comps)));
          }
        },
        rec);
  }
  return out;
}

GraphFile toGraphFile(const std::vector<FactorPtr>& factors, const Values& values,
                      const std::map<Key, std::string>& labels) {
  GraphFile g;
  g.vertices = values;
  g.labels = labels;
  for (const auto& f : factors) {
    if (const auto* p = dynamic_cast<const PriorFactor*>(f.get())) {
      g.factors.emplace_back(GraphPrior{p->key(), p->measured(), p->noise().information()});
    } else if (const auto* b = dynamic_cast<const BetweenFactor*>(f.get())) {
      g.factors.emplace_back(GraphEdge{b->keys()[0], b->keys()[1], b->measured(), b->noise().information()});
    } else if (const auto* m = dynamic_cast<const MaxMixtureFactor*>(f.get())) {
      GraphMixtureEdge e{m->keys()[0], m->keys()[1], {}};
      for (const auto& c : m->components()) e.components.push_back({c.weight, c.measured, c.noise.information()});
      g.factors.emplace_back(std::move(e));
    } else {
      throw std::invalid_argument("toGraphFile: unsupported factor type");
    }
  }
  return g;
}

GraphFile truthGraph(const GroundTruth& truth) {
  GraphFile g;
  for (std::uint32_t t = 0; t < truth.trajectory.size(); ++t) g.vertices.insert(X(t), truth.trajectory[t]);
  for (const auto& [j, p] : truth.landmarks) g.vertices.insert(L(j), p);
  for (const auto& [j, label] : truth.labels) g.labels[L(j)] = label;
  return g;
}

GroundTruth truthFromGraph(const GraphFile& graph) {
  GroundTruth truth;
  for (const auto& [k, p] : graph.vertices) {
    if (k.isRobot()) {
      if (k.index != truth.trajectory.size()) throw std::invalid_argument("truth trajectory must be x0, x1, ... without gaps");
      truth.trajectory.push_back(p);
    } else {
      truth.landmarks[k.index] = p;
    }
  }
  for (const auto& [k, label] : graph.labels) {
    if (k.isLandmark()) truth.labels[k.index] = label;
  }
  return truth;
}

void writeMeasurementLog(std::ostream& os, const MeasurementLog& log) {
  os << "# ambislam measurement log v1\n"
        "# pose: tx ty tz qx qy qz qw\n"
        "# cov: upper triangle of the covariance, row-major, twist order wx wy wz vx vy vz\n";
  for (const auto& r : log.records) {
    std::visit(
        [&](const auto& rec) {
          using T = std::decay_t<decltype(rec)>;
          if constexpr (std::is_same_v<T, PriorRecord>) {
            os << "PRIOR " << rec.step << ' ';
            writePose(os, rec.pose);
          } else if constexpr (std::is_same_v<T, OdometryRecord>) {
            os << "ODOM " << rec.from << ' ' << rec.to << ' ';
            writePose(os, rec.measured);
          } else {
            checkLabel(rec.label);
            os << "LMK " << rec.step << ' ' << rec.true_id << ' ' << rec.label << ' ' << rec.hypotheses.size();
            for (const auto& h : rec.hypotheses) {
              os << ' ' << formatDouble(h.weight) << ' ';
              writePose(os, h.pose);
            }
          }
          writeUpperTriangle(os, rec.covariance, "covariance");
          os << '\n';
        },
        r);
  }
}

MeasurementLog readMeasurementLog(std::istream& is, const std::string& source, std::vector<std::string>* warnings) {
  MeasurementLog log;
  forEachLine(is, source, [&](Tokens& tok) {
    const std::string tag = tok.next("record type");
    if (tag == "PRIOR") {
      PriorRecord r;
      r.step = tok.index("step");
      r.pose = tok.pose(warnings);
      r.covariance = tok.upperTriangle("covariance");
      requirePositiveDefinite(tok, r.covariance, "prior covariance");
      log.records.emplace_back(r);
    } else if (tag == "ODOM") {
      OdometryRecord r;
      r.from = tok.index("from step");
      r.to = tok.index("to step");
      r.measured = tok.pose(warnings);
      r.covariance = tok.upperTriangle("covariance");
      requirePositiveSemiDefinite(tok, r.covariance, "odometry covariance");
      log.records.emplace_back(r);
    } else if (tag == "LMK") {
      LandmarkRecord r;
      r.step = tok.index("step");
      r.true_id = tok.index("landmark id");
      r.label = tok.next("label");
      const std::uint32_t n = tok.index("hypothesis count");
      if (n == 0) tok.fail("landmark record without hypotheses");
      for (std::uint32_t i = 0; i < n; ++i) {
        WeightedHypothesis h;
        h.weight = tok.number("weight");
        if (!(h.weight > 0.0)) tok.fail("hypothesis weights must be positive");
        h.pose = tok.pose(warnings);
        r.hypotheses.push_back(h);
      }
      r.covariance = tok.upperTriangle("covariance");
      requirePositiveSemiDefinite(tok, r.covariance, "measurement covariance");
      log.records.emplace_back(std::move(r));
    } else {
      tok.fail("unknown record type '" + tag + "'");
    }
    tok.finish();
  });
  return log;
}

void writeActionLog(std::ostream& os, const std::vector<MeasurementAction>& actions) {
  const auto bound = [](double v) -> nlohmann::ordered_json {
    if (std::isfinite(v)) return v;
    return nullptr;
  };
  for (const auto& a : actions) {
    nlohmann::ordered_json j;
    j["step"] = a.step;
    j["landmark"] = a.landmark.str();
    j["action"] = toString(a.kind);
    j["d"] = bound(a.thresholds.d);
    j["r"] = bound(a.thresholds.r);
    if (a.consensus) {
      const auto& t = a.consensus->translation();
      const auto& q = a.consensus->rotation();
      j["consensus"] = {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()};
    }
    os << j.dump() << '\n';
  }
}

std::string readTextFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeTextFile(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace ambislam
