#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ambislam/disambiguation.hpp"
#include "ambislam/factor_graph.hpp"
#include "ambislam/measurement_log.hpp"
#include "ambislam/values.hpp"

namespace ambislam {

/// Malformed input file. what() reads "<source>:<line>: <message>".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& message);
  std::string source;
  std::size_t line;
};

/// Shortest decimal text that reads back to the same double.
std::string formatDouble(double v);

// Graph files
//
//   VERTEX_SE3  <key> tx ty tz qx qy qz qw
//   PRIOR_SE3   <key> tx ty tz qx qy qz qw <info>
//   EDGE_SE3    <key> <key> tx ty tz qx qy qz qw <info>
//   MMEDGE_SE3  <key> <key> <n> { <weight> tx ty tz qx qy qz qw <info> } * n
//   LABEL       <key> <label>
//
// Keys are written as x<i> / l<j>. <info> is the upper triangle of the 6x6
// information matrix, row by row (21 numbers), in twist order
// wx wy wz vx vy vz. Lines starting with '#' are comments.

struct GraphPrior {
  Key key;
  Pose3d measured;
  Matrix6d information;
};

struct GraphEdge {
  Key from;
  Key to;
  Pose3d measured;
  Matrix6d information;
};

struct GraphMixtureComponent {
  double weight = 1.0;
  Pose3d measured;
  Matrix6d information;
};

struct GraphMixtureEdge {
  Key from;
  Key to;
  std::vector<GraphMixtureComponent> components;
};

using GraphRecord = std::variant<GraphPrior, GraphEdge, GraphMixtureEdge>;

struct GraphFile {
  Values vertices;
  std::vector<GraphRecord> factors;
  std::map<Key, std::string> labels;
};

bool operator==(const GraphFile& a, const GraphFile& b);

void writeGraph(std::ostream& os, const GraphFile& graph);
/// Quaternions off unit norm by more than 1e-6 are renormalized and reported
/// through warnings (when given).
GraphFile readGraph(std::istream& is, const std::string& source = "<graph>",
                    std::vector<std::string>* warnings = nullptr);

/// Factors of a graph file; information matrices become the noise models.
std::vector<FactorPtr> graphFactors(const GraphFile& graph);
/// Graph file holding the given factors. Throws std::invalid_argument for
/// factor types the format cannot express.
GraphFile toGraphFile(const std::vector<FactorPtr>& factors, const Values& values,
                      const std::map<Key, std::string>& labels = {});

/// Ground truth as a graph file: x<t> per trajectory pose, l<j> per landmark
/// with its class label.
GraphFile truthGraph(const GroundTruth& truth);
GroundTruth truthFromGraph(const GraphFile& graph);

// Measurement logs
//
//   PRIOR <step> tx ty tz qx qy qz qw <cov>
//   ODOM  <from> <to> tx ty tz qx qy qz qw <cov>
//   LMK   <step> <true_id> <label> <n> { <weight> tx ty tz qx qy qz qw } * n <cov>
//
// <cov> is the upper triangle of the covariance, same layout as <info>.

void writeMeasurementLog(std::ostream& os, const MeasurementLog& log);
MeasurementLog readMeasurementLog(std::istream& is, const std::string& source = "<log>",
                                  std::vector<std::string>* warnings = nullptr);

/// One JSON object per line: step, landmark, action, thresholds and, when
/// one was found, the consensus pose.
void writeActionLog(std::ostream& os, const std::vector<MeasurementAction>& actions);

/// File helpers; throw std::runtime_error when the file cannot be opened.
std::string readTextFile(const std::string& path);
void writeTextFile(const std::string& path, const std::string& content);

}  // namespace ambislam
