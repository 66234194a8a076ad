#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmei/config.hpp"
#include "qmei/errors.hpp"
#include "qmei/operators.hpp"

namespace qmei::cli {

inline constexpr const char* kProblemVersion = "qmei-problem/1";

struct GrainSpec {
  std::string type;  // "pinching", "decorrelator" or "kawasaki_gunton"
  std::vector<Matrix> projectors;
  Index dim_a = 0, dim_b = 0;
  std::optional<Matrix> reference;
  std::vector<Matrix> level;
};

/// Plain data read from a problem file; matrices are checked by `validate`.
struct ProblemFile {
  std::string version = kProblemVersion;
  std::optional<Index> dimension;
  std::optional<Matrix> rho;
  std::optional<Matrix> sigma;
  std::vector<Matrix> level;
  std::optional<double> iota;
  std::optional<RealVector> g;
  std::vector<Matrix> extra;
  std::optional<RealVector> f;
  std::optional<RealVector> delta_f;
  std::optional<std::int64_t> trials;
  std::optional<RealVector> p;
  std::optional<RealVector> q;
  std::optional<std::int64_t> samples;
  std::optional<std::vector<double>> thresholds;
  std::optional<int> n_max;
  std::optional<double> eps;
  std::optional<std::int64_t> d_max;
  std::optional<std::int64_t> instances;
  std::optional<GrainSpec> grain;
  std::map<std::string, double> config;
  std::optional<std::uint64_t> seed;
};

/// Parses the JSON text of a problem file. Syntax errors report line and
/// column; structural errors name the offending JSON path.
ProblemFile parse_problem(const std::string& text);

/// JSON text that `parse_problem` maps back to an identical ProblemFile.
std::string serialize_problem(const ProblemFile& problem);

/// Checks dimensions and Hermiticity of every matrix with the resolved tolerances.
void validate(const ProblemFile& problem, const Tolerances& tol);

struct RunOptions {
  std::string command;
  std::string input_path;  // informational, echoed into the report
  std::string format = "json";
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> max_dim;
  std::vector<std::pair<std::string, std::string>> overrides;
  int threads = 1;
};

struct Outcome {
  int exit_code = 0;
  std::string output;  // report text
  std::string error;   // message for stderr, empty on success
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitInfeasible = 2;
inline constexpr int kExitDivergence = 3;
inline constexpr int kExitSelftestFailed = 4;

int exit_code_for(ErrorKind kind);

/// Runs one subcommand on the given problem text (may be empty for selftest).
/// Configuration precedence: defaults < QMEI_* environment < file "config"
/// block < command-line options.
Outcome run(const RunOptions& options, const std::string& input_text);

std::vector<std::string> command_names();

}  // namespace qmei::cli
