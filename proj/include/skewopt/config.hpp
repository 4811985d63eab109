#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "skewopt/common.hpp"

namespace skewopt {

enum class Command { Solve, Optimize, TruncationSweep, PerforationSweep, ValidateExample, CheckFType };

/// Command names as used on the command line ("solve", "sweep-truncate", ...).
const char* to_string(Command c);
Command command_from_string(const std::string& name);

/// Either an inline box or a mesh file.
struct MeshSpec {
  int dim = 2;
  std::vector<double> lower{-1.0, -1.0};
  std::vector<double> upper{1.0, 1.0};
  int n_per_axis = 16;
  std::string file;  ///< when non-empty the box parameters are ignored

  bool operator==(const MeshSpec&) const = default;
};

/// Named analytic field plus its parameters. Recognized names:
///   identity            A = I (solve)
///   file                coefficient read from `file` (solve)
///   regression_bounded  2-D instance with constant envelope (optimize, sweeps)
///   regression_singular 2-D instance with |x|^(-1/2) envelope
///   ball_astar          the 3-D ball counterexample
struct FieldSpec {
  std::string name = "identity";
  std::string file;
  std::string source = "manufactured";  ///< solve only: "manufactured" or "unit"
  double zeta = 1.0;
  double envelope_scale = 3.0;  ///< c in the singular 2-D envelope
  int quad_points = 64;         ///< per direction, validate-example

  bool operator==(const FieldSpec&) const = default;
};

struct SetSpec {
  double alpha = 0.5;
  double beta = 4.0;
  double tv_budget = 20.0;
  double radius = 10.0;

  bool operator==(const SetSpec&) const = default;
};

struct ScheduleSpec {
  std::vector<double> epsilons;
  std::optional<double> sigma;  ///< required for sweep-perforate
  std::string mode = "truncate";

  bool operator==(const ScheduleSpec&) const = default;
};

struct Tolerances {
  double linear_rtol = 1e-10;
  int linear_max_iter = 1000;
  double tol = 1e-6;
  int max_iter = 500;
  int max_outer = 50;

  bool operator==(const Tolerances&) const = default;
};

struct RunConfig {
  Command command = Command::Solve;
  MeshSpec mesh_spec;
  FieldSpec field_spec;
  SetSpec set_spec;
  ScheduleSpec schedule_spec;
  std::string output_dir = "out";
  std::uint64_t seeds = 0;
  Tolerances tolerances;

  bool operator==(const RunConfig&) const = default;
  /// Per-command requirements; throws ValidationError naming the key.
  void validate() const;
};

/// Config file errors; the message names the offending key or line.
class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Strict JSON parsing: unknown keys, duplicate keys and type mismatches are
/// rejected. Missing optional keys take their defaults.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

/// Canonical JSON with every key present (defaults included).
std::string serialize_config(const RunConfig& config);

}  // namespace skewopt
