#pragma once

#include <string>
#include <vector>

#include "skewopt/config.hpp"

namespace skewopt {

/// Fixed CSV headers of the run outputs.
inline constexpr const char* kSweepHeader = "epsilon,cost,tracking,energy,penalty,defect,duality_product,grad_norm,iterations";
inline constexpr const char* kTraceHeader = "iteration,cost,tracking,energy,penalty,defect,duality_product,grad_norm,step";
inline constexpr const char* kStateHeader = "vertex,x,y,z,value";
inline constexpr const char* kExampleHeader = "epsilon,defect_surface,defect_volume";
inline constexpr const char* kFTypeHeader = "epsilon,removed_volume,hole_area,n_removed_cells,ratio";

struct RunArtifacts {
  int exit_code = 0;
  std::string report_csv;               ///< path, empty when the run failed before writing it
  std::vector<std::string> fields_out;  ///< serialized coefficient/state files
  std::string summary;                  ///< single-line JSON, also written to summary.json
  std::string error;
};

/// Runs one workflow and writes its artifacts into config.output_dir. Exit
/// code 0 on success, 2 on validation failure, 3 on numerical failure. The
/// summary is written even when the run fails.
RunArtifacts run(const RunConfig& config);

/// Summary for a run that failed before a config was available; written to
/// `output_dir`/summary.json and returned.
std::string write_error_summary(const std::string& output_dir, const std::string& command, int exit_code,
                                const std::string& error);

/// Writes `content` to a temporary sibling and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

/// Round-trip decimal formatting used by every CSV writer.
std::string format_number(double v);

}  // namespace skewopt
