#pragma once

#include <string>
#include <vector>

#include "skewopt/matrix_field.hpp"
#include "skewopt/mesh.hpp"

namespace skewopt {

struct PerforationReport {
  double epsilon = 0.0;
  double removed_volume = 0.0;  ///< |Omega \ Omega_eps|
  double hole_area = 0.0;       ///< surface measure of the Hole-tagged facets
  int n_removed_cells = 0;
  std::vector<std::string> warnings;
};

struct PerforatedMesh {
  SimplicialMesh mesh;
  PerforationReport report;
};

/// Removes every cell whose envelope max-entry skew norm reaches 1/epsilon.
/// Facets exposed by the removal are tagged Hole. Connected components of the
/// remainder that carry no Outer facet are discarded with a warning, as are
/// all but the largest Outer-touching component. The result carries parent
/// cell and vertex maps.
///
/// Throws NumericalError when no cell survives.
PerforatedMesh perforate(const SimplicialMesh& mesh, const MatrixField& envelope, double epsilon);

/// Cells kept by the thresholding step alone (before connectivity cleanup).
std::vector<char> perforation_keep_mask(const MatrixField& envelope, double epsilon);
std::vector<char> perforation_keep_mask_serial(const MatrixField& envelope, double epsilon);

struct FTypeOptions {
  double exponent_tolerance = 0.3;
  double ratio_factor = 10.0;
};

struct FTypeRow {
  double epsilon;
  double removed_volume;
  double hole_area;
  double ratio;  ///< eps * hole_area / removed_volume, NaN when nothing was removed
};

struct FTypeVerdict {
  double volume_exponent = 0.0;  ///< +inf when every removed volume is zero
  double area_exponent = 0.0;
  double ratio_spread = 1.0;     ///< max/min ratio across the sweep
  bool volume_ok = false;        ///< |Omega \ Omega_eps| = o(eps^2)
  bool area_ok = false;          ///< hole area = o(eps)
  bool ratio_ok = false;         ///< eps * area / volume stays bounded
  bool verdict = false;
  std::vector<FTypeRow> table;
};

/// Empirical check of the F-type scaling laws from a sweep of perforations.
/// Exponents come from a least-squares fit in log-log coordinates over the
/// samples with nonzero measure.
FTypeVerdict check_f_type(const std::vector<PerforationReport>& family, const FTypeOptions& opts = {});

/// Least-squares slope of log(values) against log(eps) over positive values;
/// +inf when all values are zero.
double decay_exponent(const std::vector<double>& eps, const std::vector<double>& values);

}  // namespace skewopt
