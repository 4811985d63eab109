#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "skewopt/assembly.hpp"

namespace skewopt {

/// Energy defect [y, y]_A = <f, y> - (A_sym grad y, grad y).
struct DefectEstimate {
  double defect = 0.0;
  double rhs_pairing = 0.0;
  double sym_energy = 0.0;
  std::vector<std::pair<double, double>> per_epsilon_trace;
};

DefectEstimate energy_defect(const SimplicialMesh& mesh, const MatrixField& coeff, const StateField& y,
                             const SourceDescriptor& f);

enum class Verdict { Variational, NonVariational, Inconclusive };
const char* to_string(Verdict v);

struct Classification {
  Verdict verdict = Verdict::Inconclusive;
  double defect_limit_estimate = 0.0;
  double fit_residual = 0.0;  ///< misfit of the extrapolation line at the third-last point
  double threshold = 0.0;
};

/// Linear extrapolation of a defect trace to epsilon = 0 through its last two
/// points. Variational needs |estimate| <= threshold and successive
/// differences that shrink; NonVariational needs |estimate| > threshold. A
/// trace whose differences change sign by more than `threshold` is
/// Inconclusive.
Classification classify_pair(const std::vector<std::pair<double, double>>& trace, double threshold);

/// Default classification threshold 1e-4 (1 + |<f, y>|).
double default_threshold(double rhs_pairing);

/// Which index the divergence sums over: Rows gives (div A)_i = sum_j d_j a_ij,
/// Columns gives (div A)_j = sum_i d_i a_ij.
enum class DivConvention { Rows, Columns };

/// Cellwise divergence of a piecewise-constant field from its facet jumps:
/// d_c = (1 / |c|) sum_F (|F| / 2) [A]_F n_F over interior facets, with n_F
/// the outward normal of c. Exact on interior cells of translation-symmetric
/// meshes for linear fields sampled at centroids.
std::vector<SmallVec> matrix_divergence(const SimplicialMesh& mesh, const MatrixField& field,
                                        DivConvention conv = DivConvention::Rows);

/// Central-difference divergence of an analytic matrix field at x.
SmallVec matrix_divergence_fd(const std::function<SmallMat(const Point&)>& fn, const Point& x, int dim,
                              double h = 1e-6, DivConvention conv = DivConvention::Rows);

}  // namespace skewopt
