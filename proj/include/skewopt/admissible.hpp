#pragma once

#include "skewopt/matrix_field.hpp"
#include "skewopt/mesh.hpp"

namespace skewopt {

/// Parameters of the admissible control set: eigenvalue bounds of the
/// symmetric part, TV budget per symmetric entry, the skew envelope A* for
/// the dominance constraint, and the radius of the L2 ball standing in for
/// the compact skew family.
struct AdmissibleSet {
  double alpha = 1.0;
  double beta = 1.0;
  double tv_budget = 1.0;
  MatrixField envelope;
  double skew_family_radius = 1.0;

  /// Throws ValidationError when alpha > beta, a parameter is not positive,
  /// or the envelope has a nonzero symmetric part.
  void validate() const;
};

struct MembershipReport {
  bool eigen_ok = false;
  bool dominance_ok = false;
  bool radius_ok = false;
  bool tv_ok = false;
  double min_eigen = 0.0;
  double max_eigen = 0.0;
  double skew_norm = 0.0;
  double max_tv = 0.0;
  bool ok() const { return eigen_ok && dominance_ok && radius_ok && tv_ok; }
};

/// Evaluates every membership predicate with absolute slack `tol` on the
/// eigenvalue bounds and relative slack `tol` on radius and TV budget.
MembershipReport check_membership(const SimplicialMesh& mesh, const MatrixField& field,
                                  const AdmissibleSet& set, double tol = 1e-10);

/// Feasibility operator onto the admissible set, applied in order:
/// eigenvalue clamp of the symmetric part into [alpha, beta]; sign-preserving
/// dominance clamp of the skew part; scaling of the skew part into the L2
/// ball; contraction of symmetric jumps toward the volume-weighted mean until
/// the TV budget holds. Fixed points are feasible fields.
MatrixField project_admissible(const SimplicialMesh& mesh, const MatrixField& field,
                               const AdmissibleSet& set);

/// Clamps the eigenvalues of a symmetric matrix into [lo, hi].
SmallMat clamp_eigenvalues(const SmallMat& sym, double lo, double hi);

}  // namespace skewopt
