#include "skewopt/admissible.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

namespace skewopt {

void AdmissibleSet::validate() const {
  if (!(alpha > 0)) throw ValidationError("admissible set: alpha must be positive");
  if (alpha > beta) throw ValidationError("admissible set: infeasible, alpha > beta");
  if (!(tv_budget > 0)) throw ValidationError("admissible set: tv_budget must be positive");
  if (!(skew_family_radius > 0)) throw ValidationError("admissible set: radius must be positive");
  if (!envelope.sym_is_zero()) throw ValidationError("admissible set: envelope must be skew-symmetric");
}

SmallMat clamp_eigenvalues(const SmallMat& sym, double lo, double hi) {
  const SmallMat s = 0.5 * (sym + sym.transpose());
  Eigen::SelfAdjointEigenSolver<SmallMat> es(s);
  const SmallVec ev = es.eigenvalues();
  if (ev.minCoeff() >= lo && ev.maxCoeff() <= hi) return s;
  SmallVec clamped = ev;
  for (int k = 0; k < clamped.size(); ++k) clamped[k] = std::clamp(clamped[k], lo, hi);
  const SmallMat& v = es.eigenvectors();
  return v * clamped.asDiagonal() * v.transpose();
}

MembershipReport check_membership(const SimplicialMesh& mesh, const MatrixField& field,
                                  const AdmissibleSet& set, double tol) {
  require_on_mesh(field, mesh, "check_membership");
  MembershipReport rep;
  rep.min_eigen = std::numeric_limits<double>::infinity();
  rep.max_eigen = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < field.size(); ++c) {
    Eigen::SelfAdjointEigenSolver<SmallMat> es(field.sym_matrix(c), Eigen::EigenvaluesOnly);
    rep.min_eigen = std::min(rep.min_eigen, es.eigenvalues().minCoeff());
    rep.max_eigen = std::max(rep.max_eigen, es.eigenvalues().maxCoeff());
  }
  rep.eigen_ok = rep.min_eigen >= set.alpha - tol && rep.max_eigen <= set.beta + tol;
  rep.dominance_ok = dominance_holds(field, set.envelope);
  rep.skew_norm = skew_l2_norm(mesh, field);
  rep.radius_ok = rep.skew_norm <= set.skew_family_radius * (1.0 + tol);
  rep.max_tv = discrete_tv(mesh, field).max_tv;
  rep.tv_ok = rep.max_tv <= set.tv_budget * (1.0 + tol);
  return rep;
}

MatrixField project_admissible(const SimplicialMesh& mesh, const MatrixField& field,
                               const AdmissibleSet& set) {
  set.validate();
  require_on_mesh(field, mesh, "project_admissible");
  require_same_mesh(field, set.envelope, "project_admissible");

  MatrixField out = field;
  const std::size_t n = out.size();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(n); ++c)
    out.set_sym_matrix(c, clamp_eigenvalues(out.sym_matrix(c), set.alpha, set.beta));

  out = clamp_to_dominance(out, set.envelope);

  const double norm = skew_l2_norm(mesh, out);
  if (norm > set.skew_family_radius) {
    const double s = set.skew_family_radius / norm;
    for (double& w : out.skew_data()) w *= s;
  }

  // Blending every cell toward the volume-weighted mean scales all facet
  // jumps, and hence every entry's TV, by the same factor. The mean of
  // matrices with spectra in [alpha, beta] stays in that convex set.
  const double tv = discrete_tv(mesh, out).max_tv;
  if (tv > set.tv_budget) {
    const double theta = set.tv_budget / tv * (1.0 - 1e-12);
    const int ns = MatrixField::sym_count(out.dim());
    auto s = out.sym_data();
    const auto& vol = mesh.cell_volumes();
    const double total = mesh.total_volume();
    std::vector<double> mean(ns, 0.0);
    for (std::size_t c = 0; c < n; ++c)
      for (int k = 0; k < ns; ++k) mean[k] += vol[c] * s[c * ns + k];
    for (double& m : mean) m /= total;
    for (std::size_t c = 0; c < n; ++c)
      for (int k = 0; k < ns; ++k) s[c * ns + k] = mean[k] + theta * (s[c * ns + k] - mean[k]);
  }
  return out;
}

}  // namespace skewopt
