#include <cstdlib>
#include <string>

#include <omp.h>

#include "skewopt/assembly.hpp"

namespace skewopt {

namespace {

SmallMat coefficient(const MatrixField& coeff, std::size_t c, CoeffPart part) {
  switch (part) {
    case CoeffPart::Full: return coeff.full_matrix(c);
    case CoeffPart::Sym: return coeff.sym_matrix(c);
    case CoeffPart::Skew: return coeff.skew_matrix(c);
    case CoeffPart::Transposed: return coeff.sym_matrix(c) - coeff.skew_matrix(c);
  }
  return {};
}

// Writes the (dim+1)^2 local entries of cell c into out[0..].
void local_stiffness(const SimplicialMesh& mesh, const MatrixField& coeff, std::size_t c, CoeffPart part,
                     Eigen::Triplet<double>* out) {
  const int nl = mesh.dim() + 1;
  const GradMat g = mesh.basis_gradients(c);
  const GradMat ga = g * coefficient(coeff, c, part);
  const double vol = mesh.cell_volumes()[c];
  const Cell& cell = mesh.cell(c);
  for (int a = 0; a < nl; ++a)
    for (int b = 0; b < nl; ++b)
      out[a * nl + b] = {cell[a], cell[b], vol * ga.row(a).dot(g.row(b))};
}

SparseMatrix from_slots(std::size_t n, const std::vector<Eigen::Triplet<double>>& trip) {
  SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

}  // namespace

SparseMatrix stiffness_matrix(const SimplicialMesh& mesh, const MatrixField& coeff, CoeffPart part) {
  require_on_mesh(coeff, mesh, "stiffness_matrix");
  const int nl = mesh.dim() + 1;
  const auto nc = static_cast<std::ptrdiff_t>(mesh.num_cells());
  std::vector<Eigen::Triplet<double>> trip(static_cast<std::size_t>(nc) * nl * nl);
  // Each cell owns a fixed slot range, so the triplet order and therefore the
  // summation order in setFromTriplets are independent of the schedule.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) local_stiffness(mesh, coeff, c, part, &trip[c * nl * nl]);
  return from_slots(mesh.num_vertices(), trip);
}

SparseMatrix stiffness_matrix_serial(const SimplicialMesh& mesh, const MatrixField& coeff, CoeffPart part) {
  require_on_mesh(coeff, mesh, "stiffness_matrix_serial");
  const int nl = mesh.dim() + 1;
  std::vector<Eigen::Triplet<double>> trip(mesh.num_cells() * nl * nl);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) local_stiffness(mesh, coeff, c, part, &trip[c * nl * nl]);
  return from_slots(mesh.num_vertices(), trip);
}

SparseMatrix mass_matrix(const SimplicialMesh& mesh) {
  const int nl = mesh.dim() + 1;
  const double denom = (nl) * (nl + 1);
  const auto nc = static_cast<std::ptrdiff_t>(mesh.num_cells());
  std::vector<Eigen::Triplet<double>> trip(static_cast<std::size_t>(nc) * nl * nl);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const double vol = mesh.cell_volumes()[c];
    const Cell& cell = mesh.cell(c);
    for (int a = 0; a < nl; ++a)
      for (int b = 0; b < nl; ++b)
        trip[(c * nl + a) * nl + b] = {cell[a], cell[b], vol * (a == b ? 2.0 : 1.0) / denom};
  }
  return from_slots(mesh.num_vertices(), trip);
}

int apply_thread_limit() {
  const char* env = std::getenv("SKEWOPT_THREADS");
  if (!env || !*env) return 0;
  int n = 0;
  try {
    n = std::stoi(env);
  } catch (const std::exception&) {
    throw ValidationError(std::string("SKEWOPT_THREADS must be a positive integer, got '") + env + "'");
  }
  if (n < 1) throw ValidationError("SKEWOPT_THREADS must be a positive integer");
  omp_set_num_threads(n);
  return n;
}

}  // namespace skewopt
