#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "skewopt/matrix_field.hpp"
#include "skewopt/mesh.hpp"

namespace skewopt {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Nodal P1 function. `dirichlet_mask` flags Outer boundary vertices.
struct StateField {
  std::uint64_t mesh_id = 0;
  Eigen::VectorXd values;
  std::vector<char> dirichlet_mask;

  static StateField zeros(const SimplicialMesh& mesh);
  /// Nodal interpolant of `fn`; masked vertices are set to zero.
  static StateField interpolate(const SimplicialMesh& mesh, const std::function<double(const Point&)>& fn);
};

/// Cellwise-constant source density.
struct CellDensity {
  std::vector<double> values;
};

/// Source given directly by its action on the nodal hat functions.
struct NodalLoad {
  Eigen::VectorXd values;
};

using SourceDescriptor = std::variant<CellDensity, NodalLoad>;

/// Action of the source on every hat function (Dirichlet vertices included).
Eigen::VectorXd load_vector(const SimplicialMesh& mesh, const SourceDescriptor& f);

/// Source with pointwise density `fn`, integrated with an n-point collapsed
/// Gauss rule per cell.
SourceDescriptor load_from_density(const SimplicialMesh& mesh, const std::function<double(const Point&)>& fn,
                                   int n_quad = 4);

/// Source in flux form, f = -div(q): the action on phi_i is the integral of
/// grad(phi_i) . q over the mesh.
SourceDescriptor load_from_flux(const SimplicialMesh& mesh, const std::function<SmallVec(const Point&)>& q,
                                int n_quad = 4);

/// L2 distance between a P1 function and `exact`, by cellwise quadrature.
double l2_error(const SimplicialMesh& mesh, const Eigen::VectorXd& nodal,
                const std::function<double(const Point&)>& exact, int n_quad = 4);

/// Boundary datum on facets with the given tag, stored as its action on the
/// hat functions of the tagged vertices (ascending vertex order).
struct BoundaryFunctional {
  FacetTag tag = FacetTag::Hole;
  std::vector<int> vertices;
  Eigen::VectorXd coefficients;

  static BoundaryFunctional zeros(const SimplicialMesh& mesh, FacetTag tag = FacetTag::Hole);
  /// Action of the boundary integral of g times each hat function.
  static BoundaryFunctional from_trace(const SimplicialMesh& mesh, const std::function<double(const Point&)>& g,
                                       FacetTag tag = FacetTag::Hole);
  bool empty() const { return vertices.empty(); }
};

/// Numbering of the unconstrained vertices.
struct DofMap {
  std::vector<int> free_of_vertex;  ///< -1 on Dirichlet vertices
  std::vector<int> vertex_of_free;

  static DofMap from_mesh(const SimplicialMesh& mesh);
  std::size_t size() const { return vertex_of_free.size(); }
  Eigen::VectorXd restrict(const Eigen::VectorXd& full) const;
  Eigen::VectorXd expand(const Eigen::VectorXd& free) const;
  SparseMatrix restrict(const SparseMatrix& full) const;
};

struct LinearSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  bool symmetric = false;
  DofMap dofs;
  std::uint64_t mesh_id = 0;
};

/// Which part of the coefficient enters a stiffness matrix.
enum class CoeffPart { Full, Sym, Skew, Transposed };

/// P1 stiffness over all vertices (no elimination). Parallel over cells;
/// the result does not depend on the thread count.
SparseMatrix stiffness_matrix(const SimplicialMesh& mesh, const MatrixField& coeff, CoeffPart part = CoeffPart::Full);
/// Single-threaded reference implementation of `stiffness_matrix`.
SparseMatrix stiffness_matrix_serial(const SimplicialMesh& mesh, const MatrixField& coeff,
                                     CoeffPart part = CoeffPart::Full);
/// Consistent P1 mass matrix over all vertices.
SparseMatrix mass_matrix(const SimplicialMesh& mesh);

/// Caps OpenMP threads from SKEWOPT_THREADS when set; returns the cap or 0.
int apply_thread_limit();

/// State system K y = F (+ neumann) with Dirichlet rows/columns eliminated on
/// Outer vertices.
LinearSystem assemble_state(const SimplicialMesh& mesh, const MatrixField& coeff, const SourceDescriptor& f,
                            const BoundaryFunctional* neumann = nullptr);

/// Adjoint system with the transposed coefficient and right-hand side
/// -2 lambda M (y - y_d) - 2 lambda K_sym y. Hole facets carry the natural
/// zero-flux condition.
LinearSystem assemble_adjoint(const SimplicialMesh& mesh, const MatrixField& coeff, const StateField& y,
                              const StateField& y_d, double lambda);

struct SolverOptions {
  double rtol = 1e-10;
  int max_iter = 1000;  ///< refinement sweeps for direct solves, CG iterations otherwise
  bool use_cg_for_spd = false;
};

/// Solves the system and expands the result to all vertices. Throws
/// NumericalError when factorization fails or the residual target
/// ||Kx - b|| <= rtol (||b|| + 1) is missed. The achieved residual is
/// written to `residual` when given.
StateField solve(const LinearSystem& system, const SolverOptions& opts = {}, double* residual = nullptr);

/// Reusable sparse LU factorization for repeated right-hand sides.
class Factorization {
 public:
  explicit Factorization(const SparseMatrix& matrix);
  ~Factorization();
  Factorization(Factorization&&) noexcept;
  Factorization& operator=(Factorization&&) noexcept;
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Laplace-Beltrami stiffness and mass on the boundary facets with `tag`,
/// indexed like BoundaryFunctional::vertices.
struct BoundaryGram {
  std::vector<int> vertices;
  SparseMatrix stiffness;
  SparseMatrix mass;
  SparseMatrix h() const { return stiffness + mass; }
};

BoundaryGram boundary_gram(const SimplicialMesh& mesh, FacetTag tag = FacetTag::Hole);

/// Discrete dual norm r^T (S + M)^{-1} r of a boundary functional.
double boundary_dual_norm(const SimplicialMesh& mesh, const BoundaryFunctional& v);
double boundary_dual_norm(const BoundaryGram& gram, const Eigen::VectorXd& r);

/// Trace of a nodal vector on the functional's vertices.
Eigen::VectorXd trace(const BoundaryFunctional& v, const Eigen::VectorXd& nodal);

/// Scatters the functional into a nodal vector over all vertices.
Eigen::VectorXd scatter(const BoundaryFunctional& v, std::size_t n_vertices);

}  // namespace skewopt
