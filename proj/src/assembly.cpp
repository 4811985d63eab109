#include "skewopt/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/LU>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "skewopt/quadrature.hpp"

namespace skewopt {

namespace {

double factorial(int d) { return d == 2 ? 2.0 : 6.0; }

Point map_to_cell(const SimplicialMesh& mesh, std::size_t c, const Point& xi, double* bary) {
  const Cell& cell = mesh.cell(c);
  const int d = mesh.dim();
  Point x = mesh.vertex(cell[0]);
  double rest = 1.0;
  for (int k = 1; k <= d; ++k) {
    const Point& v = mesh.vertex(cell[k]);
    const Point& v0 = mesh.vertex(cell[0]);
    for (int i = 0; i < 3; ++i) x[i] += xi[k - 1] * (v[i] - v0[i]);
    bary[k] = xi[k - 1];
    rest -= xi[k - 1];
  }
  bary[0] = rest;
  return x;
}

void require_state(const StateField& s, const SimplicialMesh& mesh, const char* what) {
  if (static_cast<std::size_t>(s.values.size()) != mesh.num_vertices() || (s.mesh_id && s.mesh_id != mesh.id()))
    throw ValidationError(std::string(what) + ": state field does not live on this mesh");
}

bool has_skew(const MatrixField& coeff) {
  const auto w = coeff.skew_data();
  return std::any_of(w.begin(), w.end(), [](double v) { return v != 0.0; });
}

}  // namespace

StateField StateField::zeros(const SimplicialMesh& mesh) {
  StateField s;
  s.mesh_id = mesh.id();
  s.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  s.dirichlet_mask = mesh.outer_mask();
  return s;
}

StateField StateField::interpolate(const SimplicialMesh& mesh, const std::function<double(const Point&)>& fn) {
  StateField s = zeros(mesh);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v)
    s.values[static_cast<Eigen::Index>(v)] = s.dirichlet_mask[v] ? 0.0 : fn(mesh.vertex(v));
  return s;
}

Eigen::VectorXd load_vector(const SimplicialMesh& mesh, const SourceDescriptor& f) {
  const auto nv = static_cast<Eigen::Index>(mesh.num_vertices());
  if (const auto* load = std::get_if<NodalLoad>(&f)) {
    if (load->values.size() != nv) throw ValidationError("load_vector: nodal load has the wrong length");
    return load->values;
  }
  const auto& dens = std::get<CellDensity>(f);
  if (dens.values.size() != mesh.num_cells()) throw ValidationError("load_vector: density has the wrong length");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(nv);
  const int nl = mesh.dim() + 1;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double share = dens.values[c] * mesh.cell_volumes()[c] / nl;
    for (int a = 0; a < nl; ++a) out[mesh.cell(c)[a]] += share;
  }
  return out;
}

SourceDescriptor load_from_density(const SimplicialMesh& mesh, const std::function<double(const Point&)>& fn,
                                   int n_quad) {
  const SimplexRule rule = simplex_rule(mesh.dim(), n_quad);
  const int nl = mesh.dim() + 1;
  const double scale = factorial(mesh.dim());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  double bary[4];
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double vol = mesh.cell_volumes()[c];
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point x = map_to_cell(mesh, c, rule.points[q], bary);
      const double w = rule.weights[q] * scale * vol * fn(x);
      for (int a = 0; a < nl; ++a) out[mesh.cell(c)[a]] += w * bary[a];
    }
  }
  return NodalLoad{std::move(out)};
}

double l2_error(const SimplicialMesh& mesh, const Eigen::VectorXd& nodal,
                const std::function<double(const Point&)>& exact, int n_quad) {
  const SimplexRule rule = simplex_rule(mesh.dim(), n_quad);
  const int nl = mesh.dim() + 1;
  const double scale = factorial(mesh.dim());
  double sum = 0.0;
  double bary[4];
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const double vol = mesh.cell_volumes()[c];
    for (std::size_t q = 0; q < rule.weights.size(); ++q) {
      const Point x = map_to_cell(mesh, c, rule.points[q], bary);
      double uh = 0.0;
      for (int a = 0; a < nl; ++a) uh += bary[a] * nodal[mesh.cell(c)[a]];
      const double e = uh - exact(x);
      sum += rule.weights[q] * scale * vol * e * e;
    }
  }
  return std::sqrt(sum);
}

SourceDescriptor load_from_flux(const SimplicialMesh& mesh, const std::function<SmallVec(const Point&)>& q,
                                int n_quad) {
  const SimplexRule rule = simplex_rule(mesh.dim(), n_quad);
  const int nl = mesh.dim() + 1;
  const double scale = factorial(mesh.dim());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.num_vertices()));
  double bary[4];
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) {
    const GradMat g = mesh.basis_gradients(c);
    const double vol = mesh.cell_volumes()[c];
    SmallVec avg = SmallVec::Zero(mesh.dim());
    for (std::size_t k = 0; k < rule.weights.size(); ++k) {
      const Point x = map_to_cell(mesh, c, rule.points[k], bary);
      avg += rule.weights[k] * scale * vol * q(x);
    }
    for (int a = 0; a < nl; ++a) out[mesh.cell(c)[a]] += g.row(a).dot(avg);
  }
  return NodalLoad{std::move(out)};
}

BoundaryFunctional BoundaryFunctional::zeros(const SimplicialMesh& mesh, FacetTag tag) {
  BoundaryFunctional v;
  v.tag = tag;
  v.vertices = mesh.tagged_vertices(tag);
  v.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(v.vertices.size()));
  return v;
}

BoundaryFunctional BoundaryFunctional::from_trace(const SimplicialMesh& mesh,
                                                  const std::function<double(const Point&)>& g, FacetTag tag) {
  BoundaryFunctional v = zeros(mesh, tag);
  std::map<int, int> local;
  for (std::size_t k = 0; k < v.vertices.size(); ++k) local[v.vertices[k]] = static_cast<int>(k);
  const int d = mesh.dim();
  for (const auto& f : mesh.boundary_facets()) {
    if (f.tag != tag) continue;
    // Edge-midpoint rule on triangles and two-point Gauss on segments; both
    // integrate quadratics exactly.
    std::vector<std::pair<std::array<double, 3>, double>> pts;
    if (d == 2) {
      const double s = 0.5 / std::sqrt(3.0);
      pts = {{{0.5 + s, 0.5 - s, 0.0}, 0.5}, {{0.5 - s, 0.5 + s, 0.0}, 0.5}};
    } else {
      pts = {{{0.5, 0.5, 0.0}, 1.0 / 3}, {{0.0, 0.5, 0.5}, 1.0 / 3}, {{0.5, 0.0, 0.5}, 1.0 / 3}};
    }
    for (const auto& [lam, w] : pts) {
      Point x{0, 0, 0};
      for (int k = 0; k < d; ++k)
        for (int i = 0; i < 3; ++i) x[i] += lam[k] * mesh.vertex(f.vertices[k])[i];
      const double gx = g(x);
      for (int k = 0; k < d; ++k) v.coefficients[local[f.vertices[k]]] += w * f.area * gx * lam[k];
    }
  }
  return v;
}

DofMap DofMap::from_mesh(const SimplicialMesh& mesh) {
  DofMap m;
  const auto mask = mesh.outer_mask();
  m.free_of_vertex.assign(mesh.num_vertices(), -1);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    if (mask[v]) continue;
    m.free_of_vertex[v] = static_cast<int>(m.vertex_of_free.size());
    m.vertex_of_free.push_back(static_cast<int>(v));
  }
  return m;
}

Eigen::VectorXd DofMap::restrict(const Eigen::VectorXd& full) const {
  Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
  for (std::size_t k = 0; k < size(); ++k) out[static_cast<Eigen::Index>(k)] = full[vertex_of_free[k]];
  return out;
}

Eigen::VectorXd DofMap::expand(const Eigen::VectorXd& free) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(free_of_vertex.size()));
  for (std::size_t k = 0; k < size(); ++k) out[vertex_of_free[k]] = free[static_cast<Eigen::Index>(k)];
  return out;
}

SparseMatrix DofMap::restrict(const SparseMatrix& full) const {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(full.nonZeros()));
  for (int col = 0; col < full.outerSize(); ++col) {
    const int fc = free_of_vertex[col];
    if (fc < 0) continue;
    for (SparseMatrix::InnerIterator it(full, col); it; ++it) {
      const int fr = free_of_vertex[it.row()];
      if (fr >= 0) trip.emplace_back(fr, fc, it.value());
    }
  }
  const auto n = static_cast<Eigen::Index>(size());
  SparseMatrix out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

LinearSystem assemble_state(const SimplicialMesh& mesh, const MatrixField& coeff, const SourceDescriptor& f,
                            const BoundaryFunctional* neumann) {
  require_on_mesh(coeff, mesh, "assemble_state");
  LinearSystem sys;
  sys.mesh_id = mesh.id();
  sys.dofs = DofMap::from_mesh(mesh);
  sys.matrix = sys.dofs.restrict(stiffness_matrix(mesh, coeff, CoeffPart::Full));
  sys.symmetric = !has_skew(coeff);
  Eigen::VectorXd rhs = load_vector(mesh, f);
  if (neumann && !neumann->empty()) rhs += scatter(*neumann, mesh.num_vertices());
  sys.rhs = sys.dofs.restrict(rhs);
  return sys;
}

LinearSystem assemble_adjoint(const SimplicialMesh& mesh, const MatrixField& coeff, const StateField& y,
                              const StateField& y_d, double lambda) {
  require_on_mesh(coeff, mesh, "assemble_adjoint");
  require_state(y, mesh, "assemble_adjoint");
  require_state(y_d, mesh, "assemble_adjoint");
  if (lambda < 0) throw ValidationError("assemble_adjoint: lambda must be nonnegative");
  LinearSystem sys;
  sys.mesh_id = mesh.id();
  sys.dofs = DofMap::from_mesh(mesh);
  sys.matrix = sys.dofs.restrict(stiffness_matrix(mesh, coeff, CoeffPart::Transposed));
  sys.symmetric = !has_skew(coeff);
  const Eigen::VectorXd rhs = -2.0 * lambda *
                              (mass_matrix(mesh) * (y.values - y_d.values) +
                               stiffness_matrix(mesh, coeff, CoeffPart::Sym) * y.values);
  sys.rhs = sys.dofs.restrict(rhs);
  return sys;
}

StateField solve(const LinearSystem& system, const SolverOptions& opts, double* residual) {
  const auto n = system.matrix.rows();
  if (system.matrix.cols() != n || system.rhs.size() != n)
    throw ValidationError("solve: matrix and right-hand side sizes disagree");
  Eigen::VectorXd x;
  if (n == 0) {
    x = Eigen::VectorXd::Zero(0);
  } else if (system.symmetric && opts.use_cg_for_spd) {
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(opts.rtol * 0.1);
    cg.setMaxIterations(opts.max_iter);
    cg.compute(system.matrix);
    x = cg.solve(system.rhs);
  } else if (system.symmetric) {
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
    if (ldlt.info() != Eigen::Success) throw NumericalError("solve: LDLT factorization failed");
    x = ldlt.solve(system.rhs);
    const double target = opts.rtol * (system.rhs.norm() + 1.0);
    for (int k = 0; k < opts.max_iter && (system.matrix * x - system.rhs).norm() > target && k < 5; ++k)
      x += ldlt.solve(system.rhs - system.matrix * x);
  } else {
    Eigen::SparseLU<SparseMatrix> lu;
    lu.compute(system.matrix);
    if (lu.info() != Eigen::Success) throw NumericalError("solve: sparse LU factorization failed (singular system)");
    x = lu.solve(system.rhs);
    const double target = opts.rtol * (system.rhs.norm() + 1.0);
    for (int k = 0; k < opts.max_iter && (system.matrix * x - system.rhs).norm() > target && k < 5; ++k)
      x += lu.solve(system.rhs - system.matrix * x);
  }
  const double res = n ? (system.matrix * x - system.rhs).norm() : 0.0;
  if (residual) *residual = res;
  if (!std::isfinite(res) || res > opts.rtol * (system.rhs.norm() + 1.0))
    throw NumericalError("solve: residual " + std::to_string(res) + " above target");
  StateField s;
  s.mesh_id = system.mesh_id;
  s.values = system.dofs.expand(x);
  s.dirichlet_mask.assign(system.dofs.free_of_vertex.size(), 0);
  for (std::size_t v = 0; v < s.dirichlet_mask.size(); ++v) s.dirichlet_mask[v] = system.dofs.free_of_vertex[v] < 0;
  return s;
}

struct Factorization::Impl {
  Eigen::SparseLU<SparseMatrix> lu;
};

Factorization::Factorization(const SparseMatrix& matrix) : impl_(std::make_unique<Impl>()) {
  impl_->lu.compute(matrix);
  if (impl_->lu.info() != Eigen::Success) throw NumericalError("Factorization: sparse LU failed");
}
Factorization::~Factorization() = default;
Factorization::Factorization(Factorization&&) noexcept = default;
Factorization& Factorization::operator=(Factorization&&) noexcept = default;

Eigen::VectorXd Factorization::solve(const Eigen::VectorXd& b) const { return impl_->lu.solve(b); }
Eigen::MatrixXd Factorization::solve(const Eigen::MatrixXd& b) const { return impl_->lu.solve(b); }

BoundaryGram boundary_gram(const SimplicialMesh& mesh, FacetTag tag) {
  BoundaryGram g;
  g.vertices = mesh.tagged_vertices(tag);
  if (g.vertices.empty()) throw ValidationError("boundary_gram: no facets carry the requested tag");
  std::map<int, int> local;
  for (std::size_t k = 0; k < g.vertices.size(); ++k) local[g.vertices[k]] = static_cast<int>(k);
  std::vector<Eigen::Triplet<double>> st, ms;
  const int d = mesh.dim();
  for (const auto& f : mesh.boundary_facets()) {
    if (f.tag != tag) continue;
    int idx[3];
    for (int k = 0; k < d; ++k) idx[k] = local.at(f.vertices[k]);
    if (d == 2) {
      const Point& p = mesh.vertex(f.vertices[0]);
      const Point& q = mesh.vertex(f.vertices[1]);
      const double len = std::hypot(q[0] - p[0], q[1] - p[1]);
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          st.emplace_back(idx[a], idx[b], (a == b ? 1.0 : -1.0) / len);
          ms.emplace_back(idx[a], idx[b], len * (a == b ? 2.0 : 1.0) / 6.0);
        }
    } else {
      Eigen::Matrix<double, 3, 2> e;
      for (int k = 0; k < 2; ++k)
        for (int i = 0; i < 3; ++i) e(i, k) = mesh.vertex(f.vertices[k + 1])[i] - mesh.vertex(f.vertices[0])[i];
      const Eigen::Matrix2d metric = e.transpose() * e;
      const double area = 0.5 * std::sqrt(metric.determinant());
      Eigen::Matrix<double, 2, 3> dref;
      dref << -1, 1, 0, -1, 0, 1;
      const Eigen::Matrix3d sloc = area * dref.transpose() * metric.inverse() * dref;
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          st.emplace_back(idx[a], idx[b], sloc(a, b));
          ms.emplace_back(idx[a], idx[b], area * (a == b ? 2.0 : 1.0) / 12.0);
        }
    }
  }
  const auto n = static_cast<Eigen::Index>(g.vertices.size());
  g.stiffness.resize(n, n);
  g.mass.resize(n, n);
  g.stiffness.setFromTriplets(st.begin(), st.end());
  g.mass.setFromTriplets(ms.begin(), ms.end());
  return g;
}

double boundary_dual_norm(const BoundaryGram& gram, const Eigen::VectorXd& r) {
  if (r.size() != static_cast<Eigen::Index>(gram.vertices.size()))
    throw ValidationError("boundary_dual_norm: coefficient vector has the wrong length");
  if (r.isZero(0.0)) return 0.0;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(gram.h());
  if (ldlt.info() != Eigen::Success) throw NumericalError("boundary_dual_norm: boundary Gram factorization failed");
  return r.dot(ldlt.solve(r));
}

double boundary_dual_norm(const SimplicialMesh& mesh, const BoundaryFunctional& v) {
  return boundary_dual_norm(boundary_gram(mesh, v.tag), v.coefficients);
}

Eigen::VectorXd trace(const BoundaryFunctional& v, const Eigen::VectorXd& nodal) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.vertices.size()));
  for (std::size_t k = 0; k < v.vertices.size(); ++k) out[static_cast<Eigen::Index>(k)] = nodal[v.vertices[k]];
  return out;
}

Eigen::VectorXd scatter(const BoundaryFunctional& v, std::size_t n_vertices) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_vertices));
  for (std::size_t k = 0; k < v.vertices.size(); ++k) out[v.vertices[k]] += v.coefficients[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace skewopt
