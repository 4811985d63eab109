#include "skewopt/diagnostics.hpp"

#include <cmath>

#include <Eigen/Geometry>

namespace skewopt {

DefectEstimate energy_defect(const SimplicialMesh& mesh, const MatrixField& coeff, const StateField& y,
                             const SourceDescriptor& f) {
  require_on_mesh(coeff, mesh, "energy_defect");
  if (static_cast<std::size_t>(y.values.size()) != mesh.num_vertices())
    throw ValidationError("energy_defect: state field does not live on this mesh");
  DefectEstimate d;
  d.rhs_pairing = load_vector(mesh, f).dot(y.values);
  d.sym_energy = y.values.dot(stiffness_matrix(mesh, coeff, CoeffPart::Sym) * y.values);
  d.defect = d.rhs_pairing - d.sym_energy;
  return d;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Variational: return "variational";
    case Verdict::NonVariational: return "non-variational";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

double default_threshold(double rhs_pairing) { return 1e-4 * (1.0 + std::abs(rhs_pairing)); }

Classification classify_pair(const std::vector<std::pair<double, double>>& trace, double threshold) {
  if (trace.size() < 3) throw ValidationError("classify_pair: need at least 3 trace points");
  if (!(threshold > 0)) throw ValidationError("classify_pair: threshold must be positive");
  for (std::size_t k = 1; k < trace.size(); ++k)
    if (!(trace[k].first < trace[k - 1].first))
      throw ValidationError("classify_pair: epsilon values must be strictly decreasing");

  Classification c;
  c.threshold = threshold;
  const std::size_t n = trace.size();
  const auto [e1, d1] = trace[n - 2];
  const auto [e2, d2] = trace[n - 1];
  const double slope = (d1 - d2) / (e1 - e2);
  c.defect_limit_estimate = d2 - slope * e2;
  const auto [e0, d0] = trace[n - 3];
  c.fit_residual = std::abs(d0 - (d2 + slope * (e0 - e2)));

  bool up = false, down = false, cauchy = true;
  for (std::size_t k = 1; k < n; ++k) {
    const double step = trace[k].second - trace[k - 1].second;
    up |= step > threshold;
    down |= step < -threshold;
    if (k >= 2) {
      const double prev = std::abs(trace[k - 1].second - trace[k - 2].second);
      cauchy &= std::abs(step) <= prev + threshold;
    }
  }
  if (up && down) return c;
  if (std::abs(c.defect_limit_estimate) > threshold)
    c.verdict = Verdict::NonVariational;
  else if (cauchy)
    c.verdict = Verdict::Variational;
  return c;
}

namespace {

SmallVec facet_normal(const SimplicialMesh& mesh, const std::array<int, 3>& fv, std::size_t cell) {
  const int d = mesh.dim();
  SmallVec n(d);
  const Point& p0 = mesh.vertex(fv[0]);
  if (d == 2) {
    const Point& p1 = mesh.vertex(fv[1]);
    n << p1[1] - p0[1], p0[0] - p1[0];
  } else {
    const Point& p1 = mesh.vertex(fv[1]);
    const Point& p2 = mesh.vertex(fv[2]);
    Eigen::Vector3d a(p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]);
    Eigen::Vector3d b(p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]);
    n = a.cross(b);
  }
  n.normalize();
  const Point c = mesh.centroid(cell);
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += n[i] * (p0[i] - c[i]);
  if (s < 0) n = -n;
  return n;
}

}  // namespace

std::vector<SmallVec> matrix_divergence(const SimplicialMesh& mesh, const MatrixField& field, DivConvention conv) {
  require_on_mesh(field, mesh, "matrix_divergence");
  const int d = mesh.dim();
  std::vector<SmallVec> out(mesh.num_cells(), SmallVec::Zero(d));
  for (const auto& f : mesh.interior_facets()) {
    SmallMat jump = field.full_matrix(f.cell_b) - field.full_matrix(f.cell_a);
    if (conv == DivConvention::Columns) jump.transposeInPlace();
    const SmallVec n = facet_normal(mesh, f.vertices, f.cell_a);  // from a into b
    const SmallVec flux = 0.5 * f.area * (jump * n);
    out[f.cell_a] += flux;
    out[f.cell_b] += flux;  // jump and normal both flip for cell b
  }
  for (std::size_t c = 0; c < out.size(); ++c) out[c] /= mesh.cell_volumes()[c];
  return out;
}

SmallVec matrix_divergence_fd(const std::function<SmallMat(const Point&)>& fn, const Point& x, int dim, double h,
                              DivConvention conv) {
  SmallVec out = SmallVec::Zero(dim);
  for (int k = 0; k < dim; ++k) {
    Point xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    const SmallMat dm = (fn(xp) - fn(xm)) / (2.0 * h);
    // derivative along k hits column k for rows, row k for columns
    if (conv == DivConvention::Rows)
      out += dm.col(k);
    else
      out += dm.row(k).transpose();
  }
  return out;
}

}  // namespace skewopt
