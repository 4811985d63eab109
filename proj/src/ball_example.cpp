#include "skewopt/ball_example.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "skewopt/quadrature.hpp"

namespace skewopt {

namespace {

constexpr double kPi = std::numbers::pi;

double norm3(const Point& x) { return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]); }

Point spherical(double rho, double phi, double psi) {
  return {rho * std::cos(phi) * std::sin(psi), rho * std::sin(phi) * std::sin(psi), rho * std::cos(psi)};
}

Rule1D rule_for(QuadRule r, int n, double a, double b, bool avoid_ends) {
  if (r == QuadRule::GaussLegendre) return gauss_legendre(n, a, b);
  return trapezoid(n, a, b, avoid_ends);
}

}  // namespace

void QuadratureGrid::validate() const {
  if (n_rho < 8 || n_phi < 8 || n_psi < 8) throw ValidationError("QuadratureGrid: point counts must be >= 8");
}

double atan2_branch(double y, double x) {
  if (x < 0) return std::atan(y / x) + kPi;
  if (x > 0) return y < 0 ? std::atan(y / x) + 2 * kPi : std::atan(y / x);
  if (y > 0) return kPi / 2;
  if (y < 0) return 3 * kPi / 2;
  return 0.0;
}

BallExample::BallExample(double zeta, Profile profile) : zeta_(zeta), profile_(profile) {
  if (!(zeta > 0)) throw ValidationError("BallExample: zeta must be positive");
}

double BallExample::a(const Point& x) { return x[0] / (2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); }
double BallExample::b(const Point& x) { return x[2] / (2.0 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2])); }

SmallMat BallExample::envelope(const Point& x) {
  SmallMat m = SmallMat::Zero(3, 3);
  const double av = a(x), bv = b(x);
  m(0, 1) = av;
  m(1, 0) = -av;
  m(1, 2) = -bv;
  m(2, 1) = bv;
  return m;
}

Eigen::Vector3d BallExample::divergence(const Point& x) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  return Eigen::Vector3d(x[0], x[1], x[2]) * (x[1] / (r2 * r2));
}

double BallExample::v0_squared(const Point& x) const {
  const double r = norm3(x);
  const double z1 = r > 0 ? x[0] / r : 0.0, z2 = r > 0 ? x[1] / r : 0.0;
  if (profile_ == Profile::Paper) return zeta_ / (kPi * kPi) * (4 * kPi - atan2_branch(z2, z1));
  return 3.0 * zeta_ / (4.0 * kPi) * (2.0 + z2);
}

double BallExample::v0(const Point& x) const { return std::sqrt(v0_squared(x)); }

Eigen::Vector3d BallExample::dv0_dz(const Point& x) const {
  const double r = norm3(x);
  const double z1 = x[0] / r, z2 = x[1] / r;
  const double v = v0(x);
  if (profile_ == Profile::Paper) {
    // d(phi)/dz1 = -z2 / (z1^2 + z2^2), d(phi)/dz2 = z1 / (z1^2 + z2^2)
    const double s = z1 * z1 + z2 * z2;
    if (s == 0.0) return Eigen::Vector3d::Zero();
    const double k = -zeta_ / (kPi * kPi) / (2.0 * v);
    return {k * (-z2 / s), k * (z1 / s), 0.0};
  }
  return {0.0, 3.0 * zeta_ / (4.0 * kPi) / (2.0 * v), 0.0};
}

Eigen::Vector3d BallExample::grad_v0(const Point& x) const {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  if (r2 == 0.0) return Eigen::Vector3d::Zero();
  const double r3 = r2 * std::sqrt(r2);
  const Eigen::Vector3d d = dv0_dz(x);
  return Eigen::Vector3d(d[0] * (r2 - x[0] * x[0]) - d[1] * x[0] * x[1],
                         d[1] * (r2 - x[1] * x[1]) - d[0] * x[0] * x[1],
                         -d[0] * x[0] * x[2] - d[1] * x[1] * x[2]) /
         r3;
}

double BallExample::y_d(const Point& x) const {
  const double r = norm3(x);
  if (r >= 1.0) return 0.0;
  return (1.0 - std::pow(r, 5)) * v0(x);
}

Eigen::Vector3d BallExample::grad_y_d(const Point& x) const {
  const double r = norm3(x);
  if (r >= 1.0) return Eigen::Vector3d::Zero();
  const Eigen::Vector3d xv(x[0], x[1], x[2]);
  return -5.0 * r * r * r * v0(x) * xv + (1.0 - std::pow(r, 5)) * grad_v0(x);
}

double surface_identity(const BallExample& ex, const QuadratureGrid& grid) {
  grid.validate();
  const Rule1D phi = rule_for(grid.rule, grid.n_phi, 0.0, 2 * kPi, true);
  const Rule1D psi = rule_for(grid.rule, grid.n_psi, 0.0, kPi, false);
  double acc = 0.0;
  for (int i = 0; i < grid.n_phi; ++i) {
    double row = 0.0;
    for (int j = 0; j < grid.n_psi; ++j) {
      const double s = std::sin(psi.nodes[j]);
      const Point z = spherical(1.0, phi.nodes[i], psi.nodes[j]);
      row += psi.weights[j] * std::sin(phi.nodes[i]) * s * ex.v0_squared(z) * s;
    }
    acc += phi.weights[i] * row;
  }
  return acc;
}

double surface_identity(double zeta, const QuadratureGrid& grid) {
  return surface_identity(BallExample(zeta), grid);
}

double defect_on_annulus(const BallExample& ex, double epsilon, const QuadratureGrid& grid) {
  if (!(epsilon > 0 && epsilon < 1)) throw ValidationError("defect_on_annulus: epsilon must lie in (0, 1)");
  // div A* is parallel to x with zero divergence, so only the inner sphere
  // contributes: (div A*, nu) = -x2 / eps^3 there, and dH^2 scales by eps^2.
  const double c = 1.0 - std::pow(epsilon, 5);
  return -0.5 * c * c * surface_identity(ex, grid);
}

double defect_on_annulus(double zeta, double epsilon, const QuadratureGrid& grid) {
  return defect_on_annulus(BallExample(zeta), epsilon, grid);
}

double defect_on_annulus_volume(const BallExample& ex, double epsilon, const QuadratureGrid& grid) {
  if (!(epsilon > 0 && epsilon < 1)) throw ValidationError("defect_on_annulus: epsilon must lie in (0, 1)");
  grid.validate();
  const Rule1D rho = rule_for(grid.rule, grid.n_rho, epsilon, 1.0, false);
  const Rule1D phi = rule_for(grid.rule, grid.n_phi, 0.0, 2 * kPi, true);
  const Rule1D psi = rule_for(grid.rule, grid.n_psi, 0.0, kPi, true);
  double acc = 0.0;
  for (int k = 0; k < grid.n_rho; ++k) {
    const double r = rho.nodes[k];
    double shell = 0.0;
    for (int i = 0; i < grid.n_phi; ++i)
      for (int j = 0; j < grid.n_psi; ++j) {
        const Point x = spherical(r, phi.nodes[i], psi.nodes[j]);
        const double integrand = ex.y_d(x) * BallExample::divergence(x).dot(ex.grad_y_d(x));
        shell += phi.weights[i] * psi.weights[j] * integrand * std::sin(psi.nodes[j]);
      }
    acc += rho.weights[k] * r * r * shell;
  }
  return acc;
}

OrthogonalityResult orthogonality_check(const QuadratureGrid& grid, double scale, const BallExample& ex) {
  grid.validate();
  const Rule1D rho = rule_for(grid.rule, grid.n_rho, 0.0, 1.0, true);
  const Rule1D phi = rule_for(grid.rule, grid.n_phi, 0.0, 2 * kPi, true);
  const Rule1D psi = rule_for(grid.rule, grid.n_psi, 0.0, kPi, true);
  OrthogonalityResult res;
  for (int k = 0; k < grid.n_rho; ++k)
    for (int i = 0; i < grid.n_phi; ++i)
      for (int j = 0; j < grid.n_psi; ++j) {
        const Point x = spherical(scale * rho.nodes[k], phi.nodes[i], psi.nodes[j]);
        const Eigen::Vector3d xv(x[0], x[1], x[2]);
        const double r = xv.norm();
        const Eigen::Vector3d q = xv / (r * r * r);
        const Eigen::Vector3d g = ex.grad_v0(x);
        // The bracket of the gradient formula is orthogonal to x term by
        // term; in double the cancellation leaves roundoff of order
        // eps / |x|^3, so the pairing is accumulated in quad precision.
        const Eigen::Vector3d d = ex.dv0_dz(x);
        const __float128 x1 = x[0], x2 = x[1], x3 = x[2], d1 = d[0], d2 = d[1];
        const __float128 r2q = x1 * x1 + x2 * x2 + x3 * x3;
        const __float128 dot = x1 * (d1 * (r2q - x1 * x1) - d2 * x1 * x2) +
                               x2 * (d2 * (r2q - x2 * x2) - d1 * x1 * x2) + x3 * (-d1 * x1 * x3 - d2 * x2 * x3);
        const double resid = std::abs(static_cast<double>(dot / (r2q * r2q * r2q)));
        res.max_abs_double = std::max(res.max_abs_double, std::abs(g.dot(q)));
        const double denom = g.norm() * q.norm();
        res.max_abs = std::max(res.max_abs, resid);
        if (denom > 0) res.max_rel = std::max(res.max_rel, resid / denom);
        ++res.n_points;
      }
  return res;
}

SourceDescriptor forcing_field(const BallExample& ex, const SmallMat& a_sharp, const SimplicialMesh& mesh,
                               double alpha, double beta, ForcingForm form, int n_quad) {
  if (mesh.dim() != 3) throw ValidationError("forcing_field: the ball example lives in three dimensions");
  if (a_sharp.rows() != 3 || a_sharp.cols() != 3) throw ValidationError("forcing_field: A# must be 3x3");
  if ((a_sharp - a_sharp.transpose()).cwiseAbs().maxCoeff() > 1e-14)
    throw ValidationError("forcing_field: A# must be symmetric");
  Eigen::SelfAdjointEigenSolver<SmallMat> es(a_sharp, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < alpha - 1e-12 || es.eigenvalues().maxCoeff() > beta + 1e-12)
    throw ValidationError("forcing_field: A# violates the eigenvalue bounds");

  if (form == ForcingForm::Flux) {
    return load_from_flux(
        mesh, [&](const Point& x) -> SmallVec { return (a_sharp + BallExample::envelope(x)) * ex.grad_y_d(x); },
        n_quad);
  }
  const SourceDescriptor sym =
      load_from_flux(mesh, [&](const Point& x) -> SmallVec { return a_sharp * ex.grad_y_d(x); }, n_quad);
  // -div(A* grad y) = -(column divergence of A*) . grad y for skew A*
  const SourceDescriptor skew = load_from_density(
      mesh, [&](const Point& x) { return -BallExample::divergence(x).dot(ex.grad_y_d(x)); }, n_quad);
  return NodalLoad{std::get<NodalLoad>(sym).values + std::get<NodalLoad>(skew).values};
}

}  // namespace skewopt
