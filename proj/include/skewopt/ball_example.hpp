#pragma once

#include <Eigen/Core>

#include "skewopt/assembly.hpp"

namespace skewopt {

enum class QuadRule { GaussLegendre, Trapezoid };

/// Tensor grid in spherical coordinates x = rho (cos phi sin psi,
/// sin phi sin psi, cos psi). Azimuthal nodes always avoid phi = 0 and 2 pi.
struct QuadratureGrid {
  int n_rho = 64;
  int n_phi = 64;
  int n_psi = 64;
  QuadRule rule = QuadRule::GaussLegendre;
  void validate() const;
};

/// Two-argument arctangent with range [0, 2 pi] and (0, 0) -> 0.
double atan2_branch(double y, double x);

/// Angular profile of the target state: Paper uses
/// v0^2 = (zeta / pi^2)(4 pi - phi); Smooth uses v0^2 = c (2 + z2) with
/// c = 3 zeta / (4 pi), which has the same boundary moment zeta and no cut.
enum class Profile { Paper, Smooth };

/// The unit-ball counterexample: singular skew envelope A* with
/// a = x1 / (2|x|^2), b = x3 / (2|x|^2) and target y_d = (1 - |x|^5) v0(x/|x|).
class BallExample {
 public:
  explicit BallExample(double zeta = 1.0, Profile profile = Profile::Paper);

  double zeta() const { return zeta_; }
  Profile profile() const { return profile_; }

  static double a(const Point& x);
  static double b(const Point& x);
  static SmallMat envelope(const Point& x);
  /// Column divergence of A*: x_i x2 / |x|^4.
  static Eigen::Vector3d divergence(const Point& x);

  double v0_squared(const Point& x) const;
  double v0(const Point& x) const;
  /// Partial derivatives of v0 with respect to the direction z = x / |x|.
  Eigen::Vector3d dv0_dz(const Point& x) const;
  /// Gradient of x -> v0(x / |x|) by the chain rule through z.
  Eigen::Vector3d grad_v0(const Point& x) const;
  /// Target state; zero outside the unit ball.
  double y_d(const Point& x) const;
  Eigen::Vector3d grad_y_d(const Point& x) const;

 private:
  double zeta_;
  Profile profile_;
};

/// Boundary moment of b0 v0^2 over the unit sphere, b0 = sin phi sin psi.
double surface_identity(double zeta, const QuadratureGrid& grid);
double surface_identity(const BallExample& ex, const QuadratureGrid& grid);

/// (1/2) integral over eps < |x| < 1 of (div A*, grad y_d^2), reduced to the
/// flux through |x| = eps: -(1/2)(1 - eps^5)^2 times the boundary moment.
double defect_on_annulus(double zeta, double epsilon, const QuadratureGrid& grid);
double defect_on_annulus(const BallExample& ex, double epsilon, const QuadratureGrid& grid);
/// Same quantity by direct volume quadrature of y_d (div A*, grad y_d).
double defect_on_annulus_volume(const BallExample& ex, double epsilon, const QuadratureGrid& grid);

struct OrthogonalityResult {
  double max_abs = 0.0;
  double max_rel = 0.0;         ///< residual / (|grad v0| |x / |x|^3|)
  double max_abs_double = 0.0;  ///< same pairing accumulated in double precision
  std::size_t n_points = 0;
};

/// Evaluates (grad v0(x / |x|), x / |x|^3) on the grid points scaled by
/// `scale` and reports the largest residuals.
OrthogonalityResult orthogonality_check(const QuadratureGrid& grid, double scale = 1.0,
                                        const BallExample& ex = BallExample());

enum class ForcingForm {
  Flux,       ///< action  (grad phi, A# grad y_d + A* grad y_d)
  Divergence  ///< action  (grad phi, A# grad y_d) - phi (div A*, grad y_d)
};

/// Weak action of f = -div(A# grad y_d + A* grad y_d) on the hat functions of
/// `mesh`. Throws ValidationError when A# is not symmetric with spectrum in
/// [alpha, beta].
SourceDescriptor forcing_field(const BallExample& ex, const SmallMat& a_sharp, const SimplicialMesh& mesh,
                               double alpha, double beta, ForcingForm form = ForcingForm::Flux, int n_quad = 3);

}  // namespace skewopt
