#pragma once

#include "skewopt/ball_example.hpp"
#include "skewopt/ocp.hpp"

namespace skewopt {

/// Two-dimensional skew envelope with entry a12 = c |x|^(-1/2), sampled at
/// centroids. Square integrable, unbounded at the origin, and its super-level
/// set {a12 >= 1/eps} is the disc of radius (c eps)^2.
MatrixField singular_envelope_2d(const SimplicialMesh& mesh, double c = 3.0);

/// Constant skew envelope a12 = value.
MatrixField constant_envelope_2d(const SimplicialMesh& mesh, double value);

enum class EnvelopeKind { Bounded, Singular };

struct RegressionInstance {
  OcpProblem problem;
  MatrixField init;
};

/// Square [-1, 1]^2 with unit source. The target is the state of the
/// perturbed coefficient diag(1.6, 0.8) with skew entry 0.4 (clamped into
/// the envelope); the optimizer starts from the identity.
RegressionInstance regression_instance_2d(int n_per_axis, EnvelopeKind kind, double c = 3.0);

/// The ball counterexample on the box [-1, 1]^3: envelope A*, A# = I, target
/// y_d (zero outside the unit ball) and the source
/// f = -div(A# grad y_d + A* grad y_d), rebuilt on every submesh. The initial
/// coefficient is A# + A*.
RegressionInstance ball_instance(int n_per_axis, double zeta = 1.0, Profile profile = Profile::Smooth);

}  // namespace skewopt
