#include "skewopt/instances.hpp"

#include <cmath>

namespace skewopt {

MatrixField singular_envelope_2d(const SimplicialMesh& mesh, double c) {
  if (mesh.dim() != 2) throw ValidationError("singular_envelope_2d: mesh must be two-dimensional");
  MatrixField f = MatrixField::zeros(mesh);
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) {
    const Point x = mesh.centroid(k);
    f.set_skew(k, 0, 1, c / std::pow(x[0] * x[0] + x[1] * x[1], 0.25));
  }
  return f;
}

MatrixField constant_envelope_2d(const SimplicialMesh& mesh, double value) {
  MatrixField f = MatrixField::zeros(mesh);
  for (std::size_t k = 0; k < mesh.num_cells(); ++k) f.set_skew(k, 0, 1, value);
  return f;
}

RegressionInstance regression_instance_2d(int n_per_axis, EnvelopeKind kind, double c) {
  RegressionInstance inst;
  OcpProblem& pb = inst.problem;
  pb.mesh = build_box_mesh(2, {-1, -1, 0}, {1, 1, 0}, n_per_axis);
  pb.f = CellDensity{std::vector<double>(pb.mesh.num_cells(), 1.0)};
  pb.set.alpha = 0.5;
  pb.set.beta = 4.0;
  pb.set.tv_budget = 20.0;
  pb.set.skew_family_radius = 10.0;
  pb.set.envelope = kind == EnvelopeKind::Bounded ? constant_envelope_2d(pb.mesh, 0.5) : singular_envelope_2d(pb.mesh, c);

  MatrixField target = MatrixField::zeros(pb.mesh);
  for (std::size_t k = 0; k < target.size(); ++k) {
    target.set_sym(k, 0, 0, 1.6);
    target.set_sym(k, 1, 1, 0.8);
    target.set_skew(k, 0, 1, 0.4);
  }
  target = clamp_to_dominance(target, pb.set.envelope);
  pb.y_d = solve(assemble_state(pb.mesh, target, pb.f));
  inst.init = MatrixField::identity(pb.mesh);
  return inst;
}

RegressionInstance ball_instance(int n_per_axis, double zeta, Profile profile) {
  RegressionInstance inst;
  OcpProblem& pb = inst.problem;
  const BallExample ex(zeta, profile);
  pb.mesh = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, n_per_axis);
  const SmallMat a_sharp = SmallMat::Identity(3, 3);
  pb.source_on = [ex, a_sharp](const SimplicialMesh& m) {
    return forcing_field(ex, a_sharp, m, 1.0, 1.0, ForcingForm::Divergence);
  };
  pb.f = pb.source_on(pb.mesh);
  pb.y_d = StateField::interpolate(pb.mesh, [&](const Point& x) { return ex.y_d(x); });
  pb.set.alpha = 0.5;
  pb.set.beta = 2.0;
  pb.set.tv_budget = 1e6;
  pb.set.envelope = sample_field(pb.mesh, [](const Point& x) { return BallExample::envelope(x); });
  pb.set.skew_family_radius = 2.0 * skew_l2_norm(pb.mesh, pb.set.envelope);
  inst.init = pb.set.envelope;
  for (std::size_t k = 0; k < inst.init.size(); ++k)
    for (int i = 0; i < 3; ++i) inst.init.set_sym(k, i, i, 1.0);
  return inst;
}

}  // namespace skewopt
