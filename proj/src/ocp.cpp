#include "skewopt/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "skewopt/diagnostics.hpp"

namespace skewopt {

void OcpProblem::validate() const {
  set.validate();
  require_on_mesh(set.envelope, mesh, "OcpProblem envelope");
  if (static_cast<std::size_t>(y_d.values.size()) != mesh.num_vertices())
    throw ValidationError("OcpProblem: y_d does not live on the mesh");
  if (lambda < 0) throw ValidationError("OcpProblem: lambda must be nonnegative");
}

void RegularizationSchedule::validate() const {
  if (epsilons.size() < 1) throw ValidationError("schedule: epsilon list is empty");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0)) throw ValidationError("schedule: epsilons must be positive");
    if (k && !(epsilons[k] < epsilons[k - 1])) throw ValidationError("schedule: epsilons must be strictly decreasing");
  }
  if (!(sigma > 0)) throw ValidationError("schedule: sigma must be positive");
}

namespace {

// Per-problem quantities that do not depend on the coefficient.
struct Context {
  const OcpProblem& pb;
  DofMap dofs;
  SparseMatrix mass;
  Eigen::VectorXd load;
  Eigen::VectorXd mass_yd;
  double yd_mass_yd = 0.0;

  explicit Context(const OcpProblem& problem)
      : pb(problem),
        dofs(DofMap::from_mesh(problem.mesh)),
        mass(mass_matrix(problem.mesh)),
        load(load_vector(problem.mesh, problem.f)) {
    mass_yd = mass * problem.y_d.values;
    yd_mass_yd = problem.y_d.values.dot(mass_yd);
  }
};

double dual_norm_or_zero(const SimplicialMesh& mesh, const BoundaryFunctional* v) {
  if (!v || v->empty()) return 0.0;
  return boundary_dual_norm(mesh, *v);
}

SolveReport cost_terms(const Context& ctx, const MatrixField& coeff, const StateField& y, const BoundaryFunctional* v,
                       double epsilon_sigma) {
  const auto& mesh = ctx.pb.mesh;
  SolveReport r;
  const Eigen::VectorXd d = y.values - ctx.pb.y_d.values;
  r.tracking_term = d.dot(ctx.mass * d);
  const Eigen::VectorXd ky = stiffness_matrix(mesh, coeff, CoeffPart::Sym) * y.values;
  r.energy_term = y.values.dot(ky);
  const double pairing = ctx.load.dot(y.values);
  r.energy_defect = pairing - r.energy_term;
  if (v && !v->empty()) {
    r.penalty_term = dual_norm_or_zero(mesh, v) / epsilon_sigma;
    r.duality_product = v->coefficients.dot(trace(*v, y.values));
  }
  r.cost = r.tracking_term + r.energy_term + r.penalty_term;
  r.constraint_residuals["energy_equality"] =
      std::abs(r.energy_term - pairing - r.duality_product) / (1.0 + std::abs(pairing));
  return r;
}

StateField state_solve(const Context& ctx, const MatrixField& coeff, const BoundaryFunctional* v,
                       const SolverOptions& solver) {
  LinearSystem sys = assemble_state(ctx.pb.mesh, coeff, NodalLoad{ctx.load}, v);
  return solve(sys, solver);
}

StateField adjoint_solve(const Context& ctx, const MatrixField& coeff, const StateField& y,
                         const SolverOptions& solver) {
  return solve(assemble_adjoint(ctx.pb.mesh, coeff, y, ctx.pb.y_d, ctx.pb.lambda), solver);
}

MatrixField density(const SimplicialMesh& mesh, const MatrixField& g) {
  MatrixField out = g;
  const int ns = MatrixField::sym_count(g.dim()), nk = MatrixField::skew_count(g.dim());
  auto s = out.sym_data();
  auto w = out.skew_data();
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double inv = 1.0 / mesh.cell_volumes()[c];
    for (int k = 0; k < ns; ++k) s[c * ns + k] *= inv;
    for (int k = 0; k < nk; ++k) w[c * nk + k] *= inv;
  }
  return out;
}

double l2_norm(const SimplicialMesh& mesh, const MatrixField& a) { return std::sqrt(l2_inner(mesh, a, a)); }

IterationRecord row_of(int it, const SolveReport& r, double grad_norm, double step) {
  return {it, r.cost, r.tracking_term, r.energy_term, r.penalty_term, r.energy_defect, r.duality_product, grad_norm,
          step};
}

struct CoreResult {
  MatrixField coeff;
  StateField y;
  SolveReport report;
  double grad_norm = 0.0;
  int accepted = 0;
  bool converged = false;
  bool stalled = false;
  std::vector<IterationRecord> trace;
  int infeasible = 0;
  double worst_energy_equality = 0.0;  ///< over every state solve, trials included
};

// Projected gradient on the coefficient with the boundary control held fixed.
CoreResult descent_core(const Context& ctx, MatrixField A, const DescentOptions& o, const BoundaryFunctional* v,
                        double epsilon_sigma, int max_steps) {
  const auto& pb = ctx.pb;
  const double lam = pb.lambda;
  CoreResult out;
  StateField y;
  try {
    y = state_solve(ctx, A, v, o.solver);
  } catch (const NumericalError& e) {
    throw NumericalError(std::string("descent: state solve failed at iteration 0: ") + e.what());
  }
  SolveReport rep = cost_terms(ctx, A, y, v, epsilon_sigma);
  out.worst_energy_equality = rep.constraint_residuals["energy_equality"];
  double step = 0.0;
  for (int k = 0;; ++k) {
    StateField p;
    try {
      p = adjoint_solve(ctx, A, y, o.solver);
    } catch (const NumericalError& e) {
      throw NumericalError("descent: adjoint solve failed at iteration " + std::to_string(k) + ": " + e.what());
    }
    const MatrixField g = control_gradient(pb, A, y, p);
    const MatrixField gd = density(pb.mesh, g);
    const MatrixField trial_full = project_admissible(pb.mesh, A.axpby(1.0, gd, -1.0), pb.set);
    const double pg = l2_norm(pb.mesh, A.axpby(1.0, trial_full, -1.0));
    out.trace.push_back(row_of(k, rep, pg, step));
    out.grad_norm = pg;
    if (pg <= o.tol) {
      out.converged = true;
      break;
    }
    if (k >= max_steps) break;

    double t = o.initial_step;
    bool accepted = false;
    for (int b = 0; b <= o.max_backtracks; ++b, t *= o.shrink) {
      MatrixField At = project_admissible(pb.mesh, A.axpby(1.0, gd, -t), pb.set);
      StateField yt;
      try {
        yt = state_solve(ctx, At, v, o.solver);
      } catch (const NumericalError&) {
        continue;
      }
      SolveReport rt = cost_terms(ctx, At, yt, v, epsilon_sigma);
      out.worst_energy_equality = std::max(out.worst_energy_equality, rt.constraint_residuals["energy_equality"]);
      const double dec = frobenius_inner(g, At.axpby(1.0, A, -1.0));
      if (lam * rt.cost <= lam * rep.cost + o.sufficient_decrease * std::min(dec, 0.0)) {
        if (!check_membership(pb.mesh, At, pb.set).ok()) ++out.infeasible;
        A = std::move(At);
        y = std::move(yt);
        rep = std::move(rt);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.stalled = true;
      break;
    }
    step = t;
    ++out.accepted;
  }
  out.coeff = std::move(A);
  out.y = std::move(y);
  out.report = std::move(rep);
  return out;
}

}  // namespace

SolveReport evaluate_cost(const OcpProblem& problem, const MatrixField& coeff, const StateField& y,
                          const BoundaryFunctional* v, double epsilon_sigma) {
  require_on_mesh(coeff, problem.mesh, "evaluate_cost");
  if (static_cast<std::size_t>(y.values.size()) != problem.mesh.num_vertices() ||
      (y.mesh_id && y.mesh_id != problem.mesh.id()))
    throw ValidationError("evaluate_cost: state does not live on the problem mesh");
  if (!(epsilon_sigma > 0)) throw ValidationError("evaluate_cost: epsilon^sigma must be positive");
  const Context ctx(problem);
  return cost_terms(ctx, coeff, y, v, epsilon_sigma);
}

MatrixField control_gradient(const OcpProblem& problem, const MatrixField& coeff, const StateField& y,
                             const StateField& p) {
  const auto& mesh = problem.mesh;
  require_on_mesh(coeff, mesh, "control_gradient");
  if (static_cast<std::size_t>(y.values.size()) != mesh.num_vertices() ||
      static_cast<std::size_t>(p.values.size()) != mesh.num_vertices())
    throw ValidationError("control_gradient: state or adjoint does not live on the mesh");
  const int d = mesh.dim();
  MatrixField g = MatrixField::zeros(mesh);
  const auto nc = static_cast<std::ptrdiff_t>(mesh.num_cells());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const GradMat gr = mesh.basis_gradients(c);
    SmallVec gy = SmallVec::Zero(d), gp = SmallVec::Zero(d);
    for (int a = 0; a <= d; ++a) {
      gy += y.values[mesh.cell(c)[a]] * gr.row(a).transpose();
      gp += p.values[mesh.cell(c)[a]] * gr.row(a).transpose();
    }
    const double vol = mesh.cell_volumes()[c];
    const SmallMat yp = gy * gp.transpose();
    g.set_sym_matrix(c, vol * (problem.lambda * gy * gy.transpose() + 0.5 * (yp + yp.transpose())));
    g.set_skew_matrix(c, vol * 0.5 * (yp.transpose() - yp));
  }
  return g;
}

DescentResult projected_descent(const OcpProblem& problem, const MatrixField& init, const DescentOptions& opts) {
  problem.validate();
  if (!(problem.lambda > 0)) throw ValidationError("projected_descent: lambda must be positive");
  if (opts.max_iter < 0 || !(opts.tol > 0)) throw ValidationError("projected_descent: bad iteration controls");
  const Context ctx(problem);
  const MatrixField start = project_admissible(problem.mesh, init, problem.set);
  CoreResult core = descent_core(ctx, start, opts, nullptr, 1.0, opts.max_iter);
  DescentResult res{std::move(core.coeff), std::move(core.y), std::move(core.report)};
  res.report.grad_norm = core.grad_norm;
  res.report.iterations = core.accepted;
  res.report.converged = core.converged;
  res.report.trace = std::move(core.trace);
  res.report.constraint_residuals["infeasible_iterates"] = core.infeasible;
  res.report.constraint_residuals["energy_equality_max"] = core.worst_energy_equality;
  if (core.stalled) res.report.warnings.push_back("line search failed to find a decrease; stopping");
  return res;
}

std::vector<SweepStep> truncation_sweep(const OcpProblem& problem, const MatrixField& init,
                                        const RegularizationSchedule& schedule, const DescentOptions& opts,
                                        bool warm_start) {
  schedule.validate();
  if (schedule.mode != RegularizationMode::TruncateSkew)
    throw ValidationError("truncation_sweep: schedule mode must be TruncateSkew");
  std::vector<SweepStep> out;
  MatrixField prev_env;
  for (double eps : schedule.epsilons) {
    OcpProblem pb = problem;
    pb.set.envelope = truncate_skew(problem.set.envelope, eps);
    if (!out.empty() && std::ranges::equal(pb.set.envelope.skew_data(), prev_env.skew_data())) {
      SweepStep step = out.back();
      step.epsilon = eps;
      step.report.warnings.push_back("truncation inactive; previous result reused");
      out.push_back(std::move(step));
      continue;
    }
    const MatrixField& start = warm_start && !out.empty() ? out.back().coeff : init;
    DescentResult r = projected_descent(pb, start, opts);
    SweepStep step;
    step.epsilon = eps;
    step.coeff = std::move(r.coeff);
    step.y = std::move(r.y);
    step.report = std::move(r.report);
    prev_env = pb.set.envelope;
    out.push_back(std::move(step));
  }
  return out;
}

MatrixField restrict_field(const MatrixField& field, const SimplicialMesh& sub) {
  const auto& parents = sub.parent_cells();
  if (parents.size() != sub.num_cells()) throw ValidationError("restrict_field: submesh has no parent cell map");
  MatrixField out = MatrixField::zeros(sub);
  for (std::size_t c = 0; c < sub.num_cells(); ++c) {
    if (static_cast<std::size_t>(parents[c]) >= field.size())
      throw ValidationError("restrict_field: parent index out of range");
    out.set_sym_matrix(c, field.sym_matrix(parents[c]));
    out.set_skew_matrix(c, field.skew_matrix(parents[c]));
  }
  return out;
}

StateField restrict_state(const StateField& state, const SimplicialMesh& sub) {
  const auto& parents = sub.parent_vertices();
  if (parents.size() != sub.num_vertices()) throw ValidationError("restrict_state: submesh has no parent vertex map");
  StateField out = StateField::zeros(sub);
  for (std::size_t v = 0; v < sub.num_vertices(); ++v) out.values[static_cast<Eigen::Index>(v)] = state.values[parents[v]];
  return out;
}

OcpProblem restrict_problem(const OcpProblem& problem, const SimplicialMesh& sub) {
  OcpProblem pb;
  pb.mesh = sub;
  pb.lambda = problem.lambda;
  pb.source_on = problem.source_on;
  pb.set = problem.set;
  pb.set.envelope = restrict_field(problem.set.envelope, sub);
  pb.y_d = restrict_state(problem.y_d, sub);
  if (problem.source_on) {
    pb.f = problem.source_on(sub);
  } else if (const auto* dens = std::get_if<CellDensity>(&problem.f)) {
    CellDensity d;
    for (int pc : sub.parent_cells()) d.values.push_back(dens->values.at(pc));
    pb.f = std::move(d);
  } else {
    throw ValidationError("restrict_problem: a nodal load cannot be restricted without a source generator");
  }
  return pb;
}

ControlUpdate optimal_control(const OcpProblem& problem, const MatrixField& coeff, double epsilon_sigma,
                              const SolverOptions& solver) {
  if (!(epsilon_sigma > 0)) throw ValidationError("optimal_control: epsilon^sigma must be positive");
  if (!(problem.lambda > 0)) throw ValidationError("optimal_control: lambda must be positive");
  const Context ctx(problem);
  const auto& mesh = problem.mesh;
  ControlUpdate cu;
  cu.v = BoundaryFunctional::zeros(mesh, FacetTag::Hole);
  if (cu.v.empty()) {
    cu.y = state_solve(ctx, coeff, nullptr, solver);
    return cu;
  }
  const BoundaryGram gram = boundary_gram(mesh, FacetTag::Hole);
  const Eigen::MatrixXd h = Eigen::MatrixXd(gram.h());
  const auto m = static_cast<Eigen::Index>(gram.vertices.size());
  const auto n = static_cast<Eigen::Index>(ctx.dofs.size());

  const SparseMatrix k = ctx.dofs.restrict(stiffness_matrix(mesh, coeff, CoeffPart::Full));
  const SparseMatrix q = ctx.dofs.restrict(SparseMatrix(ctx.mass + stiffness_matrix(mesh, coeff, CoeffPart::Sym)));
  const Factorization lu(k);
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const int f = ctx.dofs.free_of_vertex[gram.vertices[j]];
    if (f >= 0) e(f, j) = 1.0;
  }
  // y = y0 + Z r; the cost is quadratic in r with Hessian
  // 2 (Z^T Q Z + eps^-sigma H^-1). Multiplying the normal equations by H
  // avoids forming H^-1.
  const Eigen::MatrixXd z = lu.solve(e);
  const Eigen::VectorXd y0 = lu.solve(ctx.dofs.restrict(ctx.load));
  const Eigen::VectorXd b = q * y0 - ctx.dofs.restrict(ctx.mass_yd);
  const Eigen::MatrixXd s = z.transpose() * (q * z);
  const Eigen::MatrixXd sys = h * s + Eigen::MatrixXd::Identity(m, m) / epsilon_sigma;
  const Eigen::VectorXd rhs = -h * (z.transpose() * b);
  cu.v.coefficients = sys.partialPivLu().solve(rhs);

  cu.y = state_solve(ctx, coeff, &cu.v, solver);
  const StateField p = adjoint_solve(ctx, coeff, cu.y, solver);
  const Eigen::VectorXd target = epsilon_sigma / (2.0 * problem.lambda) * (h * trace(cu.v, p.values));
  const double scale = std::max({cu.v.coefficients.norm(), target.norm(), 1e-300});
  cu.residual = (cu.v.coefficients - target).norm() / scale;
  return cu;
}

std::vector<SweepStep> perforation_sweep(const OcpProblem& problem, const MatrixField& init,
                                         const RegularizationSchedule& schedule, const DescentOptions& opts) {
  schedule.validate();
  problem.validate();
  if (schedule.mode != RegularizationMode::Perforate)
    throw ValidationError("perforation_sweep: schedule mode must be Perforate");
  std::vector<SweepStep> out;
  double prev_ratio = std::numeric_limits<double>::infinity();
  for (double eps : schedule.epsilons) {
    PerforatedMesh perf = perforate(problem.mesh, problem.set.envelope, eps);
    const OcpProblem pb = restrict_problem(problem, perf.mesh);
    const Context ctx(pb);
    const double es = std::pow(eps, schedule.sigma);

    MatrixField start = restrict_field(init, perf.mesh);
    if (!out.empty()) {
      // Warm start by parent-cell identity; cells new to this submesh keep init.
      const auto& prev = out.back();
      std::unordered_map<int, std::size_t> index;
      for (std::size_t c = 0; c < prev.mesh->num_cells(); ++c) index[prev.mesh->parent_cells()[c]] = c;
      for (std::size_t c = 0; c < perf.mesh.num_cells(); ++c) {
        const auto it = index.find(perf.mesh.parent_cells()[c]);
        if (it == index.end()) continue;
        start.set_sym_matrix(c, prev.coeff.sym_matrix(it->second));
        start.set_skew_matrix(c, prev.coeff.skew_matrix(it->second));
      }
    }
    MatrixField A = project_admissible(pb.mesh, start, pb.set);

    SweepStep step;
    step.epsilon = eps;
    int outer = 0;
    double grad_norm = 0.0;
    bool converged = false;
    int infeasible = 0;
    double worst_v = 0.0, worst_energy = 0.0;
    for (; outer < opts.max_outer; ++outer) {
      ControlUpdate cu = optimal_control(pb, A, es, opts.solver);
      worst_v = std::max(worst_v, cu.residual);
      CoreResult core = descent_core(ctx, A, opts, &cu.v, es, 1);
      worst_energy = std::max(worst_energy, core.worst_energy_equality);
      IterationRecord row = core.trace.front();
      row.iteration = outer;
      step.report.trace.push_back(row);
      grad_norm = core.grad_norm;
      infeasible += core.infeasible;
      A = std::move(core.coeff);
      if (core.trace.front().grad_norm <= opts.tol) {
        converged = true;
        break;
      }
      if (core.stalled) {
        step.report.warnings.push_back("line search failed to find a decrease; stopping");
        break;
      }
    }
    ControlUpdate cu = optimal_control(pb, A, es, opts.solver);
    SolveReport rep = cost_terms(ctx, A, cu.y, &cu.v, es);
    rep.trace = std::move(step.report.trace);
    rep.warnings = std::move(step.report.warnings);
    for (auto& w : perf.report.warnings) rep.warnings.push_back(w);
    rep.iterations = outer;
    rep.converged = converged;
    rep.grad_norm = grad_norm;
    // Worst case over every control update and state solve at this eps.
    rep.constraint_residuals["v_update_residual"] = std::max(worst_v, cu.residual);
    rep.constraint_residuals["infeasible_iterates"] = infeasible;
    rep.constraint_residuals["energy_equality_max"] =
        std::max(worst_energy, rep.constraint_residuals["energy_equality"]);

    const double ratio = perf.report.hole_area / es;
    if (ratio > prev_ratio)
      rep.warnings.push_back("eps^-sigma * hole area is not decreasing along the schedule");
    prev_ratio = ratio;

    step.coeff = std::move(A);
    step.y = std::move(cu.y);
    step.control = std::move(cu.v);
    step.report = std::move(rep);
    step.perforation = perf.report;
    step.mesh = std::move(perf.mesh);
    out.push_back(std::move(step));
  }
  return out;
}

}  // namespace skewopt
