#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "skewopt/admissible.hpp"
#include "skewopt/assembly.hpp"
#include "skewopt/perforation.hpp"

namespace skewopt {

/// Tracking-plus-energy control problem over the admissible set.
struct OcpProblem {
  SimplicialMesh mesh;
  SourceDescriptor f;
  StateField y_d;
  AdmissibleSet set;
  double lambda = 1.0;
  /// Rebuilds the source on a perforated submesh. Without it a cellwise
  /// density is restricted to the surviving cells; nodal loads are rejected.
  std::function<SourceDescriptor(const SimplicialMesh&)> source_on;

  void validate() const;
};

enum class RegularizationMode { TruncateSkew, Perforate };

struct RegularizationSchedule {
  std::vector<double> epsilons;  ///< strictly decreasing
  double sigma = 1.0;
  RegularizationMode mode = RegularizationMode::TruncateSkew;
  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double cost = 0.0;
  double tracking = 0.0;
  double energy = 0.0;
  double penalty = 0.0;
  double defect = 0.0;
  double duality_product = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
};

struct SolveReport {
  double cost = 0.0;
  double tracking_term = 0.0;
  double energy_term = 0.0;
  double penalty_term = 0.0;
  double energy_defect = 0.0;
  double duality_product = 0.0;
  double grad_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  /// energy_equality: relative misfit of y^T K_sym y = <f, y> + <v, y> for
  /// the reported state; energy_equality_max: the same, worst over every
  /// state solve of the run; infeasible_iterates; v_update_residual
  /// (perforation only, worst over all control updates).
  std::map<std::string, double> constraint_residuals;
  std::vector<IterationRecord> trace;
  std::vector<std::string> warnings;
};

struct DescentOptions {
  int max_iter = 500;
  double tol = 1e-6;
  double initial_step = 1.0;
  double shrink = 0.5;
  double sufficient_decrease = 1e-4;
  int max_backtracks = 30;
  SolverOptions solver;
  /// Inner alternating sweeps per epsilon in the perforation scheme.
  int max_outer = 50;
};

/// Cost terms for a given state: tracking ||y - y_d||^2 with the consistent
/// mass matrix, energy y^T K_sym y and, with a boundary control, the penalty
/// ||v||^2 / eps^sigma. `epsilon_sigma` is the value eps^sigma.
SolveReport evaluate_cost(const OcpProblem& problem, const MatrixField& coeff, const StateField& y,
                          const BoundaryFunctional* v = nullptr, double epsilon_sigma = 1.0);

/// Per-cell derivative of the reduced cost: the Frobenius pairing of the
/// result with an increment dA, summed over cells, is the directional
/// derivative. Symmetric part |c| (lambda gy gy^T + sym(gy gp^T)), skew part
/// |c| (gp gy^T - gy gp^T) / 2.
MatrixField control_gradient(const OcpProblem& problem, const MatrixField& coeff, const StateField& y,
                             const StateField& p);

struct DescentResult {
  MatrixField coeff;
  StateField y;
  SolveReport report;
};

/// Armijo-backtracked projected gradient over the admissible set. The
/// descent direction is the L2 gradient (cell density). Every accepted
/// iterate is feasible and the cost trace is non-increasing.
DescentResult projected_descent(const OcpProblem& problem, const MatrixField& init, const DescentOptions& opts = {});

struct SweepStep {
  double epsilon = 0.0;
  MatrixField coeff;
  StateField y;
  SolveReport report;
  // Perforation scheme only.
  std::optional<SimplicialMesh> mesh;
  std::optional<BoundaryFunctional> control;
  std::optional<PerforationReport> perforation;
};

/// Truncated-envelope sweep: for each epsilon the dominance envelope is
/// T_eps(A*), and the descent is warm-started from the previous optimum.
/// A step whose truncated envelope equals the previous one is the same
/// problem and reuses that result.
std::vector<SweepStep> truncation_sweep(const OcpProblem& problem, const MatrixField& init,
                                        const RegularizationSchedule& schedule, const DescentOptions& opts = {},
                                        bool warm_start = true);

/// Perforation sweep with fictitious Neumann controls on the hole boundary.
/// Per epsilon it alternates an exact minimization over the control with a
/// projected-gradient step on the coefficient; the adjoint carries zero flux
/// on holes. The control satisfies r = (eps^sigma / 2) H gamma(p) at exit.
std::vector<SweepStep> perforation_sweep(const OcpProblem& problem, const MatrixField& init,
                                         const RegularizationSchedule& schedule, const DescentOptions& opts = {});

/// Restriction of parent-mesh data to a submesh via its parent maps.
MatrixField restrict_field(const MatrixField& field, const SimplicialMesh& sub);
StateField restrict_state(const StateField& state, const SimplicialMesh& sub);
OcpProblem restrict_problem(const OcpProblem& problem, const SimplicialMesh& sub);

/// Minimizer of the cost over the boundary control for a fixed coefficient,
/// with the achieved optimality residual. `epsilon_sigma` is eps^sigma.
struct ControlUpdate {
  BoundaryFunctional v;
  StateField y;
  double residual = 0.0;  ///< relative misfit of r = (eps^sigma / 2) H gamma(p)
};
ControlUpdate optimal_control(const OcpProblem& problem, const MatrixField& coeff, double epsilon_sigma,
                              const SolverOptions& solver = {});

}  // namespace skewopt
