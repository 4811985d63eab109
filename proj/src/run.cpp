#include "skewopt/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <json.hpp>

#include "skewopt/ball_example.hpp"
#include "skewopt/diagnostics.hpp"
#include "skewopt/instances.hpp"
#include "skewopt/perforation.hpp"

namespace skewopt {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw NumericalError("write failed for '" + tmp + "'");
  }
  fs::rename(tmp, path);
}

std::string write_error_summary(const std::string& output_dir, const std::string& command, int exit_code,
                                const std::string& error) {
  const json summary = {{"command", command}, {"status", "error"}, {"exit_code", exit_code}, {"error", error}};
  fs::create_directories(output_dir);
  write_atomic((fs::path(output_dir) / "summary.json").string(), summary.dump() + "\n");
  return summary.dump();
}

namespace {

struct Output {
  json results = json::object();
  json warnings = json::array();
  std::string csv_name;
  std::string csv;
  long rows = 0;
  std::vector<std::pair<std::string, std::string>> extra_files;
};

class Csv {
 public:
  explicit Csv(const char* header) { ss_ << header << '\n'; }
  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((ss_ << (first ? "" : ",") << cell(v), first = false), ...);
    ss_ << '\n';
    ++rows_;
  }
  void comment(const std::string& line) { ss_ << "# " << line << '\n'; }
  std::string str() const { return ss_.str(); }
  long rows() const { return rows_; }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  std::ostringstream ss_;
  long rows_ = 0;
};

SimplicialMesh build_mesh(const MeshSpec& m) {
  if (!m.file.empty()) return SimplicialMesh::read_file(m.file);
  Point lo{0, 0, 0}, hi{0, 0, 0};
  for (int k = 0; k < m.dim; ++k) {
    lo[k] = m.lower[k];
    hi[k] = m.upper[k];
  }
  return build_box_mesh(m.dim, lo, hi, m.n_per_axis);
}

DescentOptions descent_options(const Tolerances& t) {
  DescentOptions o;
  o.max_iter = t.max_iter;
  o.tol = t.tol;
  o.max_outer = t.max_outer;
  o.solver.rtol = t.linear_rtol;
  o.solver.max_iter = t.linear_max_iter;
  return o;
}

RegressionInstance make_instance(const RunConfig& c) {
  const auto& f = c.field_spec;
  if (!c.mesh_spec.file.empty()) throw ValidationError("mesh_spec.file: named instances build their own box mesh");
  if (f.name == "ball_astar") {
    if (c.mesh_spec.dim != 3) throw ValidationError("mesh_spec.dim: ball_astar needs dim 3");
    return ball_instance(c.mesh_spec.n_per_axis, f.zeta, Profile::Smooth);
  }
  if (f.name != "regression_bounded" && f.name != "regression_singular")
    throw ValidationError("field_spec.name: '" + f.name + "' is not an optimization instance");
  if (c.mesh_spec.dim != 2) throw ValidationError("mesh_spec.dim: regression instances need dim 2");
  RegressionInstance inst = regression_instance_2d(
      c.mesh_spec.n_per_axis, f.name == "regression_bounded" ? EnvelopeKind::Bounded : EnvelopeKind::Singular,
      f.envelope_scale);
  inst.problem.set.alpha = c.set_spec.alpha;
  inst.problem.set.beta = c.set_spec.beta;
  inst.problem.set.tv_budget = c.set_spec.tv_budget;
  inst.problem.set.skew_family_radius = c.set_spec.radius;
  inst.init = project_admissible(inst.problem.mesh, inst.init, inst.problem.set);
  return inst;
}

json set_json(const AdmissibleSet& s) {
  return {{"alpha", s.alpha}, {"beta", s.beta}, {"tv_budget", s.tv_budget}, {"radius", s.skew_family_radius}};
}

json residuals_json(const SolveReport& r) {
  json j = json::object();
  for (const auto& [k, v] : r.constraint_residuals) j[k] = v;
  return j;
}

void run_solve(const RunConfig& c, Output& out) {
  const SimplicialMesh mesh = build_mesh(c.mesh_spec);
  MatrixField coeff = c.field_spec.name == "file" ? read_field_file(c.field_spec.file, mesh)
                      : c.field_spec.name == "identity"
                          ? MatrixField::identity(mesh)
                          : throw ValidationError("field_spec.name: solve takes 'identity' or 'file'");

  // Manufactured solution prod_k sin(pi (x_k - l_k) / L_k) on the bounding box.
  Point lo{0, 0, 0}, len{1, 1, 1};
  for (int k = 0; k < mesh.dim(); ++k) {
    double a = INFINITY, b = -INFINITY;
    for (const auto& v : mesh.vertices()) {
      a = std::min(a, v[k]);
      b = std::max(b, v[k]);
    }
    lo[k] = a;
    len[k] = b - a;
  }
  const int dim = mesh.dim();
  auto exact = [=](const Point& x) {
    double u = 1.0;
    for (int k = 0; k < dim; ++k) u *= std::sin(std::numbers::pi * (x[k] - lo[k]) / len[k]);
    return u;
  };
  double lap = 0.0;
  for (int k = 0; k < dim; ++k) lap += std::pow(std::numbers::pi / len[k], 2);
  const bool manufactured = c.field_spec.source == "manufactured";
  const SourceDescriptor f = manufactured ? load_from_density(mesh, [&](const Point& x) { return lap * exact(x); })
                                          : SourceDescriptor{CellDensity{std::vector<double>(mesh.num_cells(), 1.0)}};

  SolverOptions so;
  so.rtol = c.tolerances.linear_rtol;
  so.max_iter = c.tolerances.linear_max_iter;
  double residual = 0.0;
  const StateField y = solve(assemble_state(mesh, coeff, f), so, &residual);
  const DefectEstimate d = energy_defect(mesh, coeff, y, f);

  Csv csv(kStateHeader);
  for (std::size_t v = 0; v < mesh.num_vertices(); ++v) {
    const Point& x = mesh.vertex(v);
    csv.row(v, x[0], x[1], x[2], y.values[static_cast<Eigen::Index>(v)]);
  }
  out.csv_name = "state.csv";
  out.csv = csv.str();
  out.rows = csv.rows();
  out.results = {{"n_vertices", mesh.num_vertices()},
                 {"n_cells", mesh.num_cells()},
                 {"linear_residual", residual},
                 {"rhs_pairing", d.rhs_pairing},
                 {"sym_energy", d.sym_energy},
                 {"energy_defect", d.defect},
                 {"energy_equality", std::abs(d.defect) / (1.0 + std::abs(d.rhs_pairing))}};
  // The manufactured oracle is exact only for the identity coefficient.
  if (manufactured && c.field_spec.name == "identity") out.results["l2_error"] = l2_error(mesh, y.values, exact);
}

void run_optimize(const RunConfig& c, Output& out) {
  const RegressionInstance inst = make_instance(c);
  const DescentResult r = projected_descent(inst.problem, inst.init, descent_options(c.tolerances));
  Csv csv(kTraceHeader);
  for (const auto& t : r.report.trace)
    csv.row(t.iteration, t.cost, t.tracking, t.energy, t.penalty, t.defect, t.duality_product, t.grad_norm, t.step);
  out.csv_name = "trace.csv";
  out.csv = csv.str();
  out.rows = csv.rows();
  std::ostringstream field;
  write_field(field, r.coeff);
  out.extra_files.emplace_back("coefficient.txt", field.str());
  const auto& rep = r.report;
  out.results = {{"set", set_json(inst.problem.set)},
                 {"initial_cost", rep.trace.empty() ? rep.cost : rep.trace.front().cost},
                 {"cost", rep.cost},
                 {"tracking", rep.tracking_term},
                 {"energy", rep.energy_term},
                 {"energy_defect", rep.energy_defect},
                 {"grad_norm", rep.grad_norm},
                 {"iterations", rep.iterations},
                 {"converged", rep.converged},
                 {"constraint_residuals", residuals_json(rep)}};
  for (const auto& w : rep.warnings) out.warnings.push_back(w);
}

void run_sweep(const RunConfig& c, Output& out, bool perforate) {
  const RegressionInstance inst = make_instance(c);
  RegularizationSchedule sched;
  sched.epsilons = c.schedule_spec.epsilons;
  sched.sigma = c.schedule_spec.sigma.value_or(1.0);
  sched.mode = perforate ? RegularizationMode::Perforate : RegularizationMode::TruncateSkew;
  const DescentOptions opts = descent_options(c.tolerances);
  const auto steps = perforate ? perforation_sweep(inst.problem, inst.init, sched, opts)
                               : truncation_sweep(inst.problem, inst.init, sched, opts);

  Csv csv(kSweepHeader);
  std::vector<std::pair<double, double>> trace;
  json per_eps = json::array();
  for (const auto& s : steps) {
    const auto& r = s.report;
    csv.row(s.epsilon, r.cost, r.tracking_term, r.energy_term, r.penalty_term, r.energy_defect, r.duality_product,
            r.grad_norm, r.iterations);
    trace.emplace_back(s.epsilon, r.energy_defect);
    json e = {{"epsilon", s.epsilon}, {"constraint_residuals", residuals_json(r)}};
    if (s.perforation) {
      e["removed_volume"] = s.perforation->removed_volume;
      e["hole_area"] = s.perforation->hole_area;
    }
    per_eps.push_back(e);
    for (const auto& w : r.warnings) out.warnings.push_back("eps " + format_number(s.epsilon) + ": " + w);
  }
  const auto& last = steps.back().report;
  const double threshold = default_threshold(last.energy_term + last.energy_defect);
  const Classification cls = classify_pair(trace, threshold);
  csv.comment("classification verdict=" + std::string(to_string(cls.verdict)) +
              " defect_limit_estimate=" + format_number(cls.defect_limit_estimate) +
              " fit_residual=" + format_number(cls.fit_residual) + " threshold=" + format_number(cls.threshold));
  out.csv_name = "sweep.csv";
  out.csv = csv.str();
  out.rows = csv.rows();
  out.results = {{"set", set_json(inst.problem.set)},
                 {"sigma", sched.sigma},
                 {"per_epsilon", per_eps},
                 {"classification",
                  {{"verdict", to_string(cls.verdict)},
                   {"defect_limit_estimate", cls.defect_limit_estimate},
                   {"fit_residual", cls.fit_residual},
                   {"threshold", cls.threshold}}}};
}

void run_validate_example(const RunConfig& c, Output& out) {
  const double zeta = c.field_spec.zeta;
  QuadratureGrid grid;
  grid.n_rho = grid.n_phi = grid.n_psi = c.field_spec.quad_points;
  std::vector<double> eps = c.schedule_spec.epsilons;
  if (eps.empty()) eps = {0.2, 0.1, 0.05};
  for (double e : eps)
    if (!(e < 1.0)) throw ValidationError("schedule_spec.epsilons: annulus radii must lie in (0, 1)");

  const BallExample ex(zeta);
  Csv csv(kExampleHeader);
  std::vector<std::pair<double, double>> trace;
  for (double e : eps) {
    const double s = defect_on_annulus(ex, e, grid);
    csv.row(e, s, defect_on_annulus_volume(ex, e, grid));
    trace.emplace_back(e, s);
  }
  const Classification cls = classify_pair(trace, default_threshold(0.0));
  const OrthogonalityResult orth = orthogonality_check(grid, 1.0, ex);

  // Column divergence of A* against central differences at random annulus points.
  std::mt19937_64 rng(c.seeds);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  double div_err = 0.0;
  for (int k = 0; k < 50;) {
    const Point x{unit(rng), unit(rng), unit(rng)};
    const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    if (r <= 0.2 || r >= 0.9) continue;
    const SmallVec fd = matrix_divergence_fd(&BallExample::envelope, x, 3, 1e-6, DivConvention::Columns);
    const Eigen::Vector3d exact = BallExample::divergence(x);
    div_err = std::max(div_err, (fd - exact).norm() / exact.norm());
    ++k;
  }

  out.csv_name = "example.csv";
  out.csv = csv.str();
  out.rows = csv.rows();
  out.results = {{"zeta", zeta},
                 {"surface_identity", surface_identity(zeta, grid)},
                 {"defect_extrapolation", cls.defect_limit_estimate},
                 {"defect_fit_residual", cls.fit_residual},
                 {"orthogonality_max_abs", orth.max_abs},
                 {"orthogonality_max_rel", orth.max_rel},
                 {"orthogonality_max_abs_double", orth.max_abs_double},
                 {"divergence_max_rel_error", div_err}};
}

void run_check_ftype(const RunConfig& c, Output& out) {
  const SimplicialMesh mesh = build_mesh(c.mesh_spec);
  const auto& name = c.field_spec.name;
  MatrixField env;
  if (name == "ball_astar") {
    if (mesh.dim() != 3) throw ValidationError("mesh_spec.dim: ball_astar needs dim 3");
    env = sample_field(mesh, [](const Point& x) { return BallExample::envelope(x); });
  } else if (name == "regression_singular") {
    env = singular_envelope_2d(mesh, c.field_spec.envelope_scale);
  } else if (name == "regression_bounded") {
    env = constant_envelope_2d(mesh, 0.5);
  } else {
    throw ValidationError("field_spec.name: check-ftype needs an envelope field");
  }
  std::vector<PerforationReport> family;
  for (double e : c.schedule_spec.epsilons) {
    family.push_back(perforate(mesh, env, e).report);
    for (const auto& w : family.back().warnings) out.warnings.push_back(w);
  }
  const FTypeVerdict v = check_f_type(family);
  Csv csv(kFTypeHeader);
  for (std::size_t k = 0; k < family.size(); ++k)
    csv.row(family[k].epsilon, family[k].removed_volume, family[k].hole_area, family[k].n_removed_cells,
            v.table[k].ratio);
  out.csv_name = "ftype.csv";
  out.csv = csv.str();
  out.rows = csv.rows();
  out.results = {{"volume_exponent", v.volume_exponent}, {"area_exponent", v.area_exponent},
                 {"ratio_spread", v.ratio_spread},       {"volume_ok", v.volume_ok},
                 {"area_ok", v.area_ok},                 {"ratio_ok", v.ratio_ok},
                 {"verdict", v.verdict}};
}

}  // namespace

RunArtifacts run(const RunConfig& config) {
  RunArtifacts art;
  Output out;
  json summary;
  summary["command"] = to_string(config.command);
  try {
    fs::create_directories(config.output_dir);
  } catch (const fs::filesystem_error& e) {
    art.exit_code = 2;
    art.error = std::string("output_dir: ") + e.what();
    summary["status"] = "error";
    summary["exit_code"] = art.exit_code;
    summary["error"] = art.error;
    art.summary = summary.dump();
    return art;
  }
  try {
    config.validate();
    switch (config.command) {
      case Command::Solve: run_solve(config, out); break;
      case Command::Optimize: run_optimize(config, out); break;
      case Command::TruncationSweep: run_sweep(config, out, false); break;
      case Command::PerforationSweep: run_sweep(config, out, true); break;
      case Command::ValidateExample: run_validate_example(config, out); break;
      case Command::CheckFType: run_check_ftype(config, out); break;
    }
    const fs::path dir(config.output_dir);
    art.report_csv = (dir / out.csv_name).string();
    write_atomic(art.report_csv, out.csv);
    for (const auto& [name, content] : out.extra_files) {
      art.fields_out.push_back((dir / name).string());
      write_atomic(art.fields_out.back(), content);
    }
  } catch (const ValidationError& e) {
    art.exit_code = 2;
    art.error = e.what();
  } catch (const NumericalError& e) {
    art.exit_code = 3;
    art.error = e.what();
  } catch (const std::exception& e) {
    art.exit_code = 3;
    art.error = e.what();
  }

  summary["status"] = art.exit_code == 0 ? "ok" : "error";
  summary["exit_code"] = art.exit_code;
  if (art.exit_code != 0) summary["error"] = art.error;
  if (!art.report_csv.empty()) {
    summary["report_csv"] = fs::path(art.report_csv).filename().string();
    summary["rows"] = out.rows;
  }
  summary["results"] = out.results;
  summary["warnings"] = out.warnings;
  summary["config"] = json::parse(serialize_config(config));
  art.summary = summary.dump();
  try {
    write_atomic((fs::path(config.output_dir) / "summary.json").string(), art.summary + "\n");
  } catch (const std::exception& e) {
    if (art.exit_code == 0) {
      art.exit_code = 2;
      art.error = e.what();
    }
  }
  return art;
}

}  // namespace skewopt
