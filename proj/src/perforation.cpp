#include "skewopt/perforation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace skewopt {

std::vector<char> perforation_keep_mask(const MatrixField& envelope, double epsilon) {
  if (!(epsilon > 0)) throw ValidationError("perforate: epsilon must be positive");
  const double level = 1.0 / epsilon;
  const int nk = MatrixField::skew_count(envelope.dim());
  const auto s = envelope.skew_data();
  const auto n = static_cast<std::ptrdiff_t>(envelope.size());
  std::vector<char> keep(envelope.size(), 1);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n; ++c) {
    double m = 0.0;
    for (int k = 0; k < nk; ++k) m = std::max(m, std::abs(s[c * nk + k]));
    keep[c] = m < level ? 1 : 0;
  }
  return keep;
}

std::vector<char> perforation_keep_mask_serial(const MatrixField& envelope, double epsilon) {
  if (!(epsilon > 0)) throw ValidationError("perforate: epsilon must be positive");
  const auto norms = skew_max_norm(envelope);
  std::vector<char> keep(norms.size());
  for (std::size_t c = 0; c < norms.size(); ++c) keep[c] = norms[c] < 1.0 / epsilon ? 1 : 0;
  return keep;
}

PerforatedMesh perforate(const SimplicialMesh& mesh, const MatrixField& envelope, double epsilon) {
  require_on_mesh(envelope, mesh, "perforate");
  std::vector<char> keep = perforation_keep_mask(envelope, epsilon);
  const std::size_t nc = mesh.num_cells();
  PerforationReport report;
  report.epsilon = epsilon;

  // Components of the kept cell graph.
  std::vector<int> parent(nc);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& f : mesh.interior_facets()) {
    if (keep[f.cell_a] && keep[f.cell_b]) {
      const int a = find(f.cell_a), b = find(f.cell_b);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  std::vector<char> touches_outer(nc, 0);
  for (const auto& f : mesh.boundary_facets())
    if (f.tag == FacetTag::Outer && keep[f.cell]) touches_outer[find(f.cell)] = 1;
  std::vector<double> comp_volume(nc, 0.0);
  for (std::size_t c = 0; c < nc; ++c)
    if (keep[c]) comp_volume[find(static_cast<int>(c))] += mesh.cell_volumes()[c];
  int best = -1;
  int n_components = 0;
  for (std::size_t c = 0; c < nc; ++c) {
    if (!keep[c] || find(static_cast<int>(c)) != static_cast<int>(c)) continue;
    ++n_components;
    if (touches_outer[c] && (best < 0 || comp_volume[c] > comp_volume[best])) best = static_cast<int>(c);
  }
  if (best < 0) throw NumericalError("perforate: no cell survives at epsilon " + std::to_string(epsilon));
  if (n_components > 1) {
    int dropped = 0;
    for (std::size_t c = 0; c < nc; ++c) {
      if (keep[c] && find(static_cast<int>(c)) != best) {
        keep[c] = 0;
        ++dropped;
      }
    }
    report.warnings.push_back("perforate: discarded " + std::to_string(n_components - 1) +
                              " disconnected component(s) with " + std::to_string(dropped) + " cells");
  }

  std::vector<int> vertex_map(mesh.num_vertices(), -1);
  std::vector<int> parent_cells;
  for (std::size_t c = 0; c < nc; ++c) {
    if (keep[c]) {
      parent_cells.push_back(static_cast<int>(c));
      for (int k = 0; k <= mesh.dim(); ++k) vertex_map[mesh.cell(c)[k]] = 0;
    } else {
      report.removed_volume += mesh.cell_volumes()[c];
      ++report.n_removed_cells;
    }
  }
  std::vector<Point> verts;
  std::vector<int> parent_vertices;
  for (std::size_t v = 0; v < vertex_map.size(); ++v) {
    if (vertex_map[v] < 0) continue;
    vertex_map[v] = static_cast<int>(verts.size());
    verts.push_back(mesh.vertex(v));
    parent_vertices.push_back(static_cast<int>(v));
  }
  std::vector<Cell> cells;
  cells.reserve(parent_cells.size());
  for (int pc : parent_cells) {
    Cell c = mesh.cell(pc);
    for (int k = 0; k <= mesh.dim(); ++k) c[k] = vertex_map[c[k]];
    cells.push_back(c);
  }
  auto remap = [&](const std::array<int, 3>& v) {
    std::array<int, 3> out{-1, -1, -1};
    for (int k = 0; k < mesh.dim(); ++k) out[k] = vertex_map[v[k]];
    std::sort(out.begin(), out.begin() + mesh.dim());
    return out;
  };
  std::vector<BoundaryFacet> tagged;
  for (const auto& f : mesh.boundary_facets()) {
    if (!keep[f.cell]) continue;
    BoundaryFacet b;
    b.vertices = remap(f.vertices);
    b.tag = f.tag;
    tagged.push_back(b);
  }
  for (const auto& f : mesh.interior_facets()) {
    if (keep[f.cell_a] == keep[f.cell_b]) continue;
    BoundaryFacet b;
    b.vertices = remap(f.vertices);
    b.tag = FacetTag::Hole;
    tagged.push_back(b);
  }

  PerforatedMesh out{SimplicialMesh::with_tags(mesh.dim(), std::move(verts), std::move(cells), tagged),
                     std::move(report)};
  out.mesh.set_parent_maps(std::move(parent_cells), std::move(parent_vertices));
  out.report.hole_area = out.mesh.boundary_area(FacetTag::Hole);
  return out;
}

double decay_exponent(const std::vector<double>& eps, const std::vector<double>& values) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (values[k] > 0) {
      lx.push_back(std::log(eps[k]));
      ly.push_back(std::log(values[k]));
    }
  }
  if (lx.empty()) return std::numeric_limits<double>::infinity();
  if (lx.size() == 1) {
    // A single nonzero sample: decays faster than any power only if it sits
    // at the largest epsilon (every smaller epsilon removed nothing).
    return values.front() > 0 ? std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::quiet_NaN();
  }
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxy / sxx;
}

FTypeVerdict check_f_type(const std::vector<PerforationReport>& family, const FTypeOptions& opts) {
  if (family.size() < 3) throw ValidationError("check_f_type: need at least 3 epsilon samples");
  for (std::size_t k = 1; k < family.size(); ++k)
    if (!(family[k].epsilon < family[k - 1].epsilon))
      throw ValidationError("check_f_type: epsilon values must be strictly decreasing");

  FTypeVerdict v;
  std::vector<double> eps, vol, area;
  double rmin = std::numeric_limits<double>::infinity(), rmax = 0.0;
  for (const auto& r : family) {
    eps.push_back(r.epsilon);
    vol.push_back(r.removed_volume);
    area.push_back(r.hole_area);
    const double ratio = r.removed_volume > 0 ? r.epsilon * r.hole_area / r.removed_volume
                                              : std::numeric_limits<double>::quiet_NaN();
    if (r.removed_volume > 0) {
      rmin = std::min(rmin, ratio);
      rmax = std::max(rmax, ratio);
    }
    v.table.push_back({r.epsilon, r.removed_volume, r.hole_area, ratio});
  }
  v.volume_exponent = decay_exponent(eps, vol);
  v.area_exponent = decay_exponent(eps, area);
  v.ratio_spread = rmax > 0 ? rmax / rmin : 1.0;
  v.volume_ok = v.volume_exponent >= 2.0 - opts.exponent_tolerance;
  v.area_ok = v.area_exponent >= 1.0 - opts.exponent_tolerance;
  v.ratio_ok = v.ratio_spread <= opts.ratio_factor;
  v.verdict = v.volume_ok && v.area_ok && v.ratio_ok;
  return v;
}

}  // namespace skewopt
