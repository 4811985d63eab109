#include "skewopt/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include <Eigen/LU>

namespace skewopt {

namespace {

std::atomic<std::uint64_t> next_mesh_id{1};

using FacetKey = std::array<int, 3>;

FacetKey facet_key(const Cell& cell, int dim, int skip) {
  FacetKey key{-1, -1, -1};
  int n = 0;
  for (int k = 0; k <= dim; ++k) {
    if (k != skip) key[n++] = cell[k];
  }
  std::sort(key.begin(), key.begin() + dim);
  return key;
}

double facet_measure(int dim, const std::vector<Point>& v, const FacetKey& key) {
  const Point& a = v[key[0]];
  const Point& b = v[key[1]];
  if (dim == 2) {
    return std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  const Point& c = v[key[2]];
  const double u[3] = {b[0] - a[0], b[1] - a[1], b[2] - a[2]};
  const double w[3] = {c[0] - a[0], c[1] - a[1], c[2] - a[2]};
  const double cx = u[1] * w[2] - u[2] * w[1];
  const double cy = u[2] * w[0] - u[0] * w[2];
  const double cz = u[0] * w[1] - u[1] * w[0];
  return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

double simplex_signed_volume(int dim, const Point* pts) {
  if (dim == 2) {
    const double ax = pts[1][0] - pts[0][0], ay = pts[1][1] - pts[0][1];
    const double bx = pts[2][0] - pts[0][0], by = pts[2][1] - pts[0][1];
    return 0.5 * (ax * by - ay * bx);
  }
  double m[3][3];
  for (int k = 0; k < 3; ++k)
    for (int d = 0; d < 3; ++d) m[k][d] = pts[k + 1][d] - pts[0][d];
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  return det / 6.0;
}

SimplicialMesh::SimplicialMesh(int dim, std::vector<Point> vertices, std::vector<Cell> cells,
                               const Tagger& tagger)
    : dim_(dim), vertices_(std::move(vertices)), cells_(std::move(cells)) {
  finalize(tagger);
}

SimplicialMesh SimplicialMesh::with_tags(int dim, std::vector<Point> vertices,
                                         std::vector<Cell> cells,
                                         const std::vector<BoundaryFacet>& tagged) {
  std::vector<std::pair<FacetKey, FacetTag>> lookup;
  lookup.reserve(tagged.size());
  for (const auto& f : tagged) lookup.emplace_back(f.vertices, f.tag);
  std::sort(lookup.begin(), lookup.end());
  std::size_t missing = 0;
  SimplicialMesh mesh;
  mesh.dim_ = dim;
  mesh.vertices_ = std::move(vertices);
  mesh.cells_ = std::move(cells);
  mesh.finalize([&](const BoundaryFacet& f) {
    auto it = std::lower_bound(lookup.begin(), lookup.end(), std::make_pair(f.vertices, FacetTag::Outer));
    if (it != lookup.end() && it->first == f.vertices) return it->second;
    ++missing;
    return FacetTag::Outer;
  });
  if (missing != 0 || lookup.size() != mesh.boundary_facets_.size()) {
    throw ValidationError("mesh: tagged facet list does not match the boundary (" +
                          std::to_string(lookup.size()) + " tagged, " +
                          std::to_string(mesh.boundary_facets_.size()) + " boundary facets)");
  }
  return mesh;
}

void SimplicialMesh::finalize(const Tagger& tagger) {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("mesh: dimension must be 2 or 3");
  id_ = next_mesh_id.fetch_add(1);
  const auto nv = static_cast<int>(vertices_.size());
  const int nloc = dim_ + 1;

  cell_volumes_.resize(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    Cell& cell = cells_[c];
    Point pts[4];
    for (int k = 0; k < nloc; ++k) {
      if (cell[k] < 0 || cell[k] >= nv) throw ValidationError("mesh: cell vertex index out of range");
      pts[k] = vertices_[cell[k]];
    }
    if (dim_ == 2) cell[3] = -1;
    double vol = simplex_signed_volume(dim_, pts);
    if (vol < 0) {
      std::swap(cell[0], cell[1]);
      vol = -vol;
    }
    if (!(vol > 0)) throw ValidationError("mesh: degenerate cell " + std::to_string(c));
    cell_volumes_[c] = vol;
  }

  struct Entry {
    FacetKey key;
    int cell;
  };
  std::vector<Entry> entries;
  entries.reserve(cells_.size() * nloc);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    for (int k = 0; k < nloc; ++k) entries.push_back({facet_key(cells_[c], dim_, k), static_cast<int>(c)});
  }
  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    return a.key != b.key ? a.key < b.key : a.cell < b.cell;
  });

  boundary_facets_.clear();
  interior_facets_.clear();
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].key == entries[i].key) ++j;
    const double area = facet_measure(dim_, vertices_, entries[i].key);
    if (j - i == 1) {
      BoundaryFacet f;
      f.vertices = entries[i].key;
      f.cell = entries[i].cell;
      f.area = area;
      boundary_facets_.push_back(f);
    } else if (j - i == 2) {
      interior_facets_.push_back({entries[i].key, entries[i].cell, entries[i + 1].cell, area});
    } else {
      throw ValidationError("mesh: non-manifold facet shared by more than two cells");
    }
    i = j;
  }
  for (auto& f : boundary_facets_) f.tag = tagger ? tagger(f) : FacetTag::Outer;
}

Point SimplicialMesh::centroid(std::size_t c) const {
  Point p{0, 0, 0};
  for (int k = 0; k <= dim_; ++k)
    for (int d = 0; d < 3; ++d) p[d] += vertices_[cells_[c][k]][d];
  for (double& x : p) x /= (dim_ + 1);
  return p;
}

double SimplicialMesh::total_volume() const {
  return std::accumulate(cell_volumes_.begin(), cell_volumes_.end(), 0.0);
}

double SimplicialMesh::boundary_area(FacetTag tag) const {
  double a = 0.0;
  for (const auto& f : boundary_facets_)
    if (f.tag == tag) a += f.area;
  return a;
}

std::vector<int> SimplicialMesh::tagged_vertices(FacetTag tag) const {
  std::vector<char> flag(vertices_.size(), 0);
  for (const auto& f : boundary_facets_) {
    if (f.tag != tag) continue;
    for (int k = 0; k < dim_; ++k) flag[f.vertices[k]] = 1;
  }
  std::vector<int> out;
  for (std::size_t v = 0; v < flag.size(); ++v)
    if (flag[v]) out.push_back(static_cast<int>(v));
  return out;
}

std::vector<char> SimplicialMesh::outer_mask() const {
  std::vector<char> mask(vertices_.size(), 0);
  for (const auto& f : boundary_facets_) {
    if (f.tag != FacetTag::Outer) continue;
    for (int k = 0; k < dim_; ++k) mask[f.vertices[k]] = 1;
  }
  return mask;
}

GradMat SimplicialMesh::basis_gradients(std::size_t c) const {
  const Cell& cell = cells_[c];
  SmallMat jac(dim_, dim_);
  const Point& x0 = vertices_[cell[0]];
  for (int k = 1; k <= dim_; ++k)
    for (int d = 0; d < dim_; ++d) jac(d, k - 1) = vertices_[cell[k]][d] - x0[d];
  const SmallMat inv = jac.inverse();
  GradMat grads(dim_ + 1, dim_);
  for (int k = 1; k <= dim_; ++k) grads.row(k) = inv.row(k - 1);
  grads.row(0) = -grads.bottomRows(dim_).colwise().sum();
  return grads;
}

int SimplicialMesh::connected_components(std::vector<int>* labels) const {
  UnionFind uf(cells_.size());
  for (const auto& f : interior_facets_) uf.unite(f.cell_a, f.cell_b);
  std::vector<int> root_label(cells_.size(), -1);
  int count = 0;
  if (labels) labels->assign(cells_.size(), -1);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const int r = uf.find(static_cast<int>(c));
    if (root_label[r] < 0) root_label[r] = count++;
    if (labels) (*labels)[c] = root_label[r];
  }
  return count;
}

double SimplicialMesh::hole_outer_separation() const {
  const auto holes = tagged_vertices(FacetTag::Hole);
  const auto outer = tagged_vertices(FacetTag::Outer);
  double best = std::numeric_limits<double>::infinity();
  for (int h : holes) {
    for (int o : outer) {
      double d2 = 0;
      for (int d = 0; d < dim_; ++d) {
        const double t = vertices_[h][d] - vertices_[o][d];
        d2 += t * t;
      }
      best = std::min(best, std::sqrt(d2));
    }
  }
  return best;
}

void SimplicialMesh::set_parent_maps(std::vector<int> cells, std::vector<int> vertices) {
  if (cells.size() != cells_.size() || vertices.size() != vertices_.size())
    throw ValidationError("mesh: parent map sizes do not match");
  parent_cells_ = std::move(cells);
  parent_vertices_ = std::move(vertices);
}

void SimplicialMesh::write(std::ostream& os) const {
  char buf[64];
  os << dim_ << ' ' << vertices_.size() << ' ' << cells_.size() << ' ' << boundary_facets_.size() << '\n';
  for (const auto& v : vertices_) {
    for (int d = 0; d < dim_; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g", v[d]);
      os << (d ? " " : "") << buf;
    }
    os << '\n';
  }
  for (const auto& c : cells_) {
    for (int k = 0; k <= dim_; ++k) os << (k ? " " : "") << c[k];
    os << '\n';
  }
  for (const auto& f : boundary_facets_) {
    for (int k = 0; k < dim_; ++k) os << f.vertices[k] << ' ';
    os << static_cast<int>(f.tag) << '\n';
  }
}

SimplicialMesh SimplicialMesh::read(std::istream& is) {
  int dim = 0;
  long nv = -1, nc = -1, nf = -1;
  if (!(is >> dim >> nv >> nc >> nf) || nv < 0 || nc < 0 || nf < 0)
    throw ValidationError("mesh file: malformed header (expected 'dim nv nc nf')");
  if (dim != 2 && dim != 3) throw ValidationError("mesh file: dimension must be 2 or 3");
  std::vector<Point> verts(nv, Point{0, 0, 0});
  for (auto& v : verts)
    for (int d = 0; d < dim; ++d)
      if (!(is >> v[d])) throw ValidationError("mesh file: truncated vertex block");
  std::vector<Cell> cells(nc, Cell{-1, -1, -1, -1});
  for (auto& c : cells)
    for (int k = 0; k <= dim; ++k)
      if (!(is >> c[k])) throw ValidationError("mesh file: truncated cell block");
  std::vector<BoundaryFacet> facets(nf);
  for (auto& f : facets) {
    for (int k = 0; k < dim; ++k)
      if (!(is >> f.vertices[k])) throw ValidationError("mesh file: truncated facet block");
    int tag = -1;
    if (!(is >> tag) || (tag != 0 && tag != 1)) throw ValidationError("mesh file: facet tag must be 0 or 1");
    std::sort(f.vertices.begin(), f.vertices.begin() + dim);
    f.tag = static_cast<FacetTag>(tag);
  }
  return with_tags(dim, std::move(verts), std::move(cells), facets);
}

void SimplicialMesh::write_file(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  write(os);
}

SimplicialMesh SimplicialMesh::read_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open mesh file " + path);
  return read(is);
}

SimplicialMesh build_box_mesh(int dim, const Point& lower, const Point& upper, int n) {
  if (dim != 2 && dim != 3) throw ValidationError("build_box_mesh: dimension must be 2 or 3");
  if (n < 1) throw ValidationError("build_box_mesh: n_per_axis must be positive");
  for (int d = 0; d < dim; ++d)
    if (!(lower[d] < upper[d])) throw ValidationError("build_box_mesh: degenerate box");

  const int m = n + 1;
  auto coord = [&](int d, int i) { return lower[d] + (upper[d] - lower[d]) * i / n; };
  std::vector<Point> verts;
  std::vector<Cell> cells;
  if (dim == 2) {
    verts.reserve(m * m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) verts.push_back({coord(0, i), coord(1, j), 0.0});
    auto id = [m](int i, int j) { return i + m * j; };
    cells.reserve(2 * n * n);
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), -1});
        cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1), -1});
      }
  } else {
    verts.reserve(static_cast<std::size_t>(m) * m * m);
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i) verts.push_back({coord(0, i), coord(1, j), coord(2, k)});
    auto id = [m](int i, int j, int k) { return i + m * (j + m * k); };
    static constexpr int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    cells.reserve(static_cast<std::size_t>(6) * n * n * n);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i)
          for (const auto& p : perms) {
            int idx[3] = {i, j, k};
            Cell c{};
            c[0] = id(idx[0], idx[1], idx[2]);
            for (int s = 0; s < 3; ++s) {
              ++idx[p[s]];
              c[s + 1] = id(idx[0], idx[1], idx[2]);
            }
            cells.push_back(c);
          }
  }
  return SimplicialMesh(dim, std::move(verts), std::move(cells));
}

}  // namespace skewopt
