#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "skewopt/common.hpp"

namespace skewopt {

enum class FacetTag : int { Outer = 0, Hole = 1 };

/// A facet on the boundary of the mesh. `vertices` is sorted ascending; only
/// the first `dim` entries are meaningful.
struct BoundaryFacet {
  std::array<int, 3> vertices{-1, -1, -1};
  FacetTag tag = FacetTag::Outer;
  int cell = -1;
  double area = 0.0;
};

/// A facet shared by two cells, `cell_a < cell_b`.
struct InteriorFacet {
  std::array<int, 3> vertices{-1, -1, -1};
  int cell_a = -1;
  int cell_b = -1;
  double area = 0.0;
};

using Cell = std::array<int, 4>;

/// Conforming simplicial mesh of triangles (dim 2) or tetrahedra (dim 3)
/// with tagged boundary facets.
///
/// Cells are oriented to have positive signed volume. Boundary and interior
/// facet lists are derived on construction and kept in lexicographic order
/// of their sorted vertex tuples. Submeshes produced by perforation carry
/// maps back to the parent mesh.
class SimplicialMesh {
 public:
  using Tagger = std::function<FacetTag(const BoundaryFacet&)>;

  SimplicialMesh() = default;

  /// Builds a mesh from raw vertices and cells. Boundary facets are found by
  /// facet matching and tagged with `tagger` (Outer when empty).
  SimplicialMesh(int dim, std::vector<Point> vertices, std::vector<Cell> cells,
                 const Tagger& tagger = {});

  /// Builds a mesh with a prescribed boundary-tag for every facet that
  /// already exists in `tagged`; used by the file reader and perforation.
  static SimplicialMesh with_tags(int dim, std::vector<Point> vertices, std::vector<Cell> cells,
                                  const std::vector<BoundaryFacet>& tagged);

  int dim() const { return dim_; }
  std::uint64_t id() const { return id_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return cells_.size(); }

  const std::vector<Point>& vertices() const { return vertices_; }
  const std::vector<Cell>& cells() const { return cells_; }
  const std::vector<double>& cell_volumes() const { return cell_volumes_; }
  const std::vector<BoundaryFacet>& boundary_facets() const { return boundary_facets_; }
  const std::vector<InteriorFacet>& interior_facets() const { return interior_facets_; }

  const Point& vertex(std::size_t v) const { return vertices_[v]; }
  const Cell& cell(std::size_t c) const { return cells_[c]; }
  Point centroid(std::size_t c) const;
  double total_volume() const;
  double boundary_area(FacetTag tag) const;

  /// Vertices lying on at least one facet with the given tag, ascending.
  std::vector<int> tagged_vertices(FacetTag tag) const;
  /// Per-vertex flag for vertices on Outer facets (the Dirichlet boundary).
  std::vector<char> outer_mask() const;

  /// Gradients of the barycentric basis functions on cell `c`, one row per
  /// local vertex, `dim` columns.
  GradMat basis_gradients(std::size_t c) const;

  /// Number of edge/facet-connected components of the cell graph.
  int connected_components(std::vector<int>* labels = nullptr) const;

  /// Minimum distance between any Hole facet vertex and any Outer facet vertex
  /// (infinity when either set is empty).
  double hole_outer_separation() const;

  /// Parent maps; empty for meshes not produced by `perforate`.
  const std::vector<int>& parent_cells() const { return parent_cells_; }
  const std::vector<int>& parent_vertices() const { return parent_vertices_; }
  void set_parent_maps(std::vector<int> cells, std::vector<int> vertices);

  void write(std::ostream& os) const;
  static SimplicialMesh read(std::istream& is);
  void write_file(const std::string& path) const;
  static SimplicialMesh read_file(const std::string& path);

 private:
  void finalize(const Tagger& tagger);

  int dim_ = 0;
  std::uint64_t id_ = 0;
  std::vector<Point> vertices_;
  std::vector<Cell> cells_;
  std::vector<double> cell_volumes_;
  std::vector<BoundaryFacet> boundary_facets_;
  std::vector<InteriorFacet> interior_facets_;
  std::vector<int> parent_cells_;
  std::vector<int> parent_vertices_;
};

/// Uniform simplicial subdivision of an axis-aligned box: two triangles per
/// square or six Kuhn tetrahedra per cube. All boundary facets are Outer.
SimplicialMesh build_box_mesh(int dim, const Point& lower, const Point& upper, int n_per_axis);

/// Signed volume of a simplex given its vertex coordinates.
double simplex_signed_volume(int dim, const Point* pts);

}  // namespace skewopt
