#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "skewopt/common.hpp"
#include "skewopt/mesh.hpp"

namespace skewopt {

/// Cellwise-constant dim x dim coefficient split into its symmetric and
/// skew-symmetric parts. The symmetric part stores the upper triangle
/// including the diagonal, the skew part only the strict upper triangle, so
/// sym^T = sym and skew^T = -skew hold exactly.
class MatrixField {
 public:
  MatrixField() = default;
  MatrixField(int dim, std::size_t n_cells, std::uint64_t mesh_id = 0);
  /// Zero field living on `mesh`.
  static MatrixField zeros(const SimplicialMesh& mesh);
  /// Field equal to `scale * I` in every cell, no skew part.
  static MatrixField identity(const SimplicialMesh& mesh, double scale = 1.0);

  int dim() const { return dim_; }
  std::size_t size() const { return n_cells_; }
  std::uint64_t mesh_id() const { return mesh_id_; }
  void set_mesh_id(std::uint64_t id) { mesh_id_ = id; }

  static int sym_count(int dim) { return dim * (dim + 1) / 2; }
  static int skew_count(int dim) { return dim * (dim - 1) / 2; }
  /// Position of (i, j), i <= j, in the packed symmetric storage.
  int sym_slot(int i, int j) const;
  /// Position of (i, j), i < j, in the packed skew storage.
  int skew_slot(int i, int j) const;

  double sym(std::size_t c, int i, int j) const;
  void set_sym(std::size_t c, int i, int j, double v);
  double skew(std::size_t c, int i, int j) const;
  void set_skew(std::size_t c, int i, int j, double v);

  SmallMat sym_matrix(std::size_t c) const;
  SmallMat skew_matrix(std::size_t c) const;
  SmallMat full_matrix(std::size_t c) const { return sym_matrix(c) + skew_matrix(c); }
  /// Stores the upper triangle of `m` (incl. diagonal) as the symmetric part.
  void set_sym_matrix(std::size_t c, const SmallMat& m);
  /// Stores the strict upper triangle of `m` as the skew part.
  void set_skew_matrix(std::size_t c, const SmallMat& m);

  std::span<double> sym_data() { return sym_; }
  std::span<const double> sym_data() const { return sym_; }
  std::span<double> skew_data() { return skew_; }
  std::span<const double> skew_data() const { return skew_; }

  bool sym_is_zero() const;
  MatrixField skew_only() const;
  MatrixField sym_only() const;

  /// Entrywise a*this + b*other over stored entries.
  MatrixField axpby(double a, const MatrixField& other, double b) const;

 private:
  int dim_ = 0;
  std::size_t n_cells_ = 0;
  std::uint64_t mesh_id_ = 0;
  std::vector<double> sym_;
  std::vector<double> skew_;
};

/// Throws ValidationError unless both fields have the same dimension and
/// cell count (and mesh id, when both are tagged).
void require_same_mesh(const MatrixField& a, const MatrixField& b, const char* what);
void require_on_mesh(const MatrixField& f, const SimplicialMesh& mesh, const char* what);

/// Splits raw per-cell matrices B into (B + B^T)/2 and (B - B^T)/2.
MatrixField decompose(const std::vector<SmallMat>& raw, int dim, std::uint64_t mesh_id = 0);
std::vector<SmallMat> recompose(const MatrixField& field);

/// Samples an analytic matrix function at cell centroids and decomposes it.
MatrixField sample_field(const SimplicialMesh& mesh, const std::function<SmallMat(const Point&)>& fn);

/// Cellwise discrete dominance: |a_ij| <= |a*_ij| for every strict-upper skew entry.
bool dominance_holds(const MatrixField& field, const MatrixField& envelope);

/// Kuratowski-style clipping of the skew part: entries with |b_ij| <= |a*_ij|
/// are kept, larger ones are replaced by the envelope entry a*_ij itself.
/// The symmetric part is carried through unchanged.
MatrixField clip_to_dominance(const MatrixField& field, const MatrixField& envelope);

/// Sign-preserving clamp of each skew entry into [-|a*_ij|, |a*_ij|]; the
/// metric projection onto the dominance box.
MatrixField clamp_to_dominance(const MatrixField& field, const MatrixField& envelope);

/// Cut-off T_eps applied entrywise to the skew part: max(min(s, 1/eps), -1/eps).
MatrixField truncate_skew(const MatrixField& field, double epsilon);

/// Max-entry norm of the skew part per cell.
std::vector<double> skew_max_norm(const MatrixField& field);

struct TvReport {
  SmallMat per_entry_tv;  ///< symmetric entries, upper triangle incl. diagonal
  SmallMat skew_tv;       ///< skew entries, strict upper triangle
  double max_tv = 0.0;    ///< max over the symmetric entries
};

/// Total variation of a piecewise-constant field: sum over interior facets of
/// |jump| times facet measure, per entry.
TvReport discrete_tv(const SimplicialMesh& mesh, const MatrixField& field);

/// L2(Omega) norm of the skew part using the Frobenius norm per cell.
double skew_l2_norm(const SimplicialMesh& mesh, const MatrixField& field);

/// Sum over cells of the full Frobenius inner product <A_c, B_c>.
double frobenius_inner(const MatrixField& a, const MatrixField& b);
/// Volume-weighted version: sum_c vol_c <A_c, B_c>.
double l2_inner(const SimplicialMesh& mesh, const MatrixField& a, const MatrixField& b);

/// Field file: one line per cell holding the dim*dim full matrix row-major.
void write_field(std::ostream& os, const MatrixField& field);
MatrixField read_field(std::istream& is, int dim, std::size_t n_cells);
void write_field_file(const std::string& path, const MatrixField& field);
MatrixField read_field_file(const std::string& path, const SimplicialMesh& mesh);

}  // namespace skewopt
