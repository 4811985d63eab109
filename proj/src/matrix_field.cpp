#include "skewopt/matrix_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace skewopt {

MatrixField::MatrixField(int dim, std::size_t n_cells, std::uint64_t mesh_id)
    : dim_(dim),
      n_cells_(n_cells),
      mesh_id_(mesh_id),
      sym_(n_cells * sym_count(dim), 0.0),
      skew_(n_cells * skew_count(dim), 0.0) {
  if (dim < 1 || dim > 3) throw ValidationError("MatrixField: dimension must be 1..3");
}

MatrixField MatrixField::zeros(const SimplicialMesh& mesh) {
  return MatrixField(mesh.dim(), mesh.num_cells(), mesh.id());
}

MatrixField MatrixField::identity(const SimplicialMesh& mesh, double scale) {
  MatrixField f = zeros(mesh);
  for (std::size_t c = 0; c < f.size(); ++c)
    for (int i = 0; i < f.dim(); ++i) f.set_sym(c, i, i, scale);
  return f;
}

int MatrixField::sym_slot(int i, int j) const {
  if (i > j) std::swap(i, j);
  // rows 0..i-1 contribute dim, dim-1, ... entries
  return i * dim_ - i * (i - 1) / 2 + (j - i);
}

int MatrixField::skew_slot(int i, int j) const {
  // strict upper, row-major
  return i * (dim_ - 1) - i * (i - 1) / 2 + (j - i - 1);
}

double MatrixField::sym(std::size_t c, int i, int j) const {
  return sym_[c * sym_count(dim_) + sym_slot(i, j)];
}

void MatrixField::set_sym(std::size_t c, int i, int j, double v) {
  sym_[c * sym_count(dim_) + sym_slot(i, j)] = v;
}

double MatrixField::skew(std::size_t c, int i, int j) const {
  if (i == j) return 0.0;
  if (i < j) return skew_[c * skew_count(dim_) + skew_slot(i, j)];
  return -skew_[c * skew_count(dim_) + skew_slot(j, i)];
}

void MatrixField::set_skew(std::size_t c, int i, int j, double v) {
  if (i == j) throw ValidationError("MatrixField: skew diagonal is identically zero");
  if (i < j)
    skew_[c * skew_count(dim_) + skew_slot(i, j)] = v;
  else
    skew_[c * skew_count(dim_) + skew_slot(j, i)] = -v;
}

SmallMat MatrixField::sym_matrix(std::size_t c) const {
  SmallMat m(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) m(i, j) = m(j, i) = sym(c, i, j);
  return m;
}

SmallMat MatrixField::skew_matrix(std::size_t c) const {
  SmallMat m = SmallMat::Zero(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) {
      const double v = skew(c, i, j);
      m(i, j) = v;
      m(j, i) = -v;
    }
  return m;
}

void MatrixField::set_sym_matrix(std::size_t c, const SmallMat& m) {
  for (int i = 0; i < dim_; ++i)
    for (int j = i; j < dim_; ++j) set_sym(c, i, j, m(i, j));
}

void MatrixField::set_skew_matrix(std::size_t c, const SmallMat& m) {
  for (int i = 0; i < dim_; ++i)
    for (int j = i + 1; j < dim_; ++j) set_skew(c, i, j, m(i, j));
}

bool MatrixField::sym_is_zero() const {
  return std::all_of(sym_.begin(), sym_.end(), [](double v) { return v == 0.0; });
}

MatrixField MatrixField::skew_only() const {
  MatrixField out = *this;
  std::fill(out.sym_.begin(), out.sym_.end(), 0.0);
  return out;
}

MatrixField MatrixField::sym_only() const {
  MatrixField out = *this;
  std::fill(out.skew_.begin(), out.skew_.end(), 0.0);
  return out;
}

MatrixField MatrixField::axpby(double a, const MatrixField& other, double b) const {
  require_same_mesh(*this, other, "axpby");
  MatrixField out = *this;
  for (std::size_t k = 0; k < sym_.size(); ++k) out.sym_[k] = a * sym_[k] + b * other.sym_[k];
  for (std::size_t k = 0; k < skew_.size(); ++k) out.skew_[k] = a * skew_[k] + b * other.skew_[k];
  return out;
}

void require_same_mesh(const MatrixField& a, const MatrixField& b, const char* what) {
  if (a.dim() != b.dim() || a.size() != b.size() ||
      (a.mesh_id() != 0 && b.mesh_id() != 0 && a.mesh_id() != b.mesh_id())) {
    throw ValidationError(std::string(what) + ": fields live on different meshes");
  }
}

void require_on_mesh(const MatrixField& f, const SimplicialMesh& mesh, const char* what) {
  if (f.dim() != mesh.dim() || f.size() != mesh.num_cells() ||
      (f.mesh_id() != 0 && f.mesh_id() != mesh.id())) {
    throw ValidationError(std::string(what) + ": field does not live on this mesh");
  }
}

MatrixField decompose(const std::vector<SmallMat>& raw, int dim, std::uint64_t mesh_id) {
  MatrixField out(dim, raw.size(), mesh_id);
  for (std::size_t c = 0; c < raw.size(); ++c) {
    const SmallMat& b = raw[c];
    if (b.rows() != dim || b.cols() != dim)
      throw ValidationError("decompose: cell " + std::to_string(c) + " matrix is not " +
                            std::to_string(dim) + "x" + std::to_string(dim));
    for (int i = 0; i < dim; ++i) {
      out.set_sym(c, i, i, b(i, i));
      for (int j = i + 1; j < dim; ++j) {
        out.set_sym(c, i, j, 0.5 * (b(i, j) + b(j, i)));
        out.set_skew(c, i, j, 0.5 * (b(i, j) - b(j, i)));
      }
    }
  }
  return out;
}

std::vector<SmallMat> recompose(const MatrixField& field) {
  std::vector<SmallMat> out(field.size());
  for (std::size_t c = 0; c < field.size(); ++c) out[c] = field.full_matrix(c);
  return out;
}

MatrixField sample_field(const SimplicialMesh& mesh, const std::function<SmallMat(const Point&)>& fn) {
  std::vector<SmallMat> raw(mesh.num_cells());
  for (std::size_t c = 0; c < mesh.num_cells(); ++c) raw[c] = fn(mesh.centroid(c));
  return decompose(raw, mesh.dim(), mesh.id());
}

bool dominance_holds(const MatrixField& field, const MatrixField& envelope) {
  require_same_mesh(field, envelope, "dominance_holds");
  const auto a = field.skew_data();
  const auto e = envelope.skew_data();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k]) > std::abs(e[k])) return false;
  return true;
}

MatrixField clip_to_dominance(const MatrixField& field, const MatrixField& envelope) {
  require_same_mesh(field, envelope, "clip_to_dominance");
  MatrixField out = field;
  auto a = out.skew_data();
  const auto e = envelope.skew_data();
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k]) > std::abs(e[k])) a[k] = e[k];
  return out;
}

MatrixField clamp_to_dominance(const MatrixField& field, const MatrixField& envelope) {
  require_same_mesh(field, envelope, "clamp_to_dominance");
  MatrixField out = field;
  auto a = out.skew_data();
  const auto e = envelope.skew_data();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double bound = std::abs(e[k]);
    a[k] = std::clamp(a[k], -bound, bound);
  }
  return out;
}

MatrixField truncate_skew(const MatrixField& field, double epsilon) {
  if (!(epsilon > 0)) throw ValidationError("truncate_skew: epsilon must be positive");
  const double level = 1.0 / epsilon;
  MatrixField out = field;
  for (double& s : out.skew_data()) s = std::max(std::min(s, level), -level);
  return out;
}

std::vector<double> skew_max_norm(const MatrixField& field) {
  const int n = MatrixField::skew_count(field.dim());
  std::vector<double> out(field.size(), 0.0);
  const auto s = field.skew_data();
  for (std::size_t c = 0; c < field.size(); ++c)
    for (int k = 0; k < n; ++k) out[c] = std::max(out[c], std::abs(s[c * n + k]));
  return out;
}

TvReport discrete_tv(const SimplicialMesh& mesh, const MatrixField& field) {
  require_on_mesh(field, mesh, "discrete_tv");
  const int dim = field.dim();
  const int ns = MatrixField::sym_count(dim);
  const int nk = MatrixField::skew_count(dim);
  std::vector<double> sym_tv(ns, 0.0), skew_tv(nk, 0.0);
  const auto s = field.sym_data();
  const auto w = field.skew_data();
  for (const auto& f : mesh.interior_facets()) {
    for (int k = 0; k < ns; ++k) sym_tv[k] += std::abs(s[f.cell_a * ns + k] - s[f.cell_b * ns + k]) * f.area;
    for (int k = 0; k < nk; ++k) skew_tv[k] += std::abs(w[f.cell_a * nk + k] - w[f.cell_b * nk + k]) * f.area;
  }
  TvReport rep;
  rep.per_entry_tv = SmallMat::Zero(dim, dim);
  rep.skew_tv = SmallMat::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = i; j < dim; ++j) {
      rep.per_entry_tv(i, j) = sym_tv[field.sym_slot(i, j)];
      rep.max_tv = std::max(rep.max_tv, rep.per_entry_tv(i, j));
      if (j > i) rep.skew_tv(i, j) = skew_tv[field.skew_slot(i, j)];
    }
  return rep;
}

double skew_l2_norm(const SimplicialMesh& mesh, const MatrixField& field) {
  require_on_mesh(field, mesh, "skew_l2_norm");
  const int nk = MatrixField::skew_count(field.dim());
  const auto w = field.skew_data();
  double acc = 0.0;
  for (std::size_t c = 0; c < field.size(); ++c) {
    double cell = 0.0;
    for (int k = 0; k < nk; ++k) cell += 2.0 * w[c * nk + k] * w[c * nk + k];
    acc += mesh.cell_volumes()[c] * cell;
  }
  return std::sqrt(acc);
}

namespace {

double cell_frobenius(const MatrixField& a, const MatrixField& b, std::size_t c) {
  const int dim = a.dim();
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    acc += a.sym(c, i, i) * b.sym(c, i, i);
    for (int j = i + 1; j < dim; ++j) {
      acc += 2.0 * a.sym(c, i, j) * b.sym(c, i, j);
      acc += 2.0 * a.skew(c, i, j) * b.skew(c, i, j);
    }
  }
  return acc;
}

}  // namespace

double frobenius_inner(const MatrixField& a, const MatrixField& b) {
  require_same_mesh(a, b, "frobenius_inner");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += cell_frobenius(a, b, c);
  return acc;
}

double l2_inner(const SimplicialMesh& mesh, const MatrixField& a, const MatrixField& b) {
  require_same_mesh(a, b, "l2_inner");
  require_on_mesh(a, mesh, "l2_inner");
  double acc = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) acc += mesh.cell_volumes()[c] * cell_frobenius(a, b, c);
  return acc;
}

void write_field(std::ostream& os, const MatrixField& field) {
  char buf[64];
  const int dim = field.dim();
  for (std::size_t c = 0; c < field.size(); ++c) {
    const SmallMat m = field.full_matrix(c);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
        os << ((i || j) ? " " : "") << buf;
      }
    os << '\n';
  }
}

MatrixField read_field(std::istream& is, int dim, std::size_t n_cells) {
  std::vector<SmallMat> raw;
  raw.reserve(n_cells);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::vector<double> vals;
    double v;
    while (ls >> v) vals.push_back(v);
    if (!ls.eof() || vals.size() != static_cast<std::size_t>(dim * dim))
      throw ValidationError("field file line " + std::to_string(lineno) + ": expected " +
                            std::to_string(dim * dim) + " numbers");
    SmallMat m(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        if (!std::isfinite(vals[i * dim + j]))
          throw ValidationError("field file line " + std::to_string(lineno) + ": non-finite entry");
        m(i, j) = vals[i * dim + j];
      }
    raw.push_back(m);
  }
  if (raw.size() != n_cells)
    throw ValidationError("field file: " + std::to_string(raw.size()) + " cells, mesh has " +
                          std::to_string(n_cells));
  MatrixField out = decompose(raw, dim);
  // Decomposition must reproduce the input exactly up to roundoff.
  for (std::size_t c = 0; c < n_cells; ++c) {
    const double err = (out.full_matrix(c) - raw[c]).cwiseAbs().maxCoeff();
    if (err > 1e-12 * (1.0 + raw[c].cwiseAbs().maxCoeff()))
      throw ValidationError("field file: sym/skew split does not reproduce cell " + std::to_string(c));
  }
  return out;
}

void write_field_file(const std::string& path, const MatrixField& field) {
  std::ofstream os(path);
  if (!os) throw ValidationError("cannot open " + path + " for writing");
  write_field(os, field);
}

MatrixField read_field_file(const std::string& path, const SimplicialMesh& mesh) {
  std::ifstream is(path);
  if (!is) throw ValidationError("cannot open field file " + path);
  MatrixField f = read_field(is, mesh.dim(), mesh.num_cells());
  f.set_mesh_id(mesh.id());
  return f;
}

}  // namespace skewopt
