#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "skewopt/assembly.hpp"
#include "skewopt/diagnostics.hpp"

using namespace skewopt;

namespace {

MatrixField random_coeff(const SimplicialMesh& m, std::mt19937_64& rng, double skew_scale) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MatrixField f = MatrixField::identity(m);
  for (std::size_t c = 0; c < f.size(); ++c)
    for (int i = 0; i < m.dim(); ++i) f.set_sym(c, i, i, 1.0 + 0.3 * u(rng));
  for (auto& v : f.skew_data()) v = skew_scale * u(rng);
  return f;
}

double manufactured_error(int n) {
  const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, n);
  const double pi = std::numbers::pi;
  auto u = [pi](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); };
  const auto f = load_from_density(m, [&](const Point& x) { return 2 * pi * pi * u(x); });
  const StateField y = solve(assemble_state(m, MatrixField::identity(m), f));
  return l2_error(m, y.values, u);
}

}  // namespace

TEST_SUITE("assembly") {
  TEST_CASE("mass matrix integrates constants") {
    const auto m = build_box_mesh(3, {0, 0, 0}, {1, 2, 1}, 3);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.num_vertices()));
    CHECK(one.dot(mass_matrix(m) * one) == doctest::Approx(2.0).epsilon(1e-13));
  }

  TEST_CASE("stiffness annihilates constants") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 5);
    std::mt19937_64 rng(1);
    const MatrixField a = random_coeff(m, rng, 2.0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(m.num_vertices()));
    CHECK((stiffness_matrix(m, a) * one).norm() < 1e-12);
  }

  TEST_CASE("parallel and serial stiffness are identical") {
    std::mt19937_64 rng(2);
    for (int dim : {2, 3}) {
      const auto m = build_box_mesh(dim, {0, 0, 0}, {1, 1, dim == 3 ? 1.0 : 0.0}, dim == 3 ? 4 : 9);
      const MatrixField a = random_coeff(m, rng, 1.0);
      for (CoeffPart part : {CoeffPart::Full, CoeffPart::Sym, CoeffPart::Skew, CoeffPart::Transposed}) {
        const SparseMatrix p = stiffness_matrix(m, a, part), s = stiffness_matrix_serial(m, a, part);
        CHECK(p.nonZeros() == s.nonZeros());
        CHECK(SparseMatrix(p - s).norm() == 0.0);
      }
    }
  }

  TEST_CASE("skew part has a vanishing quadratic form") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 12);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    for (int t = 0; t < 10; ++t) {
      const MatrixField a = random_coeff(m, rng, 5.0);
      const SparseMatrix ks = stiffness_matrix(m, a, CoeffPart::Skew);
      const SparseMatrix kk = stiffness_matrix(m, MatrixField::identity(m), CoeffPart::Sym);
      Eigen::VectorXd v(static_cast<Eigen::Index>(m.num_vertices()));
      for (auto& e : v) e = g(rng);
      CHECK(std::abs(v.dot(ks * v)) <= 1e-12 * v.dot(kk * v));
      CHECK(SparseMatrix(SparseMatrix(ks.transpose()) + ks).norm() < 1e-13);
    }
  }

  TEST_CASE("energy equality for a bounded coefficient") {
    const auto m = build_box_mesh(2, {-1, -1, 0}, {1, 1, 0}, 16);
    std::mt19937_64 rng(5);
    const MatrixField a = random_coeff(m, rng, 3.0);
    const SourceDescriptor f = CellDensity{std::vector<double>(m.num_cells(), 1.0)};
    double res = 0.0;
    const StateField y = solve(assemble_state(m, a, f), {}, &res);
    const DefectEstimate d = energy_defect(m, a, y, f);
    CHECK(std::abs(d.defect) <= 1e-8 * (1 + std::abs(d.rhs_pairing)));
    CHECK(res <= 1e-10 * (load_vector(m, f).norm() + 1));
  }

  TEST_CASE("manufactured solution converges at second order") {
    const double e1 = manufactured_error(8), e2 = manufactured_error(16), e3 = manufactured_error(32);
    CHECK(std::log2(e1 / e2) > 1.9);
    CHECK(std::log2(e2 / e3) > 1.9);
  }

  TEST_CASE("density and flux loads agree for a smooth source") {
    // f = -div(q) with q = (x0, 0): f = -1 everywhere; compare on interior vertices.
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 6);
    const Eigen::VectorXd a = load_vector(m, load_from_density(m, [](const Point&) { return -1.0; }));
    const Eigen::VectorXd b = load_vector(m, load_from_flux(m, [](const Point& x) {
      SmallVec q(2);
      q << x[0], 0.0;
      return q;
    }));
    const auto mask = m.outer_mask();
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
      if (!mask[v]) CHECK(a[static_cast<Eigen::Index>(v)] == doctest::Approx(b[static_cast<Eigen::Index>(v)]).epsilon(1e-12));
  }

  TEST_CASE("boundary functional of a constant trace integrates to the area") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 4);
    const auto bf = BoundaryFunctional::from_trace(m, [](const Point&) { return 1.0; }, FacetTag::Outer);
    CHECK(bf.coefficients.sum() == doctest::Approx(4.0).epsilon(1e-14));
    CHECK(bf.vertices.size() == 16);
    const auto gram = boundary_gram(m, FacetTag::Outer);
    CHECK(boundary_dual_norm(gram, bf.coefficients) > 0);
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(gram.vertices.size()));
    CHECK(one.dot(gram.mass * one) == doctest::Approx(4.0).epsilon(1e-14));
    CHECK((gram.stiffness * one).norm() < 1e-12);
  }

  TEST_CASE("reused factorization matches direct solves") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 6);
    std::mt19937_64 rng(6);
    const LinearSystem sys = assemble_state(m, random_coeff(m, rng, 2.0),
                                            CellDensity{std::vector<double>(m.num_cells(), 1.0)});
    const Factorization lu(sys.matrix);
    const Eigen::VectorXd x = lu.solve(sys.rhs);
    CHECK((sys.matrix * x - sys.rhs).norm() < 1e-12);
    CHECK((sys.dofs.expand(x) - solve(sys).values).norm() < 1e-12);
  }

  TEST_CASE("Dirichlet vertices carry zero") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 5);
    const StateField y = solve(assemble_state(m, MatrixField::identity(m),
                                              CellDensity{std::vector<double>(m.num_cells(), 1.0)}));
    const auto mask = m.outer_mask();
    for (std::size_t v = 0; v < m.num_vertices(); ++v)
      if (mask[v]) CHECK(y.values[static_cast<Eigen::Index>(v)] == 0.0);
  }
}
