#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "skewopt/admissible.hpp"

using namespace skewopt;

namespace {

MatrixField random_field(const SimplicialMesh& m, std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  MatrixField f = MatrixField::zeros(m);
  for (auto& v : f.sym_data()) v = u(rng);
  for (auto& v : f.skew_data()) v = u(rng);
  return f;
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("decompose splits into symmetric and skew parts") {
    SmallMat b(3, 3);
    b << 1, 2, 3, 4, 5, 6, 7, 8, 10;
    const MatrixField f = decompose({b}, 3);
    const SmallMat s = f.sym_matrix(0), k = f.skew_matrix(0);
    CHECK((s - s.transpose()).norm() == 0.0);
    CHECK((k + k.transpose()).norm() == 0.0);
    CHECK((s + k - b).norm() < 1e-15);
    CHECK(recompose(f)[0].isApprox(b));
  }

  TEST_CASE("truncation clamps skew entries only") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 1);
    MatrixField f = MatrixField::identity(m, 3.0);
    f.set_skew(0, 0, 1, 25.0);
    f.set_skew(1, 0, 1, -0.5);
    const MatrixField t = truncate_skew(f, 0.1);
    CHECK(t.skew(0, 0, 1) == 10.0);
    CHECK(t.skew(1, 0, 1) == -0.5);
    CHECK(t.sym(0, 0, 0) == 3.0);
    CHECK_THROWS_AS(truncate_skew(f, 0.0), ValidationError);
  }

  TEST_CASE("dominance clipping keeps dominated entries and is idempotent") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 4);
    std::mt19937_64 rng(3);
    const MatrixField env = random_field(m, rng, 1.0).skew_only();
    const MatrixField f = random_field(m, rng, 2.0);
    const MatrixField c = clip_to_dominance(f, env);
    CHECK(dominance_holds(c, env));
    for (std::size_t k = 0; k < f.size(); ++k) {
      const double a = f.skew(k, 0, 1), e = env.skew(k, 0, 1);
      CHECK(c.skew(k, 0, 1) == (std::abs(a) <= std::abs(e) ? a : e));
    }
    const MatrixField cc = clip_to_dominance(c, env);
    CHECK(std::ranges::equal(cc.skew_data(), c.skew_data()));
    CHECK(std::ranges::equal(cc.sym_data(), f.sym_data()));

    const MatrixField p = clamp_to_dominance(f, env);
    CHECK(dominance_holds(p, env));
    for (std::size_t k = 0; k < f.size(); ++k)
      if (std::abs(f.skew(k, 0, 1)) > std::abs(env.skew(k, 0, 1)))
        CHECK(p.skew(k, 0, 1) * f.skew(k, 0, 1) >= 0);
  }

  TEST_CASE("total variation of a single jump") {
    // Unit square, 2 x 2 grid: entry 1 on the left half, 0 on the right.
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 2);
    MatrixField f = MatrixField::zeros(m);
    for (std::size_t c = 0; c < f.size(); ++c) f.set_sym(c, 0, 0, m.centroid(c)[0] < 0.5 ? 1.0 : 0.0);
    const TvReport tv = discrete_tv(m, f);
    CHECK(tv.per_entry_tv(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(tv.max_tv == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(discrete_tv(m, MatrixField::identity(m)).max_tv == 0.0);
  }

  TEST_CASE("Frobenius and L2 inner products") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {2, 1, 0}, 3);
    const MatrixField i = MatrixField::identity(m);
    CHECK(frobenius_inner(i, i) == doctest::Approx(2.0 * m.num_cells()));
    CHECK(l2_inner(m, i, i) == doctest::Approx(2.0 * 2.0));
    MatrixField s = MatrixField::zeros(m);
    for (std::size_t c = 0; c < s.size(); ++c) s.set_skew(c, 0, 1, 1.0);
    // Frobenius norm of [[0, 1], [-1, 0]] is sqrt(2); area 2.
    CHECK(skew_l2_norm(m, s) == doctest::Approx(2.0));
    CHECK(frobenius_inner(i, s) == 0.0);
  }

  TEST_CASE("eigenvalue clamp") {
    SmallMat a(2, 2);
    a << 5, 1, 1, 0.1;
    const SmallMat c = clamp_eigenvalues(a, 0.5, 4.0);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es{Eigen::Matrix2d(c)};
    CHECK(es.eigenvalues()(0) == doctest::Approx(0.5));
    CHECK(es.eigenvalues()(1) == doctest::Approx(4.0));
  }

  TEST_CASE("projection yields members and fixes members") {
    const auto m = build_box_mesh(2, {-1, -1, 0}, {1, 1, 0}, 8);
    std::mt19937_64 rng(11);
    AdmissibleSet set;
    set.alpha = 0.5;
    set.beta = 2.0;
    set.tv_budget = 1.0;
    set.skew_family_radius = 0.3;
    set.envelope = random_field(m, rng, 1.0).skew_only();
    set.validate();
    for (int trial = 0; trial < 5; ++trial) {
      const MatrixField f = random_field(m, rng, 3.0);
      const MatrixField p = project_admissible(m, f, set);
      const auto r = check_membership(m, p, set);
      CHECK(r.eigen_ok);
      CHECK(r.dominance_ok);
      CHECK(r.radius_ok);
      CHECK(r.tv_ok);
      const MatrixField pp = project_admissible(m, p, set);
      CHECK(frobenius_inner(pp.axpby(1.0, p, -1.0), pp.axpby(1.0, p, -1.0)) < 1e-20);
    }
  }

  TEST_CASE("admissible set validation") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 2);
    AdmissibleSet set;
    set.envelope = MatrixField::zeros(m);
    set.alpha = 2.0;
    set.beta = 1.0;
    CHECK_THROWS_AS(set.validate(), ValidationError);
    set.beta = 3.0;
    set.envelope = MatrixField::identity(m);
    CHECK_THROWS_AS(set.validate(), ValidationError);
  }

  TEST_CASE("field file round trip") {
    const auto m = build_box_mesh(3, {0, 0, 0}, {1, 1, 1}, 2);
    std::mt19937_64 rng(5);
    const MatrixField f = random_field(m, rng, 1.0);
    std::stringstream ss;
    write_field(ss, f);
    const MatrixField g = read_field(ss, 3, m.num_cells());
    const MatrixField d = g.axpby(1.0, f, -1.0);
    CHECK(frobenius_inner(d, d) < 1e-28);
  }

  TEST_CASE("fields on different meshes are rejected") {
    const auto a = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 2);
    const auto b = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 3);
    CHECK_THROWS_AS(dominance_holds(MatrixField::zeros(a), MatrixField::zeros(b)), ValidationError);
  }
}
