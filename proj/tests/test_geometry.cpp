#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "skewopt/ball_example.hpp"
#include "skewopt/perforation.hpp"

using namespace skewopt;

namespace {

int count_tag(const SimplicialMesh& m, FacetTag t) {
  int n = 0;
  for (const auto& f : m.boundary_facets()) n += f.tag == t;
  return n;
}

MatrixField ball_envelope(const SimplicialMesh& mesh) {
  return sample_field(mesh, [](const Point& x) { return BallExample::envelope(x); });
}

}  // namespace

TEST_SUITE("geometry") {
  TEST_CASE("box mesh counts") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 2);
    CHECK(m.num_vertices() == 9);
    CHECK(m.num_cells() == 8);
    CHECK(m.boundary_facets().size() == 8);
    CHECK(count_tag(m, FacetTag::Outer) == 8);

    const auto c = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, 4);
    CHECK(c.num_vertices() == 125);
    CHECK(c.num_cells() == 384);
    CHECK(c.total_volume() == doctest::Approx(8.0).epsilon(1e-14));
    // 6 faces x 16 squares x 2 triangles
    CHECK(c.boundary_facets().size() == 192);

    const auto u = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 1);
    CHECK(u.num_vertices() == 4);
    CHECK(u.num_cells() == 2);
    CHECK(u.total_volume() == doctest::Approx(1.0).epsilon(1e-15));
  }

  TEST_CASE("box mesh rejects bad input") {
    CHECK_THROWS_AS(build_box_mesh(4, {0, 0, 0}, {1, 1, 1}, 2), ValidationError);
    CHECK_THROWS_AS(build_box_mesh(2, {0, 0, 0}, {0, 1, 0}, 2), ValidationError);
  }

  TEST_CASE("cells are positively oriented and the mesh is connected") {
    const auto m = build_box_mesh(3, {0, 0, 0}, {1, 2, 3}, 3);
    for (double v : m.cell_volumes()) CHECK(v > 0);
    CHECK(m.connected_components() == 1);
    // Each cell has dim + 1 facets: 2 * interior + boundary = 4 * cells.
    CHECK(2 * m.interior_facets().size() + m.boundary_facets().size() == 4 * m.num_cells());
  }

  TEST_CASE("mesh file round trip") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 3);
    const auto env = sample_field(m, [](const Point& x) {
      SmallMat s = SmallMat::Zero(2, 2);
      s(0, 1) = x[0] < 0.4 && x[1] > 0.3 && x[1] < 0.7 && x[0] > 0.3 ? 100.0 : 0.0;
      s(1, 0) = -s(0, 1);
      return s;
    });
    const auto p = perforate(m, env, 0.1);
    std::stringstream ss;
    p.mesh.write(ss);
    const auto r = SimplicialMesh::read(ss);
    CHECK(r.num_vertices() == p.mesh.num_vertices());
    CHECK(r.num_cells() == p.mesh.num_cells());
    CHECK(count_tag(r, FacetTag::Hole) == count_tag(p.mesh, FacetTag::Hole));
    std::stringstream again;
    r.write(again);
    std::stringstream first;
    p.mesh.write(first);
    CHECK(again.str() == first.str());
  }

  TEST_CASE("malformed mesh file") {
    std::stringstream ss("2 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 0\n1 2 7\n0 2 0\n");
    CHECK_THROWS_AS(SimplicialMesh::read(ss), ValidationError);
  }

  TEST_CASE("zero envelope keeps every cell") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 4);
    for (double eps : {1.0, 1e-3}) {
      const auto p = perforate(m, MatrixField::zeros(m), eps);
      CHECK(p.mesh.num_cells() == m.num_cells());
      CHECK(p.report.removed_volume == 0.0);
      CHECK(p.report.hole_area == 0.0);
    }
  }

  TEST_CASE("threshold below 1/eps removes nothing") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 4);
    MatrixField env = MatrixField::zeros(m);
    env.set_skew(5, 0, 1, 10.0);
    CHECK(perforate(m, env, 0.05).report.n_removed_cells == 0);
    CHECK(perforate(m, env, 0.1).report.n_removed_cells == 1);
  }

  TEST_CASE("perforation invariants on the ball envelope") {
    const auto m = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, 16);
    const auto env = ball_envelope(m);
    std::set<int> prev;
    double prev_removed = -1.0;
    for (double eps : {0.3, 0.4, 0.6}) {
      const auto p = perforate(m, env, eps);
      const auto& r = p.report;
      // volume conservation
      CHECK(std::abs(r.removed_volume + p.mesh.total_volume() - m.total_volume()) <= 1e-12 * m.total_volume());
      double excised = 0.0;
      std::set<int> kept(p.mesh.parent_cells().begin(), p.mesh.parent_cells().end());
      for (std::size_t c = 0; c < m.num_cells(); ++c)
        if (!kept.count(static_cast<int>(c))) excised += m.cell_volumes()[c];
      CHECK(r.removed_volume == doctest::Approx(excised).epsilon(1e-14));
      CHECK(r.hole_area == doctest::Approx(p.mesh.boundary_area(FacetTag::Hole)).epsilon(1e-14));
      CHECK(r.n_removed_cells > 0);
      CHECK(p.mesh.connected_components() == 1);
      CHECK(p.mesh.hole_outer_separation() > 0);
      // larger eps removes more; kept sets are nested
      CHECK(r.removed_volume >= prev_removed);
      if (!prev.empty())
        for (int c : kept) CHECK(prev.count(c) == 1);
      prev = kept;
      prev_removed = r.removed_volume;
      // facets: interior or tagged, never both
      CHECK(2 * p.mesh.interior_facets().size() + p.mesh.boundary_facets().size() == 4 * p.mesh.num_cells());
      CHECK(count_tag(p.mesh, FacetTag::Outer) == count_tag(m, FacetTag::Outer));
    }
  }

  TEST_CASE("removed region of the ball envelope stays inside radius 0.6 eps") {
    // Entries are bounded by 1/(2|x|), so only cells with centroid inside |x| <= eps/2 can go.
    const auto m = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, 32);
    const auto env = ball_envelope(m);
    for (double eps : {0.4, 0.2}) {
      const auto r = perforate(m, env, eps).report;
      const double h = 2.0 / 32 * std::sqrt(3.0);
      const double bound = 4.0 / 3.0 * std::numbers::pi * std::pow(0.6 * eps + h, 3);
      CHECK(r.removed_volume <= bound);
    }
  }

  TEST_CASE("empty result is a numerical error") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 2);
    MatrixField env = MatrixField::zeros(m);
    for (std::size_t c = 0; c < env.size(); ++c) env.set_skew(c, 0, 1, 5.0);
    CHECK_THROWS_AS(perforate(m, env, 0.5), NumericalError);
    CHECK_THROWS_AS(perforate(m, env, 0.0), ValidationError);
  }

  TEST_CASE("serial and parallel keep masks agree") {
    const auto m = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, 12);
    const auto env = ball_envelope(m);
    for (double eps : {0.2, 0.5, 1.0}) CHECK(perforation_keep_mask(env, eps) == perforation_keep_mask_serial(env, eps));
  }

  TEST_CASE("F-type check on the ball envelope") {
    const auto m = build_box_mesh(3, {-1, -1, -1}, {1, 1, 1}, 24);
    const auto env = ball_envelope(m);
    std::vector<PerforationReport> fam;
    for (double eps : {0.8, 0.4, 0.2}) fam.push_back(perforate(m, env, eps).report);
    const auto v = check_f_type(fam);
    CHECK(v.volume_exponent > 2.0);
    CHECK(v.area_exponent > 1.0);
    CHECK(v.verdict);
    CHECK(v.table.size() == 3);
  }

  TEST_CASE("F-type check: zero envelope and a fixed slab") {
    const auto m = build_box_mesh(2, {0, 0, 0}, {1, 1, 0}, 8);
    std::vector<PerforationReport> zero;
    for (double eps : {0.2, 0.1, 0.05}) zero.push_back(perforate(m, MatrixField::zeros(m), eps).report);
    const auto vz = check_f_type(zero);
    CHECK(std::isinf(vz.volume_exponent));
    CHECK(std::isinf(vz.area_exponent));
    CHECK(vz.verdict);

    // A slab that goes at every eps in the sweep.
    MatrixField slab = MatrixField::zeros(m);
    for (std::size_t c = 0; c < slab.size(); ++c) {
      const Point x = m.centroid(c);
      if (x[0] > 0.375 && x[0] < 0.625 && x[1] > 0.25 && x[1] < 0.75) slab.set_skew(c, 0, 1, 1e6);
    }
    std::vector<PerforationReport> fixed;
    for (double eps : {0.2, 0.1, 0.05}) fixed.push_back(perforate(m, slab, eps).report);
    const auto vf = check_f_type(fixed);
    CHECK(vf.volume_exponent == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(vf.verdict);
  }

  TEST_CASE("F-type check needs three decreasing samples") {
    std::vector<PerforationReport> fam(2);
    CHECK_THROWS_AS(check_f_type(fam), ValidationError);
    fam.resize(3);
    fam[0].epsilon = 0.1;
    fam[1].epsilon = 0.2;
    fam[2].epsilon = 0.05;
    CHECK_THROWS_AS(check_f_type(fam), ValidationError);
  }

  TEST_CASE("decay exponent of a power law") {
    const std::vector<double> eps{0.4, 0.2, 0.1};
    std::vector<double> v;
    for (double e : eps) v.push_back(7.0 * std::pow(e, 3));
    CHECK(decay_exponent(eps, v) == doctest::Approx(3.0).epsilon(1e-12));
  }
}
