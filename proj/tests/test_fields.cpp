#include <cmath>

#include "doctest.h"
#include "tvsolid/grid.hpp"
#include "tvsolid/oracles.hpp"

using namespace tvsolid;

namespace {

VectorField field_from(const Grid2D& g, Vec2 (*f)(double, double)) {
  VectorField u(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) u.set(i, j, f(g.x1(i), g.x2(j)));
  return u;
}

}  // namespace

TEST_SUITE("fields") {
  TEST_CASE("grid construction and index sets") {
    CHECK_THROWS_AS(Grid2D(2), std::invalid_argument);
    const Grid2D g(5);
    CHECK(g.dx == doctest::Approx(0.25));
    CHECK(g.cell_count() == 16);
    CHECK(g.interior_count() == 9);
    int boundary = 0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) boundary += g.is_boundary(i, j) ? 1 : 0;
    CHECK(boundary == 16);
  }

  TEST_CASE("cell gradients are exact on affine and bilinear data") {
    const Grid2D g(5);
    const VectorField id = identity_deformation(g);
    for (const Mat2& F : grad_cells(g, id)) CHECK((F - Mat2::Identity()).norm() <= 1e-14);

    const VectorField aff = field_from(g, [](double x, double y) { return Vec2(2.0 * x, y); });
    for (const Mat2& F : grad_cells(g, aff)) {
      CHECK(F(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
      CHECK(F(1, 1) == doctest::Approx(1.0).epsilon(1e-14));
      CHECK(std::abs(F(0, 1)) + std::abs(F(1, 0)) <= 1e-14);
    }

    // quadratic: gradient of the interpolant equals 2 x1 at each cell center
    const VectorField quad = field_from(g, [](double x, double) { return Vec2(x * x, 0.0); });
    const std::vector<Mat2> F = grad_cells(g, quad);
    for (int cj = 0; cj < g.n - 1; ++cj)
      for (int ci = 0; ci < g.n - 1; ++ci) {
        const double xc = (ci + 0.5) * g.dx;
        CHECK(F[g.cell(ci, cj)](0, 0) == doctest::Approx(2.0 * xc).epsilon(1e-13));
      }

    VectorField bad;
    bad.n = 4;
    bad.v.assign(32, 0.0);
    CHECK_THROWS_AS(grad_cells(g, bad), std::invalid_argument);
  }

  TEST_CASE("nodal Laplacian is exact on quadratics") {
    const Grid2D g(6);
    const VectorField c = field_from(g, [](double, double) { return Vec2(3.0, -1.0); });
    for (const Vec2& l : laplacian_nodes(g, c)) CHECK(l.norm() <= 1e-13);

    const VectorField id = identity_deformation(g);
    for (const Vec2& l : laplacian_nodes(g, id)) CHECK(l.norm() <= 1e-12);

    const VectorField quad = field_from(g, [](double x, double) { return Vec2(x * x, 0.0); });
    for (const Vec2& l : laplacian_nodes(g, quad)) {
      CHECK(l[0] == doctest::Approx(2.0).epsilon(1e-11));
      CHECK(std::abs(l[1]) <= 1e-12);
    }
  }

  TEST_CASE("edge differences of the Laplacian") {
    const Grid2D g(6);
    const VectorField quad = field_from(g, [](double x, double y) {
      return Vec2(x * x + 0.5 * y * y, x * y);
    });
    const EdgeVectors ev = grad_laplacian_edges(g, quad);
    for (const Vec2& e : ev.hor) CHECK(e.norm() <= 1e-10);
    for (const Vec2& e : ev.ver) CHECK(e.norm() <= 1e-10);

    // cubic: Lap(x^3) = 6x exactly on the stencil, so edge differences are 6
    const VectorField cubic = field_from(g, [](double x, double) { return Vec2(x * x * x, 0.0); });
    const std::vector<Vec2> lap = laplacian_nodes(g, cubic);
    const EdgeVectors ec = grad_laplacian_edges(g, cubic);
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 3; ++i) {
        // hand stencil: forward difference of the nodal Laplacian values
        const Vec2 hand = (lap[g.interior(i + 1, j)] - lap[g.interior(i, j)]) / g.dx;
        CHECK((ec.hor[g.hedge(i, j)] - hand).norm() <= 1e-12);
        CHECK(ec.hor[g.hedge(i, j)][0] == doctest::Approx(6.0).epsilon(1e-9));
      }
    for (const Vec2& e : ec.ver) CHECK(e.norm() <= 1e-9);

    // constant field: zero on all edges
    const VectorField c = field_from(g, [](double, double) { return Vec2(1.0, 2.0); });
    const EdgeVectors e0 = grad_laplacian_edges(g, c);
    for (const Vec2& e : e0.hor) CHECK(e.norm() == 0.0);
  }

  TEST_CASE("quadrature rules") {
    const Grid2D g(3);
    ScalarField one(g, 1.0);
    CHECK(integrate_nodes(g, one) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrate_boundary(g, one) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(integrate_cells(g, std::vector<double>(g.cell_count(), 1.0)) ==
          doctest::Approx(1.0).epsilon(1e-15));

    // trapezoid sum by hand on n = 3 for f = x1 on the boundary
    ScalarField fx(g, 0.0);
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) fx.at(i, j) = g.x1(i);
    CHECK(integrate_boundary(g, fx) == doctest::Approx(2.0).epsilon(1e-15));

    // positivity
    const Grid2D g2(7);
    ScalarField pos(g2, 0.0);
    for (int j = 0; j < g2.n; ++j)
      for (int i = 0; i < g2.n; ++i) pos.at(i, j) = std::abs(std::sin(3.0 * i + j));
    CHECK(integrate_nodes(g2, pos) >= 0.0);
  }

  TEST_CASE("operator linearity and locality") {
    const Grid2D g(7);
    OracleRng rng(11);
    VectorField a(g), b(g);
    for (size_t m = 0; m < a.v.size(); ++m) {
      a.v[m] = rng.uniform(-1.0, 1.0);
      b.v[m] = rng.uniform(-1.0, 1.0);
    }
    VectorField lin(g);
    for (size_t m = 0; m < a.v.size(); ++m) lin.v[m] = 2.0 * a.v[m] - 3.0 * b.v[m];

    const auto la = laplacian_nodes(g, a), lb = laplacian_nodes(g, b),
               ll = laplacian_nodes(g, lin);
    for (size_t m = 0; m < ll.size(); ++m)
      CHECK((ll[m] - (2.0 * la[m] - 3.0 * lb[m])).norm() <= 1e-11);

    // locality: a unit bump at one node only affects its stencil neighborhood
    VectorField bump(g);
    bump.set(3, 3, Vec2(1.0, 0.0));
    const auto lbump = laplacian_nodes(g, bump);
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        const bool in_stencil = (std::abs(i - 3) + std::abs(j - 3)) <= 1;
        if (!in_stencil) CHECK(lbump[g.interior(i, j)].norm() == 0.0);
      }
  }

  TEST_CASE("min_det") {
    const Grid2D g(6);
    CHECK(min_det(g, identity_deformation(g)) == doctest::Approx(1.0).epsilon(1e-14));
    const VectorField aff = field_from(g, [](double x, double y) { return Vec2(2.0 * x, y); });
    CHECK(min_det(g, aff) == doctest::Approx(2.0).epsilon(1e-14));

    VectorField pert = identity_deformation(g);
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        const double s = 0.1 * std::sin(3.14159 * g.x1(i)) * std::sin(3.14159 * g.x2(j));
        pert.set(i, j, pert.at(i, j) + Vec2(s, -s));
      }
    // brute-force per-cell scan as the oracle
    double brute = std::numeric_limits<double>::infinity();
    for (const Mat2& F : grad_cells(g, pert)) brute = std::min(brute, F.determinant());
    CHECK(min_det(g, pert) == doctest::Approx(brute).epsilon(1e-15));
    CHECK(min_det(g, pert) > 0.0);
  }
}
