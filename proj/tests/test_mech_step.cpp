#include <cmath>

#include "doctest.h"
#include "tvsolid/mech_step.hpp"
#include "tvsolid/oracles.hpp"

using namespace tvsolid;

namespace {

MechStepInput basic_input(int n, double tau = 0.01, double h = 0.08) {
  MechStepInput in;
  in.grid = Grid2D(n);
  in.mat = MaterialParams{};
  in.y_prev = identity_deformation(in.grid);
  in.theta_prev = ScalarField(in.grid, 1.0);
  in.delayed_velocity = VectorField(in.grid);
  in.f_avg = VectorField(in.grid);
  in.tau = tau;
  in.h = h;
  in.eps = 1e-3;
  in.rho = 1.0;
  return in;
}

double mech_base_energy(const MechStepInput& in, const VectorField& y) {
  // independent sum of M(y) + Wcpl(y, theta_prev), no increment terms
  const Grid2D& g = in.grid;
  const double dx2 = g.dx * g.dx;
  double s = 0.0;
  const std::vector<Mat2> F = grad_cells(g, y);
  const std::vector<double> th = cell_average(g, in.theta_prev);
  for (int c = 0; c < g.cell_count(); ++c)
    s += dx2 * (eval_Wel(in.mat, F[c]) + eval_Wcpl(in.mat, F[c], th[c]));
  for (const Vec2& l : laplacian_nodes(g, y)) s += dx2 * eval_H(in.mat, l);
  return s;
}

VectorField perturbed_id(const Grid2D& g, double amp, std::uint64_t seed) {
  VectorField y = identity_deformation(g);
  OracleRng rng(seed);
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i)
      y.set(i, j, y.at(i, j) + Vec2(rng.uniform(-amp, amp), rng.uniform(-amp, amp)));
  return y;
}

}  // namespace

TEST_SUITE("mech_step") {
  TEST_CASE("zero-increment energy value") {
    MechStepInput in = basic_input(6);
    in.y_prev = perturbed_id(in.grid, 0.2 * in.grid.dx, 5);
    const double J = assemble_mech_energy(in.y_prev, in);
    CHECK(J == doctest::Approx(mech_base_energy(in, in.y_prev)).epsilon(1e-14));

    // nonzero delayed velocity adds exactly the inertia penalty of the rest state
    VectorField v(in.grid);
    OracleRng rng(6);
    for (int j = 1; j <= in.grid.n - 2; ++j)
      for (int i = 1; i <= in.grid.n - 2; ++i)
        v.set(i, j, Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    MechStepInput in2 = in;
    in2.delayed_velocity = v;
    const double J2 = assemble_mech_energy(in.y_prev, in2);
    const double penalty = 0.5 * in.rho * in.tau / in.h * norm2_nodes(in.grid, v);
    CHECK(J2 - J == doctest::Approx(penalty).epsilon(1e-13));
  }

  TEST_CASE("domain error on nonpositive determinant") {
    MechStepInput in = basic_input(5);
    VectorField y = identity_deformation(in.grid);
    y.set(2, 2, Vec2(0.0, 0.0));  // collapses surrounding cells
    CHECK(min_det(in.grid, y) <= 0.0);
    CHECK_THROWS_AS(assemble_mech_energy(y, in), std::domain_error);
    CHECK_THROWS_AS(solve_mech_step(in, y), std::invalid_argument);
  }

  TEST_CASE("input validation") {
    MechStepInput in = basic_input(5);
    in.tau = in.h;
    CHECK_THROWS_AS(in.validate(), std::invalid_argument);
    in = basic_input(5);
    in.rho = 0.0;
    CHECK_THROWS_AS(in.validate(), std::invalid_argument);
  }

  TEST_CASE("gradient of the inertia penalty at the rest state") {
    MechStepInput in = basic_input(6);
    OracleRng rng(7);
    for (int j = 1; j <= in.grid.n - 2; ++j)
      for (int i = 1; i <= in.grid.n - 2; ++i)
        in.delayed_velocity.set(i, j, Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    // at y = y_prev = id the stress terms are discretely divergence-free, the
    // rate terms vanish, so only the inertia penalty contributes
    const VectorField grad = grad_mech_energy(identity_deformation(in.grid), in);
    for (int j = 1; j <= in.grid.n - 2; ++j)
      for (int i = 1; i <= in.grid.n - 2; ++i) {
        const Vec2 expected =
            -in.rho / in.h * in.grid.node_weight(i, j) * in.delayed_velocity.at(i, j);
        CHECK((grad.at(i, j) - expected).norm() <= 1e-12);
      }
  }

  TEST_CASE("finite-difference anchor of the full gradient") {
    MechStepInput in = basic_input(4);
    in.y_prev = perturbed_id(in.grid, 0.05 * in.grid.dx, 8);
    OracleRng rng(9);
    for (int j = 0; j < in.grid.n; ++j)
      for (int i = 0; i < in.grid.n; ++i)
        in.f_avg.set(i, j, Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    const VectorField y = perturbed_id(in.grid, 0.08 * in.grid.dx, 10);
    const VectorField an = grad_mech_energy(y, in);
    double gscale = 0.0;
    for (int j = 1; j <= in.grid.n - 2; ++j)
      for (int i = 1; i <= in.grid.n - 2; ++i)
        gscale = std::max(gscale, an.at(i, j).cwiseAbs().maxCoeff());
    double max_err = 0.0;
    for (int j = 1; j <= in.grid.n - 2; ++j)
      for (int i = 1; i <= in.grid.n - 2; ++i)
        for (int c = 0; c < 2; ++c) {
          VectorField yp = y, ym = y;
          yp.comp(i, j, c) += 1e-5;
          ym.comp(i, j, c) -= 1e-5;
          const double fd = (assemble_mech_energy(yp, in) - assemble_mech_energy(ym, in)) / 2e-5;
          max_err = std::max(max_err, std::abs(fd - an.at(i, j)[c]) / (1.0 + gscale));
        }
    CHECK(max_err < 1e-6);
  }

  TEST_CASE("equilibrium: identity is the converged minimizer") {
    MechStepInput in = basic_input(8);
    const auto [y, rep] = solve_mech_step(in);
    CHECK(rep.converged);
    CHECK(rep.iterations == 0);  // already stationary
    for (size_t m = 0; m < y.v.size(); ++m) CHECK(y.v[m] == in.y_prev.v[m]);
    CHECK(rep.residual <= 1e-11);
  }

  TEST_CASE("forced step: convergence, descent, competitor inequality") {
    MechStepInput in = basic_input(8, 1.0 / 320.0, 1.0 / 40.0);
    for (int j = 0; j < in.grid.n; ++j)
      for (int i = 0; i < in.grid.n; ++i) {
        const double r2 = std::pow(in.grid.x1(i) - 0.5, 2) + std::pow(in.grid.x2(j) - 0.5, 2);
        in.f_avg.set(i, j, Vec2(0.0, -2.0 * std::exp(-r2 / 0.045)));
      }
    const auto [y, rep] = solve_mech_step(in);
    CHECK(rep.converged);
    CHECK(rep.residual <= detail::kMechTol);
    CHECK(rep.min_det > 0.0);
    CHECK(rep.energy_final <= rep.energy_initial + 1e-12);
    CHECK(assemble_mech_energy(y, in) <= assemble_mech_energy(in.y_prev, in) + 1e-12);
    CHECK(mech_residual(y, in) <= detail::kMechTol);
    // the step actually moved
    double moved = 0.0;
    for (size_t m = 0; m < y.v.size(); ++m)
      moved = std::max(moved, std::abs(y.v[m] - in.y_prev.v[m]));
    CHECK(moved > 1e-6);
  }

  TEST_CASE("multistart agreement on the one-interior-node grid") {
    MechStepInput in = basic_input(3);
    in.eps = 0.0;  // no interior edges at n = 3 anyway
    OracleRng rng(11);
    in.f_avg.set(1, 1, Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    const auto [y, rep] = solve_mech_step(in);
    const MultistartResult oracle = multistart_min_oracle(in, 1500, 99);
    CHECK(rep.energy_final <= oracle.best_energy + 1e-8);

    // equilibrium argmin is the identity
    MechStepInput eq = basic_input(3);
    const MultistartResult eq_oracle = multistart_min_oracle(eq, 1500, 100);
    CHECK((eq_oracle.argmin.at(1, 1) - Vec2(0.5, 0.5)).norm() <= 1e-6);
  }

  TEST_CASE("pure stored energy plus load on the 2x2-interior grid") {
    // increment penalties switched off as far as the input allows
    MechStepInput in = basic_input(4, 1e6, 2e6);
    in.rho = 1e-12;
    in.eps = 0.0;
    OracleRng rng(13);
    for (int j = 1; j <= 2; ++j)
      for (int i = 1; i <= 2; ++i)
        in.f_avg.set(i, j, Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)));
    const auto [y, rep] = solve_mech_step(in);
    const MultistartResult oracle = multistart_min_oracle(in, 800, 101);
    CHECK(std::abs(rep.energy_final - oracle.best_energy) <= 1e-6);
  }
}
