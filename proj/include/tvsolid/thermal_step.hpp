#pragma once

#include <limits>
#include <utility>
#include <vector>

#include "tvsolid/grid.hpp"
#include "tvsolid/material.hpp"
#include "tvsolid/mech_step.hpp"

namespace tvsolid {

/// Per-interior-edge scalar values (horizontal family first, then vertical).
struct EdgeScalars {
  std::vector<double> hor;
  std::vector<double> ver;
};

/// Frozen data of one thermal increment. The sources are exactly the ones the
/// scheme writes: dissipation and coupling at the old state, the truncated
/// eps-source on edges, conductivity pulled back at the old state.
struct ThermalStepInput {
  Grid2D grid;
  MaterialParams mat;
  VectorField y_new;
  VectorField y_prev;
  ScalarField theta_prev;
  ScalarField theta_b_avg;  // interval average of the external temperature (boundary nodes)
  double tau = 0.0;
  double eps = 0.0;
  double kappa = 0.0;
  std::vector<double> dissipation_source;  // per cell, nonnegative
  EdgeScalars eps_source;                  // per edge, in [0, 1/tau]
  std::vector<double> coupling_source;     // per cell

  void validate() const;
};

/// Builds a ThermalStepInput with the spec's source definitions from the two
/// deformation states and the previous temperature.
ThermalStepInput make_thermal_input(const Grid2D& grid, const MaterialParams& mat,
                                    const VectorField& y_new, const VectorField& y_prev,
                                    const ScalarField& theta_prev, const ScalarField& theta_b_avg,
                                    double tau, double eps, double kappa);

struct ThermalSolveReport {
  int iterations = 0;
  double residual = std::numeric_limits<double>::infinity();  // ||g||_2 / (1+|Phi|)
  double min_theta = 0.0;   // before clamping
  int clamped_nodes = 0;
  double clamp_magnitude = 0.0;
  bool converged = false;
  bool used_projected_gradient = false;
};

/// Value of the convex per-step functional; throws std::domain_error on a
/// negative node.
double assemble_thermal_functional(const ScalarField& theta, const ThermalStepInput& in);

struct ThermalResidual {
  double max_row = 0.0;            // max |EL row| over the nodal test basis (KKT-aware)
  double scaled = 0.0;             // ||rows||_2 / (1 + |Phi|)
  double phi1_row = 0.0;           // sum of rows == discrete internal-energy balance residual
  std::vector<double> rows;        // one entry per node
};

/// Euler-Lagrange residual of the thermal step at theta, per nodal test
/// function. The phi == 1 component is the row sum.
ThermalResidual residual_thermal_EL(const ScalarField& theta, const ThermalStepInput& in);

std::pair<ScalarField, ThermalSolveReport> solve_thermal_step(const ThermalStepInput& in,
                                                              const ScalarField& theta_init);

inline std::pair<ScalarField, ThermalSolveReport> solve_thermal_step(const ThermalStepInput& in) {
  return solve_thermal_step(in, in.theta_prev);
}

/// Quadrature fallback for the primitive int_0^theta W^in(F,s) ds; must match
/// the closed form to 1e-10 (adaptive Simpson).
double win_primitive_quadrature(const MaterialParams& m, const Mat2& F, double theta);

namespace detail {
constexpr double kThermalTol = 1e-11;
constexpr int kThermalMaxIter = 100;
constexpr double kThetaClampTol = 1e-10;   // clamp floor
constexpr double kThetaHardFloor = -1e-6;  // below this the step fails
}  // namespace detail

}  // namespace tvsolid
