#pragma once

#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

#include "tvsolid/grid.hpp"
#include "tvsolid/material.hpp"

namespace tvsolid {

/// Thrown when a step solver cannot produce an admissible converged state.
struct StepFailure : std::runtime_error {
  explicit StepFailure(const std::string& what) : std::runtime_error(what) {}
};

/// Frozen data of one mechanical increment: previous state, delayed velocity,
/// interval-averaged force, and the scheme scales.
struct MechStepInput {
  Grid2D grid;
  MaterialParams mat;
  VectorField y_prev;
  ScalarField theta_prev;
  VectorField delayed_velocity;  // delta_tau y at the delayed index
  VectorField f_avg;             // nodal interval average of the dead force
  double tau = 0.0;
  double h = 0.0;
  double eps = 0.0;
  double rho = 0.0;

  void validate() const;
};

struct MechSolveReport {
  int iterations = 0;
  int backtracks = 0;
  double residual = std::numeric_limits<double>::infinity();  // ||g||_2 / (1+|J|)
  double min_det = 0.0;        // at the returned state
  double min_det_path = 0.0;   // smallest det over accepted iterates
  double energy_initial = 0.0;
  double energy_final = 0.0;
  bool converged = false;
};

/// Value of the per-step functional; throws std::domain_error if any cell has
/// nonpositive determinant.
double assemble_mech_energy(const VectorField& y, const MechStepInput& in);

/// Exact derivative of assemble_mech_energy with respect to interior nodal
/// values; boundary entries are zero.
VectorField grad_mech_energy(const VectorField& y, const MechStepInput& in);

/// Scaled first-order residual ||g||_2 / (1 + |J|) at y.
double mech_residual(const VectorField& y, const MechStepInput& in);

/// Damped Newton minimization of the step functional over interior nodes.
std::pair<VectorField, MechSolveReport> solve_mech_step(const MechStepInput& in,
                                                        const VectorField& y_init);

inline std::pair<VectorField, MechSolveReport> solve_mech_step(const MechStepInput& in) {
  return solve_mech_step(in, in.y_prev);
}

namespace detail {
/// Convergence / iteration limits of the mechanical solver.
constexpr double kMechTol = 1e-8;
constexpr int kMechMaxIter = 200;
constexpr int kMechMaxBacktracks = 60;
}  // namespace detail

}  // namespace tvsolid
