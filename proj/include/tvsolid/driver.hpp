#pragma once

#include <utility>

#include "tvsolid/audit.hpp"
#include "tvsolid/scheme.hpp"
#include "tvsolid/trajectory.hpp"

namespace tvsolid {

struct RegularizationReport {
  int passes = 0;
  double w2p_distance = 0.0;     // discrete W^{2,p} distance to the raw data
  bool zero_extension = true;    // mollifier used the natural-BC zero extension
};

/// Initial-data regularization: solve the discrete Dirichlet Poisson problem
/// Lap y = mollified(Lap y0) with y = id on the boundary. Zero passes
/// reproduce y0 exactly.
std::pair<VectorField, RegularizationReport> regularize_initial_data(const Grid2D& grid,
                                                                     const VectorField& y0,
                                                                     int mollify_passes,
                                                                     double p_norm = 4.0);

/// Discrete W^{2,p} norm of a nodal field (values and gradients at cell
/// centers, Laplacians at interior nodes).
double w2p_norm(const Grid2D& grid, const VectorField& u, double p);

VectorField build_initial_deformation(const Grid2D& grid, const InitialDeformationSpec& spec);
VectorField build_initial_velocity(const Grid2D& grid, const InitialVelocitySpec& spec);
ScalarField build_initial_temperature(const Grid2D& grid, const InitialTemperatureSpec& spec);

struct RunResult {
  Trajectory trajectory;
  EnergyLedger ledger;
  RegularizationReport regularization;
};

/// Runs the full staggered scheme: validation, initial ramp, k-loop of
/// mechanical + thermal steps, ledger. Step failures carry the step index.
RunResult run(const SchemeConfig& cfg);

}  // namespace tvsolid
