#pragma once

#include <functional>
#include <vector>

#include "tvsolid/scheme.hpp"
#include "tvsolid/trajectory.hpp"

namespace tvsolid {

/// One ledger row per step. The CSV column set is fixed (see cli_io); the
/// trailing fields are extra in-memory diagnostics.
struct LedgerRow {
  int step = 0;
  double t = 0.0;
  double M = 0.0;             // mechanical energy W^el + H
  double Wcpl = 0.0;
  double Win_total = 0.0;     // integral of w
  double E_total = 0.0;       // M + Win_total
  double kinetic_window = 0.0;
  double diss_step = 0.0;     // 2 tau R_eps of the increment
  double diss_cum = 0.0;
  double flux_cum = 0.0;      // cumulative kappa-boundary inflow
  double work_cum = 0.0;      // cumulative force work
  double res_internal = 0.0;
  double res_mech_identity = 0.0;
  double drift_total = 0.0;
  double V_k = 0.0;
  double G_k = 0.0;
  double min_theta = 0.0;
  double min_det = 0.0;
  double monitor_weighted_H1 = 0.0;     // cumulative weighted third-gradient norm
  double monitor_eps_strainrate = 0.0;  // cumulative eps-weighted strain-rate norm

  // diagnostics beyond the CSV schema
  double res_internal_scale = 1.0;
  double res_mech_scale = 1.0;
  double h_convexity_violation = 0.0;
  double lambda_convexity_const = 0.0;
  double mech_slack = 0.0;         // slack of the mechanical energy inequality
  double delay_diss_cum = 0.0;     // cumulative time-delay inertia dissipation
  double trunc_deficit_cum = 0.0;  // cumulative eps-truncation deficit
};

struct EnergyLedger {
  std::vector<LedgerRow> rows;  // index k = 0..N
};

struct AprioriMonitors {
  double max_G = 0.0;
  double V_final = 0.0;
  double eps_strainrate = 0.0;
  double sup_M = 0.0;
  double min_det = 0.0;
  double weighted_H1 = 0.0;
};

/// Separable space-time test functions for the weak heat formulation.
struct SpatialTestFn {
  std::function<double(double, double)> value;
  std::function<Vec2(double, double)> grad;
  std::function<double(double, double)> laplacian;
};

struct TimeTestFn {
  std::function<double(double)> value;  // must vanish at t = T
};

EnergyLedger build_ledger(const Trajectory& traj, const SchemeConfig& cfg);

/// phi == 1 test of the thermal Euler-Lagrange system at step k; returns the
/// signed residual, with the natural magnitude of the balance in *scale.
double step_internal_balance(const Trajectory& traj, const SchemeConfig& cfg, int k,
                             double* scale = nullptr);

/// z = delta_tau y^(k) test of the converged mechanical system at step k.
double step_mechanical_identity(const Trajectory& traj, const SchemeConfig& cfg, int k,
                                double* scale = nullptr);

/// D(k) = [E + kinetic](k) - [E + kinetic](0) - flux_cum(k) - work_cum(k).
std::vector<double> total_balance_drift(const EnergyLedger& ledger);

AprioriMonitors apriori_monitors(const EnergyLedger& ledger);

/// Discrete residual of the regularization-free weak heat formulation for the
/// separable test psi(x) eta(t), eta(T) = 0.
double weak_heat_residual(const Trajectory& traj, const SchemeConfig& cfg,
                          const SpatialTestFn& psi, const TimeTestFn& eta);

/// Interval average of the dead force / external temperature by 3-point Gauss
/// quadrature over ((k-1)tau, k tau].
VectorField time_average_force(const SchemeConfig& cfg, const Grid2D& grid, int k, double tau);
ScalarField theta_b_average(const SchemeConfig& cfg, const Grid2D& grid, int k, double tau);

/// The mechanical step input the scheme used at step k (rebuilt exactly).
MechStepInput mech_input_at(const Trajectory& traj, const SchemeConfig& cfg, int k);

}  // namespace tvsolid
