#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "tvsolid/grid.hpp"
#include "tvsolid/mech_step.hpp"
#include "tvsolid/thermal_step.hpp"

namespace tvsolid {

/// The full staggered-scheme history: states y^(k), theta^(k), w^(k) for
/// k = 0..N, the affine ramp for k in [-h/tau, 0] (represented through the
/// constant ramp velocity), and the usual three interpolants as views.
struct Trajectory {
  Grid2D grid;
  double tau = 0.0;
  int delay_steps = 0;               // h / tau
  VectorField ramp_velocity;         // y0' (identically the ramp difference quotient)
  std::vector<VectorField> y;        // k = 0..N
  std::vector<ScalarField> theta;    // k = 0..N
  std::vector<std::vector<double>> w;  // per-cell internal energy, k = 0..N
  std::vector<MechSolveReport> mech_reports;        // k = 1..N at index k-1
  std::vector<ThermalSolveReport> thermal_reports;  // k = 1..N at index k-1

  int num_steps() const { return static_cast<int>(y.size()) - 1; }

  /// State at index k, valid for k >= -delay_steps (ramp states materialized).
  VectorField y_at(int k) const {
    if (k >= 0) return y.at(static_cast<size_t>(k));
    if (k < -delay_steps) throw std::out_of_range("Trajectory::y_at: k before the ramp");
    VectorField out = y.front();
    for (int j = 0; j < grid.n; ++j)
      for (int i = 0; i < grid.n; ++i)
        out.set(i, j, out.at(i, j) + (k * tau) * ramp_velocity.at(i, j));
    return out;
  }

  /// delta_tau y^(k); on the ramp this is the initial velocity exactly.
  VectorField velocity(int k) const {
    if (k <= 0) return ramp_velocity;
    VectorField out = y.at(static_cast<size_t>(k));
    const VectorField& prev = y.at(static_cast<size_t>(k) - 1);
    for (size_t m = 0; m < out.v.size(); ++m) out.v[m] = (out.v[m] - prev.v[m]) / tau;
    return out;
  }

  int index_right(double t) const {
    const double k = t / tau;
    const long kr = std::lround(k);
    if (std::abs(k - kr) <= 1e-9) return static_cast<int>(kr);
    return static_cast<int>(std::ceil(k));
  }

  /// Piecewise-constant right interpolant y-bar (value y^(k) on ((k-1)tau, k tau]).
  VectorField y_right(double t) const { return y_at(index_right(t)); }

  /// Piecewise-constant left interpolant (value y^(k-1) on [(k-1)tau, k tau)).
  VectorField y_left(double t) const {
    const double k = t / tau;
    const long kr = std::lround(k);
    if (std::abs(k - kr) <= 1e-9) return y_at(static_cast<int>(kr));
    return y_at(static_cast<int>(std::floor(k)));
  }

  /// Piecewise-affine interpolant y-hat.
  VectorField y_affine(double t) const {
    const double k = t / tau;
    const long kr = std::lround(k);
    if (std::abs(k - kr) <= 1e-9) return y_at(static_cast<int>(kr));
    const int kc = static_cast<int>(std::ceil(k));
    const double lam = k - (kc - 1);
    VectorField a = y_at(kc - 1);
    const VectorField b = y_at(kc);
    for (size_t m = 0; m < a.v.size(); ++m) a.v[m] = (1.0 - lam) * a.v[m] + lam * b.v[m];
    return a;
  }

  /// d/dt y-hat on the open interval containing t (equals delta_tau y^(k)).
  VectorField velocity_at(double t) const { return velocity(index_right(t)); }
};

}  // namespace tvsolid
