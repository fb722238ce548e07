#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvsolid/grid.hpp"
#include "tvsolid/material.hpp"
#include "tvsolid/mech_step.hpp"

namespace tvsolid {

struct OracleReport {
  std::string name;
  int samples = 0;
  double max_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::uint64_t seed = 0;
  double observed_constant = 0.0;  // tightest admissible constant for bound audits
  std::string failure_detail;      // inputs and values of the worst sample on failure
};

/// Deterministic per-sample RNG stream derived from a master seed.
struct OracleRng {
  std::uint64_t state;
  explicit OracleRng(std::uint64_t seed, std::uint64_t stream = 0)
      : state(seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1))) {
    next();
    next();
  }
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  double uniform() { return static_cast<double>(next() >> 11) * (1.0 / 9007199254740992.0); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
};

Mat2 random_rotation(OracleRng& rng);
Mat2 random_gl_plus(OracleRng& rng, double min_det = 0.1);  // det-positive sample near Id

/// Generic central-difference check of an analytic matrix-gradient, usable
/// with injected (possibly corrupted) derivatives for mutation tests.
OracleReport fd_check_matrix_gradient(const std::string& name, std::uint64_t seed, int samples,
                                      const std::function<Mat2(OracleRng&)>& sample_F,
                                      const std::function<double(const Mat2&)>& f,
                                      const std::function<Mat2(const Mat2&)>& analytic,
                                      double step = 1e-5, double tol = 1e-6);

/// Central-difference checks of every analytic derivative in material_models
/// plus the gradient of the assembled mechanical functional on a small grid.
std::vector<OracleReport> fd_gradient_suite(std::uint64_t seed, const MaterialParams& mat);

/// Rotation-invariance checks (frame indifference) on 1000 samples.
std::vector<OracleReport> symmetry_suite(std::uint64_t seed, const MaterialParams& mat);

/// Structural identities: xi = 2R, viscous-stress linearity, convexity of the
/// strain-gradient profile, internal-energy inversion round trip.
std::vector<OracleReport> identity_suite(std::uint64_t seed, const MaterialParams& mat);

/// Growth/bound assumptions with the configured C0; reports the tightest
/// observed constants.
std::vector<OracleReport> bound_audit_suite(std::uint64_t seed, const MaterialParams& mat);

struct MultistartResult {
  double best_energy = 0.0;
  VectorField argmin;
  int polished_starts = 0;
};

/// Brute-force minimization reference for tiny grids: random det-positive
/// initializations polished by finite-difference gradient descent (no shared
/// derivative code with the Newton solver).
MultistartResult multistart_min_oracle(const MechStepInput& in, int n_starts, std::uint64_t seed);

std::string reports_to_json(const std::vector<OracleReport>& reports);

}  // namespace tvsolid
