#pragma once

#include <cstdint>
#include <string>

#include "tvsolid/driver.hpp"
#include "tvsolid/scheme.hpp"

namespace tvsolid {

inline constexpr const char* kVersion = "0.1.0";

// exit-code taxonomy (total over all termination paths)
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitStepFailure = 3;
inline constexpr int kExitInvariant = 4;

SchemeConfig parse_config_text(const std::string& text);
SchemeConfig parse_config_file(const std::string& path);
std::string config_to_text(const SchemeConfig& cfg);

/// FNV-1a hash of the raw config bytes, hex-encoded.
std::string fnv1a_hex(const std::string& bytes);

void write_ledger_csv(const std::string& path, const EnergyLedger& ledger);
void write_fields_csv(const std::string& path, const Trajectory& traj, int step);
void write_diagnostics_csv(const std::string& path, const Trajectory& traj);

/// Hard per-run invariants (the exit-0 gate of cmd_run).
struct RunInvariants {
  double max_res_internal_rel = 0.0;  // res / (1e-8 * scale), must stay <= 1
  double max_res_mech_rel = 0.0;
  double min_theta = 0.0;
  double min_det = 0.0;
  double max_competitor_violation = 0.0;
  bool pass = false;
};

RunInvariants evaluate_run_invariants(const RunResult& result);

int cmd_run(const std::string& config_path, const std::string& out_dir);
int cmd_study(const std::string& config_path, const std::string& mode, int levels,
              const std::string& out_dir, bool parallel = false);
int cmd_verify(std::uint64_t seed);

}  // namespace tvsolid
