#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "tvsolid/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"tvsolid: staggered thermo-viscoelastodynamics simulator"};
  app.set_version_flag("--version", std::string(tvsolid::kVersion));
  app.require_subcommand(1);

  std::string config_path, out_dir, mode = "tau";
  int levels = 3;
  bool parallel = false;
  std::uint64_t seed = 12345;

  CLI::App* run_cmd = app.add_subcommand("run", "run one simulation from a config file");
  run_cmd->add_option("config", config_path, "config file path")->required();
  run_cmd->add_option("outdir", out_dir, "output directory")->required();

  CLI::App* study_cmd = app.add_subcommand("study", "refinement study across a parameter ladder");
  study_cmd->add_option("config", config_path, "config file path")->required();
  study_cmd->add_option("--mode", mode, "ladder parameter: tau, h or eps")
      ->check(CLI::IsMember({"tau", "h", "eps"}));
  study_cmd->add_option("--levels", levels, "number of refinement levels");
  study_cmd->add_flag("--parallel", parallel, "run the levels concurrently");
  study_cmd->add_option("outdir", out_dir, "output directory")->required();

  CLI::App* verify_cmd = app.add_subcommand("verify", "run the verification oracles");
  verify_cmd->add_option("--seed", seed, "master oracle seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? tvsolid::kExitConfig : tvsolid::kExitOk;
  }

  try {
    if (run_cmd->parsed()) return tvsolid::cmd_run(config_path, out_dir);
    if (study_cmd->parsed()) return tvsolid::cmd_study(config_path, mode, levels, out_dir, parallel);
    if (verify_cmd->parsed()) return tvsolid::cmd_verify(seed);
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return tvsolid::kExitInternal;
  }
  return tvsolid::kExitInternal;
}
