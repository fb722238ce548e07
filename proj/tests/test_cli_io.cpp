#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "tvsolid/cli_io.hpp"

using namespace tvsolid;
namespace fs = std::filesystem;

namespace {

std::string equilibrium_config_text() {
  return "[scheme]\n"
         "T = 0.02\nh = 0.01\ntau = 0.00125\neps = 1e-3\nrho = 1\nkappa = 1\nn = 6\n"
         "snapshot_every = 4\n"
         "[initial]\ny0 = id\nv0 = zero\ntheta0 = 1.0\n"
         "[forcing]\nf = zero\ntheta_b = 1.0\n";
}

fs::path temp_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("tvsolid_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream os(p);
  os << text;
  return p.string();
}

}  // namespace

TEST_SUITE("cli_io") {
  TEST_CASE("config parsing: round trip and defaults") {
    const SchemeConfig cfg = parse_config_text(equilibrium_config_text());
    CHECK(cfg.n == 6);
    CHECK(cfg.tau == doctest::Approx(0.00125));
    CHECK(cfg.snapshot_every == 4);
    CHECK(cfg.force.kind == ForceSpec::Kind::Zero);

    const SchemeConfig back = parse_config_text(config_to_text(cfg));
    CHECK(back.T == cfg.T);
    CHECK(back.tau == cfg.tau);
    CHECK(back.material.alpha == cfg.material.alpha);
    CHECK(back.theta_b.value == cfg.theta_b.value);
  }

  TEST_CASE("config parsing: hard errors") {
    CHECK_THROWS_AS(parse_config_text("[scheme]\nbogus_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[nosuchsection]\nT = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("T = 1\n"), ConfigError);  // key outside section
    CHECK_THROWS_AS(parse_config_text("[scheme]\nT = abc\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[scheme]\nT\n"), ConfigError);

    // divisibility violations are named
    try {
      parse_config_text("[scheme]\nT = 1\nh = 0.5\ntau = 0.3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("h/tau") != std::string::npos);
    }
    CHECK_NOTHROW(parse_config_text("[scheme]\nT = 1\nh = 0.5\ntau = 0.125\n"));
  }

  TEST_CASE("fnv1a is stable") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == fnv1a_hex("a"));
    CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
  }

  TEST_CASE("cmd_run on the equilibrium scenario") {
    const fs::path dir = temp_dir("run_eq");
    const std::string cfg_path = write_config(dir, equilibrium_config_text());
    const fs::path out = dir / "out";
    CHECK(cmd_run(cfg_path, out.string()) == kExitOk);

    REQUIRE(fs::exists(out / "ledger.csv"));
    REQUIRE(fs::exists(out / "manifest.json"));
    REQUIRE(fs::exists(out / "diagnostics.csv"));
    REQUIRE(fs::exists(out / "fields_k0.csv"));
    REQUIRE(fs::exists(out / "fields_k16.csv"));
    REQUIRE(fs::exists(out / "fields_k4.csv"));

    // schema headers are embedded
    std::ifstream led(out / "ledger.csv");
    std::string line;
    std::getline(led, line);
    CHECK(line == "# schema=ledger.v1");
    std::getline(led, line);
    CHECK(line.find("res_internal") != std::string::npos);

    // equilibrium residual columns are all zero to 1e-12
    while (std::getline(led, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::vector<double> cols;
      while (std::getline(ss, cell, ',')) cols.push_back(std::stod(cell));
      REQUIRE(cols.size() == 20);
      CHECK(std::abs(cols[11]) <= 1e-12);  // res_internal
      CHECK(std::abs(cols[12]) <= 1e-12);  // res_mech_identity
      CHECK(std::abs(cols[13]) <= 1e-12);  // drift_total
    }

    nlohmann::json manifest;
    std::ifstream(out / "manifest.json") >> manifest;
    CHECK(manifest["invariants"]["pass"] == true);
    CHECK(manifest["config_hash"].get<std::string>().size() == 16);
    for (const auto& f : manifest["outputs"]) CHECK(fs::exists(out / f.get<std::string>()));
  }

  TEST_CASE("cmd_run exit codes for bad inputs") {
    const fs::path dir = temp_dir("run_bad");
    CHECK(cmd_run((dir / "missing.cfg").string(), (dir / "out").string()) == kExitConfig);
    const std::string bad = write_config(dir, "[scheme]\nT = 1\nh = 0.5\ntau = 0.3\n");
    CHECK(cmd_run(bad, (dir / "out").string()) == kExitConfig);
  }

  TEST_CASE("run invariants on a forced run") {
    SchemeConfig cfg = parse_config_text(equilibrium_config_text());
    cfg.force.kind = ForceSpec::Kind::Gaussian;
    cfg.force.fy = -2.0;
    const RunResult res = run(cfg);
    const RunInvariants inv = evaluate_run_invariants(res);
    CHECK(inv.pass);
    CHECK(inv.max_res_internal_rel <= 1.0);
    CHECK(inv.max_res_mech_rel <= 1.0);
    CHECK(inv.min_det > 0.0);
    CHECK(inv.min_theta >= -1e-10);
  }
}
