#include "tvsolid/cli_io.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "nlohmann/json.hpp"
#include "tvsolid/oracles.hpp"

namespace tvsolid {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& val) {
  try {
    size_t pos = 0;
    const double x = std::stod(val, &pos);
    if (pos != val.size()) throw std::invalid_argument("trailing garbage");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: cannot parse numeric value for '" + key + "': " + val);
  }
}

int parse_int(const std::string& key, const std::string& val) {
  const double x = parse_double(key, val);
  if (std::abs(x - std::lround(x)) > 1e-12)
    throw ConfigError("config: expected integer for '" + key + "': " + val);
  return static_cast<int>(std::lround(x));
}

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"scheme", {"T", "tau", "h", "eps", "rho", "kappa", "n", "snapshot_every"}},
      {"material", {"p", "mu", "gamma", "q_det", "c_V", "alpha", "kappa0", "C0"}},
      {"initial",
       {"y0", "y0_amp_x", "y0_amp_y", "mollify_passes", "v0", "v0_amp_x", "v0_amp_y", "theta0",
        "theta0_bump"}},
      {"forcing",
       {"f", "f_x", "f_y", "f_center_x", "f_center_y", "f_width", "f_time", "theta_b",
        "theta_b_rate"}},
  };
  return keys;
}

void apply_key(SchemeConfig& cfg, const std::string& section, const std::string& key,
               const std::string& val) {
  if (section == "scheme") {
    if (key == "T") cfg.T = parse_double(key, val);
    else if (key == "tau") cfg.tau = parse_double(key, val);
    else if (key == "h") cfg.h = parse_double(key, val);
    else if (key == "eps") cfg.eps = parse_double(key, val);
    else if (key == "rho") cfg.rho = parse_double(key, val);
    else if (key == "kappa") cfg.kappa = parse_double(key, val);
    else if (key == "n") cfg.n = parse_int(key, val);
    else if (key == "snapshot_every") cfg.snapshot_every = parse_int(key, val);
  } else if (section == "material") {
    if (key == "p") cfg.material.p = parse_double(key, val);
    else if (key == "mu") cfg.material.mu = parse_double(key, val);
    else if (key == "gamma") cfg.material.gamma = parse_double(key, val);
    else if (key == "q_det") cfg.material.q_det = parse_double(key, val);
    else if (key == "c_V") cfg.material.c_V = parse_double(key, val);
    else if (key == "alpha") cfg.material.alpha = parse_double(key, val);
    else if (key == "kappa0") cfg.material.kappa0 = parse_double(key, val);
    else if (key == "C0") cfg.material.C0 = parse_double(key, val);
  } else if (section == "initial") {
    if (key == "y0") {
      if (val == "id") cfg.y0.kind = InitialDeformationSpec::Kind::Id;
      else if (val == "bump") cfg.y0.kind = InitialDeformationSpec::Kind::Bump;
      else throw ConfigError("config: y0 must be 'id' or 'bump', got '" + val + "'");
    } else if (key == "y0_amp_x") cfg.y0.ax = parse_double(key, val);
    else if (key == "y0_amp_y") cfg.y0.ay = parse_double(key, val);
    else if (key == "mollify_passes") cfg.y0.mollify_passes = parse_int(key, val);
    else if (key == "v0") {
      if (val == "zero") cfg.v0.kind = InitialVelocitySpec::Kind::Zero;
      else if (val == "bump") cfg.v0.kind = InitialVelocitySpec::Kind::Bump;
      else throw ConfigError("config: v0 must be 'zero' or 'bump', got '" + val + "'");
    } else if (key == "v0_amp_x") cfg.v0.ax = parse_double(key, val);
    else if (key == "v0_amp_y") cfg.v0.ay = parse_double(key, val);
    else if (key == "theta0") cfg.theta0.value = parse_double(key, val);
    else if (key == "theta0_bump") cfg.theta0.bump_amp = parse_double(key, val);
  } else if (section == "forcing") {
    if (key == "f") {
      if (val == "zero") cfg.force.kind = ForceSpec::Kind::Zero;
      else if (val == "const") cfg.force.kind = ForceSpec::Kind::Constant;
      else if (val == "gauss") cfg.force.kind = ForceSpec::Kind::Gaussian;
      else throw ConfigError("config: f must be 'zero', 'const' or 'gauss', got '" + val + "'");
    } else if (key == "f_x") cfg.force.fx = parse_double(key, val);
    else if (key == "f_y") cfg.force.fy = parse_double(key, val);
    else if (key == "f_center_x") cfg.force.cx = parse_double(key, val);
    else if (key == "f_center_y") cfg.force.cy = parse_double(key, val);
    else if (key == "f_width") cfg.force.width = parse_double(key, val);
    else if (key == "f_time") {
      if (val == "const") cfg.force.time = ForceSpec::Time::Constant;
      else if (val == "linear") cfg.force.time = ForceSpec::Time::Linear;
      else throw ConfigError("config: f_time must be 'const' or 'linear', got '" + val + "'");
    } else if (key == "theta_b") cfg.theta_b.value = parse_double(key, val);
    else if (key == "theta_b_rate") cfg.theta_b.rate = parse_double(key, val);
  }
}

nlohmann::json invariants_to_json(const RunInvariants& inv) {
  nlohmann::json j;
  j["max_res_internal_rel"] = inv.max_res_internal_rel;
  j["max_res_mech_rel"] = inv.max_res_mech_rel;
  j["min_theta"] = inv.min_theta;
  j["min_det"] = inv.min_det;
  j["max_competitor_violation"] = inv.max_competitor_violation;
  j["pass"] = inv.pass;
  return j;
}

void write_manifest(const std::string& path, const std::string& config_text,
                    const RunResult& result, const RunInvariants& inv,
                    const std::vector<std::string>& outputs, double wall_clock_s) {
  nlohmann::json j;
  j["schema"] = "manifest.v1";
  j["code_version"] = kVersion;
  j["config_hash"] = fnv1a_hex(config_text);
  j["seed"] = 0;  // runs are deterministic; no RNG is consumed
  j["wall_clock_s"] = wall_clock_s;
  j["outputs"] = outputs;
  j["invariants"] = invariants_to_json(inv);

  int pos_int = 0, neg_int = 0, pos_mech = 0, neg_mech = 0;
  double max_slack = 0.0, max_hviol = 0.0, max_lambda = 0.0;
  for (const auto& r : result.ledger.rows) {
    if (r.step == 0) continue;
    (r.res_internal >= 0 ? pos_int : neg_int)++;
    (r.res_mech_identity >= 0 ? pos_mech : neg_mech)++;
    max_slack = std::max(max_slack, r.mech_slack);
    max_hviol = std::max(max_hviol, r.h_convexity_violation);
    max_lambda = std::max(max_lambda, r.lambda_convexity_const);
  }
  j["residual_signs"] = {{"internal_pos", pos_int},
                         {"internal_neg", neg_int},
                         {"mech_pos", pos_mech},
                         {"mech_neg", neg_mech}};
  j["mech_inequality_max_slack"] = max_slack;
  j["h_convexity_max_violation"] = max_hviol;
  j["lambda_convexity_max_constant"] = max_lambda;

  const AprioriMonitors mo = apriori_monitors(result.ledger);
  j["monitors"] = {{"max_G", mo.max_G},
                   {"V_final", mo.V_final},
                   {"eps_strainrate", mo.eps_strainrate},
                   {"sup_M", mo.sup_M},
                   {"min_det", mo.min_det},
                   {"weighted_H1", mo.weighted_H1}};
  j["regularization"] = {{"passes", result.regularization.passes},
                         {"w2p_distance", result.regularization.w2p_distance},
                         {"zero_extension", result.regularization.zero_extension}};
  std::ofstream os(path);
  os << j.dump(2) << "\n";
}

}  // namespace

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

SchemeConfig parse_config_text(const std::string& text) {
  SchemeConfig cfg;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      if (allowed_keys().find(section) == allowed_keys().end())
        throw ConfigError("config line " + std::to_string(lineno) + ": unknown section [" +
                          section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const auto& allowed = allowed_keys().at(section);
    if (allowed.find(key) == allowed.end())
      throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key +
                        "' in section [" + section + "]");
    apply_key(cfg, section, key, val);
  }
  cfg.validate();
  return cfg;
}

SchemeConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot read " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_text(const SchemeConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "[scheme]\n";
  os << "T = " << cfg.T << "\ntau = " << cfg.tau << "\nh = " << cfg.h << "\neps = " << cfg.eps
     << "\nrho = " << cfg.rho << "\nkappa = " << cfg.kappa << "\nn = " << cfg.n
     << "\nsnapshot_every = " << cfg.snapshot_every << "\n";
  os << "\n[material]\n";
  const MaterialParams& m = cfg.material;
  os << "p = " << m.p << "\nmu = " << m.mu << "\ngamma = " << m.gamma << "\nq_det = " << m.q_det
     << "\nc_V = " << m.c_V << "\nalpha = " << m.alpha << "\nkappa0 = " << m.kappa0
     << "\nC0 = " << m.C0 << "\n";
  os << "\n[initial]\n";
  os << "y0 = " << (cfg.y0.kind == InitialDeformationSpec::Kind::Id ? "id" : "bump") << "\n";
  os << "y0_amp_x = " << cfg.y0.ax << "\ny0_amp_y = " << cfg.y0.ay << "\n";
  os << "mollify_passes = " << cfg.y0.mollify_passes << "\n";
  os << "v0 = " << (cfg.v0.kind == InitialVelocitySpec::Kind::Zero ? "zero" : "bump") << "\n";
  os << "v0_amp_x = " << cfg.v0.ax << "\nv0_amp_y = " << cfg.v0.ay << "\n";
  os << "theta0 = " << cfg.theta0.value << "\ntheta0_bump = " << cfg.theta0.bump_amp << "\n";
  os << "\n[forcing]\n";
  os << "f = "
     << (cfg.force.kind == ForceSpec::Kind::Zero
             ? "zero"
             : cfg.force.kind == ForceSpec::Kind::Constant ? "const" : "gauss")
     << "\n";
  os << "f_x = " << cfg.force.fx << "\nf_y = " << cfg.force.fy << "\n";
  os << "f_center_x = " << cfg.force.cx << "\nf_center_y = " << cfg.force.cy << "\n";
  os << "f_width = " << cfg.force.width << "\n";
  os << "f_time = "
     << (cfg.force.time == ForceSpec::Time::Constant
             ? "const"
             : cfg.force.time == ForceSpec::Time::Linear ? "linear" : "quadratic")
     << "\n";
  os << "theta_b = " << cfg.theta_b.value << "\ntheta_b_rate = " << cfg.theta_b.rate << "\n";
  return os.str();
}

void write_ledger_csv(const std::string& path, const EnergyLedger& ledger) {
  std::ofstream os(path);
  os << std::setprecision(17);
  os << "# schema=ledger.v1\n";
  os << "step,t,M,Wcpl,Win_total,E_total,kinetic_window,diss_step,diss_cum,flux_cum,work_cum,"
        "res_internal,res_mech_identity,drift_total,V_k,G_k,min_theta,min_det,"
        "monitor_weighted_H1,monitor_eps_strainrate\n";
  for (const auto& r : ledger.rows) {
    os << r.step << ',' << r.t << ',' << r.M << ',' << r.Wcpl << ',' << r.Win_total << ','
       << r.E_total << ',' << r.kinetic_window << ',' << r.diss_step << ',' << r.diss_cum << ','
       << r.flux_cum << ',' << r.work_cum << ',' << r.res_internal << ',' << r.res_mech_identity
       << ',' << r.drift_total << ',' << r.V_k << ',' << r.G_k << ',' << r.min_theta << ','
       << r.min_det << ',' << r.monitor_weighted_H1 << ',' << r.monitor_eps_strainrate << "\n";
  }
}

void write_fields_csv(const std::string& path, const Trajectory& traj, int step) {
  const Grid2D& g = traj.grid;
  const VectorField y = traj.y_at(step);
  const ScalarField& th = traj.theta.at(step);
  const std::vector<double>& w = traj.w.at(step);

  // nodal w column: adjacent-cell average of the cellwise density
  ScalarField wn(g, 0.0);
  ScalarField cnt(g, 0.0);
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      const double val = w[g.cell(ci, cj)];
      for (const auto& [di, dj] : {std::pair{0, 0}, {1, 0}, {0, 1}, {1, 1}}) {
        wn.at(ci + di, cj + dj) += val;
        cnt.at(ci + di, cj + dj) += 1.0;
      }
    }

  std::ofstream os(path);
  os << std::setprecision(17);
  os << "# schema=fields.v1\n";
  os << "node,x1,x2,y1,y2,theta,w\n";
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const Vec2 yy = y.at(i, j);
      os << g.node(i, j) << ',' << g.x1(i) << ',' << g.x2(j) << ',' << yy[0] << ',' << yy[1]
         << ',' << th.at(i, j) << ',' << wn.at(i, j) / cnt.at(i, j) << "\n";
    }
}

void write_diagnostics_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  os << std::setprecision(17);
  os << "# schema=diagnostics.v1\n";
  os << "step,phase,iterations,residual,min_det,backtracks,min_theta,clamped_nodes\n";
  for (size_t k = 0; k < traj.mech_reports.size(); ++k) {
    const auto& m = traj.mech_reports[k];
    os << (k + 1) << ",mech," << m.iterations << ',' << m.residual << ',' << m.min_det << ','
       << m.backtracks << ",,\n";
    const auto& t = traj.thermal_reports[k];
    os << (k + 1) << ",thermal," << t.iterations << ',' << t.residual << ",,," << t.min_theta
       << ',' << t.clamped_nodes << "\n";
  }
}

RunInvariants evaluate_run_invariants(const RunResult& result) {
  RunInvariants inv;
  inv.min_theta = std::numeric_limits<double>::infinity();
  inv.min_det = std::numeric_limits<double>::infinity();
  for (const auto& r : result.ledger.rows) {
    if (r.step >= 1) {
      inv.max_res_internal_rel = std::max(
          inv.max_res_internal_rel, std::abs(r.res_internal) / (1e-8 * r.res_internal_scale));
      inv.max_res_mech_rel = std::max(inv.max_res_mech_rel,
                                      std::abs(r.res_mech_identity) / (1e-8 * r.res_mech_scale));
    }
    inv.min_det = std::min(inv.min_det, r.min_det);
    inv.min_theta = std::min(inv.min_theta, r.min_theta);
  }
  for (const auto& m : result.trajectory.mech_reports)
    inv.max_competitor_violation =
        std::max(inv.max_competitor_violation, m.energy_final - m.energy_initial);
  double pre_clamp_min = 0.0;
  for (const auto& t : result.trajectory.thermal_reports)
    pre_clamp_min = std::min(pre_clamp_min, t.min_theta);
  inv.min_theta = std::min(inv.min_theta, pre_clamp_min);
  inv.pass = inv.max_res_internal_rel <= 1.0 && inv.max_res_mech_rel <= 1.0 &&
             inv.min_theta >= -1e-10 && inv.min_det > 0.0 &&
             inv.max_competitor_violation <= 1e-12;
  return inv;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  std::string config_text;
  SchemeConfig cfg;
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("config: cannot read " + config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    config_text = buf.str();
    cfg = parse_config_text(config_text);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  const auto t0 = std::chrono::steady_clock::now();
  RunResult result;
  try {
    result = run(cfg);
  } catch (const StepFailure& e) {
    std::cerr << "step failure: " << e.what() << "\n";
    return kExitStepFailure;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  std::vector<std::string> outputs;
  auto out = [&](const std::string& name) {
    outputs.push_back(name);
    return (fs::path(out_dir) / name).string();
  };

  write_ledger_csv(out("ledger.csv"), result.ledger);
  write_diagnostics_csv(out("diagnostics.csv"), result.trajectory);
  const int N = result.trajectory.num_steps();
  std::vector<int> snaps = {0, N};
  if (cfg.snapshot_every > 0)
    for (int k = cfg.snapshot_every; k < N; k += cfg.snapshot_every) snaps.push_back(k);
  std::sort(snaps.begin(), snaps.end());
  snaps.erase(std::unique(snaps.begin(), snaps.end()), snaps.end());
  for (int k : snaps) write_fields_csv(out("fields_k" + std::to_string(k) + ".csv"),
                                       result.trajectory, k);

  const RunInvariants inv = evaluate_run_invariants(result);
  write_manifest((fs::path(out_dir) / "manifest.json").string(), config_text, result, inv, outputs,
                 wall);
  if (!inv.pass) {
    std::cerr << "invariant failure: see manifest.json in " << out_dir << "\n";
    return kExitInvariant;
  }
  return kExitOk;
}

int cmd_study(const std::string& config_path, const std::string& mode, int levels,
              const std::string& out_dir, bool parallel) {
  SchemeConfig base;
  std::string config_text;
  try {
    std::ifstream is(config_path);
    if (!is) throw ConfigError("config: cannot read " + config_path);
    std::ostringstream buf;
    buf << is.rdbuf();
    config_text = buf.str();
    base = parse_config_text(config_text);
    if (mode != "tau" && mode != "h" && mode != "eps")
      throw ConfigError("study: mode must be tau, h or eps");
    if (levels < 2) throw ConfigError("study: need at least 2 levels");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<SchemeConfig> cfgs;
  for (int j = 0; j < levels; ++j) {
    SchemeConfig c = base;
    if (mode == "tau") {
      c.tau = base.tau / std::pow(2.0, j);
    } else if (mode == "h") {
      c.h = base.h / std::pow(2.0, j);
      c.tau = c.h / 8.0;
    } else {
      c.eps = base.eps / std::pow(10.0, j);
    }
    cfgs.push_back(c);
  }

  const SpatialTestFn psi{
      [](double x, double y) { return 1.0 + 0.5 * std::sin(3.14159265358979323846 * x) *
                                                std::sin(3.14159265358979323846 * y); },
      [](double x, double y) {
        const double pi = 3.14159265358979323846;
        return Vec2(0.5 * pi * std::cos(pi * x) * std::sin(pi * y),
                    0.5 * pi * std::sin(pi * x) * std::cos(pi * y));
      },
      [](double x, double y) {
        const double pi = 3.14159265358979323846;
        return -pi * pi * std::sin(pi * x) * std::sin(pi * y);
      }};

  struct LevelResult {
    RunResult run;
    double weak_heat = 0.0;
    int exit_code = kExitOk;
    std::string error;
  };

  auto run_level = [&](int j) {
    LevelResult lr;
    try {
      lr.run = run(cfgs[j]);
      const double T = cfgs[j].T;
      const TimeTestFn eta{[T](double t) { return 1.0 - t / T; }};
      lr.weak_heat = weak_heat_residual(lr.run.trajectory, cfgs[j], psi, eta);
    } catch (const StepFailure& e) {
      lr.exit_code = kExitStepFailure;
      lr.error = e.what();
    } catch (const ConfigError& e) {
      lr.exit_code = kExitConfig;
      lr.error = e.what();
    }
    return lr;
  };

  std::vector<LevelResult> results(levels);
  if (parallel) {
    std::vector<std::future<LevelResult>> futs;
    for (int j = 0; j < levels; ++j)
      futs.push_back(std::async(std::launch::async, run_level, j));
    for (int j = 0; j < levels; ++j) results[j] = futs[j].get();
  } else {
    for (int j = 0; j < levels; ++j) results[j] = run_level(j);
  }
  for (int j = 0; j < levels; ++j)
    if (results[j].exit_code != kExitOk) {
      std::cerr << "study level " << j << " failed: " << results[j].error << "\n";
      return results[j].exit_code;
    }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  for (int j = 0; j < levels; ++j) {
    const std::string lvl_dir = (fs::path(out_dir) / ("level" + std::to_string(j))).string();
    fs::create_directories(lvl_dir, ec);
    write_ledger_csv((fs::path(lvl_dir) / "ledger.csv").string(), results[j].run.ledger);
  }

  // refinement criteria per mode
  auto max_abs_drift = [](const RunResult& r) {
    double m = 0.0;
    for (const auto& row : r.ledger.rows) m = std::max(m, std::abs(row.drift_total));
    return m;
  };
  auto ratio_within = [](double a, double b, double lo, double hi) {
    if (std::abs(a) < 1e-12 && std::abs(b) < 1e-12) return true;
    if (std::abs(a) < 1e-12 || std::abs(b) < 1e-12) return false;
    const double r = b / a;
    return r >= lo && r <= hi;
  };

  bool pass = true;
  std::ostringstream report;
  if (mode == "tau") {
    for (int j = 0; j + 1 < levels; ++j) {
      const double d0 = max_abs_drift(results[j].run), d1 = max_abs_drift(results[j + 1].run);
      const bool ok = d1 <= 0.75 * d0 + 1e-12;
      pass = pass && ok;
      report << "drift ratio level " << j << "->" << (j + 1) << ": " << (d0 > 0 ? d1 / d0 : 0.0)
             << (ok ? " PASS" : " FAIL") << "\n";
      const AprioriMonitors m0 = apriori_monitors(results[j].run.ledger);
      const AprioriMonitors m1 = apriori_monitors(results[j + 1].run.ledger);
      const bool mon_ok = ratio_within(m0.max_G, m1.max_G, 0.5, 2.0) &&
                          ratio_within(m0.V_final, m1.V_final, 0.5, 2.0) &&
                          ratio_within(m0.weighted_H1, m1.weighted_H1, 0.5, 2.0) &&
                          (base.eps == 0.0 ||
                           ratio_within(m0.eps_strainrate, m1.eps_strainrate, 0.5, 2.0));
      pass = pass && mon_ok;
      report << "monitor stability level " << j << "->" << (j + 1)
             << (mon_ok ? ": PASS" : ": FAIL") << "\n";
    }
  } else if (mode == "eps") {
    const AprioriMonitors m0 = apriori_monitors(results[0].run.ledger);
    const double cap = 2.0 * (1.0 + m0.eps_strainrate);
    for (int j = 0; j < levels; ++j) {
      const AprioriMonitors mj = apriori_monitors(results[j].run.ledger);
      const bool ok = mj.eps_strainrate <= cap;
      pass = pass && ok;
      report << "eps monitor level " << j << ": " << mj.eps_strainrate << " <= " << cap
             << (ok ? " PASS" : " FAIL") << "\n";
    }
    for (int j = 0; j + 1 < levels; ++j) {
      const bool ok =
          std::abs(results[j + 1].weak_heat) <= 1.25 * std::abs(results[j].weak_heat) + 1e-12;
      pass = pass && ok;
      report << "weak-heat residual level " << j << "->" << (j + 1) << ": "
             << std::abs(results[j].weak_heat) << " -> " << std::abs(results[j + 1].weak_heat)
             << (ok ? " PASS" : " FAIL") << "\n";
    }
  } else {  // h-mode: pointwise closeness of the kinetic window series
    for (int j = 0; j + 1 < levels; ++j) {
      const auto& rows0 = results[j].run.ledger.rows;
      const auto& rows1 = results[j + 1].run.ledger.rows;
      double series_scale = 0.0;
      for (const auto& r : rows0) series_scale = std::max(series_scale, r.kinetic_window);
      double max_dev = 0.0;
      for (size_t k0 = 0; k0 < rows0.size(); ++k0) {
        const size_t k1 = 2 * k0;  // tau halves with h in this ladder
        if (k1 >= rows1.size()) break;
        max_dev = std::max(max_dev,
                           std::abs(rows0[k0].kinetic_window - rows1[k1].kinetic_window));
      }
      const bool ok = max_dev <= 0.10 * series_scale + 1e-12;
      pass = pass && ok;
      report << "kinetic window deviation level " << j << "->" << (j + 1) << ": " << max_dev
             << " vs 10% of " << series_scale << (ok ? " PASS" : " FAIL") << "\n";
    }
  }

  {
    std::ofstream os(fs::path(out_dir) / "study.csv");
    os << std::setprecision(17);
    os << "# schema=study.v1\n";
    os << "level,tau,h,eps,steps,max_abs_drift,max_G,V_final,eps_strainrate,weighted_H1,"
          "weak_heat_residual,min_theta,min_det\n";
    for (int j = 0; j < levels; ++j) {
      const AprioriMonitors mo = apriori_monitors(results[j].run.ledger);
      double min_theta = std::numeric_limits<double>::infinity();
      for (const auto& r : results[j].run.ledger.rows) min_theta = std::min(min_theta, r.min_theta);
      os << j << ',' << cfgs[j].tau << ',' << cfgs[j].h << ',' << cfgs[j].eps << ','
         << cfgs[j].steps() << ',' << max_abs_drift(results[j].run) << ',' << mo.max_G << ','
         << mo.V_final << ',' << mo.eps_strainrate << ',' << mo.weighted_H1 << ','
         << results[j].weak_heat << ',' << min_theta << ',' << mo.min_det << "\n";
    }
  }
  {
    std::ofstream os(fs::path(out_dir) / "study_report.txt");
    os << report.str() << (pass ? "STUDY PASS\n" : "STUDY FAIL\n");
  }
  std::cout << report.str();
  return pass ? kExitOk : kExitInvariant;
}

int cmd_verify(std::uint64_t seed) {
  MaterialParams mat;
  std::vector<OracleReport> reports;
  auto append = [&](std::vector<OracleReport> r) {
    for (auto& x : r) reports.push_back(std::move(x));
  };
  append(identity_suite(seed, mat));
  append(symmetry_suite(seed + 1000, mat));
  append(fd_gradient_suite(seed + 2000, mat));
  append(bound_audit_suite(seed + 3000, mat));

  // small multistart agreement check on the 1-interior-node grid
  {
    const Grid2D g(3);
    MechStepInput in;
    in.grid = g;
    in.mat = mat;
    in.y_prev = identity_deformation(g);
    in.theta_prev = ScalarField(g, 1.0);
    in.delayed_velocity = VectorField(g);
    in.f_avg = VectorField(g);
    OracleRng rng(seed + 4000);
    in.f_avg.set(1, 1, Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)));
    in.tau = 0.01;
    in.h = 0.08;
    in.eps = 1e-3;
    in.rho = 1.0;
    const auto [y, rep] = solve_mech_step(in);
    const MultistartResult oracle = multistart_min_oracle(in, 3000, seed + 4001);
    OracleReport r;
    r.name = "multistart.solver_agreement";
    r.seed = seed + 4001;
    r.samples = oracle.polished_starts;
    r.max_error = rep.energy_final - oracle.best_energy;
    r.tolerance = 1e-8;
    r.pass = r.max_error <= r.tolerance;
    reports.push_back(r);
  }

  std::cout << reports_to_json(reports) << "\n";
  for (const auto& r : reports)
    if (!r.pass) {
      std::cerr << "oracle failure: " << r.name << " (max_error " << r.max_error << " > tol "
                << r.tolerance << ")\n";
      return kExitInvariant;
    }
  return kExitOk;
}

}  // namespace tvsolid
