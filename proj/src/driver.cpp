#include "tvsolid/driver.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <sstream>

namespace tvsolid {

namespace {

constexpr double kPi = 3.14159265358979323846;

// one nearest-neighbor smoothing pass on the interior-node array with zero
// extension outside (the discrete analog of the natural Lap = 0 boundary data)
std::vector<Vec2> smooth_interior(const Grid2D& g, const std::vector<Vec2>& u) {
  std::vector<Vec2> out(u.size(), Vec2::Zero());
  const int m = g.n - 2;
  auto val = [&](int i, int j) -> Vec2 {
    if (i < 1 || j < 1 || i > m || j > m) return Vec2::Zero();
    return u[g.interior(i, j)];
  };
  for (int j = 1; j <= m; ++j)
    for (int i = 1; i <= m; ++i)
      out[g.interior(i, j)] =
          0.5 * val(i, j) +
          0.125 * (val(i + 1, j) + val(i - 1, j) + val(i, j + 1) + val(i, j - 1));
  return out;
}

}  // namespace

double w2p_norm(const Grid2D& g, const VectorField& u, double p) {
  double acc = 0.0;
  const double dx2 = g.dx * g.dx;
  const std::vector<Mat2> grads = grad_cells(g, u);
  const std::vector<Vec2> vals = cell_average_vec(g, u);
  for (int c = 0; c < g.cell_count(); ++c)
    acc += dx2 * (std::pow(vals[c].norm(), p) + std::pow(grads[c].norm(), p));
  const std::vector<Vec2> lap = laplacian_nodes(g, u);
  for (const Vec2& v : lap) acc += dx2 * std::pow(v.norm(), p);
  return std::pow(acc, 1.0 / p);
}

std::pair<VectorField, RegularizationReport> regularize_initial_data(const Grid2D& g,
                                                                     const VectorField& y0,
                                                                     int mollify_passes,
                                                                     double p_norm) {
  if (mollify_passes == 0) {
    // identity mollifier: y0 itself solves Lap y = Lap y0 with y = id on the boundary
    RegularizationReport rep;
    rep.passes = 0;
    rep.w2p_distance = 0.0;
    rep.zero_extension = true;
    return {y0, rep};
  }
  using SpMat = Eigen::SparseMatrix<double>;
  std::vector<Vec2> rhs = laplacian_nodes(g, y0);
  for (int pass = 0; pass < mollify_passes; ++pass) rhs = smooth_interior(g, rhs);

  const int m = g.n - 2;
  const int N = m * m;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(N) * 5);
  Eigen::VectorXd b[2] = {Eigen::VectorXd::Zero(N), Eigen::VectorXd::Zero(N)};
  const double s = 1.0 / (g.dx * g.dx);
  for (int j = 1; j <= m; ++j)
    for (int i = 1; i <= m; ++i) {
      const int row = g.interior(i, j);
      trip.emplace_back(row, row, 4.0 * s);
      const int nb[4][2] = {{i + 1, j}, {i - 1, j}, {i, j + 1}, {i, j - 1}};
      for (auto& q : nb) {
        if (g.is_boundary(q[0], q[1])) {
          for (int c = 0; c < 2; ++c)
            b[c][row] += s * (c == 0 ? g.x1(q[0]) : g.x2(q[1]));  // Dirichlet y = id
        } else {
          trip.emplace_back(row, g.interior(q[0], q[1]), -s);
        }
      }
      for (int c = 0; c < 2; ++c) b[c][row] -= rhs[row][c];
    }
  SpMat A(N, N);
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::SimplicialLDLT<SpMat> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw std::runtime_error("regularize_initial_data: singular Poisson solve");

  VectorField out = identity_deformation(g);
  for (int c = 0; c < 2; ++c) {
    const Eigen::VectorXd x = ldlt.solve(b[c]);
    for (int j = 1; j <= m; ++j)
      for (int i = 1; i <= m; ++i) out.comp(i, j, c) = x[g.interior(i, j)];
  }

  VectorField diff = out;
  for (size_t q = 0; q < diff.v.size(); ++q) diff.v[q] -= y0.v[q];
  RegularizationReport rep;
  rep.passes = mollify_passes;
  rep.w2p_distance = w2p_norm(g, diff, p_norm);
  rep.zero_extension = true;
  return {out, rep};
}

VectorField build_initial_deformation(const Grid2D& g, const InitialDeformationSpec& spec) {
  VectorField y = identity_deformation(g);
  if (spec.kind == InitialDeformationSpec::Kind::Bump) {
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        const double b = std::sin(kPi * g.x1(i)) * std::sin(kPi * g.x2(j));
        y.set(i, j, y.at(i, j) + b * Vec2(spec.ax, spec.ay));
      }
  }
  return y;
}

VectorField build_initial_velocity(const Grid2D& g, const InitialVelocitySpec& spec) {
  VectorField v(g);
  if (spec.kind == InitialVelocitySpec::Kind::Bump) {
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        const double b = std::sin(kPi * g.x1(i)) * std::sin(kPi * g.x2(j));
        v.set(i, j, b * Vec2(spec.ax, spec.ay));
      }
  }
  return v;
}

ScalarField build_initial_temperature(const Grid2D& g, const InitialTemperatureSpec& spec) {
  ScalarField th(g, spec.value);
  if (spec.bump_amp != 0.0) {
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        th.at(i, j) += spec.bump_amp * std::sin(kPi * g.x1(i)) * std::sin(kPi * g.x2(j));
  }
  if (th.min() < 0.0) throw ConfigError("initial temperature must be nonnegative");
  return th;
}

RunResult run(const SchemeConfig& cfg) {
  cfg.validate();
  const Grid2D g(cfg.n);
  const int N = cfg.steps();
  const int D = cfg.delay_steps();

  const VectorField y0_raw = build_initial_deformation(g, cfg.y0);
  if (!(min_det(g, y0_raw) > 0.0)) throw ConfigError("initial deformation has nonpositive det");
  auto [y0, reg_report] = regularize_initial_data(g, y0_raw, cfg.y0.mollify_passes, cfg.material.p);
  if (!(min_det(g, y0) > 0.0))
    throw ConfigError("regularized initial deformation has nonpositive det");

  RunResult result;
  Trajectory& traj = result.trajectory;
  traj.grid = g;
  traj.tau = cfg.tau;
  traj.delay_steps = D;
  traj.ramp_velocity = build_initial_velocity(g, cfg.v0);
  traj.y.reserve(N + 1);
  traj.theta.reserve(N + 1);
  traj.w.reserve(N + 1);
  traj.y.push_back(y0);
  traj.theta.push_back(build_initial_temperature(g, cfg.theta0));

  auto w_cells = [&](const VectorField& y, const ScalarField& th) {
    const std::vector<Mat2> F = grad_cells(g, y);
    const std::vector<double> tc = cell_average(g, th);
    std::vector<double> w(g.cell_count());
    for (int c = 0; c < g.cell_count(); ++c)
      w[c] = eval_Win(cfg.material, F[c], std::max(0.0, tc[c]));
    return w;
  };
  traj.w.push_back(w_cells(traj.y[0], traj.theta[0]));

  for (int k = 1; k <= N; ++k) {
    MechStepInput min;
    min.grid = g;
    min.mat = cfg.material;
    min.y_prev = traj.y[k - 1];
    min.theta_prev = traj.theta[k - 1];
    min.delayed_velocity = traj.velocity(k - D);
    min.f_avg = time_average_force(cfg, g, k, cfg.tau);
    min.tau = cfg.tau;
    min.h = cfg.h;
    min.eps = cfg.eps;
    min.rho = cfg.rho;
    try {
      auto [y_k, mrep] = solve_mech_step(min, traj.y[k - 1]);
      traj.mech_reports.push_back(mrep);
      const ScalarField tb = theta_b_average(cfg, g, k, cfg.tau);
      const ThermalStepInput tin = make_thermal_input(g, cfg.material, y_k, traj.y[k - 1],
                                                      traj.theta[k - 1], tb, cfg.tau, cfg.eps,
                                                      cfg.kappa);
      auto [th_k, trep] = solve_thermal_step(tin, traj.theta[k - 1]);
      traj.thermal_reports.push_back(trep);
      traj.w.push_back(w_cells(y_k, th_k));
      traj.y.push_back(std::move(y_k));
      traj.theta.push_back(std::move(th_k));
    } catch (const StepFailure& e) {
      std::ostringstream os;
      os << "step " << k << " of " << N << ": " << e.what();
      throw StepFailure(os.str());
    }
  }

  result.ledger = build_ledger(traj, cfg);
  result.regularization = reg_report;
  return result;
}

}  // namespace tvsolid
