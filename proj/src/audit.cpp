#include "tvsolid/audit.hpp"

#include <algorithm>
#include <cmath>

namespace tvsolid {

namespace {

// 3-point Gauss nodes/weights on (0, 1)
constexpr double kGaussX[3] = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr double kGaussW[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

double euclid_interior_norm(const Grid2D& g, const VectorField& v) {
  double s = 0.0;
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i) s += v.at(i, j).squaredNorm();
  return std::sqrt(s);
}

double sum_cells(const Grid2D& g, const std::vector<double>& vals) {
  double s = 0.0;
  for (double v : vals) s += v;
  return s * g.dx * g.dx;
}

}  // namespace

VectorField time_average_force(const SchemeConfig& cfg, const Grid2D& g, int k, double tau) {
  VectorField f(g);
  const double t0 = (k - 1) * tau;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      Vec2 acc = Vec2::Zero();
      for (int q = 0; q < 3; ++q)
        acc += kGaussW[q] * cfg.force_at(t0 + kGaussX[q] * tau, g.x1(i), g.x2(j));
      f.set(i, j, acc);
    }
  return f;
}

ScalarField theta_b_average(const SchemeConfig& cfg, const Grid2D& g, int k, double tau) {
  ScalarField tb(g, 0.0);
  const double t0 = (k - 1) * tau;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      if (!g.is_boundary(i, j)) continue;
      double acc = 0.0;
      for (int q = 0; q < 3; ++q)
        acc += kGaussW[q] * cfg.theta_b_at(t0 + kGaussX[q] * tau, g.x1(i), g.x2(j));
      tb.at(i, j) = acc;
    }
  return tb;
}

MechStepInput mech_input_at(const Trajectory& traj, const SchemeConfig& cfg, int k) {
  MechStepInput in;
  in.grid = traj.grid;
  in.mat = cfg.material;
  in.y_prev = traj.y.at(k - 1);
  in.theta_prev = traj.theta.at(k - 1);
  in.delayed_velocity = traj.velocity(k - traj.delay_steps);
  in.f_avg = time_average_force(cfg, traj.grid, k, traj.tau);
  in.tau = traj.tau;
  in.h = cfg.h;
  in.eps = cfg.eps;
  in.rho = cfg.rho;
  return in;
}

double step_internal_balance(const Trajectory& traj, const SchemeConfig& cfg, int k,
                             double* scale) {
  const Grid2D& g = traj.grid;
  const double tau = traj.tau;
  const ScalarField tb = theta_b_average(cfg, g, k, tau);
  const ThermalStepInput tin = make_thermal_input(g, cfg.material, traj.y.at(k), traj.y.at(k - 1),
                                                  traj.theta.at(k - 1), tb, tau, cfg.eps,
                                                  cfg.kappa);
  double dw = 0.0;
  for (int c = 0; c < g.cell_count(); ++c) dw += traj.w.at(k)[c] - traj.w.at(k - 1)[c];
  dw *= g.dx * g.dx;

  double flux = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (g.is_boundary(i, j))
        flux += g.boundary_weight(i, j) * (traj.theta.at(k).at(i, j) - tb.at(i, j));
  flux *= tau * cfg.kappa;

  double src = 0.0;
  for (int c = 0; c < g.cell_count(); ++c)
    src += tin.dissipation_source[c] + tin.coupling_source[c];
  src *= g.dx * g.dx;
  for (double s : tin.eps_source.hor) src += g.dx * g.dx * s;
  for (double s : tin.eps_source.ver) src += g.dx * g.dx * s;
  src *= tau;

  if (scale) *scale = 1.0 + std::abs(dw) + std::abs(flux) + std::abs(src);
  return dw + flux - src;
}

double step_mechanical_identity(const Trajectory& traj, const SchemeConfig& cfg, int k,
                                double* scale) {
  const Grid2D& g = traj.grid;
  const MaterialParams& m = cfg.material;
  const double tau = traj.tau;
  const double dx2 = g.dx * g.dx;
  const VectorField v = traj.velocity(k);
  const MechStepInput in = mech_input_at(traj, cfg, k);

  const std::vector<Mat2> Fk = grad_cells(g, traj.y.at(k));
  const std::vector<Mat2> Fp = grad_cells(g, traj.y.at(k - 1));
  const std::vector<Mat2> Gv = grad_cells(g, v);
  const std::vector<double> thc = cell_average(g, traj.theta.at(k - 1));
  double t_stress = 0.0;
  for (int c = 0; c < g.cell_count(); ++c) {
    const double th = std::max(0.0, thc[c]);
    const Mat2 stress =
        grad_Wel(m, Fk[c]) + grad_Wcpl_F(m, Fk[c], th) + eval_dR_dFdot(m, Fp[c], Gv[c], th);
    t_stress += dx2 * stress.cwiseProduct(Gv[c]).sum();
  }

  const std::vector<Vec2> lap_k = laplacian_nodes(g, traj.y.at(k));
  const std::vector<Vec2> lap_v = laplacian_nodes(g, v);
  double t_H = 0.0;
  for (size_t q = 0; q < lap_k.size(); ++q) t_H += dx2 * eval_DH(m, lap_k[q]).dot(lap_v[q]);

  double t_eps = 0.0;
  if (cfg.eps > 0.0 && g.n >= 4) {
    const EdgeVectors gk = grad_laplacian_edges(g, traj.y.at(k));
    const EdgeVectors gp = grad_laplacian_edges(g, traj.y.at(k - 1));
    for (int e = 0; e < g.hedge_count(); ++e)
      t_eps += dx2 * ((gk.hor[e] - gp.hor[e]) / tau).squaredNorm();
    for (int e = 0; e < g.vedge_count(); ++e)
      t_eps += dx2 * ((gk.ver[e] - gp.ver[e]) / tau).squaredNorm();
    t_eps *= cfg.eps;
  }

  VectorField vd = v;
  for (size_t q = 0; q < vd.v.size(); ++q) vd.v[q] -= in.delayed_velocity.v[q];
  const double t_inertia = cfg.rho / cfg.h * inner_nodes(g, vd, v);
  const double t_force = -inner_nodes(g, in.f_avg, v);

  if (scale) {
    const double J = assemble_mech_energy(traj.y.at(k), in);
    *scale = (1.0 + std::abs(J)) * (1.0 + euclid_interior_norm(g, v));
  }
  return t_stress + t_H + t_eps + t_inertia + t_force;
}

std::vector<double> total_balance_drift(const EnergyLedger& ledger) {
  std::vector<double> d(ledger.rows.size());
  for (size_t k = 0; k < ledger.rows.size(); ++k) d[k] = ledger.rows[k].drift_total;
  return d;
}

AprioriMonitors apriori_monitors(const EnergyLedger& ledger) {
  AprioriMonitors mo;
  mo.min_det = std::numeric_limits<double>::infinity();
  for (const LedgerRow& r : ledger.rows) {
    mo.max_G = std::max(mo.max_G, r.G_k);
    mo.sup_M = std::max(mo.sup_M, r.M);
    mo.min_det = std::min(mo.min_det, r.min_det);
  }
  const LedgerRow& last = ledger.rows.back();
  mo.V_final = last.V_k;
  mo.eps_strainrate = last.monitor_eps_strainrate;
  mo.weighted_H1 = last.monitor_weighted_H1;
  return mo;
}

EnergyLedger build_ledger(const Trajectory& traj, const SchemeConfig& cfg) {
  const Grid2D& g = traj.grid;
  const MaterialParams& m = cfg.material;
  const double tau = traj.tau;
  const double dx2 = g.dx * g.dx;
  const int N = traj.num_steps();
  const int D = traj.delay_steps;

  // discrete L2 norms of delta_tau y^(l); l <= 0 is the ramp velocity
  const double v0n2 = norm2_nodes(g, traj.ramp_velocity);
  std::vector<double> vn2(N + 1, v0n2);
  for (int l = 1; l <= N; ++l) vn2[l] = norm2_nodes(g, traj.velocity(l));
  auto kinetic_window = [&](int k) {
    double s = 0.0;
    for (int l = k - D + 1; l <= k; ++l) s += (l <= 0) ? v0n2 : vn2[l];
    return 0.5 * cfg.rho * tau / cfg.h * s;
  };

  EnergyLedger ledger;
  ledger.rows.resize(N + 1);
  double diss_cum = 0.0, flux_cum = 0.0, work_cum = 0.0, V = 0.0;
  double wH1 = 0.0, eps_mon = 0.0;
  double inertia_diss_cum = 0.0, coupling_work_cum = 0.0, trunc_deficit_cum = 0.0;

  for (int k = 0; k <= N; ++k) {
    LedgerRow& row = ledger.rows[k];
    row.step = k;
    row.t = k * tau;

    const std::vector<Mat2> F = grad_cells(g, traj.y[k]);
    const std::vector<Vec2> lap = laplacian_nodes(g, traj.y[k]);
    const std::vector<double> thc = cell_average(g, traj.theta[k]);

    double Wel_sum = 0.0, H_sum = 0.0, Wcpl_sum = 0.0, mdet = F[0].determinant();
    for (int c = 0; c < g.cell_count(); ++c) {
      Wel_sum += dx2 * eval_Wel(m, F[c]);
      Wcpl_sum += dx2 * eval_Wcpl(m, F[c], std::max(0.0, thc[c]));
      mdet = std::min(mdet, F[c].determinant());
    }
    for (const Vec2& v : lap) H_sum += dx2 * eval_H(m, v);

    row.M = Wel_sum + H_sum;
    row.Wcpl = Wcpl_sum;
    row.Win_total = sum_cells(g, traj.w[k]);
    row.E_total = row.M + row.Win_total;
    row.kinetic_window = kinetic_window(k);
    row.min_theta = traj.theta[k].min();
    row.min_det = mdet;

    if (k >= 1) {
      const VectorField v = traj.velocity(k);
      const std::vector<Mat2> Fp = grad_cells(g, traj.y[k - 1]);
      const std::vector<Vec2> lap_p = laplacian_nodes(g, traj.y[k - 1]);
      const std::vector<double> thp = cell_average(g, traj.theta[k - 1]);

      double xi_sum = 0.0, dF2 = 0.0, cpl_work = 0.0;
      for (int c = 0; c < g.cell_count(); ++c) {
        const Mat2 rate = (F[c] - Fp[c]) / tau;
        const double th = std::max(0.0, thp[c]);
        xi_sum += dx2 * 2.0 * eval_R(m, Fp[c], rate, th);
        dF2 += dx2 * rate.squaredNorm();
        cpl_work += dx2 * grad_Wcpl_F(m, Fp[c], th).cwiseProduct(rate).sum();
      }
      double eps_rate = 0.0;
      if (cfg.eps > 0.0 && g.n >= 4) {
        const EdgeVectors gk = grad_laplacian_edges(g, traj.y[k]);
        const EdgeVectors gp = grad_laplacian_edges(g, traj.y[k - 1]);
        for (int e = 0; e < g.hedge_count(); ++e)
          eps_rate += dx2 * ((gk.hor[e] - gp.hor[e]) / tau).squaredNorm();
        for (int e = 0; e < g.vedge_count(); ++e)
          eps_rate += dx2 * ((gk.ver[e] - gp.ver[e]) / tau).squaredNorm();
      }

      row.diss_step = tau * xi_sum + cfg.eps * tau * eps_rate;
      diss_cum += row.diss_step;
      eps_mon += cfg.eps * tau * eps_rate;
      V += tau * dF2;
      coupling_work_cum += tau * cpl_work;

      const ScalarField tb = theta_b_average(cfg, g, k, tau);
      double flux = 0.0;
      for (int j = 0; j < g.n; ++j)
        for (int i = 0; i < g.n; ++i)
          if (g.is_boundary(i, j))
            flux += g.boundary_weight(i, j) * (tb.at(i, j) - traj.theta[k].at(i, j));
      flux_cum += tau * cfg.kappa * flux;

      const VectorField f_avg = time_average_force(cfg, g, k, tau);
      work_cum += tau * inner_nodes(g, f_avg, v);

      VectorField vd = v;
      const VectorField vdel = traj.velocity(k - D);
      for (size_t q = 0; q < vd.v.size(); ++q) vd.v[q] -= vdel.v[q];
      inertia_diss_cum += 0.5 * cfg.rho * tau / cfg.h * norm2_nodes(g, vd);

      // deficit between the untruncated eps-dissipation produced mechanically
      // and the truncated source the thermal step receives
      if (cfg.eps > 0.0 && g.n >= 4) {
        const ThermalStepInput tin =
            make_thermal_input(g, m, traj.y[k], traj.y[k - 1], traj.theta[k - 1],
                               theta_b_average(cfg, g, k, tau), tau, cfg.eps, cfg.kappa);
        double truncated = 0.0;
        for (double s : tin.eps_source.hor) truncated += dx2 * s;
        for (double s : tin.eps_source.ver) truncated += dx2 * s;
        trunc_deficit_cum += tau * (cfg.eps * eps_rate - truncated);
      }

      row.res_internal = step_internal_balance(traj, cfg, k, &row.res_internal_scale);
      row.res_mech_identity = step_mechanical_identity(traj, cfg, k, &row.res_mech_scale);

      // weighted third-gradient regularity monitor on the right interpolant
      if (g.n >= 4) {
        const EdgeVectors gk = grad_laplacian_edges(g, traj.y[k]);
        double acc = 0.0;
        for (int j = 1; j <= g.n - 2; ++j)
          for (int i = 1; i <= g.n - 3; ++i) {
            const double a = lap[g.interior(i, j)].norm(), b = lap[g.interior(i + 1, j)].norm();
            acc += dx2 * std::pow(1.0 + 0.5 * (a + b), m.p - 2.0) *
                   gk.hor[g.hedge(i, j)].squaredNorm();
          }
        for (int j = 1; j <= g.n - 3; ++j)
          for (int i = 1; i <= g.n - 2; ++i) {
            const double a = lap[g.interior(i, j)].norm(), b = lap[g.interior(i, j + 1)].norm();
            acc += dx2 * std::pow(1.0 + 0.5 * (a + b), m.p - 2.0) *
                   gk.ver[g.vedge(i, j)].squaredNorm();
          }
        wH1 += tau * acc;
      }

      // nodewise convexity of H along the accepted pair
      double hviol = 0.0;
      for (size_t q = 0; q < lap.size(); ++q) {
        const double gap = eval_H(m, lap_p[q]) - eval_H(m, lap[q]) -
                           eval_DH(m, lap[q]).dot(lap_p[q] - lap[q]);
        hviol = std::max(hviol, -gap);
      }
      row.h_convexity_violation = hviol;

      // empirical Lambda-convexity constant of W^el along the pair
      double welp = 0.0, diff2 = 0.0, pair = 0.0;
      for (int c = 0; c < g.cell_count(); ++c) {
        welp += dx2 * eval_Wel(m, Fp[c]);
        const Mat2 dFc = Fp[c] - F[c];
        diff2 += dx2 * dFc.squaredNorm();
        pair += dx2 * grad_Wel(m, F[c]).cwiseProduct(dFc).sum();
      }
      row.lambda_convexity_const =
          diff2 > 0.0 ? std::max(0.0, (Wel_sum + pair - welp) / diff2) : 0.0;
    }

    row.diss_cum = diss_cum;
    row.flux_cum = flux_cum;
    row.work_cum = work_cum;
    row.V_k = V;
    row.monitor_weighted_H1 = wH1;
    row.monitor_eps_strainrate = eps_mon;
    row.delay_diss_cum = inertia_diss_cum;
    row.trunc_deficit_cum = trunc_deficit_cum;

    // F^(k) and G^(k) bookkeeping with the force sampled at t = k tau
    double fy = 0.0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        fy += g.node_weight(i, j) *
              cfg.force_at(k * tau, g.x1(i), g.x2(j)).dot(traj.y[k].at(i, j));
    row.G_k = row.E_total - fy + row.kinetic_window;

    // total-balance drift: the books of the delayed scheme include the
    // time-delay dissipation and the eps-truncation deficit, so that what
    // remains is the per-step convexity gap, an O(tau V_k) quantity
    row.drift_total = (row.E_total + row.kinetic_window) -
                      (ledger.rows[0].E_total + ledger.rows[0].kinetic_window) +
                      inertia_diss_cum + trunc_deficit_cum - flux_cum - work_cum;

    // slack of the discrete mechanical energy inequality
    if (k >= 1) {
      const double lhs = row.M + row.kinetic_window + diss_cum + inertia_diss_cum;
      const double rhs = ledger.rows[0].M + ledger.rows[0].kinetic_window - coupling_work_cum +
                         work_cum;
      row.mech_slack = lhs - rhs;
    }
  }
  return ledger;
}

double weak_heat_residual(const Trajectory& traj, const SchemeConfig& cfg,
                          const SpatialTestFn& psi, const TimeTestFn& eta) {
  const Grid2D& g = traj.grid;
  const MaterialParams& m = cfg.material;
  const double tau = traj.tau;
  const double dx2 = g.dx * g.dx;
  const int N = traj.num_steps();

  // spatial test function sampled once
  std::vector<double> psi_cell(g.cell_count()), psi_node(g.node_count()),
      lap_psi_node(g.node_count());
  std::vector<Vec2> grad_psi_cell(g.cell_count());
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      const double xc = (ci + 0.5) * g.dx, yc = (cj + 0.5) * g.dx;
      psi_cell[g.cell(ci, cj)] = psi.value(xc, yc);
      grad_psi_cell[g.cell(ci, cj)] = psi.grad(xc, yc);
    }
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      psi_node[g.node(i, j)] = psi.value(g.x1(i), g.x2(j));
      lap_psi_node[g.node(i, j)] = psi.laplacian(g.x1(i), g.x2(j));
    }

  auto energy_density_paired = [&](int k, const VectorField& v) {
    // int (W^el + H + w + rho/2 |v|^2) psi
    const std::vector<Mat2> F = grad_cells(g, traj.y[k]);
    const std::vector<Vec2> lap = laplacian_nodes(g, traj.y[k]);
    double s = 0.0;
    for (int c = 0; c < g.cell_count(); ++c)
      s += dx2 * (eval_Wel(m, F[c]) + traj.w[k][c]) * psi_cell[c];
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i)
        s += dx2 * eval_H(m, lap[g.interior(i, j)]) * psi_node[g.node(i, j)];
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        s += 0.5 * cfg.rho * g.node_weight(i, j) * v.at(i, j).squaredNorm() *
             psi_node[g.node(i, j)];
    return s;
  };

  double res = 0.0;
  res -= eta.value(0.0) * energy_density_paired(0, traj.ramp_velocity);

  for (int l = 1; l <= N; ++l) {
    const double eta_l = eta.value(l * tau);
    const double deta_l = (eta.value(l * tau) - eta.value((l - 1) * tau)) / tau;
    const VectorField v = traj.velocity(l);

    res -= tau * deta_l * energy_density_paired(l, v);
    if (eta_l == 0.0 && deta_l == 0.0) continue;

    const std::vector<Mat2> F = grad_cells(g, traj.y[l]);
    const std::vector<Mat2> Fp = grad_cells(g, traj.y[l - 1]);
    const std::vector<double> thc = cell_average(g, traj.theta[l]);
    const std::vector<Vec2> gth = grad_cells_scalar(g, traj.theta[l]);
    const std::vector<Vec2> vc = cell_average_vec(g, v);
    const std::vector<Vec2> lap = laplacian_nodes(g, traj.y[l]);

    double conduction = 0.0, transport = 0.0;
    for (int c = 0; c < g.cell_count(); ++c) {
      const double th = std::max(0.0, thc[c]);
      conduction += dx2 * (pullback_K(m, F[c], th) * gth[c]).dot(grad_psi_cell[c]);
      const Mat2 rate = (F[c] - Fp[c]) / tau;
      const Mat2 stress =
          grad_Wel(m, F[c]) + grad_Wcpl_F(m, F[c], th) + eval_dR_dFdot(m, F[c], rate, th);
      transport += dx2 * (stress * grad_psi_cell[c]).dot(vc[c]);
    }

    const ScalarField tb = theta_b_average(cfg, g, l, tau);
    double flux = 0.0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        if (g.is_boundary(i, j))
          flux += g.boundary_weight(i, j) * (tb.at(i, j) - traj.theta[l].at(i, j)) *
                  psi_node[g.node(i, j)];

    const VectorField f_avg = time_average_force(cfg, g, l, tau);
    double fwork = 0.0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        fwork += g.node_weight(i, j) * f_avg.at(i, j).dot(v.at(i, j)) * psi_node[g.node(i, j)];

    double dh_lap = 0.0;
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i)
        dh_lap += dx2 * eval_DH(m, lap[g.interior(i, j)]).dot(v.at(i, j)) *
                  lap_psi_node[g.node(i, j)];

    double dh_transport = 0.0;
    if (g.n >= 4) {
      for (int j = 1; j <= g.n - 2; ++j)
        for (int i = 1; i <= g.n - 3; ++i) {
          const Vec2 ddh =
              (eval_DH(m, lap[g.interior(i + 1, j)]) - eval_DH(m, lap[g.interior(i, j)])) / g.dx;
          const Vec2 vmid = 0.5 * (v.at(i, j) + v.at(i + 1, j));
          const Vec2 gpsi = psi.grad((i + 0.5) * g.dx, j * g.dx);
          dh_transport += dx2 * ddh.dot(vmid) * gpsi[0];
        }
      for (int j = 1; j <= g.n - 3; ++j)
        for (int i = 1; i <= g.n - 2; ++i) {
          const Vec2 ddh =
              (eval_DH(m, lap[g.interior(i, j + 1)]) - eval_DH(m, lap[g.interior(i, j)])) / g.dx;
          const Vec2 vmid = 0.5 * (v.at(i, j) + v.at(i, j + 1));
          const Vec2 gpsi = psi.grad(i * g.dx, (j + 0.5) * g.dx);
          dh_transport += dx2 * ddh.dot(vmid) * gpsi[1];
        }
    }

    res += tau * eta_l *
           (conduction - cfg.kappa * flux - fwork + transport - dh_lap - 2.0 * dh_transport);
  }
  return res;
}

}  // namespace tvsolid
