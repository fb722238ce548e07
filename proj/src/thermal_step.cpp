#include "tvsolid/thermal_step.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace tvsolid {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// C2 extensions below zero temperature so that unconstrained Newton iterates
// remain evaluable; the public material API keeps its theta >= 0 contract.
double win_ext(const MaterialParams& m, const Mat2& F, double theta) {
  return theta >= 0.0 ? eval_Win(m, F, theta) : m.c_V * theta;
}
double dwin_ext(const MaterialParams& m, const Mat2& F, double theta) {
  return theta >= 0.0 ? dWin_dtheta(m, F, theta) : m.c_V;
}
double win_prim_ext(const MaterialParams& m, const Mat2& F, double theta) {
  return theta >= 0.0 ? eval_Win_primitive(m, F, theta) : 0.5 * m.c_V * theta * theta;
}

struct Pre {
  std::vector<Mat2> F_new;      // per cell
  std::vector<double> w_prev;   // per cell: W^in(grad y_prev, theta_prev)
  std::vector<Mat2> K_c;        // per cell, frozen at (grad y_prev, theta_prev)
  std::vector<double> src_c;    // per cell: dissipation + coupling
};

Pre precompute(const ThermalStepInput& in) {
  const Grid2D& g = in.grid;
  Pre pre;
  pre.F_new = grad_cells(g, in.y_new);
  const std::vector<Mat2> F_prev = grad_cells(g, in.y_prev);
  const std::vector<double> th_prev = cell_average(g, in.theta_prev);
  pre.w_prev.resize(g.cell_count());
  pre.K_c.resize(g.cell_count());
  pre.src_c.resize(g.cell_count());
  for (int c = 0; c < g.cell_count(); ++c) {
    pre.w_prev[c] = eval_Win(in.mat, F_prev[c], std::max(0.0, th_prev[c]));
    pre.K_c[c] = pullback_K(in.mat, F_prev[c], std::max(0.0, th_prev[c]));
    pre.src_c[c] = in.dissipation_source[c] + in.coupling_source[c];
  }
  return pre;
}

struct Assembly {
  double Phi = 0.0;
  Eigen::VectorXd grad;
  std::vector<Triplet> hess;
};

void assemble(const ScalarField& theta, const ThermalStepInput& in, const Pre& pre,
              bool want_grad, bool want_hess, Assembly& out) {
  const Grid2D& g = in.grid;
  const double dx2 = g.dx * g.dx;
  const int N = g.node_count();
  out.Phi = 0.0;
  if (want_grad) out.grad = Eigen::VectorXd::Zero(N);
  if (want_hess) {
    out.hess.clear();
    out.hess.reserve(static_cast<size_t>(N) * 16);
  }

  const double sg = 1.0 / (2.0 * g.dx);
  const double sxw[4] = {-sg, +sg, -sg, +sg};
  const double syw[4] = {-sg, -sg, +sg, +sg};

  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      const int c = g.cell(ci, cj);
      const int nodes[4] = {g.node(ci, cj), g.node(ci + 1, cj), g.node(ci, cj + 1),
                            g.node(ci + 1, cj + 1)};
      const double t00 = theta.v[nodes[0]], t10 = theta.v[nodes[1]];
      const double t01 = theta.v[nodes[2]], t11 = theta.v[nodes[3]];
      const double tc = 0.25 * (t00 + t10 + t01 + t11);
      const Vec2 gt((t10 + t11 - t00 - t01) * sg, (t01 + t11 - t00 - t10) * sg);

      out.Phi += dx2 * ((win_prim_ext(in.mat, pre.F_new[c], tc) - pre.w_prev[c] * tc) / in.tau +
                        0.5 * gt.dot(pre.K_c[c] * gt) - pre.src_c[c] * tc);

      if (!want_grad) continue;
      const double dprim = (win_ext(in.mat, pre.F_new[c], tc) - pre.w_prev[c]) / in.tau;
      const Vec2 Kg = pre.K_c[c] * gt;
      for (int k = 0; k < 4; ++k)
        out.grad[nodes[k]] +=
            dx2 * (0.25 * (dprim - pre.src_c[c]) + Kg[0] * sxw[k] + Kg[1] * syw[k]);

      if (!want_hess) continue;
      const double d2prim = dwin_ext(in.mat, pre.F_new[c], tc) / in.tau;
      for (int k = 0; k < 4; ++k)
        for (int l = 0; l < 4; ++l) {
          double v = 0.0625 * d2prim;
          const double kw[2] = {sxw[k], syw[k]};
          const double lw[2] = {sxw[l], syw[l]};
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) v += pre.K_c[c](a, b) * kw[a] * lw[b];
          out.hess.emplace_back(nodes[k], nodes[l], dx2 * v);
        }
    }

  // truncated eps-source on interior edges, theta at the edge midpoint
  if (g.n >= 4) {
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 3; ++i) {
        const double s = in.eps_source.hor[g.hedge(i, j)];
        const int a = g.node(i, j), b = g.node(i + 1, j);
        out.Phi -= dx2 * s * 0.5 * (theta.v[a] + theta.v[b]);
        if (want_grad) {
          out.grad[a] -= 0.5 * dx2 * s;
          out.grad[b] -= 0.5 * dx2 * s;
        }
      }
    for (int j = 1; j <= g.n - 3; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        const double s = in.eps_source.ver[g.vedge(i, j)];
        const int a = g.node(i, j), b = g.node(i, j + 1);
        out.Phi -= dx2 * s * 0.5 * (theta.v[a] + theta.v[b]);
        if (want_grad) {
          out.grad[a] -= 0.5 * dx2 * s;
          out.grad[b] -= 0.5 * dx2 * s;
        }
      }
  }

  // Robin boundary term
  if (in.kappa > 0.0) {
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        if (!g.is_boundary(i, j)) continue;
        const double wb = g.boundary_weight(i, j);
        const double diff = theta.at(i, j) - in.theta_b_avg.at(i, j);
        out.Phi += 0.5 * in.kappa * wb * diff * diff;
        if (want_grad) out.grad[g.node(i, j)] += in.kappa * wb * diff;
        if (want_hess) out.hess.emplace_back(g.node(i, j), g.node(i, j), in.kappa * wb);
      }
  }
}

}  // namespace

void ThermalStepInput::validate() const {
  mat.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("thermal step: tau must be positive");
  if (!(eps >= 0.0 && kappa >= 0.0))
    throw std::invalid_argument("thermal step: eps and kappa must be nonnegative");
  if (static_cast<int>(dissipation_source.size()) != grid.cell_count() ||
      static_cast<int>(coupling_source.size()) != grid.cell_count())
    throw std::invalid_argument("thermal step: cell source size mismatch");
  for (double s : dissipation_source)
    if (!(s >= 0.0)) throw std::invalid_argument("thermal step: dissipation source must be >= 0");
  auto check_edge = [&](const std::vector<double>& e) {
    for (double s : e)
      if (!(s >= 0.0 && s <= 1.0 / tau + 1e-12))
        throw std::invalid_argument("thermal step: eps source outside [0, 1/tau]");
  };
  check_edge(eps_source.hor);
  check_edge(eps_source.ver);
}

ThermalStepInput make_thermal_input(const Grid2D& grid, const MaterialParams& mat,
                                    const VectorField& y_new, const VectorField& y_prev,
                                    const ScalarField& theta_prev, const ScalarField& theta_b_avg,
                                    double tau, double eps, double kappa) {
  ThermalStepInput in;
  in.grid = grid;
  in.mat = mat;
  in.y_new = y_new;
  in.y_prev = y_prev;
  in.theta_prev = theta_prev;
  in.theta_b_avg = theta_b_avg;
  in.tau = tau;
  in.eps = eps;
  in.kappa = kappa;

  const std::vector<Mat2> F_new = grad_cells(grid, y_new);
  const std::vector<Mat2> F_prev = grad_cells(grid, y_prev);
  const std::vector<double> th_c = cell_average(grid, theta_prev);
  in.dissipation_source.resize(grid.cell_count());
  in.coupling_source.resize(grid.cell_count());
  for (int c = 0; c < grid.cell_count(); ++c) {
    const Mat2 rate = (F_new[c] - F_prev[c]) / tau;
    const double th = std::max(0.0, th_c[c]);
    // xi = 2R exactly; the sum-of-squares route keeps the source nonnegative
    // in floating point where the stress contraction could cancel below zero
    in.dissipation_source[c] = 2.0 * eval_R(mat, F_prev[c], rate, th);
    in.coupling_source[c] = grad_Wcpl_F(mat, F_prev[c], th).cwiseProduct(rate).sum();
  }

  in.eps_source.hor.assign(grid.hedge_count(), 0.0);
  in.eps_source.ver.assign(grid.vedge_count(), 0.0);
  if (eps > 0.0 && grid.n >= 4) {
    const EdgeVectors gl_new = grad_laplacian_edges(grid, y_new);
    const EdgeVectors gl_prev = grad_laplacian_edges(grid, y_prev);
    for (int e = 0; e < grid.hedge_count(); ++e) {
      const Vec2 r = (gl_new.hor[e] - gl_prev.hor[e]) / tau;
      in.eps_source.hor[e] = std::min(eps * r.squaredNorm(), 1.0 / tau);
    }
    for (int e = 0; e < grid.vedge_count(); ++e) {
      const Vec2 r = (gl_new.ver[e] - gl_prev.ver[e]) / tau;
      in.eps_source.ver[e] = std::min(eps * r.squaredNorm(), 1.0 / tau);
    }
  }
  return in;
}

double assemble_thermal_functional(const ScalarField& theta, const ThermalStepInput& in) {
  if (theta.min() < 0.0)
    throw std::domain_error("assemble_thermal_functional: negative theta node");
  const Pre pre = precompute(in);
  Assembly a;
  assemble(theta, in, pre, false, false, a);
  return a.Phi;
}

ThermalResidual residual_thermal_EL(const ScalarField& theta, const ThermalStepInput& in) {
  const Pre pre = precompute(in);
  Assembly a;
  assemble(theta, in, pre, true, false, a);
  ThermalResidual res;
  res.rows.assign(a.grad.data(), a.grad.data() + a.grad.size());
  res.phi1_row = a.grad.sum();
  double sq = 0.0;
  for (int k = 0; k < a.grad.size(); ++k) {
    // KKT-aware row: at an active bound (theta == 0) only a negative row
    // (pushing further down) counts as violation
    const double row = (theta.v[k] <= 0.0) ? std::min(a.grad[k], 0.0) : a.grad[k];
    res.max_row = std::max(res.max_row, std::abs(row));
    sq += row * row;
  }
  res.scaled = std::sqrt(sq) / (1.0 + std::abs(a.Phi));
  return res;
}

std::pair<ScalarField, ThermalSolveReport> solve_thermal_step(const ThermalStepInput& in,
                                                              const ScalarField& theta_init) {
  in.validate();
  if (theta_init.min() < 0.0)
    throw std::invalid_argument("solve_thermal_step: theta_init must be nonnegative");
  const Grid2D& g = in.grid;
  const Pre pre = precompute(in);
  const int N = g.node_count();
  ThermalSolveReport rep;

  ScalarField theta = theta_init;
  Eigen::Map<Eigen::VectorXd> x(theta.v.data(), N);

  Assembly a;
  assemble(theta, in, pre, true, true, a);

  auto kkt_norm = [&](const Eigen::VectorXd& gradv) {
    double sq = 0.0;
    for (int k = 0; k < N; ++k) {
      const double row = (theta.v[k] <= 0.0) ? std::min(gradv[k], 0.0) : gradv[k];
      sq += row * row;
    }
    return std::sqrt(sq);
  };

  for (int iter = 0; iter <= detail::kThermalMaxIter; ++iter) {
    rep.iterations = iter;
    rep.residual = kkt_norm(a.grad) / (1.0 + std::abs(a.Phi));
    if (rep.residual <= detail::kThermalTol) {
      rep.converged = true;
      break;
    }
    if (iter == detail::kThermalMaxIter) break;

    bool accepted = false;
    if (!rep.used_projected_gradient) {
      SpMat H(N, N);
      H.setFromTriplets(a.hess.begin(), a.hess.end());
      double diag_scale = 0.0;
      for (int k = 0; k < N; ++k) diag_scale = std::max(diag_scale, std::abs(H.coeff(k, k)));
      // kappa = 0 leaves the nodal checkerboard invisible to cells and edges,
      // so the Hessian can be exactly singular; shift until positive definite
      Eigen::VectorXd p;
      double shift = 0.0;
      for (int attempt = 0; attempt < 40; ++attempt) {
        SpMat Hs = H;
        if (shift > 0.0) {
          SpMat I(N, N);
          I.setIdentity();
          Hs += shift * I;
        }
        Eigen::SimplicialLDLT<SpMat> ldlt(Hs);
        if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
          p = ldlt.solve(-a.grad);
          break;
        }
        shift = (shift == 0.0) ? 1e-10 * std::max(diag_scale, 1.0) : 10.0 * shift;
      }
      if (p.size() == N) {
        const double slope = a.grad.dot(p);
        const double fuzz =
            4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a.Phi));
        if (slope < 0.0) {
          double alpha = 1.0;
          for (int bt = 0; bt < 60; ++bt) {
            ScalarField trial = theta;
            Eigen::Map<Eigen::VectorXd>(trial.v.data(), N) = x + alpha * p;
            Assembly ta;
            assemble(trial, in, pre, false, false, ta);
            if (ta.Phi <= a.Phi + 1e-4 * alpha * slope + fuzz) {
              if (trial.min() < -detail::kThetaClampTol) {
                // reject the dipping iterate and switch on the safeguard
                rep.used_projected_gradient = true;
              } else {
                theta = trial;
                accepted = true;
              }
              break;
            }
            alpha *= 0.5;
          }
        }
      }
    }

    if (!accepted) {
      // projected gradient with backtracking over the cone theta >= 0
      double alpha = 1.0;
      accepted = false;
      for (int bt = 0; bt < 200 && !accepted; ++bt) {
        ScalarField trial = theta;
        for (int k = 0; k < N; ++k) trial.v[k] = std::max(0.0, theta.v[k] - alpha * a.grad[k]);
        Assembly ta;
        assemble(trial, in, pre, false, false, ta);
        Eigen::Map<Eigen::VectorXd> tx(trial.v.data(), N);
        const double decrease = a.grad.dot(Eigen::VectorXd(tx - x));
        const double fuzz =
            4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a.Phi));
        if (ta.Phi <= a.Phi + 1e-4 * decrease + fuzz) {
          theta = trial;
          accepted = true;
        } else {
          alpha *= 0.5;
        }
      }
      if (!accepted) {
        std::ostringstream os;
        os << "solve_thermal_step: projected-gradient line search failed at iteration " << iter;
        throw StepFailure(os.str());
      }
    }
    assemble(theta, in, pre, true, true, a);
  }

  if (!rep.converged) {
    std::ostringstream os;
    os << "solve_thermal_step: no convergence in " << detail::kThermalMaxIter
       << " iterations (residual " << rep.residual << ")";
    throw StepFailure(os.str());
  }

  rep.min_theta = theta.min();
  if (rep.min_theta < detail::kThetaHardFloor) {
    std::ostringstream os;
    os << "solve_thermal_step: minimizer dipped to " << rep.min_theta
       << " which violates the nonnegativity guarantee";
    throw StepFailure(os.str());
  }
  for (double& t : theta.v)
    if (t < 0.0) {
      rep.clamp_magnitude = std::max(rep.clamp_magnitude, -t);
      ++rep.clamped_nodes;
      t = 0.0;
    }
  return {theta, rep};
}

double win_primitive_quadrature(const MaterialParams& m, const Mat2& F, double theta) {
  std::function<double(double, double, double, double, double, int)> simpson =
      [&](double lo, double hi, double flo, double fhi, double fmid, int depth) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = eval_Win(m, F, lm), frm = eval_Win(m, F, rm);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (depth > 40 || std::abs(left + right - whole) < 1e-14 * (1.0 + std::abs(whole)))
      return left + right + (left + right - whole) / 15.0;
    return simpson(lo, mid, flo, fmid, flm, depth + 1) +
           simpson(mid, hi, fmid, fhi, frm, depth + 1);
  };
  if (theta == 0.0) return 0.0;
  return simpson(0.0, theta, eval_Win(m, F, 0.0), eval_Win(m, F, theta),
                 eval_Win(m, F, 0.5 * theta), 0);
}

}  // namespace tvsolid
