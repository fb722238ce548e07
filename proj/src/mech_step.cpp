#include "tvsolid/mech_step.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace tvsolid {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// One stencil entry of an interior-edge value of grad(Lap u): node plus weight
// (in units 1/dx^3). Boundary nodes carry dof = -1.
struct StencilEntry {
  int i, j;
  double w;
  int dof;  // -1 for Dirichlet nodes
};

struct EdgeStencil {
  std::vector<StencilEntry> entries;
};

struct Precomputed {
  std::vector<Mat2> F_prev;        // per cell
  std::vector<double> theta_c;     // per cell, previous temperature
  std::vector<double> diss_c;      // per cell, D-modulus at theta_c
  std::vector<EdgeStencil> edges;  // all interior edges (hor then ver)
  std::vector<Vec2> edge_prev;     // grad(Lap y_prev) per edge
  int n_dof = 0;
};

int dof_of(const Grid2D& g, int i, int j, int c) {
  if (g.is_boundary(i, j)) return -1;
  return 2 * g.interior(i, j) + c;
}

// Union of the two 5-point Laplacian stencils divided by dx, for the edge
// from interior node a to interior node b.
EdgeStencil make_edge_stencil(const Grid2D& g, int ai, int aj, int bi, int bj) {
  const double s = 1.0 / (g.dx * g.dx * g.dx);
  std::vector<StencilEntry> acc;
  auto add = [&](int i, int j, double w) {
    for (auto& e : acc)
      if (e.i == i && e.j == j) {
        e.w += w;
        return;
      }
    acc.push_back({i, j, w, dof_of(g, i, j, 0)});
  };
  auto add_lap = [&](int i, int j, double sign) {
    add(i + 1, j, sign * s);
    add(i - 1, j, sign * s);
    add(i, j + 1, sign * s);
    add(i, j - 1, sign * s);
    add(i, j, -4.0 * sign * s);
  };
  add_lap(bi, bj, +1.0);
  add_lap(ai, aj, -1.0);
  EdgeStencil out;
  for (const auto& e : acc)
    if (e.w != 0.0) out.entries.push_back(e);
  return out;
}

Precomputed precompute(const MechStepInput& in) {
  const Grid2D& g = in.grid;
  Precomputed pre;
  pre.F_prev = grad_cells(g, in.y_prev);
  pre.theta_c = cell_average(g, in.theta_prev);
  pre.diss_c.resize(g.cell_count());
  for (int c = 0; c < g.cell_count(); ++c) pre.diss_c[c] = diss_modulus(pre.theta_c[c]);
  pre.n_dof = 2 * g.interior_count();

  if (in.eps > 0.0 && g.n >= 4) {
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 3; ++i)
        pre.edges.push_back(make_edge_stencil(g, i, j, i + 1, j));
    for (int j = 1; j <= g.n - 3; ++j)
      for (int i = 1; i <= g.n - 2; ++i)
        pre.edges.push_back(make_edge_stencil(g, i, j, i, j + 1));
    const EdgeVectors ev = grad_laplacian_edges(g, in.y_prev);
    pre.edge_prev.reserve(pre.edges.size());
    for (const Vec2& v : ev.hor) pre.edge_prev.push_back(v);
    for (const Vec2& v : ev.ver) pre.edge_prev.push_back(v);
  }
  return pre;
}

// 4x4 Hessian of (1/tau) R(F_prev, F - F_prev, theta) in vec(F) ordering
// (i, a) -> 2i + a: exactly c/tau * L^T L with L the linearization of Cdot.
Mat4 hess_R_quadratic(const Mat2& F0, double cdiss, double tau) {
  Eigen::Matrix4d L = Eigen::Matrix4d::Zero();
  auto vid = [](int a, int b) { return 2 * a + b; };
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 2; ++i)
        for (int c = 0; c < 2; ++c) {
          double v = 0.0;
          if (c == a) v += F0(i, b);
          if (c == b) v += F0(i, a);
          L(vid(a, b), vid(i, c)) += v;
        }
  return (cdiss / tau) * (L.transpose() * L);
}

struct Assembly {
  double J = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  Eigen::VectorXd grad;
  std::vector<Triplet> hess;
};

// Single-pass assembly of value / gradient / Hessian of the step functional.
// Returns false (with J untouched beyond min_det) as soon as a cell has
// nonpositive determinant, so the line search can reject the trial cheaply.
bool assemble(const VectorField& y, const MechStepInput& in, const Precomputed& pre,
              bool want_grad, bool want_hess, Assembly& out) {
  const Grid2D& g = in.grid;
  const MaterialParams& m = in.mat;
  const double dx2 = g.dx * g.dx;
  out.J = 0.0;
  out.min_det = std::numeric_limits<double>::infinity();
  if (want_grad) out.grad = Eigen::VectorXd::Zero(pre.n_dof);
  if (want_hess) {
    out.hess.clear();
    out.hess.reserve(static_cast<size_t>(pre.n_dof) * 40);
  }

  const std::vector<Mat2> F_cells = grad_cells(g, y);
  for (const Mat2& F : F_cells) out.min_det = std::min(out.min_det, F.determinant());
  if (!(out.min_det > 0.0)) return false;

  const double sg = 1.0 / (2.0 * g.dx);
  const double sxw[4] = {-sg, +sg, -sg, +sg};
  const double syw[4] = {-sg, -sg, +sg, +sg};

  // cell energies: W^el + W^cpl + (1/tau) R
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      const int c = g.cell(ci, cj);
      const Mat2& F = F_cells[c];
      const Mat2& F0 = pre.F_prev[c];
      const double th = pre.theta_c[c];
      const Mat2 G = F - F0;

      out.J += dx2 * (eval_Wel(m, F) + eval_Wcpl(m, F, th) +
                      (0.5 * pre.diss_c[c] / in.tau) * cauchy_green_rate(F0, G).squaredNorm());

      if (!want_grad) continue;
      const Mat2 dW = grad_Wel(m, F) + grad_Wcpl_F(m, F, th) +
                      (1.0 / in.tau) * eval_dR_dFdot(m, F0, G, th);
      const int corner_i[4] = {ci, ci + 1, ci, ci + 1};
      const int corner_j[4] = {cj, cj, cj + 1, cj + 1};
      int dofs[4][2];
      for (int k = 0; k < 4; ++k)
        for (int cc = 0; cc < 2; ++cc) dofs[k][cc] = dof_of(g, corner_i[k], corner_j[k], cc);

      for (int k = 0; k < 4; ++k)
        for (int cc = 0; cc < 2; ++cc) {
          if (dofs[k][cc] < 0) continue;
          out.grad[dofs[k][cc]] += dx2 * (dW(cc, 0) * sxw[k] + dW(cc, 1) * syw[k]);
        }

      if (!want_hess) continue;
      Mat4 H4 = hess_Wel(m, F) + hess_Wcpl_FF(m, F, th) + hess_R_quadratic(F0, pre.diss_c[c], in.tau);
      auto vid = [](int i, int a) { return 2 * i + a; };
      for (int k = 0; k < 4; ++k)
        for (int cc = 0; cc < 2; ++cc) {
          const int r = dofs[k][cc];
          if (r < 0) continue;
          for (int l = 0; l < 4; ++l)
            for (int c2 = 0; c2 < 2; ++c2) {
              const int q = dofs[l][c2];
              if (q < 0) continue;
              double hval = 0.0;
              const double skw[2] = {sxw[k], syw[k]};
              const double slw[2] = {sxw[l], syw[l]};
              for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) hval += H4(vid(cc, a), vid(c2, b)) * skw[a] * slw[b];
              out.hess.emplace_back(r, q, dx2 * hval);
            }
        }
    }

  // strain-gradient energy H(Lap y) at interior nodes
  {
    const double sl = 1.0 / (g.dx * g.dx);
    const int sti[5] = {1, -1, 0, 0, 0};
    const int stj[5] = {0, 0, 1, -1, 0};
    const double stw[5] = {sl, sl, sl, sl, -4.0 * sl};
    for (int j = 1; j <= g.n - 2; ++j)
      for (int i = 1; i <= g.n - 2; ++i) {
        Vec2 lap = Vec2::Zero();
        for (int s = 0; s < 5; ++s)
          for (int c = 0; c < 2; ++c) lap[c] += stw[s] * y.comp(i + sti[s], j + stj[s], c);
        out.J += dx2 * eval_H(m, lap);
        if (!want_grad) continue;
        const Vec2 dh = eval_DH(m, lap);
        for (int s = 0; s < 5; ++s)
          for (int c = 0; c < 2; ++c) {
            const int d = dof_of(g, i + sti[s], j + stj[s], c);
            if (d >= 0) out.grad[d] += dx2 * dh[c] * stw[s];
          }
        if (!want_hess) continue;
        const Mat2 Hh = hess_H(m, lap);
        for (int s = 0; s < 5; ++s)
          for (int t = 0; t < 5; ++t)
            for (int c = 0; c < 2; ++c)
              for (int c2 = 0; c2 < 2; ++c2) {
                const int r = dof_of(g, i + sti[s], j + stj[s], c);
                const int q = dof_of(g, i + sti[t], j + stj[t], c2);
                if (r >= 0 && q >= 0)
                  out.hess.emplace_back(r, q, dx2 * Hh(c, c2) * stw[s] * stw[t]);
              }
      }
  }

  // eps/(2 tau) || grad Lap y - grad Lap y_prev ||^2 over interior edges
  if (!pre.edges.empty()) {
    const double w = in.eps * dx2 / in.tau;
    for (size_t e = 0; e < pre.edges.size(); ++e) {
      Vec2 val = Vec2::Zero();
      for (const auto& s : pre.edges[e].entries)
        for (int c = 0; c < 2; ++c) val[c] += s.w * y.comp(s.i, s.j, c);
      const Vec2 d = val - pre.edge_prev[e];
      out.J += 0.5 * w * d.squaredNorm();
      if (!want_grad) continue;
      for (const auto& s : pre.edges[e].entries) {
        if (s.dof < 0) continue;
        for (int c = 0; c < 2; ++c) out.grad[s.dof + c] += w * d[c] * s.w;
      }
      if (!want_hess) continue;
      for (const auto& s : pre.edges[e].entries)
        for (const auto& t : pre.edges[e].entries) {
          if (s.dof < 0 || t.dof < 0) continue;
          for (int c = 0; c < 2; ++c) out.hess.emplace_back(s.dof + c, t.dof + c, w * s.w * t.w);
        }
    }
  }

  // time-delayed inertia penalty and the dead load (nodal trapezoid mass)
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) {
      const double wt = g.node_weight(i, j);
      const Vec2 rate = (y.at(i, j) - in.y_prev.at(i, j)) / in.tau - in.delayed_velocity.at(i, j);
      out.J += 0.5 * in.rho * in.tau / in.h * wt * rate.squaredNorm();
      out.J -= wt * in.f_avg.at(i, j).dot(y.at(i, j));
      if (!want_grad) continue;
      for (int c = 0; c < 2; ++c) {
        const int d = dof_of(g, i, j, c);
        if (d < 0) continue;
        out.grad[d] += in.rho / in.h * wt * rate[c] - wt * in.f_avg.at(i, j)[c];
        if (want_hess) out.hess.emplace_back(d, d, in.rho / (in.h * in.tau) * wt);
      }
    }

  return true;
}

VectorField with_interior(const Grid2D& g, const VectorField& base, const Eigen::VectorXd& xi) {
  VectorField y = base;
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i)
      for (int c = 0; c < 2; ++c) y.comp(i, j, c) = xi[2 * g.interior(i, j) + c];
  return y;
}

Eigen::VectorXd interior_of(const Grid2D& g, const VectorField& y) {
  Eigen::VectorXd x(2 * g.interior_count());
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i)
      for (int c = 0; c < 2; ++c) x[2 * g.interior(i, j) + c] = y.comp(i, j, c);
  return x;
}

}  // namespace

void MechStepInput::validate() const {
  mat.validate();
  if (!(tau > 0.0 && tau < h)) throw std::invalid_argument("mech step: need 0 < tau < h");
  if (!(eps >= 0.0)) throw std::invalid_argument("mech step: eps must be >= 0");
  if (!(rho > 0.0)) throw std::invalid_argument("mech step: rho must be positive");
  if (!(min_det(grid, y_prev) > 0.0))
    throw std::invalid_argument("mech step: y_prev must have positive determinant");
  if (theta_prev.min() < 0.0)
    throw std::invalid_argument("mech step: theta_prev must be nonnegative");
}

double assemble_mech_energy(const VectorField& y, const MechStepInput& in) {
  const Precomputed pre = precompute(in);
  Assembly a;
  if (!assemble(y, in, pre, false, false, a))
    throw std::domain_error("assemble_mech_energy: det(grad y) <= 0 at a cell");
  return a.J;
}

VectorField grad_mech_energy(const VectorField& y, const MechStepInput& in) {
  const Precomputed pre = precompute(in);
  Assembly a;
  if (!assemble(y, in, pre, true, false, a))
    throw std::domain_error("grad_mech_energy: det(grad y) <= 0 at a cell");
  const Grid2D& g = in.grid;
  VectorField out(g);
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i)
      for (int c = 0; c < 2; ++c) out.comp(i, j, c) = a.grad[2 * g.interior(i, j) + c];
  return out;
}

double mech_residual(const VectorField& y, const MechStepInput& in) {
  const Precomputed pre = precompute(in);
  Assembly a;
  if (!assemble(y, in, pre, true, false, a))
    throw std::domain_error("mech_residual: det(grad y) <= 0 at a cell");
  return a.grad.norm() / (1.0 + std::abs(a.J));
}

std::pair<VectorField, MechSolveReport> solve_mech_step(const MechStepInput& in,
                                                        const VectorField& y_init) {
  in.validate();
  const Grid2D& g = in.grid;
  const Precomputed pre = precompute(in);
  MechSolveReport rep;

  Eigen::VectorXd x = interior_of(g, y_init);
  VectorField y = with_interior(g, y_init, x);
  if (!(min_det(g, y) > 0.0))
    throw std::invalid_argument("solve_mech_step: y_init must have positive determinant");
  if (!dirichlet_identity_on_boundary(g, y, 1e-12))
    throw std::invalid_argument("solve_mech_step: y_init must equal id on the boundary");

  Assembly a;
  assemble(y, in, pre, true, true, a);
  rep.energy_initial = a.J;
  rep.min_det = rep.min_det_path = a.min_det;

  for (int iter = 0; iter <= detail::kMechMaxIter; ++iter) {
    rep.iterations = iter;
    rep.residual = a.grad.norm() / (1.0 + std::abs(a.J));
    if (rep.residual <= detail::kMechTol) {
      rep.converged = true;
      break;
    }
    if (iter == detail::kMechMaxIter) break;

    SpMat H(pre.n_dof, pre.n_dof);
    H.setFromTriplets(a.hess.begin(), a.hess.end());
    double diag_scale = 0.0;
    for (int k = 0; k < pre.n_dof; ++k) diag_scale = std::max(diag_scale, std::abs(H.coeff(k, k)));

    // symmetric modification: add multiples of the identity until PD
    Eigen::VectorXd p;
    double shift = 0.0;
    for (int attempt = 0; attempt < 40; ++attempt) {
      SpMat Hs = H;
      if (shift > 0.0) {
        SpMat I(pre.n_dof, pre.n_dof);
        I.setIdentity();
        Hs += shift * I;
      }
      Eigen::SimplicialLDLT<SpMat> ldlt(Hs);
      if (ldlt.info() == Eigen::Success && ldlt.vectorD().minCoeff() > 0.0) {
        p = ldlt.solve(-a.grad);
        break;
      }
      shift = (shift == 0.0) ? 1e-8 * std::max(diag_scale, 1.0) : 10.0 * shift;
    }
    if (p.size() == 0 || !(a.grad.dot(p) < 0.0)) p = -a.grad;  // descent fallback

    const double slope = a.grad.dot(p);
    // Armijo with a roundoff allowance so full Newton steps stay acceptable
    // once the decrement drops below the ulp of J
    const double fuzz = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(a.J));
    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= detail::kMechMaxBacktracks; ++bt) {
      const VectorField y_trial = with_interior(g, y, x + alpha * p);
      Assembly trial;
      const bool admissible = assemble(y_trial, in, pre, false, false, trial);
      if (admissible && trial.J <= a.J + 1e-4 * alpha * slope + fuzz) {
        x += alpha * p;
        y = y_trial;
        rep.min_det_path = std::min(rep.min_det_path, trial.min_det);
        accepted = true;
        break;
      }
      ++rep.backtracks;
      alpha *= 0.5;
    }
    if (!accepted) {
      std::ostringstream os;
      os << "solve_mech_step: line search failed at iteration " << iter << " (residual "
         << rep.residual << ", min_det " << rep.min_det_path << ")";
      throw StepFailure(os.str());
    }
    assemble(y, in, pre, true, true, a);
  }

  rep.energy_final = a.J;
  rep.min_det = a.min_det;
  if (!rep.converged) {
    std::ostringstream os;
    os << "solve_mech_step: no convergence in " << detail::kMechMaxIter
       << " iterations (residual " << rep.residual << ")";
    throw StepFailure(os.str());
  }
  return {y, rep};
}

}  // namespace tvsolid
