#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "tvsolid/material.hpp"

namespace tvsolid {

/// Uniform n x n node grid on the unit square. Cells are the (n-1)^2 squares
/// between nodes, interior nodes have all neighbors, interior edges connect
/// two interior nodes.
struct Grid2D {
  int n = 0;
  double dx = 0.0;

  Grid2D() = default;
  explicit Grid2D(int nodes) : n(nodes), dx(1.0 / (nodes - 1)) {
    if (nodes < 3) throw std::invalid_argument("Grid2D: need n >= 3");
  }

  int node_count() const { return n * n; }
  int cell_count() const { return (n - 1) * (n - 1); }
  int interior_count() const { return (n - 2) * (n - 2); }
  int node(int i, int j) const { return j * n + i; }
  int cell(int ci, int cj) const { return cj * (n - 1) + ci; }
  int interior(int i, int j) const { return (j - 1) * (n - 2) + (i - 1); }
  bool is_boundary(int i, int j) const { return i == 0 || j == 0 || i == n - 1 || j == n - 1; }
  double x1(int i) const { return i * dx; }
  double x2(int j) const { return j * dx; }

  /// Trapezoid quadrature weight of a node for volume integrals.
  double node_weight(int i, int j) const {
    const double wx = (i == 0 || i == n - 1) ? 0.5 : 1.0;
    const double wy = (j == 0 || j == n - 1) ? 0.5 : 1.0;
    return dx * dx * wx * wy;
  }

  /// Per-side trapezoid weight of a boundary node. Corners collect dx/2 from
  /// each of their two incident sides, so every boundary node ends up with dx.
  double boundary_weight(int i, int j) const { return is_boundary(i, j) ? dx : 0.0; }

  // interior horizontal edges: (i,j)-(i+1,j), 1 <= i <= n-3, 1 <= j <= n-2
  // interior vertical edges:   (i,j)-(i,j+1), 1 <= i <= n-2, 1 <= j <= n-3
  int hedge_count() const { return n >= 4 ? (n - 3) * (n - 2) : 0; }
  int vedge_count() const { return n >= 4 ? (n - 2) * (n - 3) : 0; }
  int hedge(int i, int j) const { return (j - 1) * (n - 3) + (i - 1); }
  int vedge(int i, int j) const { return (j - 1) * (n - 2) + (i - 1); }
};

struct ScalarField {
  int n = 0;
  std::vector<double> v;

  ScalarField() = default;
  explicit ScalarField(const Grid2D& g, double fill = 0.0) : n(g.n), v(g.node_count(), fill) {}
  double& at(int i, int j) { return v[j * n + i]; }
  double at(int i, int j) const { return v[j * n + i]; }
  double min() const {
    double m = v[0];
    for (double x : v) m = std::min(m, x);
    return m;
  }
};

struct VectorField {
  int n = 0;
  std::vector<double> v;  // 2 components per node, node-major

  VectorField() = default;
  explicit VectorField(const Grid2D& g) : n(g.n), v(2 * g.node_count(), 0.0) {}
  Vec2 at(int i, int j) const { return Vec2(v[2 * (j * n + i)], v[2 * (j * n + i) + 1]); }
  void set(int i, int j, const Vec2& val) {
    v[2 * (j * n + i)] = val[0];
    v[2 * (j * n + i) + 1] = val[1];
  }
  double& comp(int i, int j, int c) { return v[2 * (j * n + i) + c]; }
  double comp(int i, int j, int c) const { return v[2 * (j * n + i) + c]; }
};

inline VectorField identity_deformation(const Grid2D& g) {
  VectorField y(g);
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) y.set(i, j, Vec2(g.x1(i), g.x2(j)));
  return y;
}

inline void check_same_grid(const Grid2D& g, int field_n, const char* who) {
  if (field_n != g.n) throw std::invalid_argument(std::string(who) + ": field/grid size mismatch");
}

/// Gradient of the bilinear interpolant at each cell center (exact there).
inline std::vector<Mat2> grad_cells(const Grid2D& g, const VectorField& u) {
  check_same_grid(g, u.n, "grad_cells");
  std::vector<Mat2> out(g.cell_count());
  const double s = 1.0 / (2.0 * g.dx);
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      Mat2 F;
      for (int c = 0; c < 2; ++c) {
        const double u00 = u.comp(ci, cj, c), u10 = u.comp(ci + 1, cj, c);
        const double u01 = u.comp(ci, cj + 1, c), u11 = u.comp(ci + 1, cj + 1, c);
        F(c, 0) = (u10 + u11 - u00 - u01) * s;
        F(c, 1) = (u01 + u11 - u00 - u10) * s;
      }
      out[g.cell(ci, cj)] = F;
    }
  return out;
}

inline std::vector<Vec2> grad_cells_scalar(const Grid2D& g, const ScalarField& u) {
  check_same_grid(g, u.n, "grad_cells_scalar");
  std::vector<Vec2> out(g.cell_count());
  const double s = 1.0 / (2.0 * g.dx);
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci) {
      const double u00 = u.at(ci, cj), u10 = u.at(ci + 1, cj);
      const double u01 = u.at(ci, cj + 1), u11 = u.at(ci + 1, cj + 1);
      out[g.cell(ci, cj)] = Vec2((u10 + u11 - u00 - u01) * s, (u01 + u11 - u00 - u10) * s);
    }
  return out;
}

/// Cell-center value of the bilinear interpolant (mean of the four corners).
inline std::vector<double> cell_average(const Grid2D& g, const ScalarField& u) {
  check_same_grid(g, u.n, "cell_average");
  std::vector<double> out(g.cell_count());
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci)
      out[g.cell(ci, cj)] =
          0.25 * (u.at(ci, cj) + u.at(ci + 1, cj) + u.at(ci, cj + 1) + u.at(ci + 1, cj + 1));
  return out;
}

inline std::vector<Vec2> cell_average_vec(const Grid2D& g, const VectorField& u) {
  check_same_grid(g, u.n, "cell_average_vec");
  std::vector<Vec2> out(g.cell_count());
  for (int cj = 0; cj < g.n - 1; ++cj)
    for (int ci = 0; ci < g.n - 1; ++ci)
      out[g.cell(ci, cj)] =
          0.25 * (u.at(ci, cj) + u.at(ci + 1, cj) + u.at(ci, cj + 1) + u.at(ci + 1, cj + 1));
  return out;
}

/// 5-point Laplacian at interior nodes (exact on quadratics).
inline std::vector<Vec2> laplacian_nodes(const Grid2D& g, const VectorField& u) {
  check_same_grid(g, u.n, "laplacian_nodes");
  std::vector<Vec2> out(g.interior_count());
  const double s = 1.0 / (g.dx * g.dx);
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 2; ++i) {
      Vec2 lap;
      for (int c = 0; c < 2; ++c)
        lap[c] = (u.comp(i + 1, j, c) + u.comp(i - 1, j, c) + u.comp(i, j + 1, c) +
                  u.comp(i, j - 1, c) - 4.0 * u.comp(i, j, c)) * s;
      out[g.interior(i, j)] = lap;
    }
  return out;
}

/// Forward differences of the nodal Laplacian along interior edges; the
/// horizontal family carries d/dx1(Lap u), the vertical one d/dx2(Lap u).
struct EdgeVectors {
  std::vector<Vec2> hor;
  std::vector<Vec2> ver;
};

inline EdgeVectors grad_laplacian_edges(const Grid2D& g, const VectorField& u) {
  check_same_grid(g, u.n, "grad_laplacian_edges");
  const std::vector<Vec2> lap = laplacian_nodes(g, u);
  EdgeVectors out;
  out.hor.assign(g.hedge_count(), Vec2::Zero());
  out.ver.assign(g.vedge_count(), Vec2::Zero());
  if (g.n < 4) return out;
  for (int j = 1; j <= g.n - 2; ++j)
    for (int i = 1; i <= g.n - 3; ++i)
      out.hor[g.hedge(i, j)] = (lap[g.interior(i + 1, j)] - lap[g.interior(i, j)]) / g.dx;
  for (int j = 1; j <= g.n - 3; ++j)
    for (int i = 1; i <= g.n - 2; ++i)
      out.ver[g.vedge(i, j)] = (lap[g.interior(i, j + 1)] - lap[g.interior(i, j)]) / g.dx;
  return out;
}

/// Cell-midpoint rule, weight dx^2 per cell.
inline double integrate_cells(const Grid2D& g, const std::vector<double>& cell_values) {
  if (static_cast<int>(cell_values.size()) != g.cell_count())
    throw std::invalid_argument("integrate_cells: size mismatch");
  double sum = 0.0;
  for (double v : cell_values) sum += v;
  return sum * g.dx * g.dx;
}

/// Trapezoid rule over nodal values.
inline double integrate_nodes(const Grid2D& g, const ScalarField& u) {
  check_same_grid(g, u.n, "integrate_nodes");
  double sum = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) sum += g.node_weight(i, j) * u.at(i, j);
  return sum;
}

/// Per-side trapezoid rule over boundary nodal values.
inline double integrate_boundary(const Grid2D& g, const ScalarField& u) {
  check_same_grid(g, u.n, "integrate_boundary");
  double sum = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (g.is_boundary(i, j)) sum += g.boundary_weight(i, j) * u.at(i, j);
  return sum;
}

/// Discrete L2 inner product of nodal vector fields (trapezoid mass).
inline double inner_nodes(const Grid2D& g, const VectorField& a, const VectorField& b) {
  check_same_grid(g, a.n, "inner_nodes");
  check_same_grid(g, b.n, "inner_nodes");
  double sum = 0.0;
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i) sum += g.node_weight(i, j) * a.at(i, j).dot(b.at(i, j));
  return sum;
}

inline double norm2_nodes(const Grid2D& g, const VectorField& a) { return inner_nodes(g, a, a); }

/// Minimum of det(grad y) over all cell centers.
inline double min_det(const Grid2D& g, const VectorField& y) {
  const std::vector<Mat2> F = grad_cells(g, y);
  double m = F[0].determinant();
  for (const Mat2& f : F) m = std::min(m, f.determinant());
  return m;
}

inline bool dirichlet_identity_on_boundary(const Grid2D& g, const VectorField& y, double tol) {
  for (int j = 0; j < g.n; ++j)
    for (int i = 0; i < g.n; ++i)
      if (g.is_boundary(i, j) && (y.at(i, j) - Vec2(g.x1(i), g.x2(j))).norm() > tol) return false;
  return true;
}

}  // namespace tvsolid
