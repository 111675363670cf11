#include "fibscale/dirichlet.hpp"

#include <algorithm>
#include <cmath>

namespace fibscale {

double DirichletSolution::value_at(Cx z) const {
  // coordinates relative to the center of cell (0,0)
  double fx = (z.real() - grid.x0) / grid.h - 0.5;
  double fy = (z.imag() - grid.y0) / grid.h - 0.5;
  int ix = static_cast<int>(std::floor(fx));
  int iy = static_cast<int>(std::floor(fy));
  double tx = fx - ix, ty = fy - iy;
  double acc = 0;
  const double w[4] = {(1 - tx) * (1 - ty), tx * (1 - ty), (1 - tx) * ty, tx * ty};
  const int ox[4] = {0, 1, 0, 1}, oy[4] = {0, 0, 1, 1};
  for (int k = 0; k < 4; ++k) {
    int jx = ix + ox[k], jy = iy + oy[k];
    if (!grid.inside(jx, jy)) throw UnderResolvedError("value_at: point outside grid");
    int id = index_of_cell[grid.idx(jx, jy)];
    if (id < 0) throw UnderResolvedError("value_at: point too close to a boundary cell");
    acc += w[k] * u[id];
  }
  return acc;
}

DirichletSolution solve_dirichlet(const GridSpec& g, const std::vector<uint8_t>& blocked,
                                  const std::function<double(uint8_t, int)>& boundary_value,
                                  int seed_cell, const PrecisionProfile& pp) {
  DirichletSolution sol;
  sol.grid = g;
  sol.cells = flood_fill4(g, blocked, seed_cell);
  std::sort(sol.cells.begin(), sol.cells.end());
  const int n = static_cast<int>(sol.cells.size());
  sol.index_of_cell.assign(g.size(), -1);
  for (int i = 0; i < n; ++i) sol.index_of_cell[sol.cells[i]] = i;

  // 5-point stencil: per unknown, neighbour unknown indices and a boundary load
  std::vector<int> nb(static_cast<size_t>(n) * 4, -1);
  std::vector<double> diag(n, 0.0), b(n, 0.0);
  const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
  for (int i = 0; i < n; ++i) {
    int c = sol.cells[i];
    int ix = c % g.nx, iy = c / g.nx;
    for (int k = 0; k < 4; ++k) {
      int jx = ix + dxs[k], jy = iy + dys[k];
      if (!g.inside(jx, jy)) continue;  // natural boundary
      int d = g.idx(jx, jy);
      if (blocked[d]) {
        diag[i] += 1.0;
        b[i] += boundary_value(blocked[d], d);
      } else if (sol.index_of_cell[d] >= 0) {
        nb[4 * static_cast<size_t>(i) + k] = sol.index_of_cell[d];
        diag[i] += 1.0;
      }
      // free cells outside the component are unreachable across the barrier;
      // treat defensively as natural boundary
    }
    if (diag[i] == 0.0) diag[i] = 1.0;  // isolated cell; u stays 0
  }

  auto apply_A = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (int i = 0; i < n; ++i) {
      double acc = diag[i] * x[i];
      for (int k = 0; k < 4; ++k) {
        int j = nb[4 * static_cast<size_t>(i) + k];
        if (j >= 0) acc -= x[j];
      }
      y[i] = acc;
    }
  };

  // IC(0) for the 5-point Laplacian reduces to a diagonal factor: with
  // lexicographic ordering the lower neighbours of a row never share earlier
  // columns, so no fill interactions arise.
  std::vector<double> icd(n, 1.0);
  {
    // left neighbour is k=1 (dx=-1), down neighbour is k=3 (dy=-1)
    for (int i = 0; i < n; ++i) {
      double v = diag[i];
      int jl = nb[4 * static_cast<size_t>(i) + 1];
      int jd = nb[4 * static_cast<size_t>(i) + 3];
      if (jl >= 0) v -= 1.0 / (icd[jl] * icd[jl]);
      if (jd >= 0) v -= 1.0 / (icd[jd] * icd[jd]);
      if (!(v > 0)) throw UnderResolvedError("incomplete Cholesky breakdown");
      icd[i] = std::sqrt(v);
    }
  }
  auto apply_Minv = [&](const std::vector<double>& r, std::vector<double>& z,
                        std::vector<double>& tmp) {
    // forward solve L y = r (ascending order; lower neighbours precede)
    for (int i = 0; i < n; ++i) {
      double acc = r[i];
      int jl = nb[4 * static_cast<size_t>(i) + 1];
      int jd = nb[4 * static_cast<size_t>(i) + 3];
      if (jl >= 0) acc += tmp[jl] / icd[jl];
      if (jd >= 0) acc += tmp[jd] / icd[jd];
      tmp[i] = acc / icd[i];
    }
    // backward solve L^T z = y
    for (int i = n - 1; i >= 0; --i) {
      double acc = tmp[i];
      int jr = nb[4 * static_cast<size_t>(i) + 0];
      int ju = nb[4 * static_cast<size_t>(i) + 2];
      if (jr >= 0) acc += z[jr] / icd[i];
      if (ju >= 0) acc += z[ju] / icd[i];
      z[i] = acc / icd[i];
    }
  };

  // preconditioned conjugate gradients from x = 0
  std::vector<double> x(n, 0.0), r(b), z(n), p(n), Ap(n), tmp(n);
  double b2 = 0;
  for (double v : b) b2 += v * v;
  if (b2 == 0) {
    sol.u = x;
    sol.energy = 0;
    return sol;
  }
  apply_Minv(r, z, tmp);
  p = z;
  double rz = 0;
  for (int i = 0; i < n; ++i) rz += r[i] * z[i];
  int it = 0;
  for (; it < pp.cg_max_iter; ++it) {
    apply_A(p, Ap);
    double pAp = 0;
    for (int i = 0; i < n; ++i) pAp += p[i] * Ap[i];
    if (!(pAp > 0)) throw UnderResolvedError("conjugate gradients lost positivity");
    double alpha = rz / pAp;
    double r2 = 0;
    for (int i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
      r2 += r[i] * r[i];
    }
    if (r2 <= pp.cg_tol * pp.cg_tol * b2) {
      ++it;
      break;
    }
    apply_Minv(r, z, tmp);
    double rz_new = 0;
    for (int i = 0; i < n; ++i) rz_new += r[i] * z[i];
    double beta = rz_new / rz;
    rz = rz_new;
    for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  if (it >= pp.cg_max_iter)
    throw UnderResolvedError("conjugate gradients did not converge");
  sol.cg_iterations = it;
  sol.u = std::move(x);

  // Dirichlet energy: each interior edge once (right/up sweep), each
  // domain-to-boundary edge once
  double e = 0;
  for (int i = 0; i < n; ++i) {
    int c = sol.cells[i];
    int ix = c % g.nx, iy = c / g.nx;
    for (int k = 0; k < 4; ++k) {
      int jx = ix + dxs[k], jy = iy + dys[k];
      if (!g.inside(jx, jy)) continue;
      int d = g.idx(jx, jy);
      if (blocked[d]) {
        double du = sol.u[i] - boundary_value(blocked[d], d);
        e += du * du;
      } else if (k == 0 || k == 2) {  // right and up: interior edges once
        int j = sol.index_of_cell[d];
        if (j >= 0) {
          double du = sol.u[i] - sol.u[j];
          e += du * du;
        }
      }
    }
  }
  sol.energy = e;
  return sol;
}

}  // namespace fibscale
