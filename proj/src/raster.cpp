#include "fibscale/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace fibscale {

int GridSpec::cell_of(Cx z) const {
  int ix = static_cast<int>(std::floor((z.real() - x0) / h));
  int iy = static_cast<int>(std::floor((z.imag() - y0) / h));
  if (!inside(ix, iy)) return -1;
  return idx(ix, iy);
}

Cx GridSpec::center(int cell) const {
  int ix = cell % nx, iy = cell / nx;
  return {x0 + (ix + 0.5) * h, y0 + (iy + 0.5) * h};
}

GridSpec grid_for_box(Cx lo, Cx hi, int n) {
  if (n < 8) throw ConfigError("grid_for_box: need at least 8 cells");
  double w = hi.real() - lo.real(), ht = hi.imag() - lo.imag();
  if (!(w > 0) || !(ht > 0)) throw ConfigError("grid_for_box: empty box");
  GridSpec g;
  g.h = std::max(w, ht) / n;
  g.x0 = lo.real() - 2 * g.h;
  g.y0 = lo.imag() - 2 * g.h;
  g.nx = static_cast<int>(std::ceil(w / g.h)) + 4;
  g.ny = static_cast<int>(std::ceil(ht / g.h)) + 4;
  return g;
}

namespace {

// Mark every cell a segment passes through (Amanatides-Woo traversal in grid
// coordinates). Endpoint cells are marked unconditionally.
void mark_segment(const GridSpec& g, Cx a, Cx b, std::vector<uint8_t>& mask, uint8_t flag) {
  double ax = (a.real() - g.x0) / g.h, ay = (a.imag() - g.y0) / g.h;
  double bx = (b.real() - g.x0) / g.h, by = (b.imag() - g.y0) / g.h;
  auto clampi = [](int v, int lo, int hi) { return std::min(std::max(v, lo), hi); };
  int ix = clampi(static_cast<int>(std::floor(ax)), 0, g.nx - 1);
  int iy = clampi(static_cast<int>(std::floor(ay)), 0, g.ny - 1);
  int jx = clampi(static_cast<int>(std::floor(bx)), 0, g.nx - 1);
  int jy = clampi(static_cast<int>(std::floor(by)), 0, g.ny - 1);
  mask[g.idx(ix, iy)] |= flag;
  mask[g.idx(jx, jy)] |= flag;

  double dx = bx - ax, dy = by - ay;
  int step_x = dx > 0 ? 1 : -1, step_y = dy > 0 ? 1 : -1;
  double inf = std::numeric_limits<double>::infinity();
  double t_delta_x = dx != 0 ? std::abs(1.0 / dx) : inf;
  double t_delta_y = dy != 0 ? std::abs(1.0 / dy) : inf;
  double next_vx = dx > 0 ? (ix + 1 - ax) : (ax - ix);
  double next_vy = dy > 0 ? (iy + 1 - ay) : (ay - iy);
  double t_max_x = dx != 0 ? next_vx * t_delta_x : inf;
  double t_max_y = dy != 0 ? next_vy * t_delta_y : inf;

  int guard = 2 * (std::abs(jx - ix) + std::abs(jy - iy)) + 8;
  while ((ix != jx || iy != jy) && guard-- > 0) {
    if (t_max_x < t_max_y) {
      ix += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      iy += step_y;
      t_max_y += t_delta_y;
    } else {
      // exact corner crossing: conservatively mark both side cells
      if (g.inside(ix + step_x, iy)) mask[g.idx(ix + step_x, iy)] |= flag;
      if (g.inside(ix, iy + step_y)) mask[g.idx(ix, iy + step_y)] |= flag;
      ix += step_x;
      iy += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    if (!g.inside(ix, iy)) break;
    mask[g.idx(ix, iy)] |= flag;
  }
}

}  // namespace

void rasterize_closed_curve(const GridSpec& g, const std::vector<Cx>& curve,
                            std::vector<uint8_t>& mask, uint8_t flag) {
  if (curve.size() < 3) throw ConfigError("rasterize_closed_curve: need a closed polyline");
  if (mask.size() != g.size()) throw ConfigError("rasterize_closed_curve: mask size mismatch");
  for (size_t i = 0; i < curve.size(); ++i)
    mark_segment(g, curve[i], curve[(i + 1) % curve.size()], mask, flag);
}

std::vector<uint8_t> dilate8(const GridSpec& g, const std::vector<uint8_t>& mask) {
  std::vector<uint8_t> out(mask);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) {
      if (mask[g.idx(ix, iy)]) continue;
      uint8_t acc = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (g.inside(ix + dx, iy + dy)) acc |= mask[g.idx(ix + dx, iy + dy)];
      out[g.idx(ix, iy)] = acc;
    }
  return out;
}

std::vector<int> flood_fill4(const GridSpec& g, const std::vector<uint8_t>& blocked,
                             int seed_cell) {
  if (seed_cell < 0 || static_cast<size_t>(seed_cell) >= g.size())
    throw UnderResolvedError("flood_fill4: seed outside grid");
  if (blocked[seed_cell])
    throw UnderResolvedError("flood_fill4: seed cell is on a boundary curve");
  std::vector<uint8_t> seen(g.size(), 0);
  std::vector<int> out;
  std::queue<int> q;
  q.push(seed_cell);
  seen[seed_cell] = 1;
  while (!q.empty()) {
    int c = q.front();
    q.pop();
    out.push_back(c);
    int ix = c % g.nx, iy = c / g.nx;
    const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int jx = ix + dxs[k], jy = iy + dys[k];
      if (!g.inside(jx, jy)) continue;
      int d = g.idx(jx, jy);
      if (!seen[d] && !blocked[d]) {
        seen[d] = 1;
        q.push(d);
      }
    }
  }
  return out;
}

}  // namespace fibscale
