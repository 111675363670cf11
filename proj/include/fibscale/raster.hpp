#pragma once

#include <cstdint>
#include <vector>

#include "fibscale/types.hpp"

namespace fibscale {

// Uniform square-cell grid over a rectangle. Cells are indexed ix + nx*iy.
struct GridSpec {
  double x0 = 0, y0 = 0;  // lower-left corner of cell (0,0)
  double h = 1;           // cell side
  int nx = 0, ny = 0;

  bool inside(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx && iy < ny; }
  int idx(int ix, int iy) const { return ix + nx * iy; }
  // cell containing z, or -1 when outside the grid
  int cell_of(Cx z) const;
  Cx center(int cell) const;
  size_t size() const { return static_cast<size_t>(nx) * ny; }
};

// Grid of n cells along the longer box side, padded by two cells all around so
// curves never touch the grid edge.
GridSpec grid_for_box(Cx lo, Cx hi, int n);

// OR `flag` into every cell the closed polyline touches (supercover traversal,
// so the marked set is a 4-connected barrier between the curve's sides).
void rasterize_closed_curve(const GridSpec& g, const std::vector<Cx>& curve,
                            std::vector<uint8_t>& mask, uint8_t flag);

// One round of 8-neighbourhood dilation of the nonzero set.
std::vector<uint8_t> dilate8(const GridSpec& g, const std::vector<uint8_t>& mask);

// 4-connected component of free (blocked[c]==0) cells containing seed_cell.
// Throws UnderResolvedError if the seed cell is blocked or outside.
std::vector<int> flood_fill4(const GridSpec& g, const std::vector<uint8_t>& blocked,
                             int seed_cell);

}  // namespace fibscale
