#pragma once

#include <functional>
#include <vector>

#include "fibscale/raster.hpp"

namespace fibscale {

struct DirichletSolution {
  GridSpec grid;
  std::vector<int> cells;          // domain cells, ascending
  std::vector<double> u;           // solution per domain cell
  std::vector<int> index_of_cell;  // grid-sized map, -1 outside the domain
  double energy = 0;               // sum over edges of (du)^2, boundary edges included
  int cg_iterations = 0;

  // bilinear interpolation from the four nearest cell centers; all four must
  // be domain cells (deep-interior use only)
  double value_at(Cx z) const;
};

// Discrete harmonic function on the free component containing seed_cell.
// `blocked` holds nonzero class flags on boundary cells; `boundary_value`
// receives (class flags, cell) for every blocked cell adjacent to the domain.
// Edges leaving the grid or into untouched free cells are natural (Neumann).
DirichletSolution solve_dirichlet(const GridSpec& g, const std::vector<uint8_t>& blocked,
                                  const std::function<double(uint8_t, int)>& boundary_value,
                                  int seed_cell, const PrecisionProfile& pp);

}  // namespace fibscale
