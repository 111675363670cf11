#include "fibscale/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "fibscale/geometry.hpp"

namespace fibscale {

namespace {

constexpr uint8_t kOuterFlag = 1, kInnerFlag = 2;

void bounding_box(const std::vector<Cx>& curve, Cx& lo, Cx& hi) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (Cx z : curve) {
    xmin = std::min(xmin, z.real());
    xmax = std::max(xmax, z.real());
    ymin = std::min(ymin, z.imag());
    ymax = std::max(ymax, z.imag());
  }
  lo = {xmin, ymin};
  hi = {xmax, ymax};
}

// First free cell adjacent to the inner barrier whose center lies between the
// two curves; free-cell centers are at least h/2 from both curves, so the
// winding checks cannot graze a segment.
int annulus_seed(const GridSpec& g, const std::vector<uint8_t>& mask,
                 const std::vector<Cx>& outer, const std::vector<Cx>& inner) {
  double guard = 0.25 * g.h;
  const int dxs[4] = {1, -1, 0, 0}, dys[4] = {0, 0, 1, -1};
  for (size_t c = 0; c < g.size(); ++c) {
    if (!(mask[c] & kInnerFlag)) continue;
    int ix = static_cast<int>(c) % g.nx, iy = static_cast<int>(c) / g.nx;
    for (int k = 0; k < 4; ++k) {
      int jx = ix + dxs[k], jy = iy + dys[k];
      if (!g.inside(jx, jy)) continue;
      int d = g.idx(jx, jy);
      if (mask[d]) continue;
      Cx p = g.center(d);
      try {
        if (point_in_polygon(outer, p, guard) && !point_in_polygon(inner, p, guard)) return d;
      } catch (const UnderResolvedError&) {
        continue;
      }
    }
  }
  throw UnderResolvedError("no grid cell found between the two curves");
}

double modulus_on_grid(const std::vector<Cx>& outer, const std::vector<Cx>& inner, int ncells,
                       const PrecisionProfile& pp) {
  Cx lo, hi;
  bounding_box(outer, lo, hi);
  GridSpec g = grid_for_box(lo, hi, ncells);
  std::vector<uint8_t> mask(g.size(), 0);
  rasterize_closed_curve(g, outer, mask, kOuterFlag);
  rasterize_closed_curve(g, inner, mask, kInnerFlag);
  for (uint8_t m : mask)
    if ((m & kOuterFlag) && (m & kInnerFlag))
      throw UnderResolvedError("boundary curves touch the same grid cell");
  // demand a gap of at least three cells between the barriers
  std::vector<uint8_t> near_inner(g.size(), 0);
  for (size_t c = 0; c < g.size(); ++c) near_inner[c] = (mask[c] & kInnerFlag) ? 1 : 0;
  for (int round = 0; round < 3; ++round) near_inner = dilate8(g, near_inner);
  for (size_t c = 0; c < g.size(); ++c)
    if (near_inner[c] && (mask[c] & kOuterFlag))
      throw UnderResolvedError("curves closer than three grid cells");

  int seed = annulus_seed(g, mask, outer, inner);
  auto bval = [](uint8_t cls, int) { return (cls & kOuterFlag) ? 1.0 : 0.0; };
  DirichletSolution sol = solve_dirichlet(g, mask, bval, seed, pp);
  if (!(sol.energy > 0)) throw UnderResolvedError("degenerate annulus energy");
  return 2.0 * M_PI / sol.energy;
}

double capacity_on_grid(const std::vector<Cx>& curve, Cx z0, int ncells,
                        const PrecisionProfile& pp) {
  Cx lo, hi;
  bounding_box(curve, lo, hi);
  GridSpec g = grid_for_box(lo, hi, ncells);
  std::vector<uint8_t> mask(g.size(), 0);
  rasterize_closed_curve(g, curve, mask, kOuterFlag);
  int seed = g.cell_of(z0);
  if (seed < 0 || mask[seed])
    throw UnderResolvedError("capacity base point sits on a boundary cell");
  auto bval = [&](uint8_t, int cell) { return std::log(std::abs(g.center(cell) - z0)); };
  DirichletSolution sol = solve_dirichlet(g, mask, bval, seed, pp);
  return sol.value_at(z0);
}

Measured richardson(double coarse, double fine) {
  Measured m;
  m.coarse = coarse;
  m.fine = fine;
  m.value = 2 * fine - coarse;
  m.error_estimate = std::abs(fine - coarse);
  return m;
}

}  // namespace

Measured modulus(const std::vector<Cx>& outer, const std::vector<Cx>& inner,
                 const PrecisionProfile& pp) {
  if (outer.size() < 3 || inner.size() < 3)
    throw ConfigError("modulus: curves must be closed polylines");
  return richardson(modulus_on_grid(outer, inner, pp.grid_coarse, pp),
                    modulus_on_grid(outer, inner, pp.grid_fine, pp));
}

Measured capacity_at_point(const std::vector<Cx>& curve, Cx z0, const PrecisionProfile& pp) {
  if (curve.size() < 3) throw ConfigError("capacity: curve must be a closed polyline");
  int w = winding_number(curve, z0);
  if (w != 1 && w != -1)
    throw ConfigError("capacity: curve must wind once around the base point");
  return richardson(capacity_on_grid(curve, z0, pp.grid_coarse, pp),
                    capacity_on_grid(curve, z0, pp.grid_fine, pp));
}

Measured capacity_at_infinity(const std::vector<Cx>& curve, const PrecisionProfile& pp) {
  if (curve.size() < 3) throw ConfigError("capacity: curve must be a closed polyline");
  Cx z_star = polygon_centroid(curve);
  int w = winding_number(curve, z_star);
  if (w != 1 && w != -1)
    throw ConfigError("capacity at infinity: curve must wind once around its centroid");
  // The quantity is translation invariant; recentring makes the inversion
  // well conditioned. Densify first so chords stay faithful under inversion.
  std::vector<Cx> centered(curve);
  for (Cx& z : centered) z -= z_star;
  Cx lo, hi;
  bounding_box(centered, lo, hi);
  double diam = std::abs(hi - lo);
  centered = densify_closed(centered, diam / 1024.0, nullptr);
  std::vector<Cx> inverted(centered.size());
  for (size_t i = 0; i < centered.size(); ++i) {
    if (std::abs(centered[i]) < 1e-300)
      throw ConfigError("capacity at infinity: curve passes through its centroid");
    inverted[i] = 1.0 / centered[i];
  }
  return richardson(capacity_on_grid(inverted, Cx(0, 0), pp.grid_coarse, pp),
                    capacity_on_grid(inverted, Cx(0, 0), pp.grid_fine, pp));
}

GrotzschResult grotzsch_deficit(const std::vector<Cx>& outer, const std::vector<Cx>& middle,
                                const std::vector<Cx>& inner, const PrecisionProfile& pp) {
  GrotzschResult r;
  r.outer_inner = modulus(outer, inner, pp);
  r.outer_middle = modulus(outer, middle, pp);
  r.middle_inner = modulus(middle, inner, pp);
  r.deficit = r.outer_inner.value - r.outer_middle.value - r.middle_inner.value;
  return r;
}

}  // namespace fibscale
