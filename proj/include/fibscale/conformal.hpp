#pragma once

#include <vector>

#include "fibscale/dirichlet.hpp"
#include "fibscale/types.hpp"

namespace fibscale {

// Two-grid measurement with first-order Richardson extrapolation:
// value = 2*fine - coarse, error_estimate = |fine - coarse|.
struct Measured {
  double value = 0;
  double coarse = 0;
  double fine = 0;
  double error_estimate = 0;
};

// Conformal modulus of the annulus bounded by two disjoint closed polylines
// (inner strictly inside outer), normalized so a round annulus of radius
// ratio R/r has modulus log(R/r). Computed as 2*pi / (discrete Dirichlet
// energy of the harmonic potential: 1 on the outer curve, 0 on the inner).
Measured modulus(const std::vector<Cx>& outer, const std::vector<Cx>& inner,
                 const PrecisionProfile& pp);

// Log of the conformal radius of the region enclosed by `curve`, seen from z0:
// harmonic extension of log|w - z0| evaluated at z0. Unit circle about 0 gives
// 0; the disc D(0, rho) gives log(rho).
Measured capacity_at_point(const std::vector<Cx>& curve, Cx z0, const PrecisionProfile& pp);

// Exterior counterpart: -lim_{z->inf}(log|z| - G(z)) for the exterior Green's
// function G of the curve. Circle of radius R gives -log R. Evaluated exactly
// as capacity_at_point of the inverted curve 1/(curve - centroid) at 0.
Measured capacity_at_infinity(const std::vector<Cx>& curve, const PrecisionProfile& pp);

struct GrotzschResult {
  Measured outer_inner;
  Measured outer_middle;
  Measured middle_inner;
  double deficit = 0;  // outer_inner - outer_middle - middle_inner, >= 0 up to noise
};

// Superadditivity deficit of a nested triple of closed curves.
GrotzschResult grotzsch_deficit(const std::vector<Cx>& outer, const std::vector<Cx>& middle,
                                const std::vector<Cx>& inner, const PrecisionProfile& pp);

}  // namespace fibscale
