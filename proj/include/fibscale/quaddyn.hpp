#pragma once
// Dynamical-plane primitives for f_c(z) = z^2 + c: Green's function, fixed
// points, external rays and equipotentials with Newton continuation from the
// Böttcher far zone.

#include <optional>
#include <vector>

#include "fibscale/angle.hpp"
#include "fibscale/types.hpp"

namespace fibscale {

struct QuadraticMap {
  Cx c;
  Cx forward(Cx z) const { return z * z + c; }
};

struct FixedPoints {
  Cx alpha;
  Cx beta;
  bool degenerate = false;  // c = 1/4 (double root)
};

struct RayTrace {
  ExternalAngle angle;
  std::vector<Cx> points;
  std::vector<double> potentials;  // strictly decreasing, matches points
  std::optional<Cx> landing_estimate;
  double max_step = 0;  // largest gap between consecutive traced points
};

struct LandingRefinement {
  Cx z;
  bool refined = false;  // false: Newton did not converge, z is the raw estimate
  double residual = 0;   // |f^(l+p)(z) - f^l(z)|
};

// escape-time Green's function log+|f^n(z)| / 2^n at first escape past
// escape_radius; 0 if no escape within max_iter
double green_value(const QuadraticMap& map, Cx z, int max_iter, double escape_radius);
double green_value(const QuadraticMap& map, Cx z, const PrecisionProfile& pp);

// beta = (1 + sqrt(1-4c))/2 with the principal branch, alpha = 1 - beta
FixedPoints fixed_points(const QuadraticMap& map);

// Point of the ray `angle` at potential g, Newton-corrected from `seed`
// (a nearby ray point, usually at slightly larger potential).  Throws
// RayStallError if Newton fails from this seed.
Cx ray_point(const QuadraticMap& map, const ExternalAngle& angle, double g, Cx seed,
             const PrecisionProfile& pp);

// Entry point with no seed: walks the ray in from the far zone down to g.
Cx ray_point_from_far(const QuadraticMap& map, const ExternalAngle& angle, double g,
                      const PrecisionProfile& pp);

// One continuation step g_from -> g_to (g_to < g_from) with stall-triggered
// potential-step subdivision.  Throws RayStallError after the subdivision cap.
Cx ray_advance(const QuadraticMap& map, const ExternalAngle& angle, double g_from,
               Cx x_from, double g_to, const PrecisionProfile& pp);

RayTrace trace_external_ray(const QuadraticMap& map, const ExternalAngle& angle,
                            double potential_start, double potential_end,
                            const PrecisionProfile& pp);

// Exact angle of sample i of trace_equipotential's sweep, shared so callers
// can label the returned points.
ExternalAngle equipotential_sample_angle(const ExternalAngle& angle_from,
                                         const ExternalAngle& angle_to, int samples, int i);

// Equipotential points swept counterclockwise from angle_from to angle_to
// (equal angles = full turn).  Throws FigureEightError when the level is at or
// below the critical level G_c(0) of an escaping critical orbit.
std::vector<Cx> trace_equipotential(const QuadraticMap& map, double potential,
                                    const ExternalAngle& angle_from,
                                    const ExternalAngle& angle_to, int samples,
                                    const PrecisionProfile& pp);

// Newton refinement of the (pre)periodic landing point; preperiod/period come
// from the doubling orbit of the rational angle.
LandingRefinement refine_landing(const QuadraticMap& map, const RayTrace& trace,
                                 const PrecisionProfile& pp);
LandingRefinement refine_periodic(const QuadraticMap& map, int preperiod, int period,
                                  Cx seed, const PrecisionProfile& pp);

}  // namespace fibscale
