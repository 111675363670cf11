#pragma once
// Parameter-plane constructions: the Mandelbrot potential and external rays,
// parapuzzle pieces around the Fibonacci parameter, the ladder of superstable
// centers, and the parameter map that carries the rescaled critical value of
// the principal-nest return maps across parameter space.

#include "fibscale/puzzle.hpp"

namespace fibscale {

// Potential of the Mandelbrot complement at c: the dynamical Green's function
// of the critical value at its own parameter. Delegates to green_value with
// z = c, so the identity G_M(c) = G_c(c) holds bit for bit.
double parameter_green(Cx c, int max_iter, double escape_radius);
double parameter_green(Cx c, const PrecisionProfile& pp);

// Point of the parameter ray `angle` at potential g. Mirrors the dynamical
// tracer: the far-zone Boettcher target is pulled back by Newton, acting on c
// with the forward-mode orbit derivative dz_{m+1}/dc = 2 z_m z'_m + 1
// (z_1 = c, z'_1 = 1). Throws RayStallError when Newton fails from the seed.
Cx parameter_ray_point(const ExternalAngle& angle, double g, Cx seed,
                       const PrecisionProfile& pp);

// Entry point with no seed: walks in from the far zone down to g.
Cx parameter_ray_point_from_far(const ExternalAngle& angle, double g,
                                const PrecisionProfile& pp);

// One continuation step g_from -> g_to with stall-triggered subdivision.
Cx parameter_ray_advance(const ExternalAngle& angle, double g_from, Cx x_from, double g_to,
                         const PrecisionProfile& pp);

RayTrace trace_parameter_ray(const ExternalAngle& angle, double potential_start,
                             double potential_end, const PrecisionProfile& pp);

// Parameter equipotential points swept counterclockwise from angle_from to
// angle_to (equal angles = full turn); each sample descends its own parameter
// ray from the far zone. The Mandelbrot potential has no critical points off
// the set itself, so no figure-eight guard is needed here.
std::vector<Cx> trace_parameter_equipotential(double potential, const ExternalAngle& angle_from,
                                              const ExternalAngle& angle_to, int samples,
                                              const PrecisionProfile& pp);

// Newton refinement of a preperiodic parameter-ray landing point (Misiurewicz
// parameter): solves f_c^{l+p}(c) = f_c^l(c) in c with forward-mode orbit
// derivatives. Periodic angles (preperiod 0) land at hyperbolic-component
// roots this equation cannot see; they come back unrefined.
LandingRefinement refine_misiurewicz(int preperiod, int period, Cx seed,
                                     const PrecisionProfile& pp);
LandingRefinement refine_parameter_landing(const ExternalAngle& angle, Cx seed,
                                           const PrecisionProfile& pp);

enum class ParaKind { P, Q };

// Parameter-plane puzzle piece. The boundary reuses the dynamical vertex/arc
// machinery but its points live in the c-plane: parameter rays at the angles
// of the dynamical model piece around the critical value, joined by parameter
// equipotential arcs at the model's level, with Misiurewicz corners.
//   kind P at level n mirrors the piece f_c(V^n_0), realized as the pullback
//   of V^{n-1}_0 along u(n+1)-1 steps of the critical value orbit;
//   kind Q at level n mirrors the corresponding critical-value-side pullback
//   of V^{n-1}_1 along u(n)-1 steps, so that membership matches "the n-th
//   return of the critical point enters the side piece".
struct ParaPiece {
  Piece piece;  // boundary polyline in the parameter plane
  ParaKind kind = ParaKind::P;
  std::vector<ExternalAngle> ray_angles;  // boundary ray angles in walk order

  bool contains(Cx c, double guard_frac = 1e-9) const { return piece.contains(c, guard_frac); }
};

// Builds the level-n parapuzzle piece from a reference nest (built at a real
// parameter inside the target piece). Throws ConfigError when the nest lacks
// the needed levels (kind Q needs the level-(n-1) side piece, so n >= 2).
ParaPiece build_parapiece(const QuadraticMap& map, const Nest& nest, int n, ParaKind kind,
                          const PrecisionProfile& pp);

struct SuperstableCenter {
  int n = 0;
  double c = 0;         // centers of the real Fibonacci ladder
  double residual = 0;  // |f_c^{u(n+1)}(0)| at the solved center
};

// n-th superstable center: the parameter whose critical orbit returns exactly
// to 0 after u(n+1) steps with Fibonacci closest-return combinatorics.
// Walks the ladder upward, Newton-solving f_c^{u(n+1)}(0) = 0 from seeds
// extrapolated off the previous center, rejecting roots with the wrong
// combinatorics; persistent rejection throws CombinatoricsError.
SuperstableCenter find_superstable(int n, const PrecisionProfile& pp);

// Real parameter with the Fibonacci closest-return pattern, bracketed by
// bisection on the orbit signature; the test depth grows as the bracket
// shrinks. Returns the bracket midpoint once its width drops under tol
// (tol >= 1e-13; the pattern's window width hits the f64 floor there).
double find_fibonacci_parameter(double tol);

// Sign convention for the rescaling: MapsToMinusOne sends the selected
// return-map zero to -1 (r(x) = -x / y); PlainQuotient divides by the zero
// without the flip (r(x) = x / y), which sends it to +1. The two differ only
// by the sign of every image; MapsToMinusOne is the default used by the
// parameter map so the rescaled critical values accumulate at -1.
enum class RescalingSign { MapsToMinusOne, PlainQuotient };

struct RescalingMap {
  Cx lambda{0, 0};
  Cx zero{0, 0};  // the selected zero of the level-n return map
  int level = 0;
  Cx operator()(Cx x) const { return lambda * x; }
};

// Linear rescaling of V^n_0 anchored at the zero of the return map f^{r_n}
// that lies inside the side piece V^{n+1}_1 (the branch that continues
// analytically in the parameter). The two zeros of the even return map sit
// symmetrically; if the side piece fails to single one out the ambiguity is
// reported with both candidates.
RescalingMap rescaling_map(const QuadraticMap& map, const Nest& nest, int level,
                           const PrecisionProfile& pp,
                           RescalingSign sign = RescalingSign::MapsToMinusOne);

// The level-n parameter map M_n(c) = -x_n(c) / y_{n-1}(c): the critical
// value x_n(c) = f_c^{u(n+1)}(0) of the level-n return map, divided by the
// side-branch zero y_{n-1}(c) of the level-(n-1) return map and negated, so
// that M_n(c_n) = 0 at the n-th center and M_n at the Fibonacci parameter
// tends to -1. The zero is continued analytically from a real anchor deep
// inside the renormalization window; continuation failure (root collision,
// orbit escape) throws NonRenormalizableError, which is what enforces the
// domain: parameters outside the level's renormalization window lose the
// branch before the continuation arrives.
Cx parameter_map(int n, Cx c, const PrecisionProfile& pp);

// Same, but first requires c to lie inside an explicitly traced domain piece
// (throws CombinatoricsError otherwise).
Cx parameter_map(int n, Cx c, const ParaPiece& domain, const PrecisionProfile& pp);

}  // namespace fibscale
