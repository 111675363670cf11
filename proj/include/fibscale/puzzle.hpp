#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fibscale/quaddyn.hpp"

namespace fibscale {

enum class VertexKind : uint8_t { Ray, Equip, Corner };

// A vertex of a piece boundary. `angle` is the exact external angle of the
// vertex (ray angle for ray/corner vertices, sample angle for equipotential
// vertices); `exact` marks vertices that genuinely lie on the traced curve as
// opposed to chord-inserted helpers. Angle bookkeeping by half-plane assumes a
// conjugation-symmetric (real) parameter, which holds for every nest we build.
struct BVertex {
  Cx z{0, 0};
  double potential = 0;
  VertexKind kind = VertexKind::Equip;
  bool exact = true;
  ExternalAngle angle{0, 1};
};

// Maximal same-kind run of boundary vertices (corners are singleton arcs).
struct Arc {
  VertexKind kind = VertexKind::Equip;
  ExternalAngle angle_from{0, 1}, angle_to{0, 1};
  double potential_from = 0, potential_to = 0;
  size_t first = 0, count = 0;  // contiguous index range into the boundary
};

struct Piece {
  std::vector<BVertex> boundary;  // closed, counterclockwise
  double equip_level = 0;         // potential of its equipotential arcs
  int depth = 0;
  int degree = 1;        // accumulated covering degree of its construction
  int return_steps = 0;  // forward iterates mapping it onto its source piece
  std::string label;
  Cx basepoint{0, 0};

  std::vector<Cx> polygon() const;
  double diameter() const;
  bool contains(Cx z, double guard_frac = 1e-9) const;
};

std::vector<Arc> extract_arcs(const Piece& piece);

// Douglas-Peucker simplification applied per same-kind boundary run; corners
// and run junctions always survive. tol is the largest allowed chord offset.
void decimate_boundary(std::vector<BVertex>& boundary, double tol);

std::vector<uint64_t> fibonacci_numbers(int count);  // 1, 1, 2, 3, 5, ...

// Puzzle piece of depth zero around the critical point: bounded by the two
// rays landing at the dividing fixed point and an equipotential arc through
// angle zero. Throws CombinatoricsError when the two rays do not land
// together (parameter outside the half wake).
Piece initial_puzzle(const QuadraticMap& map, double equip_level, const PrecisionProfile& pp);

// Both depth-0 pieces cut by the wake rays and the equipotential: element 0
// is the piece around the critical point (same as initial_puzzle), element 1
// the complementary piece on the far side of the rays, which holds the
// critical value when c is real in the wake.
std::vector<Piece> initial_puzzle_pieces(const QuadraticMap& map, double equip_level,
                                         const PrecisionProfile& pp);

struct LiftResult {
  std::vector<BVertex> loop;
  int degree = 1;  // 1: univalent component, 2: branched double cover
};

// One preimage step of a closed boundary loop under z -> z^2 + c with branch
// continuity and chord subdivision near the critical value. For univalent
// lifts the component enclosing `component_hint` is returned.
LiftResult lift_loop(const QuadraticMap& map, const std::vector<BVertex>& loop,
                     Cx component_hint, const PrecisionProfile& pp);

// Pull `parent` back `iterates` times along the orbit of `basepoint`
// (f^iterates(basepoint) must lie in the parent); the returned piece contains
// basepoint. Checks potential fidelity of exact vertices and corner orbits.
Piece pullback_piece(const QuadraticMap& map, const Piece& parent, int iterates, Cx basepoint,
                     const PrecisionProfile& pp);

// Smallest m in [1, cap] with f^m(basepoint) inside the piece;
// NonRenormalizableError if none exists.
int first_return(const QuadraticMap& map, const Piece& piece, int cap,
                 const PrecisionProfile& pp);

struct Nest {
  std::vector<Piece> central;     // V^0_0 .. V^depth_0
  std::vector<Piece> side;       // V^n_1 (n >= 1), containing x_n
  std::vector<Piece> side_tilde; // pullbacks of V^n_0 around x_n
  std::vector<int> return_times; // r_n used to build central[n]
  std::vector<Cx> x;             // x_n = f^{r_n}(0), x[0] unused
  int depth = 0;
  bool truncated = false;  // a budget stopped the chain before the requested depth
};

// Principal nest with Fibonacci return times, verified level by level against
// measured first returns. Depth is truncated (flagged) when equipotential
// levels would fall below min_equip_level_factor * equip_level or when exact
// angle denominators would overflow 64 bits.  Side pieces need more halvings
// per level than central ones, so nest.side/side_tilde may stop one or two
// levels before nest.central does; their common length is <= depth.
Nest build_principal_nest(const QuadraticMap& map, int depth, double equip_level,
                          const PrecisionProfile& pp);

// Invariants of the Fibonacci nest: recurrent return times, x-orbit chaining,
// single branched step, containment chain. Throws CombinatoricsError.
void check_fibonacci_combinatorics(const QuadraticMap& map, const Nest& nest,
                                   const PrecisionProfile& pp);

// Orbit-only test of the Fibonacci closest-return pattern: for every n up to
// `levels`, |f^{u(n)}(0)| < |f^{u(n-1)}(0)| and no intermediate iterate comes
// closer than |f^{u(n-1)}(0)|. Cheap (no puzzle geometry), meaningful mainly
// on the real slice; false as well when the orbit escapes.
bool has_fibonacci_closest_returns(const QuadraticMap& map, int levels);

enum class Normalization { BetaToGolden, PreimageToMinusOne };

// The n-th return map f^{r_n}: V^n_0 -> V^{n-1}_0 in normalized coordinates:
// the domain is rescaled with level n's anchor, the range with level n-1's,
// so the result can be compared directly against the model w -> w^2 - 1.
// (Domain and range shrink at different rates, so this is deliberately not
// an affine conjugacy.)  BetaToGolden anchors the real boundary corner
// beta_n at (1+sqrt 5)/2, the positive real boundary point the model fixes;
// PreimageToMinusOne anchors the zero y_n of the return map on the negative
// real trace at -1, where the model vanishes.  scale_in is positive; the
// sign of scale_out follows sgn((f^{r_n})''(0)), so the normalized map has
// a local minimum at the critical point and its critical value sits near -1.
struct RescaledReturnMap {
  double scale_in = 1;   // multiplies points of V^n_0
  double scale_out = 1;  // multiplies points of V^{n-1}_0 (signed)
  int iterates = 0;
  Cx c{0, 0};
  Cx operator()(Cx w) const;  // scale_out * f^iterates(w / scale_in)
};

RescaledReturnMap rescaled_return_map(const QuadraticMap& map, const Nest& nest, int level,
                                      Normalization norm, const PrecisionProfile& pp);

// Negative real zero of f^{r_n} inside V^n_0 (the PreimageToMinusOne anchor).
Cx nest_zero(const QuadraticMap& map, const Nest& nest, int level, const PrecisionProfile& pp);

}  // namespace fibscale
