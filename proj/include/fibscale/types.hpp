#pragma once
// Core scalar types, the numeric tuning profile, and the error taxonomy
// shared by every module.

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace fibscale {

using Cx = std::complex<double>;

// All tunable numerical knobs live here so results can be reproduced from a
// single serialized blob.  Defaults are the values used by the shipping CLI
// and the acceptance suite.
struct PrecisionProfile {
  // escape-time Green's function
  double escape_radius = 1e18;   // keep iterating past first escape to here
  int max_iter = 4096;           // escape iteration cap

  // external / parameter ray tracing
  double far_potential = 14.0;       // Böttcher far zone threshold (in G)
  int steps_per_halving = 8;         // trace points per halving of potential
  int newton_cap = 30;               // Newton iterations per ray point
  int stall_subdivision_cap = 6;     // potential-step bisections on stall
  double ray_tol = 1e-13;            // Newton convergence tolerance (relative)

  // curve lifting / pullback
  double lift_ambiguity_ratio = 0.5; // subdivide when step/clearance exceeds
  int lift_subdivision_cap = 12;     // doublings before BranchPinchError
  int resample_divisor = 384;        // internal spacing = diam/divisor
  int guaranteed_divisor = 256;      // spacing guaranteed before measurement

  // equipotential sampling
  int equipotential_samples = 512;

  // nest construction budget
  double min_equip_level_factor = 1.11e-16; // ~ 2^-53: truncate below E*this

  // Dirichlet grid solver
  int grid_coarse = 256;
  int grid_fine = 512;
  double cg_tol = 1e-8;
  int cg_max_iter = 20000;

  // landing refinement
  int landing_newton_cap = 60;
  double landing_tol = 1e-13;

  std::string describe() const;   // stable key=value serialization
  uint64_t hash() const;          // FNV-1a over describe()
};

// ---- error taxonomy --------------------------------------------------------
// Each maps to a distinct CLI exit code (see tools/fibscale.cpp).

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// ray Newton failed to converge even after step subdivision
struct RayStallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// curve lift could not disambiguate the two sqrt branches
struct BranchPinchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// observed return times / piece combinatorics differ from the Fibonacci model
struct CombinatoricsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// central piece failed to contain the critical orbit return (nest breaks off)
struct NonRenormalizableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// grid too coarse to separate the curves being measured
struct UnderResolvedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// equipotential at this level self-intersects (passes through a precritical point)
struct FigureEightError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace fibscale
