#include "fibscale/parapuzzle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <utility>

#include "fibscale/geometry.hpp"

namespace fibscale {

namespace {

bool finite(Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Böttcher inverse of the Mandelbrot uniformization in the far zone, written
// through the dynamical one at the critical value: psi_c(w) = w - (c/2)/w -
// (c^2/8 + c/4)/w^3 + O(|w|^-5). The parameter Newton below solves
// f_c^k(c) = psi_c(W) self-consistently in c, so the c-derivative of psi is
// needed alongside the forward-mode orbit derivative.
Cx far_inverse(Cx c, Cx w) { return w - 0.5 * c / w - (c * c / 8.0 + c / 4.0) / (w * w * w); }

Cx far_inverse_dc(Cx c, Cx w) { return -0.5 / w - (0.25 * c + 0.25) / (w * w * w); }

struct NewtonFail {};

// Solve f_c^k(c) = psi_c(W) by Newton in c from `seed`. Orbit of the critical
// value with forward-mode parameter derivative: z_1 = c, z'_1 = 1,
// z'_{m+1} = 2 z_m z'_m + 1.
Cx param_newton_to_target(int k, Cx W, Cx seed, const PrecisionProfile& pp) {
  Cx x = seed;
  Cx x_best = seed;
  double dx_best = std::numeric_limits<double>::infinity();
  int flat = 0;
  for (int it = 0; it < pp.newton_cap; ++it) {
    Cx z = x;
    Cx d = 1.0;
    for (int j = 0; j < k; ++j) {
      d = 2.0 * z * d + 1.0;
      z = z * z + x;
      if (!finite(z) || std::abs(z) > 1e200) throw NewtonFail{};
    }
    Cx dH = d - far_inverse_dc(x, W);
    if (std::abs(dH) < 1e-290) throw NewtonFail{};
    Cx dx = (z - far_inverse(x, W)) / dH;
    x -= dx;
    if (!finite(x) || std::abs(x) > 1e15) throw NewtonFail{};
    double scale = std::max(std::abs(x), 1e-12);
    double adx = std::abs(dx);
    if (adx <= pp.ray_tol * scale) return x;
    if (adx < dx_best) {
      dx_best = adx;
      x_best = x;
      flat = 0;
    } else if (++flat >= 2 && dx_best <= 1e-8 * scale) {
      // pinned at the f64 noise floor (see the dynamical tracer); accept the
      // best iterate instead of wandering
      return x_best;
    }
  }
  throw NewtonFail{};
}

// far-zone encoding of (potential g, angle theta): doubling until 2^k g lands
// in [far, 2 far). W is kept raw because psi_c depends on the unknown c.
struct FarTarget {
  int k = 0;
  Cx W;
};

FarTarget param_far_target(const ExternalAngle& angle, double g, const PrecisionProfile& pp) {
  if (!(g > 0) || g > 300.0) throw ConfigError("parameter ray potential out of range");
  FarTarget ft;
  ExternalAngle a = angle;
  double u = g;
  while (u < pp.far_potential) {
    u = std::ldexp(g, ++ft.k);
    a = a.doubled();
  }
  ft.W = std::exp(Cx(u, 2.0 * M_PI * a.value()));
  return ft;
}

}  // namespace

double parameter_green(Cx c, int max_iter, double escape_radius) {
  return green_value(QuadraticMap{c}, c, max_iter, escape_radius);
}

double parameter_green(Cx c, const PrecisionProfile& pp) {
  return parameter_green(c, pp.max_iter, pp.escape_radius);
}

Cx parameter_ray_point(const ExternalAngle& angle, double g, Cx seed,
                       const PrecisionProfile& pp) {
  FarTarget ft = param_far_target(angle, g, pp);
  try {
    return param_newton_to_target(ft.k, ft.W, seed, pp);
  } catch (const NewtonFail&) {
    throw RayStallError("parameter ray Newton stalled at potential " + std::to_string(g) +
                        " angle " + angle.str());
  }
}

Cx parameter_ray_point_from_far(const ExternalAngle& angle, double g,
                                const PrecisionProfile& pp) {
  double g0 = std::max(g, pp.far_potential);
  FarTarget entry = param_far_target(angle, g0, pp);
  // first-order self-consistent seed: psi_c(W) evaluated at c = W
  Cx x = far_inverse(entry.W, entry.W);
  if (g >= pp.far_potential) return parameter_ray_point(angle, g, x, pp);
  double step = std::pow(2.0, -1.0 / pp.steps_per_halving);
  double cur = g0;
  while (cur > g) {
    double next = std::max(cur * step, g);
    x = parameter_ray_advance(angle, cur, x, next, pp);
    cur = next;
  }
  return x;
}

Cx parameter_ray_advance(const ExternalAngle& angle, double g_from, Cx x_from, double g_to,
                         const PrecisionProfile& pp) {
  if (!(g_to < g_from)) {
    if (g_to == g_from) return x_from;
    throw ConfigError("parameter_ray_advance: potential must decrease");
  }
  struct Frame {
    double from, to;
    int depth;
  };
  Cx x = x_from;
  double cur = g_from;
  std::vector<Frame> stack{{g_from, g_to, 0}};
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    try {
      x = parameter_ray_point(angle, fr.to, x, pp);
      cur = fr.to;
    } catch (const RayStallError&) {
      if (fr.depth >= pp.stall_subdivision_cap)
        throw RayStallError("parameter ray stall at angle " + angle.str() +
                            ", deepest potential reached " + fmt_g(cur));
      double mid = std::sqrt(fr.from * fr.to);  // geometric midpoint
      stack.push_back({mid, fr.to, fr.depth + 1});
      stack.push_back({fr.from, mid, fr.depth + 1});
    }
  }
  return x;
}

RayTrace trace_parameter_ray(const ExternalAngle& angle, double potential_start,
                             double potential_end, const PrecisionProfile& pp) {
  if (!(potential_start > potential_end) || !(potential_end > 0))
    throw ConfigError("trace_parameter_ray: need potential_start > potential_end > 0");
  RayTrace tr;
  tr.angle = angle;
  Cx x = parameter_ray_point_from_far(angle, potential_start, pp);
  tr.points.push_back(x);
  tr.potentials.push_back(potential_start);
  double step = std::pow(2.0, -1.0 / pp.steps_per_halving);
  double cur = potential_start;
  int tiny_steps = 0;
  while (cur > potential_end) {
    double next = cur * step;
    if (next < potential_end * 1.0000000001) next = potential_end;
    Cx nx = parameter_ray_advance(angle, cur, x, next, pp);
    double moved = std::abs(nx - x);
    tr.max_step = std::max(tr.max_step, moved);
    x = nx;
    cur = next;
    tr.points.push_back(x);
    tr.potentials.push_back(cur);
    // stop once the representable point-to-landing gap runs out (see the
    // dynamical tracer for the rationale)
    if (cur < 1e-7 && moved <= 1e-12 * std::max(1.0, std::abs(x))) {
      if (++tiny_steps >= 2) break;
    } else {
      tiny_steps = 0;
    }
  }
  if (potential_end <= 1e-7) tr.landing_estimate = x;
  return tr;
}

std::vector<Cx> trace_parameter_equipotential(double potential, const ExternalAngle& angle_from,
                                              const ExternalAngle& angle_to, int samples,
                                              const PrecisionProfile& pp) {
  if (samples < 2) throw ConfigError("trace_parameter_equipotential: samples must be >= 2");
  if (!(potential > 0)) throw ConfigError("trace_parameter_equipotential: potential must be > 0");
  std::vector<Cx> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    ExternalAngle t = equipotential_sample_angle(angle_from, angle_to, samples, i);
    // Each sample descends its own parameter ray from the far zone; seeding
    // from the neighbouring sample would risk returning the wrong preimage
    // branch of the shared far target, exactly as in the dynamical plane.
    out.push_back(parameter_ray_point_from_far(t, potential, pp));
  }
  return out;
}

LandingRefinement refine_misiurewicz(int preperiod, int period, Cx seed,
                                     const PrecisionProfile& pp) {
  if (period < 1) throw ConfigError("refine_misiurewicz: period must be >= 1");
  if (preperiod < 0) throw ConfigError("refine_misiurewicz: negative preperiod");
  const int l = preperiod, p = period;
  auto residual_at = [&](Cx c) {
    Cx z = c;
    for (int j = 0; j < l; ++j) z = z * z + c;
    Cx zl = z;
    for (int j = 0; j < p; ++j) z = z * z + c;
    return finite(z) ? std::abs(z - zl) : std::numeric_limits<double>::infinity();
  };
  LandingRefinement res;
  res.z = seed;
  res.residual = residual_at(seed);
  // Periodic angles land at hyperbolic-component roots, which are not
  // solutions of the preperiodic equation: leave the estimate unrefined.
  if (l < 1) return res;
  Cx x = seed;
  for (int it = 0; it < pp.landing_newton_cap; ++it) {
    // F(c) = f_c^{l+p}(c) - f_c^l(c), forward-mode c-derivative
    Cx z = x, d = 1.0, zl = x, dl = 1.0;
    for (int j = 0; j < l + p; ++j) {
      if (j == l) {
        zl = z;
        dl = d;
      }
      d = 2.0 * z * d + 1.0;
      z = z * z + x;
      if (!finite(z)) return res;
    }
    Cx dF = d - dl;
    if (std::abs(dF) < 1e-290) return res;
    Cx dx = (z - zl) / dF;
    x -= dx;
    if (!finite(x)) return res;
    if (std::abs(dx) <= pp.landing_tol * std::max(1.0, std::abs(x))) {
      res.z = x;
      res.refined = true;
      res.residual = residual_at(x);
      return res;
    }
  }
  return res;
}

LandingRefinement refine_parameter_landing(const ExternalAngle& angle, Cx seed,
                                           const PrecisionProfile& pp) {
  return refine_misiurewicz(angle.preperiod(), angle.period(), seed, pp);
}

namespace {

// Same two-tier re-measurement as the dynamical boundary check, against the
// parameter potential; corners are preperiodic parameters, checked through
// their critical-value orbit with a derivative-aware tolerance.
constexpr double kGreenVerifyFloor = 1e-9;
constexpr double kGreenVerifyRel = 1e-5;
constexpr double kGreenVerifyAbs = 1e-13;

void verify_parapiece(const std::vector<BVertex>& b, const PrecisionProfile& pp) {
  for (const BVertex& v : b) {
    if (!v.exact) continue;
    if (v.kind == VertexKind::Corner) {
      int l = v.angle.preperiod(), p = v.angle.period();
      Cx z = v.z;
      double amp = 1;
      for (int j = 0; j < l; ++j) {
        amp *= std::max(1.0, 2 * std::abs(z));
        z = z * z + v.z;
      }
      Cx zl = z;
      for (int j = 0; j < p; ++j) {
        amp *= std::max(1.0, 2 * std::abs(z));
        z = z * z + v.z;
      }
      double tol = 1e-11 * amp * std::max(1.0, std::abs(v.z));
      if (!(std::abs(z - zl) <= tol))
        throw CombinatoricsError("parapuzzle corner at angle " + v.angle.str() +
                                 " fails its preperiodicity check (residual " +
                                 fmt_g(std::abs(z - zl)) + ", tol " + fmt_g(tol) + ")");
    } else if (v.potential >= kGreenVerifyFloor) {
      double g = parameter_green(v.z, pp);
      double tol = std::max(kGreenVerifyRel * v.potential, kGreenVerifyAbs);
      if (!(std::abs(g - v.potential) <= tol))
        throw UnderResolvedError("parapuzzle vertex drifted off its potential (recorded " +
                                 fmt_g(v.potential) + ", measured " + fmt_g(g) + ")");
    }
  }
}

}  // namespace

ParaPiece build_parapiece(const QuadraticMap& map, const Nest& nest, int n, ParaKind kind,
                          const PrecisionProfile& pp) {
  if (n < 1) throw ConfigError("build_parapiece: level must be >= 1");
  if (kind == ParaKind::Q && n < 2)
    throw ConfigError(
        "build_parapiece: Q pieces start at level 2 (no side piece exists below the first "
        "return)");
  std::vector<uint64_t> u = fibonacci_numbers(n + 2);
  const Piece* base = nullptr;
  int steps = 0;
  if (kind == ParaKind::P) {
    if (static_cast<int>(nest.central.size()) < n)
      throw ConfigError("build_parapiece: nest too shallow for P" + std::to_string(n));
    base = &nest.central[n - 1];
    steps = static_cast<int>(u[n + 1]) - 1;
  } else {
    if (static_cast<int>(nest.side.size()) < n - 1)
      throw ConfigError("build_parapiece: nest sides too shallow for Q" + std::to_string(n));
    base = &nest.side[n - 2];
    steps = static_cast<int>(u[n]) - 1;
  }

  // Dynamical model around the critical value: the pullback of the base piece
  // along the critical value orbit. Its boundary angles and potential are the
  // ones realized in the parameter plane.
  Piece model = pullback_piece(map, *base, steps, map.c, pp);
  if (model.degree != 1)
    throw CombinatoricsError("build_parapiece: critical-value pullback is branched at level " +
                             std::to_string(n));

  // start the walk at a corner so arc runs are not split across the seam
  std::vector<BVertex>& mb = model.boundary;
  for (size_t i = 0; i < mb.size(); ++i) {
    if (mb[i].kind == VertexKind::Corner) {
      std::rotate(mb.begin(), mb.begin() + i, mb.end());
      break;
    }
  }
  std::vector<Arc> arcs = extract_arcs(model);
  const double L = model.equip_level;
  const double deep = std::ldexp(L, -30);

  // one trace per distinct boundary ray angle
  std::map<std::pair<uint64_t, uint64_t>, RayTrace> traces;
  for (const Arc& a : arcs) {
    if (a.kind != VertexKind::Ray) continue;
    std::pair<uint64_t, uint64_t> key{a.angle_from.num, a.angle_from.den};
    if (!traces.count(key)) traces.emplace(key, trace_parameter_ray(a.angle_from, L, deep, pp));
  }
  auto trace_of = [&](const ExternalAngle& a) -> const RayTrace& {
    return traces.at({a.num, a.den});
  };

  ParaPiece out;
  out.kind = kind;
  Piece& piece = out.piece;
  piece.equip_level = L;
  piece.depth = n;
  piece.degree = 1;
  piece.return_steps = 0;
  piece.label = std::string(kind == ParaKind::P ? "P" : "Q") + std::to_string(n);
  piece.basepoint = map.c;

  const size_t na = arcs.size();
  for (size_t ai = 0; ai < na; ++ai) {
    const Arc& a = arcs[ai];
    if (a.kind == VertexKind::Corner) {
      const Arc& after = arcs[(ai + 1) % na];
      const Arc& before = arcs[(ai + na - 1) % na];
      const Arc* nb = after.kind == VertexKind::Ray
                          ? &after
                          : (before.kind == VertexKind::Ray ? &before : nullptr);
      if (!nb) throw CombinatoricsError("parapuzzle corner is not flanked by a ray");
      const RayTrace& tr = trace_of(nb->angle_from);
      Cx seed = tr.landing_estimate ? *tr.landing_estimate : tr.points.back();
      ExternalAngle ca = mb[a.first].angle;
      LandingRefinement lr = refine_parameter_landing(ca, seed, pp);
      // guard against Newton hopping to a different preperiodic parameter
      bool good = lr.refined && std::abs(lr.z - seed) <= 1e-4 * std::max(1.0, std::abs(seed));
      BVertex v;
      v.z = good ? lr.z : seed;
      v.potential = 0;
      v.kind = VertexKind::Corner;
      v.exact = good;
      v.angle = ca;
      piece.boundary.push_back(v);
      continue;
    }
    if (a.kind == VertexKind::Ray) {
      const RayTrace& tr = trace_of(a.angle_from);
      bool descending = a.potential_from > a.potential_to;
      size_t m = tr.points.size();
      for (size_t j = 0; j < m; ++j) {
        size_t idx = descending ? j : m - 1 - j;
        BVertex v;
        v.z = tr.points[idx];
        v.potential = tr.potentials[idx];
        v.kind = VertexKind::Ray;
        v.exact = true;
        v.angle = a.angle_from;
        piece.boundary.push_back(v);
      }
      out.ray_angles.push_back(a.angle_from);
      continue;
    }
    // equipotential arc; endpoints coincide with the adjacent ray tops
    double span = a.angle_to.value() - a.angle_from.value();
    if (span <= 0) span += 1.0;
    int s = std::max(9, static_cast<int>(std::lround(span * pp.equipotential_samples)) + 1);
    std::vector<Cx> eq = trace_parameter_equipotential(L, a.angle_from, a.angle_to, s, pp);
    for (int i = 1; i + 1 < s; ++i) {
      BVertex v;
      v.z = eq[i];
      v.potential = L;
      v.kind = VertexKind::Equip;
      v.exact = true;
      v.angle = equipotential_sample_angle(a.angle_from, a.angle_to, s, i);
      piece.boundary.push_back(v);
    }
  }

  if (signed_area(piece.polygon()) <= 0)
    throw CombinatoricsError("parapuzzle boundary is not counterclockwise");
  if (!piece.contains(piece.basepoint))
    throw CombinatoricsError("parapuzzle piece does not contain its defining parameter");
  decimate_boundary(piece.boundary, piece.diameter() / pp.resample_divisor);
  verify_parapiece(piece.boundary, pp);
  return out;
}

namespace {

// real critical orbit F(c) = f_c^q(0) with dF/dc, for the center ladder
struct RealOrbit {
  double F = 0, dF = 0;
  bool bounded = true;
};

RealOrbit center_orbit(double c, int q) {
  double z = c, dz = 1;
  for (int j = 1; j < q; ++j) {
    dz = 2 * z * dz + 1;
    z = z * z + c;
    if (!std::isfinite(z) || std::abs(z) > 1e100) return {z, dz, false};
  }
  return {z, dz, true};
}

}  // namespace

SuperstableCenter find_superstable(int n, const PrecisionProfile& pp) {
  if (n < 1) throw ConfigError("find_superstable: level must be >= 1");
  // The rounded orbit of f_c^{u(n+1)}(0) at the exact center carries a noise
  // floor that grows by roughly a decade per level (~1e-11 at level 7), so
  // the residual contract of the returned type is attainable only to level 6.
  if (n > 6)
    throw ConfigError("find_superstable: level " + std::to_string(n) +
                      " cannot meet the 1e-12 residual contract in double precision");
  if (n == 1) return {1, -1.0, 0.0};  // f_c^2(0) = c^2 + c
  std::vector<uint64_t> u = fibonacci_numbers(n + 2);
  double c_prev = -1.0;
  double gap_prev = -0.8;  // synthetic seeding scale ahead of level 2
  double c_cur = 0, res_cur = 0;
  for (int k = 2; k <= n; ++k) {
    const int q = static_cast<int>(u[k + 1]);
    // Newton from seeds extrapolated off the previous center; early seeds sit
    // close (the gaps contract), later ones reach further when Newton slides
    // onto a root with the wrong combinatorics.
    const double ts[] = {0.12, 0.2, 0.3, 0.06, 0.5, 0.8};
    bool found = false;
    for (double t : ts) {
      double c = c_prev + t * gap_prev;
      bool converged = false;
      for (int it = 0; it < pp.landing_newton_cap; ++it) {
        RealOrbit o = center_orbit(c, q);
        if (!o.bounded || std::abs(o.dF) < 1e-280) break;
        double step = o.F / o.dF;
        c -= step;
        if (std::abs(step) <= 1e-14 * std::max(1.0, std::abs(c))) {
          converged = true;
          break;
        }
      }
      if (!converged) continue;
      double res = std::abs(center_orbit(c, q).F);
      if (!(res < 1e-12)) continue;
      if (!(c > -2.0 && c < c_prev)) continue;  // the ladder is strictly decreasing
      if (!has_fibonacci_closest_returns(QuadraticMap{Cx(c, 0)}, k + 1)) continue;
      c_cur = c;
      res_cur = res;
      found = true;
      break;
    }
    if (!found)
      throw CombinatoricsError("find_superstable: no admissible root at level " +
                               std::to_string(k));
    gap_prev = c_cur - c_prev;
    c_prev = c_cur;
  }
  return {n, c_prev, res_cur};
}

namespace {

bool pattern_ok(double c, int levels) {
  return has_fibonacci_closest_returns(QuadraticMap{Cx(c, 0)}, levels);
}

// largest level <= cap at which the closest-return pattern is still intact
int pattern_depth(double c, int cap) {
  for (int L = 2; L <= cap; ++L)
    if (!pattern_ok(c, L)) return L - 1;
  return cap;
}

// Superstable ladder without the residual contract of find_superstable: the
// returned centers only certify combinatorics (depth-(k+1) pattern at level
// k), which Newton keeps delivering well past the point where the residual
// noise floor crosses 1e-12.  Stops at the first level where no seed yields
// a converged root strictly inside the previous gap with the right pattern.
std::vector<double> interior_ladder(int kmax) {
  std::vector<double> centers{-1.0};
  std::vector<uint64_t> u = fibonacci_numbers(kmax + 2);
  double gap_prev = -0.8;
  for (int k = 2; k <= kmax; ++k) {
    const int q = static_cast<int>(u[k + 1]);
    // the gap ratios collapse geometrically (~0.14 at level 3 down to ~1e-3
    // by level 12), so the seed fractions have to reach far below the ones
    // that suffice for the shallow ladder
    const double ts[] = {0.12, 0.06, 0.03, 0.015, 0.008, 0.004,
                         0.002, 0.2,  0.3,  0.5,   0.8};
    double found = std::numeric_limits<double>::quiet_NaN();
    for (double t : ts) {
      double c = centers.back() + t * gap_prev;
      bool converged = false;
      for (int it = 0; it < 60; ++it) {
        RealOrbit o = center_orbit(c, q);
        if (!o.bounded || std::abs(o.dF) < 1e-280) break;
        double step = o.F / o.dF;
        c -= step;
        if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(c))) {
          converged = true;
          break;
        }
      }
      if (!converged) continue;
      if (!(c > -2.0 && c < centers.back())) continue;
      if (!pattern_ok(c, k + 1)) continue;
      found = c;
      break;
    }
    if (std::isnan(found)) break;
    gap_prev = found - centers.back();
    centers.push_back(found);
  }
  return centers;
}

}  // namespace

double find_fibonacci_parameter(double tol) {
  if (!(tol >= 1e-13))
    throw ConfigError(
        "find_fibonacci_parameter: tol below the attainable double-precision window (1e-13)");
  // A single interior certificate anchors every bisection round: the deepest
  // Newton-reachable superstable center lies inside each signature window the
  // rounds probe (its pattern survives one level past its own), so the
  // bracket provably never slides off onto a satellite window that dies at
  // the next depth.
  std::vector<double> ladder = interior_ladder(12);
  const double t = ladder.back();
  const int t_depth = pattern_depth(t, 40);
  if (ladder.size() < 2 || t_depth < 3)
    throw CombinatoricsError("find_fibonacci_parameter: no closest-return parameter in [-2, -3/4]");
  double lo = -2.0, hi = -0.75;  // pattern fails at depth 3 on both ends
  for (int depth = 3; depth <= t_depth && hi - lo >= tol; ++depth) {
    // shrink the bracket toward the edges of the depth-level signature
    // window around the anchor; lo only ever lands on pattern-breaking
    // points left of the window, hi on ones right of it
    double a = lo, b = t;
    while (b - a > tol / 16 && b - a > 1e-17) {
      double m = 0.5 * (a + b);
      (pattern_ok(m, depth) ? b : a) = m;
    }
    lo = a;
    a = t;
    b = hi;
    while (b - a > tol / 16 && b - a > 1e-17) {
      double m = 0.5 * (a + b);
      (pattern_ok(m, depth) ? a : b) = m;
    }
    hi = b;
  }
  if (hi - lo >= tol)
    throw UnderResolvedError("find_fibonacci_parameter: signature window still " +
                             fmt_g(hi - lo) + " wide at the double-precision depth wall " +
                             std::to_string(t_depth));
  return 0.5 * (lo + hi);
}

RescalingMap rescaling_map(const QuadraticMap& map, const Nest& nest, int level,
                           const PrecisionProfile& pp, RescalingSign sign) {
  if (level < 1) throw ConfigError("rescaling_map: level must be >= 1");
  if (static_cast<int>(nest.side.size()) < level + 1)
    throw ConfigError("rescaling_map: nest sides too shallow to select the branch at level " +
                      std::to_string(level));
  Cx y_neg = nest_zero(map, nest, level, pp);  // negative real zero of f^{r_level}
  Cx y_pos = -y_neg;
  const Piece& side = nest.side[level];  // the level-(level+1) side piece
  bool neg_in = side.contains(y_neg);
  bool pos_in = side.contains(y_pos);
  if (neg_in == pos_in)
    throw CombinatoricsError("rescaling_map: side piece fails to separate the return-map zeros " +
                             fmt_g(y_neg.real()) + " and " + fmt_g(y_pos.real()) + " at level " +
                             std::to_string(level));
  RescalingMap r;
  r.zero = neg_in ? y_neg : y_pos;
  r.level = level;
  r.lambda = (sign == RescalingSign::MapsToMinusOne ? Cx(-1, 0) : Cx(1, 0)) / r.zero;
  return r;
}

namespace {

// f_c^k(0); escape here means the parameter fell out of every renormalization
// window, so the caller's construction has no meaning at c
Cx crit_orbit(Cx c, int k) {
  Cx z = 0;
  for (int j = 0; j < k; ++j) {
    z = z * z + c;
    if (!finite(z) || std::abs(z) > 1e100)
      throw NonRenormalizableError("critical orbit escapes before the level return at c = (" +
                                   fmt_g(c.real()) + ", " + fmt_g(c.imag()) + ")");
  }
  return z;
}

// Newton in z on f_c^p(z) = 0 from the current branch point; false when the
// iteration diverges, stalls, or wanders further than wander_frac of the seed
// scale (a branch jump, or two zeros colliding).
bool zero_newton(Cx c, int p, Cx& y, double wander_frac) {
  const Cx seed = y;
  const double scale = std::abs(seed);
  Cx x = seed;
  for (int it = 0; it < 40; ++it) {
    Cx z = x, d = 1.0;
    for (int j = 0; j < p; ++j) {
      d *= 2.0 * z;
      z = z * z + c;
      if (!finite(z) || std::abs(z) > 1e200) return false;
    }
    if (std::abs(d) < 1e-290) return false;
    Cx dx = z / d;
    x -= dx;
    if (!finite(x)) return false;
    if (std::abs(x - seed) > wander_frac * scale) return false;
    if (std::abs(dx) <= 1e-12 * std::max(std::abs(x), 1e-30)) {
      y = x;
      return true;
    }
  }
  return false;
}

// analytic continuation of the selected zero of f_c^p along the segment
// c0 -> c1, with adaptive steps; failure to continue = the branch is lost
Cx continue_zero(int p, Cx y0, Cx c0, Cx c1) {
  Cx y = y0;
  double t = 0, dt = 0.5;
  while (t < 1) {
    double tn = std::min(1.0, t + dt);
    Cx c = c0 + (c1 - c0) * tn;
    Cx yt = y;
    bool ok = zero_newton(c, p, yt, 0.35);
    if (ok && std::abs(yt) < 1e-13) ok = false;  // collided into the critical point
    if (!ok) {
      dt *= 0.5;
      if (dt < 1e-5)
        throw NonRenormalizableError(
            "return-map zero lost under continuation toward c = (" + fmt_g(c1.real()) + ", " +
            fmt_g(c1.imag()) + ") (zeros collide at the window boundary)");
      continue;
    }
    y = yt;
    t = tn;
    dt = std::min(0.5, dt * 1.7);
  }
  return y;
}

// innermost positive real zero of f_c^p, scanned outward from 0 in steps h
// (the two innermost real zeros of the even map sit symmetrically)
double innermost_positive_zero(double c, int p, double h, double cap) {
  auto F = [&](double y) {
    double z = y;
    for (int j = 0; j < p; ++j) z = z * z + c;
    return z;
  };
  double y0 = 0, f0 = F(0);
  double y1 = 0, f1 = f0;
  for (int j = 1;; ++j) {
    y1 = j * h;
    if (y1 > cap)
      throw CombinatoricsError("parameter_map: anchor zero scan ran past its bracket");
    f1 = F(y1);
    if (std::signbit(f1) != std::signbit(f0)) break;
    y0 = y1;
    f0 = f1;
  }
  for (int it = 0; it < 90; ++it) {
    double m = 0.5 * (y0 + y1);
    if (std::signbit(F(m)) == std::signbit(f0))
      y0 = m;
    else
      y1 = m;
  }
  return 0.5 * (y0 + y1);
}

// The real parameter with the full Fibonacci closest-return pattern, used as
// the continuation anchor: it sits inside every renormalization window, so
// every level's branch data is available there. Value pinned by
// find_fibonacci_parameter(1e-13); kept as a constant because the anchor is
// evaluated inside per-sample loops.
constexpr double kAnchor = -1.8705286321646446;

}  // namespace

Cx parameter_map(int n, Cx c, const PrecisionProfile& pp) {
  (void)pp;
  if (n < 1) throw ConfigError("parameter_map: level must be >= 1");
  if (n > 12) throw ConfigError("parameter_map: levels past 12 exceed double-precision branches");
  // cheap combinatorial membership fallback: the closest-return pattern one
  // level below the map's own is necessary for the construction to mean
  // anything at c (the traced-domain overload makes the geometric test)
  if (!has_fibonacci_closest_returns(QuadraticMap{c}, std::max(2, n - 1)))
    throw NonRenormalizableError("parameter_map: c = (" + fmt_g(c.real()) + ", " +
                                 fmt_g(c.imag()) + ") fails the closest-return pattern at level " +
                                 std::to_string(std::max(2, n - 1)));
  std::vector<uint64_t> u = fibonacci_numbers(n + 2);
  const int p = static_cast<int>(u[n]);      // return time whose zero is tracked
  const int q = static_cast<int>(u[n + 1]);  // return time of the critical value

  // ladder of innermost positive zeros at the anchor: |y_0| = sqrt(-c), then
  // each level's zero seeds the scan for the next
  double ymag = std::sqrt(-kAnchor);
  for (int k = 2; k <= n; ++k) {
    double prev = ymag;
    ymag = innermost_positive_zero(kAnchor, static_cast<int>(u[k]), 0.08 * prev, 1.02 * prev);
  }
  // side-branch selection at a real anchor: the zero on the side the critical
  // value returns to, i.e. the sign of x_n(anchor)
  Cx xa = crit_orbit(Cx(kAnchor, 0), q);
  Cx y = Cx(xa.real() >= 0 ? ymag : -ymag, 0);

  y = continue_zero(p, y, Cx(kAnchor, 0), c);
  Cx xn = crit_orbit(c, q);
  return -xn / y;
}

Cx parameter_map(int n, Cx c, const ParaPiece& domain, const PrecisionProfile& pp) {
  if (!domain.contains(c))
    throw CombinatoricsError("parameter_map: c = (" + fmt_g(c.real()) + ", " + fmt_g(c.imag()) +
                             ") is outside the domain piece " + domain.piece.label);
  return parameter_map(n, c, pp);
}

}  // namespace fibscale
