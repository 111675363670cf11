#include "fibscale/puzzle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <utility>

#include "fibscale/geometry.hpp"

namespace fibscale {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::vector<Cx> loop_polygon(const std::vector<BVertex>& b) {
  std::vector<Cx> p;
  p.reserve(b.size());
  for (const BVertex& v : b) p.push_back(v.z);
  return p;
}

// angle + 1/2 mod 1, exact; every lifted angle has an even denominator
ExternalAngle plus_half(const ExternalAngle& a) {
  if (a.den % 2 == 0) return ExternalAngle(a.num + a.den / 2, a.den);
  return ExternalAngle(2 * a.num + a.den, 2 * a.den);
}

struct Run {
  size_t begin = 0, end = 0;  // [begin, end)
  VertexKind kind = VertexKind::Equip;
};

// Maximal same-kind runs (ray runs additionally split on angle changes,
// corners are singletons). Loop boundaries are always run boundaries by
// construction, so a plain forward scan suffices.
std::vector<Run> find_runs(const std::vector<BVertex>& v) {
  std::vector<Run> runs;
  size_t n = v.size(), i = 0;
  while (i < n) {
    if (v[i].kind == VertexKind::Corner) {
      runs.push_back({i, i + 1, v[i].kind});
      ++i;
      continue;
    }
    size_t j = i + 1;
    while (j < n && v[j].kind == v[i].kind &&
           (v[i].kind != VertexKind::Ray || v[j].angle == v[i].angle))
      ++j;
    runs.push_back({i, j, v[i].kind});
    i = j;
  }
  return runs;
}

// Replace the parent angles stored in a freshly lifted loop by the correct
// halves. For a conjugation-symmetric (real) parameter a ray at angle in
// (0, 1/2) lies in the upper half plane and never crosses the real axis, so
// the branch of theta/2 is read off the imaginary part; the rays at 0 and 1/2
// are the real exceptions and are disambiguated by the real part instead.
void assign_lifted_angles(std::vector<BVertex>& v) {
  std::vector<Run> runs = find_runs(v);
  auto half_by_geometry = [](const BVertex& b) {
    if (b.angle.num == 0) return b.angle.half(b.z.real() >= 0 ? 0 : 1);
    return b.angle.half(b.z.imag() >= 0 ? 0 : 1);
  };
  for (const Run& r : runs) {
    if (r.kind == VertexKind::Ray) {
      // run-wise: deep vertices sit near the (often real) landing point where
      // the sign of the imaginary part is float noise, so use the vertex with
      // the largest excursion as the representative
      const ExternalAngle theta = v[r.begin].angle;
      int branch;
      if (theta.num == 0) {
        double re = 0, best = -1;
        for (size_t k = r.begin; k < r.end; ++k)
          if (std::abs(v[k].z.real()) > best) {
            best = std::abs(v[k].z.real());
            re = v[k].z.real();
          }
        branch = re >= 0 ? 0 : 1;
      } else {
        double im = 0, best = -1;
        for (size_t k = r.begin; k < r.end; ++k)
          if (std::abs(v[k].z.imag()) > best) {
            best = std::abs(v[k].z.imag());
            im = v[k].z.imag();
          }
        branch = im >= 0 ? 0 : 1;
      }
      ExternalAngle t = theta.half(branch);
      for (size_t k = r.begin; k < r.end; ++k) v[k].angle = t;
    } else if (r.kind == VertexKind::Equip) {
      // vertex-wise: equipotential vertices keep a genuine distance from the
      // real axis (their angular spacing dwarfs float noise)
      for (size_t k = r.begin; k < r.end; ++k) v[k].angle = half_by_geometry(v[k]);
    }
  }
  // corners inherit the assigned angle of an adjacent ray run (both adjacent
  // rays land at the corner, so either one is a valid angle for it)
  size_t nr = runs.size();
  for (size_t q = 0; q < nr; ++q) {
    if (runs[q].kind != VertexKind::Corner) continue;
    const Run& nxt = runs[(q + 1) % nr];
    const Run& prv = runs[(q + nr - 1) % nr];
    BVertex& cv = v[runs[q].begin];
    if (nxt.kind == VertexKind::Ray)
      cv.angle = v[nxt.begin].angle;
    else if (prv.kind == VertexKind::Ray)
      cv.angle = v[prv.begin].angle;
    else
      cv.angle = half_by_geometry(cv);
  }
}

struct LiftCtx {
  const QuadraticMap& map;
  const PrecisionProfile& pp;
  std::vector<BVertex> out;
};

// Lift the parent edge P -> Q continuing from z_prev; appends the lifted Q
// (and any chord-inserted helpers) and returns the lifted endpoint. The two
// sqrt branches are 2|s| apart, so continuity is safe while the step stays a
// fraction of the clearance; otherwise the chord is subdivided.
Cx lift_edge(LiftCtx& ctx, const BVertex& P, const BVertex& Q, Cx z_prev, int depth) {
  Cx s = std::sqrt(Q.z - ctx.map.c);
  Cx zq = std::norm(s - z_prev) <= std::norm(-s - z_prev) ? s : -s;
  double step = std::abs(zq - z_prev);
  double clearance = std::abs(zq);
  if (step <= ctx.pp.lift_ambiguity_ratio * clearance) {
    BVertex v = Q;
    v.z = zq;
    v.potential = Q.potential * 0.5;
    ctx.out.push_back(v);
    return zq;
  }
  if (depth >= ctx.pp.lift_subdivision_cap)
    throw BranchPinchError("curve lift pinched near the critical value (step " + fmt_g(step) +
                           ", clearance " + fmt_g(clearance) + ")");
  BVertex m;
  m.z = 0.5 * (P.z + Q.z);
  m.kind = P.kind == VertexKind::Corner ? Q.kind : P.kind;
  m.angle = P.kind == VertexKind::Corner ? Q.angle : P.angle;
  m.potential = 0.5 * (P.potential + Q.potential);
  m.exact = false;  // chord point: steers the branch, not on the true curve
  Cx zm = lift_edge(ctx, P, m, z_prev, depth + 1);
  return lift_edge(ctx, m, Q, zm, depth + 1);
}

void dp_mark(const std::vector<BVertex>& v, size_t lo, size_t hi, double tol,
             std::vector<char>& keep) {
  // iterative Douglas-Peucker over [lo, hi] (endpoints already kept)
  std::vector<std::pair<size_t, size_t>> stack{{lo, hi}};
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    if (j <= i + 1) continue;
    Cx a = v[i].z, ab = v[j].z - a;
    double l2 = std::norm(ab);
    double best = -1;
    size_t bi = i + 1;
    for (size_t k = i + 1; k < j; ++k) {
      Cx d = v[k].z - a;
      double t = l2 > 0 ? std::clamp((d.real() * ab.real() + d.imag() * ab.imag()) / l2, 0.0, 1.0)
                        : 0.0;
      double dist = std::abs(d - t * ab);
      if (dist > best) {
        best = dist;
        bi = k;
      }
    }
    if (best <= tol) continue;
    keep[bi] = 1;
    stack.push_back({i, bi});
    stack.push_back({bi, j});
  }
}

}  // namespace

// Per-arc polyline simplification; run endpoints (junctions, corners) survive.
void decimate_boundary(std::vector<BVertex>& b, double tol) {
  if (b.size() < 8) return;
  std::vector<Run> runs = find_runs(b);
  std::vector<char> keep(b.size(), 0);
  for (const Run& r : runs) {
    keep[r.begin] = 1;
    keep[r.end - 1] = 1;
    if (r.end - r.begin > 2) dp_mark(b, r.begin, r.end - 1, tol, keep);
  }
  std::vector<BVertex> out;
  out.reserve(b.size());
  for (size_t i = 0; i < b.size(); ++i)
    if (keep[i]) out.push_back(b[i]);
  b = std::move(out);
}

namespace {

// Exact vertices must still sit on their curves: equipotential and ray points
// are re-measured against the Green's function where it is numerically
// meaningful (the escape-time value carries ~1e-13 absolute noise, so very
// deep potentials cannot be re-verified); corners are checked through their
// (pre)periodic orbit with a derivative-aware tolerance.
constexpr double kGreenVerifyFloor = 1e-9;
constexpr double kGreenVerifyRel = 1e-5;
constexpr double kGreenVerifyAbs = 1e-13;

void verify_boundary(const QuadraticMap& map, const std::vector<BVertex>& b,
                     const PrecisionProfile& pp) {
  for (const BVertex& v : b) {
    if (!v.exact) continue;
    if (v.kind == VertexKind::Corner) {
      int l = v.angle.preperiod(), p = v.angle.period();
      Cx z = v.z;
      double amp = 1;
      for (int j = 0; j < l; ++j) {
        amp *= std::max(1.0, 2 * std::abs(z));
        z = map.forward(z);
      }
      Cx zl = z;
      for (int j = 0; j < p; ++j) {
        amp *= std::max(1.0, 2 * std::abs(z));
        z = map.forward(z);
      }
      double tol = 1e-11 * amp * std::max(1.0, std::abs(v.z));
      if (!(std::abs(z - zl) <= tol))
        throw CombinatoricsError("piece corner at angle " + v.angle.str() +
                                 " fails its periodicity check (residual " +
                                 fmt_g(std::abs(z - zl)) + ", tol " + fmt_g(tol) + ")");
    } else if (v.potential >= kGreenVerifyFloor) {
      double g = green_value(map, v.z, pp);
      double tol = std::max(kGreenVerifyRel * v.potential, kGreenVerifyAbs);
      if (!(std::abs(g - v.potential) <= tol))
        throw UnderResolvedError("boundary vertex drifted off its potential (recorded " +
                                 fmt_g(v.potential) + ", measured " + fmt_g(g) + ")");
    }
  }
}

}  // namespace

std::vector<Cx> Piece::polygon() const { return loop_polygon(boundary); }

double Piece::diameter() const { return polygon_diameter(polygon()); }

bool Piece::contains(Cx z, double guard_frac) const {
  std::vector<Cx> poly = polygon();
  double guard = guard_frac * std::max(1.0, polygon_diameter(poly));
  try {
    return winding_number(poly, z, guard) != 0;
  } catch (const UnderResolvedError&) {
    return false;  // within guard of the boundary: not strictly inside
  }
}

std::vector<Arc> extract_arcs(const Piece& piece) {
  std::vector<Arc> arcs;
  for (const Run& r : find_runs(piece.boundary)) {
    Arc a;
    a.kind = r.kind;
    a.first = r.begin;
    a.count = r.end - r.begin;
    a.angle_from = piece.boundary[r.begin].angle;
    a.angle_to = piece.boundary[r.end - 1].angle;
    a.potential_from = piece.boundary[r.begin].potential;
    a.potential_to = piece.boundary[r.end - 1].potential;
    arcs.push_back(a);
  }
  return arcs;
}

std::vector<uint64_t> fibonacci_numbers(int count) {
  if (count < 0) throw ConfigError("fibonacci_numbers: negative count");
  std::vector<uint64_t> u;
  u.reserve(count);
  for (int i = 0; i < count; ++i)
    u.push_back(i < 2 ? 1 : u[i - 1] + u[i - 2]);
  return u;
}

namespace {

struct WakeTraces {
  RayTrace t13, t23;
  Cx alpha;
};

WakeTraces wake_traces(const QuadraticMap& map, double equip_level, const PrecisionProfile& pp) {
  if (!(equip_level > 0)) throw ConfigError("initial_puzzle: equip_level must be > 0");
  if (pp.equipotential_samples < 16)
    throw ConfigError("initial_puzzle: need at least 16 equipotential samples");

  WakeTraces w;
  const ExternalAngle a13(1, 3), a23(2, 3);
  double deep = std::ldexp(equip_level, -30);
  w.t13 = trace_external_ray(map, a13, equip_level, deep, pp);
  w.t23 = trace_external_ray(map, a23, equip_level, deep, pp);
  LandingRefinement l13 = refine_landing(map, w.t13, pp);
  LandingRefinement l23 = refine_landing(map, w.t23, pp);
  double scale = std::max(1.0, std::abs(l13.z));
  if (!l13.refined || !l23.refined || std::abs(l13.z - l23.z) > 1e-8 * scale)
    throw CombinatoricsError(
        "rays 1/3 and 2/3 do not land together (parameter outside the half wake)");
  FixedPoints fx = fixed_points(map);
  if (fx.degenerate || std::abs(l13.z - fx.alpha) > 1e-6 * scale)
    throw CombinatoricsError("rays 1/3 and 2/3 do not land on the dividing fixed point");
  w.alpha = l13.z;
  return w;
}

void append_ray(std::vector<BVertex>& boundary, const RayTrace& t, const ExternalAngle& angle,
                bool outward) {
  size_t n = t.points.size();
  for (size_t j = 0; j < n; ++j) {
    size_t k = outward ? n - 1 - j : j;
    BVertex v;
    v.z = t.points[k];
    v.potential = t.potentials[k];
    v.kind = VertexKind::Ray;
    v.exact = true;
    v.angle = angle;
    boundary.push_back(v);
  }
}

// Assemble one of the two depth-0 pieces cut by the wake rays: corner at
// alpha, up one ray, along the equipotential, down the other ray, always
// counterclockwise (interior on the left).
Piece assemble_wake_piece(const QuadraticMap& map, double equip_level, const WakeTraces& w,
                          bool critical_side, const PrecisionProfile& pp) {
  const ExternalAngle a13(1, 3), a23(2, 3);
  const ExternalAngle from = critical_side ? a23 : a13;
  const ExternalAngle to = critical_side ? a13 : a23;

  Piece piece;
  piece.equip_level = equip_level;
  piece.depth = 0;
  piece.degree = 1;
  piece.return_steps = 0;
  piece.label = critical_side ? "V0_0" : "V0_1";

  BVertex cv;
  cv.z = w.alpha;
  cv.potential = 0;
  cv.kind = VertexKind::Corner;
  cv.exact = true;
  cv.angle = to;
  piece.boundary.push_back(cv);

  append_ray(piece.boundary, critical_side ? w.t23 : w.t13, from, true);
  int samples = pp.equipotential_samples;
  std::vector<Cx> eq = trace_equipotential(map, equip_level, from, to, samples, pp);
  for (int i = 1; i + 1 < samples; ++i) {  // endpoints coincide with the ray tops
    BVertex v;
    v.z = eq[i];
    v.potential = equip_level;
    v.kind = VertexKind::Equip;
    v.exact = true;
    v.angle = equipotential_sample_angle(from, to, samples, i);
    piece.boundary.push_back(v);
  }
  append_ray(piece.boundary, critical_side ? w.t13 : w.t23, to, false);

  // the critical-point piece is grown around 0; the other piece around the
  // midpoint of the corner and the far equipotential sample (angle near 1/2)
  piece.basepoint = critical_side ? Cx(0, 0) : 0.5 * (w.alpha + eq[samples / 2]);

  if (signed_area(piece.polygon()) <= 0)
    throw CombinatoricsError("initial puzzle piece is not counterclockwise");
  if (!piece.contains(piece.basepoint))
    throw CombinatoricsError(critical_side
                                 ? "initial puzzle piece does not contain the critical point"
                                 : "complementary puzzle piece does not contain its basepoint");
  decimate_boundary(piece.boundary, piece.diameter() / pp.resample_divisor);
  verify_boundary(map, piece.boundary, pp);
  return piece;
}

}  // namespace

Piece initial_puzzle(const QuadraticMap& map, double equip_level, const PrecisionProfile& pp) {
  WakeTraces w = wake_traces(map, equip_level, pp);
  return assemble_wake_piece(map, equip_level, w, true, pp);
}

std::vector<Piece> initial_puzzle_pieces(const QuadraticMap& map, double equip_level,
                                         const PrecisionProfile& pp) {
  WakeTraces w = wake_traces(map, equip_level, pp);
  std::vector<Piece> pieces;
  pieces.push_back(assemble_wake_piece(map, equip_level, w, true, pp));
  pieces.push_back(assemble_wake_piece(map, equip_level, w, false, pp));
  return pieces;
}

LiftResult lift_loop(const QuadraticMap& map, const std::vector<BVertex>& loop,
                     Cx component_hint, const PrecisionProfile& pp) {
  const size_t n = loop.size();
  if (n < 8) throw ConfigError("lift_loop: boundary has fewer than 8 vertices");

  double dia = polygon_diameter(loop_polygon(loop));

  // Start the traversal at a run boundary (so lifted runs stay contiguous)
  // with the best clearance from the critical value.
  auto starts_run = [&](size_t i) {
    const BVertex& a = loop[(i + n - 1) % n];
    const BVertex& b = loop[i];
    if (b.kind != a.kind || b.kind == VertexKind::Corner) return true;
    return b.kind == VertexKind::Ray && b.angle != a.angle;
  };
  size_t s = 0;
  double best = -1;
  bool found = false;
  for (size_t i = 0; i < n; ++i) {
    if (!starts_run(i)) continue;
    double cl = std::abs(loop[i].z - map.c);
    if (cl > best) {
      best = cl;
      s = i;
      found = true;
    }
  }
  if (!found) {  // homogeneous loop (single equipotential circle)
    for (size_t i = 0; i < n; ++i) {
      double cl = std::abs(loop[i].z - map.c);
      if (cl > best) {
        best = cl;
        s = i;
      }
    }
  }
  if (best < 1e-12 * std::max(1.0, dia))
    throw BranchPinchError("boundary passes through the critical value");

  LiftCtx ctx{map, pp, {}};
  ctx.out.reserve(n + n / 4);
  Cx z0 = std::sqrt(loop[s].z - map.c);
  {
    BVertex v = loop[s];
    v.z = z0;
    v.potential *= 0.5;
    ctx.out.push_back(v);
  }
  Cx zp = z0;
  for (size_t k = 1; k <= n; ++k) {
    const BVertex& p = loop[(s + k - 1) % n];
    const BVertex& q = loop[(s + k) % n];
    zp = lift_edge(ctx, p, q, zp, 0);
  }
  // the final appended vertex re-lifts loop[s]; it closes either onto the
  // start (univalent component) or onto its negative (branched double cover)
  Cx zc = ctx.out.back().z;
  ctx.out.pop_back();
  double tol = 1e-6 * std::max(1.0, std::abs(z0));
  double d_same = std::abs(zc - z0), d_neg = std::abs(zc + z0);

  LiftResult res;
  if (d_same <= tol && d_same <= d_neg) {
    res.degree = 1;
    assign_lifted_angles(ctx.out);
    double guard = 1e-11 * std::max(1.0, dia);
    auto wind = [&](const std::vector<BVertex>& b) {
      try {
        return winding_number(loop_polygon(b), component_hint, guard);
      } catch (const UnderResolvedError&) {
        throw CombinatoricsError("orbit point lies on the lifted boundary");
      }
    };
    int w = wind(ctx.out);
    if (w == 0) {
      for (BVertex& v : ctx.out) {
        v.z = -v.z;
        v.angle = plus_half(v.angle);
      }
      w = wind(ctx.out);
    }
    if (w != 1) {
      if (w == 0)
        throw CombinatoricsError("orbit point is not enclosed by either preimage component");
      throw BranchPinchError("lifted component has winding " + std::to_string(w) +
                             " about its target");
    }
  } else if (d_neg <= tol) {
    res.degree = 2;
    assign_lifted_angles(ctx.out);
    size_t m = ctx.out.size();
    ctx.out.reserve(2 * m);
    for (size_t i = 0; i < m; ++i) {
      BVertex v = ctx.out[i];
      v.z = -v.z;
      v.angle = plus_half(v.angle);
      ctx.out.push_back(v);
    }
    double guard = 1e-11 * std::max(1.0, dia);
    int w;
    try {
      w = winding_number(loop_polygon(ctx.out), component_hint, guard);
    } catch (const UnderResolvedError&) {
      throw CombinatoricsError("orbit point lies on the lifted boundary");
    }
    if (w != 1)
      throw CombinatoricsError("branched preimage does not enclose the orbit point (winding " +
                               std::to_string(w) + ")");
  } else {
    throw BranchPinchError("lifted boundary failed to close (gap " + fmt_g(std::min(d_same, d_neg)) +
                           ")");
  }
  if (signed_area(loop_polygon(ctx.out)) <= 0)
    throw BranchPinchError("lifted boundary lost its orientation");
  res.loop = std::move(ctx.out);
  return res;
}

Piece pullback_piece(const QuadraticMap& map, const Piece& parent, int iterates, Cx basepoint,
                     const PrecisionProfile& pp) {
  if (iterates < 0) throw ConfigError("pullback_piece: iterates must be >= 0");
  if (iterates == 0) {  // identity: zero pullback steps leave the piece as it is
    if (!parent.contains(basepoint))
      throw CombinatoricsError("basepoint orbit misses the parent piece after 0 steps");
    return parent;
  }

  std::vector<Cx> orbit(iterates + 1);
  orbit[0] = basepoint;
  for (int j = 1; j <= iterates; ++j) orbit[j] = map.forward(orbit[j - 1]);
  if (!parent.contains(orbit[iterates]))
    throw CombinatoricsError("basepoint orbit misses the parent piece after " +
                             std::to_string(iterates) + " steps");

  std::vector<BVertex> loop = parent.boundary;
  int degree = 1;
  for (int j = iterates - 1; j >= 0; --j) {
    LiftResult lr = lift_loop(map, loop, orbit[j], pp);
    loop = std::move(lr.loop);
    degree *= lr.degree;
    if (loop.size() > 20000)
      decimate_boundary(loop, polygon_diameter(loop_polygon(loop)) / (2 * pp.resample_divisor));
  }

  Piece piece;
  piece.boundary = std::move(loop);
  piece.equip_level = std::ldexp(parent.equip_level, -iterates);
  piece.depth = parent.depth + 1;
  piece.degree = degree;
  piece.return_steps = iterates;
  piece.label = "pull(" + parent.label + "," + std::to_string(iterates) + ")";
  piece.basepoint = basepoint;
  decimate_boundary(piece.boundary, piece.diameter() / pp.resample_divisor);
  if (!piece.contains(basepoint))
    throw CombinatoricsError("pulled-back piece does not contain its basepoint");
  verify_boundary(map, piece.boundary, pp);
  return piece;
}

int first_return(const QuadraticMap& map, const Piece& piece, int cap,
                 const PrecisionProfile& pp) {
  (void)pp;
  if (cap < 1) throw ConfigError("first_return: cap must be >= 1");
  Cx z = piece.basepoint;
  for (int m = 1; m <= cap; ++m) {
    z = map.forward(z);
    if (!(std::abs(z) < 1e100))
      throw NonRenormalizableError("orbit escaped before returning to the piece");
    if (piece.contains(z)) return m;
  }
  throw NonRenormalizableError("orbit does not return to the piece within " +
                               std::to_string(cap) + " iterates");
}

namespace {

uint64_t max_denominator(const Piece& p) {
  uint64_t m = 1;
  for (const BVertex& v : p.boundary) m = std::max(m, v.angle.den);
  return m;
}

// every lift step at most doubles an angle denominator, and the branched
// copy adds one more half-turn, so `steps` more pullback steps stay exact iff
bool angle_budget_ok(uint64_t maxden, int steps) {
  return steps + 1 < 64 && maxden <= (UINT64_MAX >> (steps + 1));
}

}  // namespace

Nest build_principal_nest(const QuadraticMap& map, int depth, double equip_level,
                          const PrecisionProfile& pp) {
  if (depth < 0) throw ConfigError("build_principal_nest: depth must be >= 0");

  Nest nest;
  nest.central.push_back(initial_puzzle(map, equip_level, pp));
  nest.x.push_back(Cx(0, 0));
  if (depth == 0) return nest;  // just the initial puzzle piece

  const int cap = 1000;
  bool sides_fit = true;
  for (int n = 1; n <= depth; ++n) {
    const Piece& parent = nest.central[n - 1];
    int r = first_return(map, parent, cap, pp);
    double new_level = std::ldexp(parent.equip_level, -r);
    if (new_level < pp.min_equip_level_factor * equip_level ||
        !angle_budget_ok(max_denominator(parent), r)) {
      nest.truncated = true;
      break;
    }

    Piece central = pullback_piece(map, parent, r, Cx(0, 0), pp);
    central.depth = n;
    central.label = "V" + std::to_string(n) + "_0";
    nest.central.push_back(std::move(central));
    nest.return_times.push_back(r);

    Cx xn = Cx(0, 0);
    for (int j = 0; j < r; ++j) xn = map.forward(xn);
    nest.x.push_back(xn);

    // l_n = r_{n-1} (with r_0 = 1): the side piece around x_n maps onto the
    // previous central piece in that many steps.  The tilde piece pulls the
    // *current* central piece back along the same branch; its denominators
    // run ahead of everything else, so at the deepest levels the side pieces
    // stop while the central chain continues (nest.side may be shorter than
    // nest.central - 1).  A central return (x_n inside the new central piece,
    // e.g. at a superstable parameter) has no off-critical side piece at all.
    int l = n >= 2 ? nest.return_times[n - 2] : 1;
    if (sides_fit && nest.central[n].contains(xn)) sides_fit = false;
    if (sides_fit && angle_budget_ok(max_denominator(nest.central[n - 1]), l) &&
        angle_budget_ok(max_denominator(nest.central[n]), l)) {
      Piece side = pullback_piece(map, nest.central[n - 1], l, xn, pp);
      side.depth = n;
      side.label = "V" + std::to_string(n) + "_1";
      nest.side.push_back(std::move(side));

      Piece tilde = pullback_piece(map, nest.central[n], l, xn, pp);
      tilde.depth = n;
      tilde.label = "Vt" + std::to_string(n) + "_1";
      nest.side_tilde.push_back(std::move(tilde));
    } else {
      sides_fit = false;
    }

    nest.depth = n;
  }
  if (nest.depth == 0)
    throw ConfigError("build_principal_nest: equip_level too small for even one level");
  return nest;
}

void check_fibonacci_combinatorics(const QuadraticMap& map, const Nest& nest,
                                   const PrecisionProfile& pp) {
  (void)map;
  if (nest.depth < 1) throw CombinatoricsError("nest has no levels to check");

  std::vector<uint64_t> u = fibonacci_numbers(nest.depth + 2);
  for (int n = 1; n <= nest.depth; ++n) {
    int r = nest.return_times[n - 1];
    if (static_cast<uint64_t>(r) != u[n + 1])
      throw CombinatoricsError("return time r_" + std::to_string(n) + " = " + std::to_string(r) +
                               " differs from the Fibonacci value " + std::to_string(u[n + 1]));
  }
  // Side pieces can stop a level or two before the central chain does (their
  // pullbacks burn through the exact-angle denominator budget faster), so all
  // side checks run only up to nest.side.size().
  if (nest.side.size() != nest.side_tilde.size())
    throw CombinatoricsError("side and tilde piece chains have different lengths");
  int nsides = static_cast<int>(nest.side.size());
  for (int n = 1; n <= nest.depth; ++n) {
    if (nest.central[n].degree != 2)
      throw CombinatoricsError("central piece V" + std::to_string(n) +
                               "_0 has degree " + std::to_string(nest.central[n].degree) +
                               ", expected exactly one branched pullback step");
    if (n > nsides) continue;
    if (nest.side[n - 1].degree != 1)
      throw CombinatoricsError("side piece V" + std::to_string(n) + "_1 is not univalent");
    if (nest.side_tilde[n - 1].degree != 1)
      throw CombinatoricsError("side piece Vt" + std::to_string(n) + "_1 is not univalent");
  }
  for (int n = 1; n <= nest.depth; ++n) {
    // the critical orbit leaves the central piece at time r_n...
    if (nest.central[n].contains(nest.x[n]))
      throw CombinatoricsError("x_" + std::to_string(n) + " lies in V" + std::to_string(n) +
                               "_0: return time is not minimal");
    // ...but sits in both side pieces
    if (n > nsides) continue;
    if (!nest.side[n - 1].contains(nest.x[n]) || !nest.side_tilde[n - 1].contains(nest.x[n]))
      throw CombinatoricsError("x_" + std::to_string(n) + " missing from its side piece");
  }
  // Containment chains.  Central pieces nest strictly from level 2 on, and
  // the tilde side piece sits strictly inside the previous central piece;
  // those are the nondegenerate annuli the scaling measurements rely on.
  // Side pieces, by contrast, legitimately touch their parent central piece
  // along shared rays and corners (V2_1 has a corner at -alpha, which is a
  // corner of V1_0), so for them we only require that no vertex pokes
  // outside by more than the decimated polygon's own approximation error.
  auto strictly_inside = [](const Piece& outer, const Piece& inner, const std::string& what) {
    std::vector<Cx> poly = outer.polygon();
    double guard = 1e-9 * std::max(1.0, polygon_diameter(poly));
    for (const BVertex& v : inner.boundary)
      if (!point_in_polygon(poly, v.z, guard))
        throw CombinatoricsError(what + " is not strictly inside its parent");
  };
  auto inside_or_touching = [&pp](const Piece& outer, const Piece& inner,
                                  const std::string& what) {
    std::vector<Cx> poly = outer.polygon();
    double slack = 2.0 * polygon_diameter(poly) / pp.resample_divisor;
    for (const BVertex& v : inner.boundary)
      if (!point_in_polygon(poly, v.z, 0.0) && distance_to_polyline(poly, v.z) > slack)
        throw CombinatoricsError(what + " leaves its parent piece");
  };
  // V1_0 shares the alpha corner and parts of the wake rays with V0_0, so the
  // strict chain only starts one level down.
  inside_or_touching(nest.central[0], nest.central[1], "V1_0");
  for (int n = 2; n <= nest.depth; ++n)
    strictly_inside(nest.central[n - 1], nest.central[n], "V" + std::to_string(n) + "_0");
  for (int n = 1; n <= nsides; ++n) {
    inside_or_touching(nest.central[n - 1], nest.side[n - 1], "V" + std::to_string(n) + "_1");
    inside_or_touching(nest.side[n - 1], nest.side_tilde[n - 1],
                       "Vt" + std::to_string(n) + "_1");
    strictly_inside(nest.central[n - 1], nest.side_tilde[n - 1],
                    "Vt" + std::to_string(n) + "_1");
  }
  if (!nest.central[1].contains(nest.central[0].basepoint))
    throw CombinatoricsError("V1_0 does not contain the critical point");
}

bool has_fibonacci_closest_returns(const QuadraticMap& map, int levels) {
  if (levels < 1) throw ConfigError("has_fibonacci_closest_returns: levels must be >= 1");
  std::vector<uint64_t> u = fibonacci_numbers(levels + 1);
  size_t steps = u[levels];
  std::vector<double> mag(steps + 1, 0.0);
  Cx z(0, 0);
  for (size_t i = 1; i <= steps; ++i) {
    z = map.forward(z);
    if (!(std::abs(z) < 1e100)) return false;  // escaped: no recurrence at all
    mag[i] = std::abs(z);
  }
  for (int n = 2; n <= levels; ++n) {
    size_t a = u[n - 1], b = u[n];
    if (!(mag[b] < mag[a])) return false;
    for (size_t i = a + 1; i < b; ++i)
      if (!(mag[i] > mag[a])) return false;
  }
  return true;
}

Cx RescaledReturnMap::operator()(Cx w) const {
  Cx z = w / scale_in;
  for (int j = 0; j < iterates; ++j) z = z * z + c;
  return scale_out * z;
}

// Magnitude of the real boundary corner of a central piece: the symmetric
// pair +-beta_n for n >= 1, the single wake-ray landing corner for V^0_0.
static double real_corner_magnitude(const Nest& nest, int level) {
  double best = -1;
  for (const BVertex& v : nest.central[level].boundary)
    if (v.kind == VertexKind::Corner &&
        std::abs(v.z.imag()) <= 1e-7 * std::max(1.0, std::abs(v.z)))
      best = std::max(best, std::abs(v.z.real()));
  if (best <= 0)
    throw CombinatoricsError("central piece has no real boundary corner");
  return best;
}

Cx nest_zero(const QuadraticMap& map, const Nest& nest, int level, const PrecisionProfile& pp) {
  (void)pp;
  if (level < 1 || level > nest.depth) throw ConfigError("nest_zero: level out of range");
  int r = nest.return_times[level - 1];
  double beta = real_corner_magnitude(nest, level);

  auto h = [&](double y) {
    Cx z(y, 0);
    for (int j = 0; j < r; ++j) z = map.forward(z);
    return z.real();
  };
  // exactly one zero of f^{r} on the negative real trace of the central piece
  const int scan = 512;
  double lo = -beta * (1 - 1e-7), hi = -beta * 1e-5;
  double prev_y = lo, prev_h = h(lo);
  double zlo = 0, zhi = 0;
  int crossings = 0;
  for (int i = 1; i <= scan; ++i) {
    double y = lo + (hi - lo) * i / scan;
    double hy = h(y);
    if ((prev_h < 0) != (hy < 0)) {
      ++crossings;
      zlo = prev_y;
      zhi = y;
    }
    prev_y = y;
    prev_h = hy;
  }
  if (crossings != 1)
    throw CombinatoricsError("expected exactly one zero of the return map on the negative real "
                             "trace, found " + std::to_string(crossings));
  double flo = h(zlo);
  for (int it = 0; it < 200 && zhi - zlo > 1e-16 * beta; ++it) {
    double mid = 0.5 * (zlo + zhi);
    double fm = h(mid);
    if ((fm < 0) == (flo < 0)) {
      zlo = mid;
      flo = fm;
    } else {
      zhi = mid;
    }
  }
  return Cx(0.5 * (zlo + zhi), 0);
}

// Sign of (f^r)''(0) = sign of 2 * prod_{j=1}^{r-1} 2 f^j(0).  The range
// rescaling carries this sign so the normalized return map always has a
// local minimum at the critical point, like w -> w^2 + k.
static double orientation_sign(const QuadraticMap& map, int r) {
  double s = 1;
  Cx z(0, 0);
  for (int j = 1; j < r; ++j) {
    z = map.forward(z);
    if (z.real() < 0) s = -s;
  }
  return s;
}

RescaledReturnMap rescaled_return_map(const QuadraticMap& map, const Nest& nest, int level,
                                      Normalization norm, const PrecisionProfile& pp) {
  if (level < 1 || level > nest.depth)
    throw ConfigError("rescaled_return_map: level out of range");
  RescaledReturnMap R;
  R.c = map.c;
  R.iterates = nest.return_times[level - 1];
  double orient = orientation_sign(map, R.iterates);

  // The real corner of V^level_0 maps under f^{r} to a real corner of
  // V^{level-1}_0, and the side it lands on must agree with the local-minimum
  // orientation: together these make the rescaled map fix (1+sqrt 5)/2, the
  // way w -> w^2 - 1 fixes its positive real Julia boundary point.
  double m_in = real_corner_magnitude(nest, level);
  double m_out = real_corner_magnitude(nest, level - 1);
  Cx img(m_in, 0);
  for (int j = 0; j < R.iterates; ++j) img = map.forward(img);
  if (std::abs(std::abs(img.real()) - m_out) > 1e-3 * m_out ||
      (img.real() < 0) != (orient < 0))
    throw CombinatoricsError("real corner of the central piece does not chain to the "
                             "previous level's corner with the expected orientation");

  if (norm == Normalization::BetaToGolden) {
    const double phi = (1 + std::sqrt(5.0)) / 2;
    R.scale_in = phi / m_in;
    R.scale_out = orient * phi / m_out;
  } else {
    if (map.c.real() >= 0)
      throw CombinatoricsError("PreimageToMinusOne needs c on the negative real axis");
    R.scale_in = -1.0 / nest_zero(map, nest, level, pp).real();
    // the level-0 "return" is f itself; its zero on the negative real trace
    // is -sqrt(-c)
    double prev = level >= 2 ? -nest_zero(map, nest, level - 1, pp).real()
                             : std::sqrt(-map.c.real());
    R.scale_out = orient / prev;
  }
  return R;
}

}  // namespace fibscale
