#include "fibscale/quaddyn.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace fibscale {

namespace {

bool finite(Cx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

// Böttcher inverse in the far zone: psi(w) = w - (c/2)/w - (c^2/8 + c/4)/w^3,
// accurate to O(|w|^-5) which is far below f64 noise at |w| >= e^14.
Cx bottcher_far_inverse(Cx c, Cx w) {
  return w - 0.5 * c / w - (c * c / 8.0 + c / 4.0) / (w * w * w);
}

// Solve f^k(x) = T by Newton from `seed`; returns nan-signal via thrown flag.
struct NewtonFail {};

Cx newton_to_target(const QuadraticMap& map, int k, Cx target, Cx seed,
                    const PrecisionProfile& pp) {
  Cx x = seed;
  Cx x_best = seed;
  double dx_best = std::numeric_limits<double>::infinity();
  int flat = 0;
  for (int it = 0; it < pp.newton_cap; ++it) {
    Cx z = x;
    Cx d = 1.0;
    for (int j = 0; j < k; ++j) {
      d *= 2.0 * z;
      z = map.forward(z);
      if (!finite(z) || std::abs(z) > 1e200) throw NewtonFail{};
    }
    if (std::abs(d) < 1e-290) throw NewtonFail{};
    Cx dx = (z - target) / d;
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
      // Steps stopped shrinking while already far below any root separation:
      // the iterate is pinned at the f64 noise floor (this happens on rays
      // landing at strongly expanding points, where the true point-to-landing
      // gap drops under one ulp before the scheduled potential does). Accept
      // the best iterate instead of wandering.
      return x_best;
    }
  }
  throw NewtonFail{};
}

// target point in the far zone encoding (potential g, angle theta): doubling
// until 2^k g lands in [far, 2 far)
struct FarTarget {
  int k = 0;
  Cx T;
};

FarTarget far_target(const QuadraticMap& map, const ExternalAngle& angle, double g,
                     const PrecisionProfile& pp) {
  if (!(g > 0) || g > 300.0) throw ConfigError("ray potential out of range");
  FarTarget ft;
  ExternalAngle a = angle;
  double u = g;
  while (u < pp.far_potential) {
    u = std::ldexp(g, ++ft.k);
    a = a.doubled();
  }
  double two_pi_a = 2.0 * M_PI * a.value();
  Cx w = std::exp(Cx(u, two_pi_a));
  ft.T = bottcher_far_inverse(map.c, w);
  return ft;
}

}  // namespace

double green_value(const QuadraticMap& map, Cx z, int max_iter, double escape_radius) {
  if (!finite(z) || !finite(map.c)) throw ConfigError("green_value: non-finite input");
  if (max_iter < 1 || escape_radius < 2.0 + std::abs(map.c))
    throw ConfigError("green_value: bad max_iter/escape_radius");
  for (int n = 0; n <= max_iter; ++n) {
    double m = std::abs(z);
    if (m > escape_radius) return std::ldexp(std::log(m), -n);
    z = map.forward(z);
  }
  return 0.0;
}

double green_value(const QuadraticMap& map, Cx z, const PrecisionProfile& pp) {
  return green_value(map, z, pp.max_iter, pp.escape_radius);
}

FixedPoints fixed_points(const QuadraticMap& map) {
  if (!finite(map.c)) throw ConfigError("fixed_points: non-finite c");
  Cx disc = 1.0 - 4.0 * map.c;
  Cx root = std::sqrt(disc);
  FixedPoints fp;
  fp.beta = 0.5 * (1.0 + root);
  fp.alpha = 1.0 - fp.beta;
  fp.degenerate = std::abs(disc) < 1e-14;
  return fp;
}

Cx ray_point(const QuadraticMap& map, const ExternalAngle& angle, double g, Cx seed,
             const PrecisionProfile& pp) {
  FarTarget ft = far_target(map, angle, g, pp);
  try {
    return newton_to_target(map, ft.k, ft.T, seed, pp);
  } catch (const NewtonFail&) {
    throw RayStallError("ray Newton stalled at potential " + std::to_string(g) +
                        " angle " + angle.str());
  }
}

Cx ray_point_from_far(const QuadraticMap& map, const ExternalAngle& angle, double g,
                      const PrecisionProfile& pp) {
  // direct far-zone evaluation needs no Newton
  double g0 = std::max(g, pp.far_potential);
  FarTarget entry = far_target(map, angle, g0, pp);
  Cx x = entry.T;
  if (g >= pp.far_potential) return ray_point(map, angle, g, x, pp);
  // walk down with the standard step; ray_advance subdivides on stall
  double step = std::pow(2.0, -1.0 / pp.steps_per_halving);
  double cur = g0;
  while (cur > g) {
    double next = std::max(cur * step, g);
    x = ray_advance(map, angle, cur, x, next, pp);
    cur = next;
  }
  return x;
}

Cx ray_advance(const QuadraticMap& map, const ExternalAngle& angle, double g_from,
               Cx x_from, double g_to, const PrecisionProfile& pp) {
  if (!(g_to < g_from)) {
    if (g_to == g_from) return x_from;
    throw ConfigError("ray_advance: potential must decrease");
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
      x = ray_point(map, angle, fr.to, x, pp);
      cur = fr.to;
    } catch (const RayStallError&) {
      if (fr.depth >= pp.stall_subdivision_cap) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", cur);
        throw RayStallError("ray stall at angle " + angle.str() +
                            ", deepest potential reached " + buf);
      }
      double mid = std::sqrt(fr.from * fr.to);  // geometric midpoint
      stack.push_back({mid, fr.to, fr.depth + 1});
      stack.push_back({fr.from, mid, fr.depth + 1});
    }
  }
  return x;
}

RayTrace trace_external_ray(const QuadraticMap& map, const ExternalAngle& angle,
                            double potential_start, double potential_end,
                            const PrecisionProfile& pp) {
  if (!(potential_start > potential_end) || !(potential_end > 0))
    throw ConfigError("trace_external_ray: need potential_start > potential_end > 0");
  RayTrace tr;
  tr.angle = angle;
  Cx x = ray_point_from_far(map, angle, potential_start, pp);
  tr.points.push_back(x);
  tr.potentials.push_back(potential_start);
  double step = std::pow(2.0, -1.0 / pp.steps_per_halving);
  double cur = potential_start;
  int tiny_steps = 0;
  while (cur > potential_end) {
    double next = cur * step;
    if (next < potential_end * 1.0000000001) next = potential_end;
    Cx nx = ray_advance(map, angle, cur, x, next, pp);
    double moved = std::abs(nx - x);
    tr.max_step = std::max(tr.max_step, moved);
    x = nx;
    cur = next;
    tr.points.push_back(x);
    tr.potentials.push_back(cur);
    // Deep in the landing regime the representable point-to-landing gap can
    // run out before the scheduled potential does; once consecutive steps stop
    // moving the point, deeper targets only risk overflowing the Newton orbit
    // without adding information.
    if (cur < 1e-7 && moved <= 1e-12 * std::max(1.0, std::abs(x))) {
      if (++tiny_steps >= 2) break;
    } else {
      tiny_steps = 0;
    }
  }
  if (potential_end <= 1e-7) tr.landing_estimate = x;
  return tr;
}

ExternalAngle equipotential_sample_angle(const ExternalAngle& angle_from,
                                         const ExternalAngle& angle_to, int samples, int i) {
  if (samples < 2) throw ConfigError("equipotential_sample_angle: samples must be >= 2");
  bool full_turn = angle_from == angle_to;
  // span = (angle_to - angle_from) mod 1 as an exact rational
  uint64_t sn, sd;
  if (full_turn) {
    sn = 1;
    sd = 1;
  } else {
    // from.num/from.den .. to.num/to.den
    __uint128_t den = static_cast<__uint128_t>(angle_from.den) * angle_to.den;
    __int128_t num = static_cast<__int128_t>(angle_to.num) * angle_from.den -
                     static_cast<__int128_t>(angle_from.num) * angle_to.den;
    if (num < 0) num += static_cast<__int128_t>(den);
    if (den > UINT64_MAX || num > static_cast<__int128_t>(UINT64_MAX))
      throw ConfigError("equipotential_sample_angle: angle denominators too large");
    sn = static_cast<uint64_t>(num);
    sd = static_cast<uint64_t>(den);
  }
  int divisions = full_turn ? samples : samples - 1;

  // t_i = angle_from + (i/divisions) * span, exact
  __uint128_t num = static_cast<__uint128_t>(angle_from.num) * sd * divisions +
                    static_cast<__uint128_t>(i) * sn * angle_from.den;
  __uint128_t den = static_cast<__uint128_t>(angle_from.den) * sd * divisions;
  __uint128_t g = num;  // gcd reduce in 128 bits
  __uint128_t b = den;
  while (b) {
    __uint128_t t = g % b;
    g = b;
    b = t;
  }
  num /= g;
  den /= g;
  if (den > UINT64_MAX) throw ConfigError("equipotential_sample_angle: sample angle overflow");
  return ExternalAngle(static_cast<uint64_t>(num % den), static_cast<uint64_t>(den));
}

std::vector<Cx> trace_equipotential(const QuadraticMap& map, double potential,
                                    const ExternalAngle& angle_from,
                                    const ExternalAngle& angle_to, int samples,
                                    const PrecisionProfile& pp) {
  if (samples < 2) throw ConfigError("trace_equipotential: samples must be >= 2");
  if (!(potential > 0)) throw ConfigError("trace_equipotential: potential must be > 0");
  double crit_level = green_value(map, Cx(0, 0), pp);
  if (crit_level > 0 && potential <= crit_level * (1 + 1e-9))
    throw FigureEightError("equipotential at level " + std::to_string(potential) +
                           " is at/below the critical level " + std::to_string(crit_level));

  std::vector<Cx> out;
  out.reserve(samples);
  for (int i = 0; i < samples; ++i) {
    ExternalAngle t = equipotential_sample_angle(angle_from, angle_to, samples, i);
    // Each sample descends its own external ray from the far zone. Seeding
    // Newton from the neighbouring sample is not an option: neighbours at the
    // same potential are near-exact roots of the same far-target equation
    // (angles collide after doubling), so Newton would silently return the
    // wrong preimage branch.
    out.push_back(ray_point_from_far(map, t, potential, pp));
  }
  return out;
}

LandingRefinement refine_periodic(const QuadraticMap& map, int preperiod, int period,
                                  Cx seed, const PrecisionProfile& pp) {
  const int l = preperiod, p = period;
  auto residual_at = [&](Cx x) {
    Cx zl = x;
    for (int j = 0; j < l; ++j) zl = map.forward(zl);
    Cx z = zl;
    for (int j = 0; j < p; ++j) z = map.forward(z);
    return finite(z) ? std::abs(z - zl) : std::numeric_limits<double>::infinity();
  };
  LandingRefinement res;
  res.z = seed;
  res.residual = residual_at(seed);
  Cx x = seed;
  for (int it = 0; it < pp.landing_newton_cap; ++it) {
    // F(x) = f^(l+p)(x) - f^l(x), forward-mode derivative; the j == l capture
    // also covers l = 0 (z = x, d = 1 before the first step)
    Cx z = x, d = 1.0, zl = x, dl = 1.0;
    for (int j = 0; j < l + p; ++j) {
      if (j == l) {
        zl = z;
        dl = d;
      }
      d *= 2.0 * z;
      z = map.forward(z);
      if (!finite(z)) return res;
    }
    Cx F = z - zl;
    Cx dF = d - dl;
    if (std::abs(dF) < 1e-290) return res;
    Cx dx = F / dF;
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

LandingRefinement refine_landing(const QuadraticMap& map, const RayTrace& trace,
                                 const PrecisionProfile& pp) {
  Cx seed = trace.landing_estimate ? *trace.landing_estimate : trace.points.back();
  return refine_periodic(map, trace.angle.preperiod(), trace.angle.period(), seed, pp);
}

}  // namespace fibscale
