#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <string>
#include <vector>

#include "doctest.h"
#include "fibscale/geometry.hpp"
#include "fibscale/puzzle.hpp"
#include "fibscale/quaddyn.hpp"

using namespace fibscale;

static const PrecisionProfile kPP;

// Real parameter whose critical orbit follows the Fibonacci closest-return
// pattern as deep as double precision can resolve.
static const double kCfib = -1.8705286321646446;

static QuadraticMap fib_map() { return QuadraticMap{Cx(kCfib, 0)}; }

static const Nest& fib_nest4() {
  static const Nest nest = build_principal_nest(fib_map(), 4, 1.0, kPP);
  return nest;
}

static Cx iterate(const QuadraticMap& m, Cx z, int steps) {
  for (int j = 0; j < steps; ++j) z = m.forward(z);
  return z;
}

static Piece circle_piece(Cx center, double radius, double potential_value, int nverts) {
  Piece p;
  p.equip_level = potential_value;
  p.depth = 0;
  p.degree = 1;
  p.return_steps = 0;
  p.label = "disc";
  p.basepoint = center;
  const double tau = 6.283185307179586;
  for (int j = 0; j < nverts; ++j) {
    double t = tau * j / nverts;
    BVertex v;
    v.z = center + radius * Cx(std::cos(t), std::sin(t));
    v.potential = potential_value;
    v.kind = VertexKind::Equip;
    v.exact = true;
    v.angle = ExternalAngle(static_cast<uint64_t>(j), static_cast<uint64_t>(nverts));
    p.boundary.push_back(v);
  }
  return p;
}

// Corners of a piece together with the external angles of the adjacent rays.
struct CornerFan {
  Cx z;
  std::vector<ExternalAngle> rays;
};

static std::vector<CornerFan> corner_fans(const Piece& p) {
  std::vector<Arc> arcs = extract_arcs(p);
  std::vector<CornerFan> out;
  int na = static_cast<int>(arcs.size());
  for (int i = 0; i < na; ++i) {
    if (arcs[i].kind != VertexKind::Corner) continue;
    CornerFan f;
    f.z = p.boundary[arcs[i].first].z;
    const Arc& prev = arcs[(i + na - 1) % na];
    const Arc& next = arcs[(i + 1) % na];
    if (prev.kind == VertexKind::Ray) f.rays.push_back(prev.angle_to);
    if (next.kind == VertexKind::Ray) f.rays.push_back(next.angle_from);
    out.push_back(f);
  }
  return out;
}

static const CornerFan* find_corner(const std::vector<CornerFan>& fans, Cx z,
                                    double tol = 1e-6) {
  for (const CornerFan& f : fans)
    if (std::abs(f.z - z) <= tol) return &f;
  return nullptr;
}

static bool fan_has_ray(const CornerFan& f, uint64_t num, uint64_t den) {
  for (const ExternalAngle& a : f.rays)
    if (a == ExternalAngle(num, den)) return true;
  return false;
}

// Magnitude of the real boundary corner (the +-beta_n pair of a central piece).
static double real_corner(const Piece& p) {
  double best = -1;
  for (const BVertex& v : p.boundary)
    if (v.kind == VertexKind::Corner && std::abs(v.z.imag()) <= 1e-7)
      best = std::max(best, std::abs(v.z.real()));
  return best;
}

static double max_re_vertex(const Piece& p) {
  double hi = -1e300;
  for (const BVertex& v : p.boundary) hi = std::max(hi, v.z.real());
  return hi;
}

static double min_re_vertex(const Piece& p) {
  double lo = 1e300;
  for (const BVertex& v : p.boundary) lo = std::min(lo, v.z.real());
  return lo;
}

TEST_CASE("fibonacci numbers") {
  std::vector<uint64_t> u = fibonacci_numbers(10);
  CHECK(u == std::vector<uint64_t>{1, 1, 2, 3, 5, 8, 13, 21, 34, 55});
  CHECK(fibonacci_numbers(0).empty());
  CHECK_THROWS_AS(fibonacci_numbers(-1), ConfigError);
}

TEST_CASE("branched lift of a round equipotential at c=0") {
  QuadraticMap m{Cx(0, 0)};
  // For c=0 the boundary |z|=4 is the equipotential log 4; its preimage is
  // |z|=2 traversed twice, and angles are exactly halved.
  Piece big = circle_piece(Cx(0, 0), 4.0, std::log(4.0), 128);
  LiftResult lr = lift_loop(m, big.boundary, Cx(0, 0), kPP);
  CHECK(lr.degree == 2);
  CHECK(lr.loop.size() == 256);
  for (const BVertex& v : lr.loop) {
    CHECK(std::abs(v.z) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(v.potential == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    // the angle label must match the actual position on the circle
    const double tau = 6.283185307179586;
    Cx expected = 2.0 * Cx(std::cos(tau * v.angle.value()), std::sin(tau * v.angle.value()));
    CHECK(std::abs(v.z - expected) <= 1e-9);
  }
  std::vector<Cx> poly;
  for (const BVertex& v : lr.loop) poly.push_back(v.z);
  CHECK(signed_area(poly) > 0);
}

TEST_CASE("univalent lift picks the component around the hint") {
  QuadraticMap m{Cx(0, 0)};
  // a loop around 3 misses the critical value 0, so each preimage component
  // (around +-sqrt 3) is univalent
  Piece ring = circle_piece(Cx(3, 0), 0.5, std::log(3.0), 64);
  LiftResult lr = lift_loop(m, ring.boundary, Cx(std::sqrt(3.0), 0), kPP);
  CHECK(lr.degree == 1);
  for (const BVertex& v : lr.loop) {
    CHECK(v.z.real() > 0);  // stayed on the hinted branch
    CHECK(std::abs(v.z * v.z - Cx(3, 0)) == doctest::Approx(0.5).epsilon(1e-9));
  }
  // the critical point is enclosed by neither component
  CHECK_THROWS_AS(lift_loop(m, ring.boundary, Cx(0, 0), kPP), CombinatoricsError);
}

TEST_CASE("lift rejects a boundary through the critical value") {
  QuadraticMap m{Cx(-1, 0)};
  Piece bad = circle_piece(Cx(-0.9, 0), 0.1, 0.5, 64);  // passes through -1
  CHECK_THROWS_AS(lift_loop(m, bad.boundary, Cx(0, 0), kPP), BranchPinchError);
}

TEST_CASE("lift rejects an under-sampled boundary") {
  QuadraticMap m{Cx(0, 0)};
  Piece tiny = circle_piece(Cx(0, 0), 4.0, std::log(4.0), 6);
  CHECK_THROWS_AS(lift_loop(m, tiny.boundary, Cx(0, 0), kPP), ConfigError);
}

TEST_CASE("pullback of a synthetic disc at c=0") {
  QuadraticMap m{Cx(0, 0)};
  Piece disc = circle_piece(Cx(0, 0), 2.0, std::log(2.0), 64);
  Piece half = pullback_piece(m, disc, 1, Cx(0, 0), kPP);
  CHECK(half.equip_level == std::ldexp(std::log(2.0), -1));  // exactly halved
  CHECK(half.degree == 2);
  CHECK(half.depth == disc.depth + 1);
  CHECK(half.return_steps == 1);
  CHECK(half.contains(Cx(0, 0)));
  for (const BVertex& v : half.boundary)
    CHECK(std::abs(v.z) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("pullback with zero iterates is the identity") {
  QuadraticMap m = fib_map();
  Piece v00 = initial_puzzle(m, 1.0, kPP);
  Piece same = pullback_piece(m, v00, 0, Cx(0, 0), kPP);
  CHECK(same.boundary.size() == v00.boundary.size());
  CHECK(same.equip_level == v00.equip_level);
  CHECK(same.depth == v00.depth);
  CHECK(same.label == v00.label);
  for (size_t i = 0; i < same.boundary.size(); ++i)
    CHECK(same.boundary[i].z == v00.boundary[i].z);
  CHECK_THROWS_AS(pullback_piece(m, v00, 0, Cx(5, 0), kPP), CombinatoricsError);
  CHECK_THROWS_AS(pullback_piece(m, v00, -1, Cx(0, 0), kPP), ConfigError);
}

TEST_CASE("pullback needs the basepoint orbit inside the parent") {
  QuadraticMap m{Cx(0, 0)};
  Piece ring = circle_piece(Cx(3, 0), 0.5, std::log(3.0), 64);
  // f(0) = 0 is nowhere near the disc around 3
  CHECK_THROWS_AS(pullback_piece(m, ring, 1, Cx(0, 0), kPP), CombinatoricsError);
}

TEST_CASE("initial puzzle piece at the Fibonacci parameter") {
  QuadraticMap m = fib_map();
  Piece v00 = initial_puzzle(m, 1.0, kPP);
  CHECK(v00.depth == 0);
  CHECK(v00.degree == 1);
  CHECK(v00.equip_level == 1.0);
  CHECK(v00.label == "V0_0");
  CHECK(v00.boundary.size() >= 16);
  CHECK(signed_area(v00.polygon()) > 0);

  // single corner at the dividing fixed point, rays 1/3 and 2/3 on both sides
  std::vector<CornerFan> fans = corner_fans(v00);
  REQUIRE(fans.size() == 1);
  CHECK(fans[0].z.real() == doctest::Approx(-0.956203500).epsilon(1e-6));
  CHECK(std::abs(fans[0].z.imag()) <= 1e-9);
  CHECK(fan_has_ray(fans[0], 1, 3));
  CHECK(fan_has_ray(fans[0], 2, 3));

  // the equipotential arc reaches further left than the corner (it bulges
  // around the wake) and crosses the positive real axis near 3.06
  CHECK(min_re_vertex(v00) == doctest::Approx(-1.529594152).epsilon(1e-4));
  CHECK(max_re_vertex(v00) == doctest::Approx(3.063670126).epsilon(1e-4));
  for (const BVertex& v : v00.boundary)
    if (v.z.real() == max_re_vertex(v00))
      CHECK(green_value(m, v.z, kPP) == doctest::Approx(1.0).epsilon(1e-6));

  double beta = (1 + std::sqrt(1.0 - 4 * kCfib)) / 2;
  CHECK(v00.contains(Cx(0, 0)));
  CHECK(v00.contains(Cx(beta, 0)));
  CHECK(v00.contains(Cx(1, 0)));
  // the critical value lies beyond alpha, in the complementary piece
  CHECK_FALSE(v00.contains(m.c));
  CHECK_FALSE(v00.contains(Cx(0, 3)));
}

TEST_CASE("the wake rays cut exactly two depth-0 pieces") {
  QuadraticMap m = fib_map();
  std::vector<Piece> pieces = initial_puzzle_pieces(m, 1.0, kPP);
  REQUIRE(pieces.size() == 2);
  CHECK(pieces[0].label == "V0_0");
  CHECK(pieces[1].label == "V0_1");
  CHECK(pieces[0].contains(Cx(0, 0)));
  CHECK_FALSE(pieces[0].contains(m.c));
  CHECK(pieces[1].contains(m.c));
  CHECK_FALSE(pieces[1].contains(Cx(0, 0)));
  CHECK(signed_area(pieces[1].polygon()) > 0);
  // complementary piece spans from the level-1 crossing on the negative real
  // axis in to the shared corner at alpha
  CHECK(min_re_vertex(pieces[1]) == doctest::Approx(-3.063670126).epsilon(1e-4));
  CHECK(max_re_vertex(pieces[1]) == doctest::Approx(-0.956203500).epsilon(1e-6));
}

TEST_CASE("initial puzzle rejects parameters outside the half wake") {
  CHECK_THROWS_AS(initial_puzzle(QuadraticMap{Cx(0, 0)}, 1.0, kPP), CombinatoricsError);
  CHECK_THROWS_AS(initial_puzzle(QuadraticMap{Cx(0.3, 0)}, 1.0, kPP), CombinatoricsError);
  CHECK_THROWS_AS(initial_puzzle(fib_map(), 0.0, kPP), ConfigError);
  CHECK_THROWS_AS(initial_puzzle(fib_map(), -1.0, kPP), ConfigError);
}

TEST_CASE("first return times of the central pieces") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  CHECK(first_return(m, nest.central[0], 1000, kPP) == 2);
  CHECK(first_return(m, nest.central[1], 1000, kPP) == 3);
  CHECK(first_return(m, nest.central[2], 1000, kPP) == 5);
  CHECK(first_return(m, nest.central[3], 1000, kPP) == 8);
  CHECK_THROWS_AS(first_return(m, nest.central[0], 0, kPP), ConfigError);
  CHECK_THROWS_AS(first_return(m, nest.central[0], 1, kPP), NonRenormalizableError);
  CHECK_THROWS_AS(first_return(m, nest.central[3], 7, kPP), NonRenormalizableError);
}

TEST_CASE("first return reports an escaping orbit") {
  QuadraticMap m{Cx(3, 0)};
  Piece disc = circle_piece(Cx(0, 0), 2.0, 1.0, 64);
  CHECK_THROWS_AS(first_return(m, disc, 100, kPP), NonRenormalizableError);
}

TEST_CASE("principal nest: structure at depth 4") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  CHECK(nest.depth == 4);
  CHECK_FALSE(nest.truncated);
  REQUIRE(nest.central.size() == 5);
  REQUIRE(nest.side.size() == 4);
  REQUIRE(nest.side_tilde.size() == 4);
  CHECK(nest.return_times == std::vector<int>{2, 3, 5, 8});
  CHECK_NOTHROW(check_fibonacci_combinatorics(m, nest, kPP));

  // return points x_n = f^{r_n}(0)
  REQUIRE(nest.x.size() == 5);
  CHECK(nest.x[1].real() == doctest::Approx(1.628348732).epsilon(1e-8));
  CHECK(nest.x[2].real() == doctest::Approx(0.780990959).epsilon(1e-8));
  CHECK(nest.x[3].real() == doctest::Approx(-0.281462275).epsilon(1e-8));
  CHECK(nest.x[4].real() == doctest::Approx(-0.079603909).epsilon(1e-8));

  // equipotential levels halve once per iterate: level_n = E / 2^(r_1+...+r_n)
  int halvings = 0;
  for (int n = 1; n <= 4; ++n) {
    halvings += nest.return_times[n - 1];
    CHECK(nest.central[n].equip_level == std::ldexp(1.0, -halvings));
    CHECK(nest.central[n].degree == 2);
    CHECK(nest.central[n].return_steps == nest.return_times[n - 1]);
    CHECK(signed_area(nest.central[n].polygon()) > 0);
  }
  CHECK(halvings == 18);

  // x_n lives in the annulus between consecutive central pieces and in both
  // side pieces
  for (int n = 1; n <= 4; ++n) {
    CHECK(nest.central[n - 1].contains(nest.x[n]));
    CHECK_FALSE(nest.central[n].contains(nest.x[n]));
    CHECK(nest.side[n - 1].contains(nest.x[n]));
    CHECK(nest.side_tilde[n - 1].contains(nest.x[n]));
    CHECK(nest.side[n - 1].degree == 1);
    CHECK(nest.side_tilde[n - 1].degree == 1);
  }

  // Fibonacci recursion of the return times, and the same-orbit composition:
  // applying r_{n-1} then r_n iterates equals applying r_{n+1}.
  CHECK(nest.return_times[2] == nest.return_times[0] + nest.return_times[1]);
  CHECK(nest.return_times[3] == nest.return_times[1] + nest.return_times[2]);
  Cx probe(0.05, 0.02);
  Cx via = iterate(m, iterate(m, probe, nest.return_times[2]), nest.return_times[1]);
  Cx direct = iterate(m, probe, nest.return_times[3]);
  CHECK(std::abs(via - direct) <= 1e-10 * std::max(1.0, std::abs(direct)));
}

// Exact vertices are true preimages of parent boundary points, so their
// forward images land on the parent polyline to full precision.  Vertices
// inserted by chord subdivision sit on chords of intermediate lifts, so after
// several steps their images can drift off the parent polyline by up to the
// decimation slack (diameter / resample_divisor).
static void check_boundary_maps_onto(const QuadraticMap& m, const Piece& child, int steps,
                                     const Piece& parent) {
  std::vector<Cx> poly = parent.polygon();
  double tight = 1e-7 * std::max(1.0, polygon_diameter(poly));
  double slack = 2.0 * polygon_diameter(poly) / kPP.resample_divisor;
  for (const BVertex& v : child.boundary) {
    Cx w = iterate(m, v.z, steps);
    CHECK(distance_to_polyline(poly, w) <= (v.exact ? tight : slack));
  }
}

TEST_CASE("principal nest: each central boundary maps onto its parent's") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  for (int n = 1; n <= 4; ++n)
    check_boundary_maps_onto(m, nest.central[n], nest.return_times[n - 1],
                             nest.central[n - 1]);
}

TEST_CASE("side and tilde boundaries map onto the pieces they were pulled from") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  for (int n = 1; n <= 4; ++n) {
    int l = n >= 2 ? nest.return_times[n - 2] : 1;
    check_boundary_maps_onto(m, nest.side[n - 1], l, nest.central[n - 1]);
    check_boundary_maps_onto(m, nest.side_tilde[n - 1], l, nest.central[n]);
  }
}

TEST_CASE("central pieces: frozen corners and ray angles") {
  const Nest& nest = fib_nest4();

  SUBCASE("V1_0") {
    const Piece& p = nest.central[1];
    CHECK(p.equip_level == 0.25);
    std::vector<CornerFan> fans = corner_fans(p);
    CHECK(fans.size() == 2);
    const CornerFan* plus = find_corner(fans, Cx(0.956203500, 0));
    const CornerFan* minus = find_corner(fans, Cx(-0.956203500, 0));
    REQUIRE(plus != nullptr);
    REQUIRE(minus != nullptr);
    CHECK(fan_has_ray(*plus, 1, 6));
    CHECK(fan_has_ray(*plus, 5, 6));
    CHECK(fan_has_ray(*minus, 1, 3));
    CHECK(fan_has_ray(*minus, 2, 3));
    // the equipotential lobes bulge past the corner, but on the real axis the
    // piece ends at the corner itself
    CHECK(max_re_vertex(p) == doctest::Approx(0.994777991).epsilon(1e-4));
    CHECK(p.contains(Cx(0.95, 0)));
    CHECK_FALSE(p.contains(Cx(0.97, 0)));
    CHECK(p.contains(Cx(0, 0)));
  }

  SUBCASE("V2_0") {
    const Piece& p = nest.central[2];
    CHECK(p.equip_level == std::ldexp(1.0, -5));
    std::vector<CornerFan> fans = corner_fans(p);
    CHECK(fans.size() == 4);
    const CornerFan* plus = find_corner(fans, Cx(0.435017013, 0));
    const CornerFan* minus = find_corner(fans, Cx(-0.435017013, 0));
    const CornerFan* top = find_corner(fans, Cx(0, 0.118734910));
    const CornerFan* bot = find_corner(fans, Cx(0, -0.118734910));
    REQUIRE(plus != nullptr);
    REQUIRE(minus != nullptr);
    REQUIRE(top != nullptr);
    REQUIRE(bot != nullptr);
    CHECK(fan_has_ray(*plus, 5, 24));
    CHECK(fan_has_ray(*plus, 19, 24));
    CHECK(fan_has_ray(*minus, 7, 24));
    CHECK(fan_has_ray(*minus, 17, 24));
    CHECK(fan_has_ray(*top, 11, 48));
    CHECK(fan_has_ray(*top, 13, 48));
    CHECK(fan_has_ray(*bot, 35, 48));
    CHECK(fan_has_ray(*bot, 37, 48));
  }

  SUBCASE("V3_0 and V4_0") {
    const Piece& p3 = nest.central[3];
    CHECK(p3.equip_level == std::ldexp(1.0, -10));
    std::vector<CornerFan> fans = corner_fans(p3);
    CHECK(fans.size() == 8);
    CHECK(find_corner(fans, Cx(0.125481593, 0)) != nullptr);
    CHECK(find_corner(fans, Cx(-0.125481593, 0)) != nullptr);
    CHECK(find_corner(fans, Cx(0, 0.056457074)) != nullptr);
    CHECK(find_corner(fans, Cx(0, -0.056457074)) != nullptr);
    CHECK(find_corner(fans, Cx(0.078664993, 0.016226630)) != nullptr);
    CHECK(find_corner(fans, Cx(-0.078664993, -0.016226630)) != nullptr);

    const Piece& p4 = nest.central[4];
    CHECK(p4.equip_level == std::ldexp(1.0, -18));
    CHECK(corner_fans(p4).size() == 16);
    CHECK(real_corner(p4) == doctest::Approx(0.028723908).epsilon(1e-6));
  }
}

TEST_CASE("side pieces: frozen corners and ray angles") {
  const Nest& nest = fib_nest4();

  SUBCASE("V1_1 hangs off the alpha-conjugate corner") {
    const Piece& p = nest.side[0];
    CHECK(p.equip_level == 0.5);
    CHECK(p.return_steps == 1);
    std::vector<CornerFan> fans = corner_fans(p);
    REQUIRE(fans.size() == 1);
    CHECK(fans[0].z.real() == doctest::Approx(0.956203500).epsilon(1e-6));
    CHECK(fan_has_ray(fans[0], 1, 6));
    CHECK(fan_has_ray(fans[0], 5, 6));
    CHECK(min_re_vertex(p) == doctest::Approx(0.956203500).epsilon(1e-6));
    CHECK(max_re_vertex(p) == doctest::Approx(2.221306719).epsilon(1e-4));
    double beta = (1 + std::sqrt(1.0 - 4 * kCfib)) / 2;
    CHECK(p.contains(Cx(beta, 0)));
    CHECK(p.contains(nest.x[1]));
  }

  SUBCASE("Vt1_1 is pinched between two corners") {
    const Piece& p = nest.side_tilde[0];
    CHECK(p.equip_level == 0.125);
    std::vector<CornerFan> fans = corner_fans(p);
    CHECK(fans.size() == 2);
    const CornerFan* outer = find_corner(fans, Cx(1.681288831, 0));
    const CornerFan* inner = find_corner(fans, Cx(0.956203500, 0));
    REQUIRE(outer != nullptr);
    REQUIRE(inner != nullptr);
    CHECK(fan_has_ray(*outer, 11, 12));
    CHECK(fan_has_ray(*outer, 1, 12));
    CHECK(fan_has_ray(*inner, 1, 6));
    CHECK(fan_has_ray(*inner, 5, 6));
  }

  SUBCASE("V2_1 straddles the annulus next to V2_0") {
    const Piece& p = nest.side[1];
    CHECK(p.equip_level == std::ldexp(1.0, -4));
    CHECK(p.return_steps == 2);
    std::vector<CornerFan> fans = corner_fans(p);
    CHECK(fans.size() == 2);
    const CornerFan* outer = find_corner(fans, Cx(0.956203500, 0));
    const CornerFan* inner = find_corner(fans, Cx(0.435017013, 0));
    REQUIRE(outer != nullptr);
    REQUIRE(inner != nullptr);
    CHECK(fan_has_ray(*outer, 1, 6));
    CHECK(fan_has_ray(*outer, 5, 6));
    CHECK(fan_has_ray(*inner, 5, 24));
    CHECK(fan_has_ray(*inner, 19, 24));
    CHECK(p.contains(nest.x[2]));
  }
}

TEST_CASE("general pullbacks off the critical orbit") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();

  // two steps back from V1_0 along the orbit of the critical value
  Piece w2 = pullback_piece(m, nest.central[1], 2, m.c, kPP);
  CHECK(w2.degree == 1);
  CHECK(w2.equip_level == std::ldexp(1.0, -4));
  CHECK(w2.contains(m.c));
  std::vector<CornerFan> fans = corner_fans(w2);
  CHECK(fans.size() == 2);
  const CornerFan* a = find_corner(fans, Cx(-1.884626611, 0));
  const CornerFan* b = find_corner(fans, Cx(-1.681288831, 0));
  REQUIRE(a != nullptr);
  REQUIRE(b != nullptr);
  CHECK(fan_has_ray(*a, 11, 24));
  CHECK(fan_has_ray(*a, 13, 24));
  CHECK(fan_has_ray(*b, 7, 12));
  CHECK(fan_has_ray(*b, 5, 12));

  // two steps back from the side piece V1_1 around the critical point:
  // branched, symmetric corners
  Piece u2 = pullback_piece(m, nest.side[0], 2, Cx(0, 0), kPP);
  CHECK(u2.degree == 2);
  CHECK(u2.equip_level == 0.125);
  CHECK(u2.contains(Cx(0, 0)));
  std::vector<CornerFan> ufans = corner_fans(u2);
  CHECK(find_corner(ufans, Cx(0.435017013, 0)) != nullptr);
  CHECK(find_corner(ufans, Cx(-0.435017013, 0)) != nullptr);
}

TEST_CASE("nest depth 0 is just the initial puzzle") {
  QuadraticMap m = fib_map();
  Nest nest = build_principal_nest(m, 0, 1.0, kPP);
  CHECK(nest.depth == 0);
  CHECK_FALSE(nest.truncated);
  CHECK(nest.central.size() == 1);
  CHECK(nest.side.empty());
  CHECK(nest.return_times.empty());
  CHECK_THROWS_AS(build_principal_nest(m, -1, 1.0, kPP), ConfigError);
}

TEST_CASE("nest truncates when exact angle denominators run out") {
  QuadraticMap m = fib_map();
  Nest nest = build_principal_nest(m, 7, 1.0, kPP);
  CHECK(nest.truncated);
  CHECK(nest.depth == 6);
  CHECK(nest.central.size() == 7);
  // the tilde pullback at level 6 would need 65 angle halvings, so the side
  // chains stop one level before the central one
  CHECK(nest.side.size() == 5);
  CHECK(nest.side_tilde.size() == 5);
  CHECK(nest.return_times == std::vector<int>{2, 3, 5, 8, 13, 21});
  CHECK(nest.central[6].equip_level == std::ldexp(1.0, -52));
  CHECK_NOTHROW(check_fibonacci_combinatorics(m, nest, kPP));
}

TEST_CASE("non-Fibonacci parameters are detected") {
  SUBCASE("basilica: period-2 returns") {
    QuadraticMap m{Cx(-1, 0)};
    Nest nest = build_principal_nest(m, 2, 1.0, kPP);
    CHECK(nest.return_times == std::vector<int>{2, 2});
    CHECK(nest.side.empty());  // the first return is central: no side piece
    CHECK_THROWS_AS(check_fibonacci_combinatorics(m, nest, kPP), CombinatoricsError);
  }

  SUBCASE("superstable period 3: returns 2, 3 but the orbit closes up") {
    QuadraticMap m{Cx(-1.7548776662466929, 0)};
    Nest nest = build_principal_nest(m, 2, 1.0, kPP);
    CHECK(nest.return_times == std::vector<int>{2, 3});
    // g_2(0) = f^{r_2}(0) = 0 by construction of the parameter
    CHECK(std::abs(iterate(m, Cx(0, 0), nest.return_times[1])) <= 1e-10);
    // the second return lands back in the new central piece, so only the
    // level-1 side piece exists and the minimality check refuses the nest
    CHECK(nest.side.size() == 1);
    CHECK_THROWS_AS(check_fibonacci_combinatorics(m, nest, kPP), CombinatoricsError);
  }
}

TEST_CASE("closest-return pattern on the real slice") {
  CHECK(has_fibonacci_closest_returns(fib_map(), 10));
  CHECK(has_fibonacci_closest_returns(fib_map(), 1));
  // the Chebyshev orbit 0 -> -2 -> 2 -> 2 never comes back closer
  CHECK_FALSE(has_fibonacci_closest_returns(QuadraticMap{Cx(-2, 0)}, 3));
  // escaping orbit
  CHECK_FALSE(has_fibonacci_closest_returns(QuadraticMap{Cx(0.3, 0)}, 5));
  // superstable period 3 follows the pattern for three levels, then closes up
  QuadraticMap c2{Cx(-1.7548776662466929, 0)};
  CHECK(has_fibonacci_closest_returns(c2, 3));
  CHECK_FALSE(has_fibonacci_closest_returns(c2, 4));
  CHECK_THROWS_AS(has_fibonacci_closest_returns(fib_map(), 0), ConfigError);
}

TEST_CASE("zero of the return map on the negative real trace") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  const double expected[] = {-0.7091233501, -0.2665114063, -0.0771281423, -0.0176572969};
  for (int n = 1; n <= 4; ++n) {
    Cx y = nest_zero(m, nest, n, kPP);
    CHECK(std::abs(y.imag()) <= 1e-12);
    CHECK(y.real() == doctest::Approx(expected[n - 1]).epsilon(1e-7));
    CHECK(std::abs(iterate(m, y, nest.return_times[n - 1])) <= 1e-9);
  }
  CHECK_THROWS_AS(nest_zero(m, nest, 0, kPP), ConfigError);
  CHECK_THROWS_AS(nest_zero(m, nest, 5, kPP), ConfigError);
}

TEST_CASE("rescaled return maps approach w -> w^2 - 1") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  const double phi = (1 + std::sqrt(5.0)) / 2;

  const double scale_in_b[] = {1.692143973, 3.719472895, 12.894592300, 56.330566499};
  const double scale_in_m[] = {1.410191894, 3.752184621, 12.965436098, 56.633810100};
  const double k_b[] = {-2.755400, -1.321549, -1.046891, -1.026460};
  const double k_m[] = {-1.190598, -1.101347, -1.056098, -1.032099};

  for (int n = 1; n <= 4; ++n) {
    RescaledReturnMap gb = rescaled_return_map(m, nest, n, Normalization::BetaToGolden, kPP);
    RescaledReturnMap gm =
        rescaled_return_map(m, nest, n, Normalization::PreimageToMinusOne, kPP);
    CHECK(gb.iterates == nest.return_times[n - 1]);
    CHECK(gb.scale_in == doctest::Approx(scale_in_b[n - 1]).epsilon(1e-6));
    CHECK(gm.scale_in == doctest::Approx(scale_in_m[n - 1]).epsilon(1e-6));
    CHECK(gb.scale_in > 0);
    CHECK(gm.scale_in > 0);
    // orientation: the normalized map has a local minimum at 0, and the sign
    // of the range scale alternates in pairs down the nest
    double expected_sign = (n == 1 || n == 2) ? -1.0 : 1.0;
    CHECK(gb.scale_out * expected_sign > 0);
    CHECK(gm.scale_out * expected_sign > 0);

    // critical values near -1, strictly closer each level
    Cx kb = gb(Cx(0, 0));
    Cx km = gm(Cx(0, 0));
    CHECK(std::abs(kb.imag()) <= 1e-9);
    CHECK(std::abs(km.imag()) <= 1e-9);
    CHECK(kb.real() == doctest::Approx(k_b[n - 1]).epsilon(2e-4));
    CHECK(km.real() == doctest::Approx(k_m[n - 1]).epsilon(2e-4));

    // marked points: the golden normalization fixes phi, and the preimage
    // normalization sends -1 to 0, both the way w^2 - 1 does
    CHECK(std::abs(gb(Cx(phi, 0)) - Cx(phi, 0)) <= 1e-6);
    CHECK(std::abs(gm(Cx(-1, 0))) <= 1e-6);
  }

  // |k + 1| shrinks monotonically for both normalizations
  for (int n = 2; n <= 4; ++n) {
    CHECK(std::abs(k_b[n - 1] + 1) < std::abs(k_b[n - 2] + 1));
    CHECK(std::abs(k_m[n - 1] + 1) < std::abs(k_m[n - 2] + 1));
  }

  CHECK_THROWS_AS(rescaled_return_map(m, nest, 0, Normalization::BetaToGolden, kPP),
                  ConfigError);
  CHECK_THROWS_AS(rescaled_return_map(m, nest, 5, Normalization::BetaToGolden, kPP),
                  ConfigError);
}

TEST_CASE("the two normalizations are nearly linearly conjugate") {
  QuadraticMap m = fib_map();
  const Nest& nest = fib_nest4();
  for (int n = 3; n <= 4; ++n) {
    RescaledReturnMap gb = rescaled_return_map(m, nest, n, Normalization::BetaToGolden, kPP);
    RescaledReturnMap gm =
        rescaled_return_map(m, nest, n, Normalization::PreimageToMinusOne, kPP);
    double lambda = gb.scale_in / gm.scale_in;
    double mu = gb.scale_out / gm.scale_out;
    // exact identity G_b(lambda w) = mu G_m(w); lambda ~ mu says the two
    // pictures differ by (nearly) a single linear change of variable
    CHECK(std::abs(mu / lambda - 1) < 0.01);
    const double tau = 6.283185307179586;
    for (int j = 0; j < 12; ++j) {
      Cx w = 0.8 * Cx(std::cos(tau * j / 12), std::sin(tau * j / 12));
      CHECK(std::abs(gb(lambda * w) - mu * gm(w)) <= 1e-9 * std::max(1.0, std::abs(mu)));
    }
  }
}

TEST_CASE("nest geometry does not depend on the starting equipotential") {
  QuadraticMap m = fib_map();
  Nest low = build_principal_nest(m, 3, 0.5, kPP);
  CHECK(low.return_times == std::vector<int>{2, 3, 5});
  CHECK(low.central[3].equip_level == std::ldexp(0.5, -10));
  // corners are ray landing points, independent of the equipotential height
  CHECK(real_corner(low.central[3]) ==
        doctest::Approx(real_corner(fib_nest4().central[3])).epsilon(1e-8));
  RescaledReturnMap gb = rescaled_return_map(m, low, 3, Normalization::BetaToGolden, kPP);
  CHECK(gb(Cx(0, 0)).real() == doctest::Approx(-1.046891).epsilon(2e-4));
}
