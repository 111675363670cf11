#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "fibscale/geometry.hpp"

using namespace fibscale;

namespace {
std::vector<Cx> circle(Cx center, double r, int n) {
  std::vector<Cx> pts;
  for (int i = 0; i < n; ++i) {
    double t = 2 * M_PI * i / n;
    pts.push_back(center + r * Cx(std::cos(t), std::sin(t)));
  }
  return pts;
}
}  // namespace

TEST_CASE("winding number on circles") {
  auto c = circle(0, 1, 256);
  CHECK(winding_number(c, Cx(0, 0)) == 1);
  CHECK(winding_number(c, Cx(3, 0)) == 0);
  CHECK(winding_number(c, Cx(0.7, -0.2)) == 1);
  std::reverse(c.begin(), c.end());
  CHECK(winding_number(c, Cx(0, 0)) == -1);
}

TEST_CASE("winding rejects near-passage") {
  auto c = circle(0, 1, 256);
  CHECK_THROWS_AS(winding_number(c, Cx(1.0, 0.0), 1e-6), UnderResolvedError);
}

TEST_CASE("signed area and orientation") {
  auto c = circle(Cx(2, -1), 1.5, 512);
  CHECK(signed_area(c) == doctest::Approx(M_PI * 1.5 * 1.5).epsilon(1e-3));
  std::reverse(c.begin(), c.end());
  CHECK(signed_area(c) < 0);
}

TEST_CASE("point in polygon excludes a boundary band") {
  auto c = circle(0, 1, 1024);
  CHECK(point_in_polygon(c, Cx(0.5, 0.5)));
  CHECK(!point_in_polygon(c, Cx(1.2, 0)));
  CHECK(!point_in_polygon(c, Cx(1.0, 0), 1e-3));  // within the band
}

TEST_CASE("densify preserves corners and bounds spacing") {
  std::vector<Cx> square{Cx(0, 0), Cx(1, 0), Cx(1, 1), Cx(0, 1)};
  std::vector<size_t> corners{0, 1, 2, 3};
  auto fine = densify_closed(square, 0.1, &corners);
  REQUIRE(corners.size() == 4);
  for (size_t i = 0; i < 4; ++i) CHECK(fine[corners[i]] == square[i]);
  for (size_t i = 0; i < fine.size(); ++i)
    CHECK(std::abs(fine[(i + 1) % fine.size()] - fine[i]) <= 0.1 + 1e-12);
  CHECK(signed_area(fine) == doctest::Approx(1.0));
}

TEST_CASE("hausdorff distance of concentric circles equals radius gap") {
  auto a = circle(0, 1, 2000);
  auto b = circle(0, 2, 2000);
  CHECK(hausdorff_distance(a, b) == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(hausdorff_distance(a, a) == 0.0);
  CHECK(directed_hausdorff(a, b) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("point grid nearest matches brute force on random clouds") {
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> u(-2, 2);
  std::vector<Cx> cloud;
  for (int i = 0; i < 3000; ++i) cloud.emplace_back(u(rng), u(rng));
  PointGrid grid(cloud);
  for (int q = 0; q < 200; ++q) {
    Cx p(u(rng) * 1.5, u(rng) * 1.5);
    double best = 1e300;
    for (Cx z : cloud) best = std::min(best, std::abs(z - p));
    CHECK(grid.nearest(p) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("line fit recovers slope and intercept") {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double v : x) y.push_back(0.25 * v - 1.5);
  auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(0.25));
  CHECK(f.intercept == doctest::Approx(-1.5));
}

TEST_CASE("fnv1a is stable") {
  CHECK(fnv1a("") == 14695981039346656037ull);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a("config") == fnv1a("config"));
  CHECK(fnv1a("config") != fnv1a("confih"));
}
