#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "fibscale/angle.hpp"

using namespace fibscale;

TEST_CASE("reduction and range") {
  ExternalAngle a(4, 6);
  CHECK(a.num == 2);
  CHECK(a.den == 3);
  ExternalAngle b(7, 3);  // wraps mod 1
  CHECK(b.num == 1);
  CHECK(b.den == 3);
  CHECK_THROWS(ExternalAngle(1, 0));
}

TEST_CASE("doubling orbit of 1/3 has period 2") {
  ExternalAngle t(1, 3);
  CHECK(t.doubled() == ExternalAngle(2, 3));
  CHECK(t.doubled().doubled() == t);
  CHECK(t.preperiod() == 0);
  CHECK(t.period() == 2);
}

TEST_CASE("preperiod counts factors of two") {
  ExternalAngle t(5, 48);  // 48 = 16*3
  CHECK(t.preperiod() == 4);
  CHECK(t.period() == 2);
  ExternalAngle d(3, 8);  // dyadic: falls onto the fixed angle 0
  CHECK(d.preperiod() == 3);
  CHECK(d.period() == 1);
}

TEST_CASE("halving branches") {
  ExternalAngle t(1, 3);
  CHECK(t.half(0) == ExternalAngle(1, 6));
  CHECK(t.half(1) == ExternalAngle(2, 3));  // 1/6 + 1/2
  CHECK(t.half(0).doubled() == t);
  CHECK(t.half(1).doubled() == t);
}

TEST_CASE("ordering uses exact cross multiplication") {
  CHECK(ExternalAngle(1, 3) < ExternalAngle(2, 5));
  CHECK(!(ExternalAngle(2, 5) < ExternalAngle(1, 3)));
  // near-equal with large denominators
  ExternalAngle a(1, 3ull << 40), b(1, (3ull << 40) - 1);
  CHECK(a < b);
}

TEST_CASE("conjugate and circular distance") {
  ExternalAngle t(1, 3);
  CHECK(t.conjugate() == ExternalAngle(2, 3));
  CHECK(ExternalAngle(0, 1).conjugate() == ExternalAngle(0, 1));
  CHECK(angle_distance(ExternalAngle(1, 12), ExternalAngle(11, 12)) == doctest::Approx(1.0 / 6));
}

TEST_CASE("deep piece denominators stay within u64") {
  ExternalAngle t(1, 3);
  for (int i = 0; i < 55; ++i) t = t.half(0);
  CHECK(t.den == 3ull * (1ull << 55));
  ExternalAngle back = t;
  for (int i = 0; i < 55; ++i) back = back.doubled();
  CHECK(back == ExternalAngle(1, 3));
}
