#include "fibscale/angle.hpp"

#include <numeric>
#include <stdexcept>

namespace fibscale {

ExternalAngle::ExternalAngle(uint64_t n, uint64_t d) {
  if (d == 0) throw std::invalid_argument("ExternalAngle: zero denominator");
  n %= d;
  uint64_t g = std::gcd(n, d);
  num = n / g;
  den = d / g;
}

ExternalAngle ExternalAngle::doubled() const {
  // 2n/d mod 1; reduction only ever divides by 2
  uint64_t n2 = 2 * num;
  if (n2 >= den) n2 -= den;
  return ExternalAngle(n2, den);
}

ExternalAngle ExternalAngle::half(int branch) const {
  // (num + branch*den) / (2*den); den*2 must not overflow
  if (den > (UINT64_MAX >> 1)) throw std::overflow_error("ExternalAngle::half: denominator overflow");
  uint64_t n = num + (branch ? den : 0);
  return ExternalAngle(n, 2 * den);
}

ExternalAngle ExternalAngle::conjugate() const {
  if (num == 0) return *this;
  return ExternalAngle(den - num, den);
}

bool ExternalAngle::operator<(const ExternalAngle& o) const {
  return static_cast<__uint128_t>(num) * o.den < static_cast<__uint128_t>(o.num) * den;
}

int ExternalAngle::preperiod() const {
  int l = 0;
  uint64_t d = den;
  while ((d & 1) == 0) {
    d >>= 1;
    ++l;
  }
  return l;
}

int ExternalAngle::period() const {
  uint64_t d = den;
  while ((d & 1) == 0) d >>= 1;
  if (d == 1) return 1;  // dyadic angles land on the fixed angle 0 after preperiod
  // multiplicative order of 2 mod d
  uint64_t pow = 2 % d;
  int p = 1;
  while (pow != 1) {
    pow = (pow * 2) % d;  // d is odd and small for our use (<= a few thousand)
    ++p;
    if (p > 20000) throw std::runtime_error("ExternalAngle::period: order not found");
  }
  return p;
}

std::string ExternalAngle::str() const {
  return std::to_string(num) + "/" + std::to_string(den);
}

double angle_distance(const ExternalAngle& a, const ExternalAngle& b) {
  double d = a.value() - b.value();
  if (d < 0) d = -d;
  return d > 0.5 ? 1.0 - d : d;
}

}  // namespace fibscale
