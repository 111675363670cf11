#pragma once
// Exact rational external angles in [0,1).  Denominators stay within u64 for
// every depth we build (3*2^j for pieces, 2^j for equipotential corners), so
// plain integer arithmetic with an __int128 cross-multiply comparison is
// exact and cheap.

#include <cstdint>
#include <string>

namespace fibscale {

struct ExternalAngle {
  uint64_t num = 0;
  uint64_t den = 1;  // invariant: den >= 1, num < den, gcd-reduced

  ExternalAngle() = default;
  ExternalAngle(uint64_t n, uint64_t d);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }

  ExternalAngle doubled() const;               // 2*theta mod 1
  ExternalAngle half(int branch) const;        // theta/2 (branch 0) or theta/2 + 1/2 (branch 1)
  ExternalAngle conjugate() const;             // 1 - theta (mod 1)

  bool operator==(const ExternalAngle& o) const { return num == o.num && den == o.den; }
  bool operator!=(const ExternalAngle& o) const { return !(*this == o); }
  bool operator<(const ExternalAngle& o) const;

  // preperiod and period of the doubling orbit (angle written p / (2^l * odd))
  int preperiod() const;
  int period() const;

  std::string str() const;  // "num/den"
};

// circular distance min(|a-b|, 1-|a-b|) as double
double angle_distance(const ExternalAngle& a, const ExternalAngle& b);

}  // namespace fibscale
