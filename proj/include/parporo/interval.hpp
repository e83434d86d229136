#pragma once

#include <cmath>
#include <limits>
#include <string>

namespace parporo {

// Closed bracket [lo, hi] on the extended reals. Every operation rounds
// outward; results stay exact (zero width) whenever the floating-point
// operation itself was exact, which is detected with error-free transforms.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  Interval() = default;
  Interval(double v) : lo(v), hi(v) {}  // NOLINT(google-explicit-constructor)
  Interval(double a, double b) : lo(a), hi(b) {}

  static Interval entire_nonneg() { return {0.0, std::numeric_limits<double>::infinity()}; }

  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
  bool contains(double v) const { return lo <= v && v <= hi; }
  bool intersects(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
  bool is_point() const { return lo == hi; }
  bool bounded() const { return std::isfinite(lo) && std::isfinite(hi); }
};

double next_up(double v);
double next_down(double v);

// Correctly bracket a single rounded operation given the sign of its error.
Interval around(double rounded, double error);

Interval operator+(const Interval& a, const Interval& b);
Interval operator-(const Interval& a, const Interval& b);
Interval operator*(const Interval& a, const Interval& b);
Interval operator/(const Interval& a, const Interval& b);
Interval& operator+=(Interval& a, const Interval& b);

Interval abs(const Interval& a);
Interval max(const Interval& a, const Interval& b);
Interval min(const Interval& a, const Interval& b);
Interval hull(const Interval& a, const Interval& b);
Interval sqrt(const Interval& a);

// x^e for x >= 0 (negative parts clamp to zero) and any real exponent e.
// Zero raised to a negative power gives +inf.
Interval pow_nonneg(const Interval& x, double e);

// x^(1/p): routed through sqrt when p == 2 so exact cases stay exact.
Interval root_p(const Interval& x, double p);

std::string to_string(const Interval& v);

}  // namespace parporo
