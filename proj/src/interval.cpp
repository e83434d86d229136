#include "parporo/interval.hpp"

#include <algorithm>
#include <cstdio>

namespace parporo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kUlp = 0x1p-52;

double two_sum_err(double a, double b, double s) {
  double bb = s - a;
  return (a - (s - bb)) + (b - bb);
}

Interval add_bracket(double a, double b) {
  double s = a + b;
  if (std::isnan(s)) return {-kInf, kInf};
  if (std::isinf(s)) {
    if (std::isinf(a) || std::isinf(b)) return {s, s};
    return s > 0 ? Interval{std::numeric_limits<double>::max(), kInf}
                 : Interval{-kInf, -std::numeric_limits<double>::max()};
  }
  return around(s, two_sum_err(a, b, s));
}

Interval mul_bracket(double a, double b) {
  if (a == 0.0 || b == 0.0) return {0.0, 0.0};
  double m = a * b;
  if (std::isinf(m)) {
    if (std::isinf(a) || std::isinf(b)) return {m, m};
    return m > 0 ? Interval{std::numeric_limits<double>::max(), kInf}
                 : Interval{-kInf, -std::numeric_limits<double>::max()};
  }
  return around(m, std::fma(a, b, -m));
}

Interval div_bracket(double a, double b) {
  if (a == 0.0) return {0.0, 0.0};
  if (std::isinf(b)) {
    if (std::isinf(a)) return {-kInf, kInf};
    return {0.0, 0.0};
  }
  double q = a / b;
  if (std::isinf(q) || std::isinf(a)) return {q, q};
  double r = std::fma(-q, b, a);
  return around(q, b > 0 ? r : -r);
}

// Relative widening for library pow, which is not correctly rounded and whose
// exponent argument may itself carry a rounding error.
Interval widen_pow(double y, double x, double e) {
  if (y == 0.0) return {0.0, 0.0};
  if (std::isinf(y)) return {std::numeric_limits<double>::max(), kInf};
  double rel = 4.0 * kUlp + 2.0 * kUlp * std::fabs(e * std::log(x));
  double lo = next_down(y * (1.0 - rel));
  double hi = next_up(y * (1.0 + rel));
  return {std::max(0.0, lo), hi};
}

Interval pow_point(double x, double e) {
  if (x <= 0.0) {
    if (e > 0) return {0.0, 0.0};
    if (e == 0) return {1.0, 1.0};
    return {kInf, kInf};
  }
  if (std::isinf(x)) {
    if (e > 0) return {kInf, kInf};
    if (e == 0) return {1.0, 1.0};
    return {0.0, 0.0};
  }
  if (x == 1.0 || e == 0.0) return {1.0, 1.0};
  if (e == 1.0) return {x, x};
  if (e == 2.0) return mul_bracket(x, x);
  if (e == -1.0) return div_bracket(1.0, x);
  if (e == 0.5) return sqrt(Interval{x, x});
  if (e == -0.5) {
    Interval s = sqrt(Interval{x, x});
    return Interval{div_bracket(1.0, s.hi).lo, div_bracket(1.0, s.lo).hi};
  }
  return widen_pow(std::pow(x, e), x, e);
}

}  // namespace

double next_up(double v) { return std::nextafter(v, kInf); }
double next_down(double v) { return std::nextafter(v, -kInf); }

Interval around(double rounded, double error) {
  if (error > 0) return {rounded, next_up(rounded)};
  if (error < 0) return {next_down(rounded), rounded};
  return {rounded, rounded};
}

Interval operator+(const Interval& a, const Interval& b) {
  return {add_bracket(a.lo, b.lo).lo, add_bracket(a.hi, b.hi).hi};
}

Interval operator-(const Interval& a, const Interval& b) {
  return {add_bracket(a.lo, -b.hi).lo, add_bracket(a.hi, -b.lo).hi};
}

Interval operator*(const Interval& a, const Interval& b) {
  Interval c[4] = {mul_bracket(a.lo, b.lo), mul_bracket(a.lo, b.hi), mul_bracket(a.hi, b.lo),
                   mul_bracket(a.hi, b.hi)};
  Interval r{c[0].lo, c[0].hi};
  for (auto& x : c) {
    r.lo = std::min(r.lo, x.lo);
    r.hi = std::max(r.hi, x.hi);
  }
  return r;
}

Interval operator/(const Interval& a, const Interval& b) {
  if (b.lo <= 0.0 && b.hi >= 0.0) {
    if (b.lo == 0.0 && b.hi > 0.0 && a.lo >= 0.0) {
      return {a.lo == 0.0 ? 0.0 : div_bracket(a.lo, b.hi).lo, kInf};
    }
    return {-kInf, kInf};
  }
  Interval c[4] = {div_bracket(a.lo, b.lo), div_bracket(a.lo, b.hi), div_bracket(a.hi, b.lo),
                   div_bracket(a.hi, b.hi)};
  Interval r{c[0].lo, c[0].hi};
  for (auto& x : c) {
    r.lo = std::min(r.lo, x.lo);
    r.hi = std::max(r.hi, x.hi);
  }
  return r;
}

Interval& operator+=(Interval& a, const Interval& b) {
  a = a + b;
  return a;
}

Interval abs(const Interval& a) {
  if (a.lo >= 0) return a;
  if (a.hi <= 0) return {-a.hi, -a.lo};
  return {0.0, std::max(-a.lo, a.hi)};
}

Interval max(const Interval& a, const Interval& b) { return {std::max(a.lo, b.lo), std::max(a.hi, b.hi)}; }
Interval min(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::min(a.hi, b.hi)}; }
Interval hull(const Interval& a, const Interval& b) { return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)}; }

Interval sqrt(const Interval& a) {
  auto one = [](double x, bool upper) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return kInf;
    double r = std::sqrt(x);
    Interval b = around(r, std::fma(-r, r, x));
    return upper ? b.hi : b.lo;
  };
  return {one(a.lo, false), one(a.hi, true)};
}

Interval pow_nonneg(const Interval& x, double e) {
  double lo = std::max(0.0, x.lo), hi = std::max(0.0, x.hi);
  if (e >= 0) return {pow_point(lo, e).lo, pow_point(hi, e).hi};
  return {pow_point(hi, e).lo, pow_point(lo, e).hi};
}

Interval root_p(const Interval& x, double p) {
  if (p == 1.0) return {std::max(0.0, x.lo), std::max(0.0, x.hi)};
  if (p == 2.0) return sqrt(x);
  return pow_nonneg(x, 1.0 / p);
}

std::string to_string(const Interval& v) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "[%.17g, %.17g]", v.lo, v.hi);
  return buf;
}

}  // namespace parporo
