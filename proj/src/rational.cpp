#include "parporo/rational.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>

namespace parporo {

namespace {

BigInt pow10(long e) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 10, static_cast<unsigned long>(e));
  return r;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("empty number");

  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational num = parse_rational(s.substr(0, slash));
    Rational den = parse_rational(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + raw + "'");
    Rational q = num / den;
    q.canonicalize();
    return q;
  }

  std::size_t i = 0;
  bool negative = false;
  if (s[i] == '+' || s[i] == '-') {
    negative = s[i] == '-';
    ++i;
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_point = false, seen_digit = false;
  for (; i < s.size(); ++i) {
    char c = s[i];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      seen_digit = true;
      if (seen_point) ++frac_digits;
    } else if (c == '.' && !seen_point) {
      seen_point = true;
    } else {
      break;
    }
  }
  if (!seen_digit) throw std::invalid_argument("not a number: '" + raw + "'");
  long exponent = 0;
  if (i < s.size()) {
    if (s[i] != 'e' && s[i] != 'E') throw std::invalid_argument("not a number: '" + raw + "'");
    ++i;
    std::string ex = s.substr(i);
    if (ex.empty()) throw std::invalid_argument("bad exponent in '" + raw + "'");
    const char* first = ex.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, ex.data() + ex.size(), exponent);
    if (ec != std::errc() || ptr != ex.data() + ex.size())
      throw std::invalid_argument("bad exponent in '" + raw + "'");
    if (exponent > 4000 || exponent < -4000) throw std::invalid_argument("exponent out of range");
  }
  BigInt mant(digits, 10);
  long shift = exponent - frac_digits;
  Rational q;
  if (shift >= 0) {
    q = Rational(mant * pow10(shift));
  } else {
    q = Rational(mant, pow10(-shift));
    q.canonicalize();
  }
  return negative ? Rational(-q) : q;
}

Rational rational_from_double(double v) {
  if (!std::isfinite(v)) throw std::invalid_argument("non-finite value");
  Rational q(v);
  q.canonicalize();
  return q;
}

std::string to_fraction(const Rational& q) { return q.get_str(10); }

std::string to_decimal(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double to_double(const Rational& q) { return q.get_d(); }

BigInt floor_big(const Rational& q) {
  BigInt r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

BigInt ceil_big(const Rational& q) {
  BigInt r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

std::optional<std::int64_t> to_i64(const BigInt& z) {
  if (!mpz_fits_slong_p(z.get_mpz_t())) return std::nullopt;
  return static_cast<std::int64_t>(z.get_si());
}

std::int64_t floor_i64(const Rational& q) {
  auto v = to_i64(floor_big(q));
  if (!v) throw std::overflow_error("integer part exceeds 64 bits");
  return *v;
}

std::int64_t ceil_i64(const Rational& q) {
  auto v = to_i64(ceil_big(q));
  if (!v) throw std::overflow_error("integer part exceeds 64 bits");
  return *v;
}

Rational pow_int(const Rational& base, unsigned exponent) {
  BigInt num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), exponent);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), exponent);
  Rational r(num, den);
  r.canonicalize();
  return r;
}

BigInt pow2_big(unsigned exponent) {
  BigInt r;
  mpz_ui_pow_ui(r.get_mpz_t(), 2, exponent);
  return r;
}

bool is_integer(const Rational& q) { return q.get_den() == 1; }

Rational make_rational(const BigInt& num, const BigInt& den) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

}  // namespace parporo
