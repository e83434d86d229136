#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <string>

namespace parporo {

using Rational = mpq_class;
using BigInt = mpz_class;

// Accepts "7", "-3/8", "0.125", "1e-3", "-2.5E+2".
Rational parse_rational(const std::string& text);

// Exact binary value of a finite double.
Rational rational_from_double(double v);

// Canonical "p/q" (or "p" when the denominator is 1).
std::string to_fraction(const Rational& q);

// Round-trippable decimal rendering of a double.
std::string to_decimal(double v);

double to_double(const Rational& q);

BigInt floor_big(const Rational& q);
BigInt ceil_big(const Rational& q);
std::optional<std::int64_t> to_i64(const BigInt& z);
std::int64_t floor_i64(const Rational& q);  // throws std::overflow_error
std::int64_t ceil_i64(const Rational& q);

Rational pow_int(const Rational& base, unsigned exponent);
BigInt pow2_big(unsigned exponent);

bool is_integer(const Rational& q);

// num/den reduced to lowest terms; the two-argument mpq_class constructor
// leaves its operands as given, which breaks comparisons.
Rational make_rational(const BigInt& num, const BigInt& den);

}  // namespace parporo
