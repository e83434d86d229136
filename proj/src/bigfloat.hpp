#pragma once

#include <mpfr.h>

#include "parporo/rational.hpp"

namespace parporo::detail {

// Thin RAII holder for an mpfr_t; only the handful of operations the lattice
// arithmetic needs.
class BigFloat {
 public:
  explicit BigFloat(mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
  BigFloat(mpfr_prec_t bits, const Rational& q) : BigFloat(bits) { mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN); }
  BigFloat(const BigFloat& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigFloat& operator=(const BigFloat& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  ~BigFloat() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  mpfr_prec_t prec() const { return mpfr_get_prec(v_); }

  static BigFloat exp2(mpfr_prec_t bits, const Rational& x) {
    BigFloat a(bits + 32, x), r(bits);
    mpfr_exp2(r.v_, a.v_, MPFR_RNDN);
    return r;
  }
  static BigFloat pow(mpfr_prec_t bits, const Rational& base, const Rational& e) {
    BigFloat b(bits + 32, base), x(bits + 32, e), r(bits);
    mpfr_pow(r.v_, b.v_, x.v_, MPFR_RNDN);
    return r;
  }

  BigFloat operator+(const BigFloat& o) const { return bin(o, mpfr_add); }
  BigFloat operator-(const BigFloat& o) const { return bin(o, mpfr_sub); }
  BigFloat operator*(const BigFloat& o) const { return bin(o, mpfr_mul); }
  BigFloat operator/(const BigFloat& o) const { return bin(o, mpfr_div); }

  BigFloat abs() const {
    BigFloat r(prec());
    mpfr_abs(r.v_, v_, MPFR_RNDN);
    return r;
  }

  int cmp(const BigFloat& o) const { return mpfr_cmp(v_, o.v_); }
  int cmp(const Rational& q) const { return mpfr_cmp_q(v_, q.get_mpq_t()); }
  bool is_integer() const { return mpfr_integer_p(v_) != 0; }

  BigInt floor() const { return rounded(MPFR_RNDD); }
  BigInt ceil() const { return rounded(MPFR_RNDU); }

  Rational to_rational() const {
    Rational q;
    mpfr_get_q(q.get_mpq_t(), v_);
    return q;
  }
  long double to_ld() const { return mpfr_get_ld(v_, MPFR_RNDN); }

 private:
  template <class F>
  BigFloat bin(const BigFloat& o, F f) const {
    BigFloat r(std::max(prec(), o.prec()));
    f(r.v_, v_, o.v_, MPFR_RNDN);
    return r;
  }
  BigInt rounded(mpfr_rnd_t mode) const {
    BigFloat t(prec());
    mpfr_rint(t.v_, v_, mode);
    BigInt z;
    mpfr_get_z(z.get_mpz_t(), t.v_, MPFR_RNDN);
    return z;
  }
  mpfr_t v_;
};

}  // namespace parporo::detail
