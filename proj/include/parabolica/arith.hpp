/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <gmpxx.h>
#include <mpfr.h>

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

// Error-tracked arbitrary-precision real and complex arithmetic.
//
// Rounding policy (global, fixed): centers are computed with round-to-nearest
// (MPFR_RNDN); radii are kept at a low fixed precision and always rounded
// outward (MPFR_RNDU).  Complex balls are discs: a complex center plus a
// radius bounding the modulus of the error.  Every operation returns a ball
// that contains the exact result of the operation applied to any points of
// the input balls.

namespace parabolica {

inline constexpr mpfr_prec_t kMinPrecision = 32;
inline constexpr mpfr_prec_t kRadiusPrecision = 32;

struct DivisionByZeroBall : std::runtime_error {
  DivisionByZeroBall() : std::runtime_error("divisor ball contains zero") {}
};

// Arbitrary-precision real with an explicit working precision.
class BigReal {
 public:
  explicit BigReal(mpfr_prec_t prec = 64) {
    mpfr_init2(v_, std::max(prec, kMinPrecision));
    mpfr_set_zero(v_, 1);
  }
  BigReal(double x, mpfr_prec_t prec) {
    mpfr_init2(v_, std::max(prec, kMinPrecision));
    mpfr_set_d(v_, x, MPFR_RNDN);
  }
  BigReal(long x, mpfr_prec_t prec) {
    mpfr_init2(v_, std::max(prec, kMinPrecision));
    mpfr_set_si(v_, x, MPFR_RNDN);
  }
  BigReal(const mpq_class& q, mpfr_prec_t prec) {
    mpfr_init2(v_, std::max(prec, kMinPrecision));
    mpfr_set_q(v_, q.get_mpq_t(), MPFR_RNDN);
  }
  BigReal(const mpz_class& z, mpfr_prec_t prec) {
    mpfr_init2(v_, std::max(prec, kMinPrecision));
    mpfr_set_z(v_, z.get_mpz_t(), MPFR_RNDN);
  }
  BigReal(const BigReal& o) {
    mpfr_init2(v_, mpfr_get_prec(o.v_));
    mpfr_set(v_, o.v_, MPFR_RNDN);
  }
  BigReal(BigReal&& o) noexcept {
    mpfr_init2(v_, kMinPrecision);
    mpfr_swap(v_, o.v_);
  }
  BigReal& operator=(const BigReal& o) {
    if (this != &o) {
      mpfr_set_prec(v_, mpfr_get_prec(o.v_));
      mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    return *this;
  }
  BigReal& operator=(BigReal&& o) noexcept {
    mpfr_swap(v_, o.v_);
    return *this;
  }
  ~BigReal() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
  int sign() const { return mpfr_sgn(v_); }
  bool is_zero() const { return mpfr_zero_p(v_); }
  std::string str(size_t digits = 0) const {
    mpfr_exp_t e;
    char* s = mpfr_get_str(nullptr, &e, 10, digits, v_, MPFR_RNDN);
    std::string out = s ? s : "nan";
    mpfr_free_str(s);
    return out + "e" + std::to_string(e);
  }

  static BigReal pow2(long e, mpfr_prec_t prec = kMinPrecision) {
    BigReal r(prec);
    mpfr_set_ui_2exp(r.v_, 1, e, MPFR_RNDU);
    return r;
  }

  bool operator<(const BigReal& o) const { return mpfr_less_p(v_, o.v_); }
  bool operator<=(const BigReal& o) const { return mpfr_lessequal_p(v_, o.v_); }
  bool operator>(const BigReal& o) const { return mpfr_greater_p(v_, o.v_); }
  bool operator>=(const BigReal& o) const { return mpfr_greaterequal_p(v_, o.v_); }
  bool operator==(const BigReal& o) const { return mpfr_equal_p(v_, o.v_); }

 private:
  mpfr_t v_;
};

// Directed helpers at radius precision.
inline BigReal radd_up(const BigReal& a, const BigReal& b) {
  BigReal r(kRadiusPrecision);
  mpfr_add(r.get(), a.get(), b.get(), MPFR_RNDU);
  return r;
}
inline BigReal rmul_up(const BigReal& a, const BigReal& b) {
  BigReal r(kRadiusPrecision);
  mpfr_mul(r.get(), a.get(), b.get(), MPFR_RNDU);
  return r;
}

// Complex ball: center (re, im) at working precision, radius at fixed low
// precision, rounded outward.
class Ball {
 public:
  explicit Ball(mpfr_prec_t prec = 64)
      : re_(prec), im_(prec), rad_(kRadiusPrecision) {}
  Ball(const BigReal& re, const BigReal& im, const BigReal& rad)
      : re_(re), im_(im), rad_(kRadiusPrecision) {
    mpfr_set(rad_.get(), rad.get(), MPFR_RNDU);
    if (mpfr_sgn(rad_.get()) < 0)
      throw std::invalid_argument("negative ball radius");
  }
  static Ball exact(double re, double im, mpfr_prec_t prec) {
    Ball b(prec);
    mpfr_set_d(b.re_.get(), re, MPFR_RNDN);
    mpfr_set_d(b.im_.get(), im, MPFR_RNDN);
    return b;
  }
  static Ball exact(const mpq_class& re, const mpq_class& im, mpfr_prec_t prec) {
    // Rational centers may not be dyadic: account the rounding in the radius.
    Ball b(prec);
    int ir = mpfr_set_q(b.re_.get(), re.get_mpq_t(), MPFR_RNDN);
    int ii = mpfr_set_q(b.im_.get(), im.get_mpq_t(), MPFR_RNDN);
    if (ir != 0) b.add_error_ulp(b.re_);
    if (ii != 0) b.add_error_ulp(b.im_);
    return b;
  }

  const BigReal& re() const { return re_; }
  const BigReal& im() const { return im_; }
  const BigReal& rad() const { return rad_; }
  BigReal& re() { return re_; }
  BigReal& im() { return im_; }
  mpfr_prec_t precision() const { return re_.precision(); }

  void set_rad(const BigReal& r) { mpfr_set(rad_.get(), r.get(), MPFR_RNDU); }
  void clear_rad() { mpfr_set_zero(rad_.get(), 1); }

  bool is_exact() const { return rad_.is_zero(); }

  // Adds one ulp of x (at x's precision) to the radius; no-op when x == 0.
  void add_error_ulp(const BigReal& x) {
    if (x.is_zero()) return;
    mpfr_exp_t e = mpfr_get_exp(x.get()) - x.precision() + 1;
    BigReal u = BigReal::pow2((long)e);
    mpfr_add(rad_.get(), rad_.get(), u.get(), MPFR_RNDU);
  }

  void add_error(const BigReal& r) {
    mpfr_add(rad_.get(), rad_.get(), r.get(), MPFR_RNDU);
  }

  // Upper bound on the modulus of any point of the ball.
  BigReal abs_upper() const {
    BigReal h = hypot_up();
    BigReal r(kRadiusPrecision);
    mpfr_add(r.get(), h.get(), rad_.get(), MPFR_RNDU);
    return r;
  }
  // Lower bound on the modulus of any point of the ball (clamped at 0).
  BigReal abs_lower() const {
    BigReal h = hypot_down();
    BigReal r(kRadiusPrecision + 32);
    mpfr_sub(r.get(), h.get(), rad_.get(), MPFR_RNDD);
    if (mpfr_sgn(r.get()) < 0) mpfr_set_zero(r.get(), 1);
    return r;
  }
  // Upper bound on |center|.
  BigReal hypot_up() const {
    BigReal r(kRadiusPrecision + 32);
    mpfr_hypot(r.get(), re_.get(), im_.get(), MPFR_RNDU);
    return r;
  }
  // Lower bound on |center|.
  BigReal hypot_down() const {
    BigReal r(kRadiusPrecision + 32);
    mpfr_hypot(r.get(), re_.get(), im_.get(), MPFR_RNDD);
    return r;
  }

  // True if every point of the ball has modulus < bound.
  bool abs_certainly_below(const BigReal& bound) const {
    return abs_upper() < bound;
  }
  bool contains_zero_maybe() const { return !(hypot_down() > rad_); }

  Ball at_precision(mpfr_prec_t p) const {
    Ball b(p);
    int ir = mpfr_set(b.re_.get(), re_.get(), MPFR_RNDN);
    int ii = mpfr_set(b.im_.get(), im_.get(), MPFR_RNDN);
    mpfr_set(b.rad_.get(), rad_.get(), MPFR_RNDU);
    if (ir != 0) b.add_error_ulp(b.re_);
    if (ii != 0) b.add_error_ulp(b.im_);
    return b;
  }

  double rad_double() const { return mpfr_get_d(rad_.get(), MPFR_RNDU); }

 private:
  BigReal re_, im_;
  BigReal rad_;
};

namespace detail {
// 1-norm upper bound on |center| (cheap overestimate, factor <= sqrt(2)).
inline BigReal center_mag1_up(const Ball& a) {
  BigReal r(kRadiusPrecision);
  BigReal t(kRadiusPrecision);
  mpfr_abs(r.get(), a.re().get(), MPFR_RNDU);
  mpfr_abs(t.get(), a.im().get(), MPFR_RNDU);
  mpfr_add(r.get(), r.get(), t.get(), MPFR_RNDU);
  return r;
}
}  // namespace detail

inline Ball ball_add(const Ball& a, const Ball& b) {
  mpfr_prec_t p = std::max(a.precision(), b.precision());
  Ball out(p);
  int ir = mpfr_add(out.re().get(), a.re().get(), b.re().get(), MPFR_RNDN);
  int ii = mpfr_add(out.im().get(), a.im().get(), b.im().get(), MPFR_RNDN);
  out.set_rad(radd_up(a.rad(), b.rad()));
  if (ir != 0) out.add_error_ulp(out.re());
  if (ii != 0) out.add_error_ulp(out.im());
  return out;
}

inline Ball ball_sub(const Ball& a, const Ball& b) {
  mpfr_prec_t p = std::max(a.precision(), b.precision());
  Ball out(p);
  int ir = mpfr_sub(out.re().get(), a.re().get(), b.re().get(), MPFR_RNDN);
  int ii = mpfr_sub(out.im().get(), a.im().get(), b.im().get(), MPFR_RNDN);
  out.set_rad(radd_up(a.rad(), b.rad()));
  if (ir != 0) out.add_error_ulp(out.re());
  if (ii != 0) out.add_error_ulp(out.im());
  return out;
}

inline Ball ball_neg(const Ball& a) {
  Ball out = a;
  mpfr_neg(out.re().get(), out.re().get(), MPFR_RNDN);
  mpfr_neg(out.im().get(), out.im().get(), MPFR_RNDN);
  return out;
}

inline Ball ball_mul(const Ball& a, const Ball& b) {
  mpfr_prec_t p = std::max(a.precision(), b.precision());
  Ball out(p);
  BigReal t1(p), t2(p);

  // re = a.re*b.re - a.im*b.im; each product rounds by <= 1/2 ulp of itself,
  // the subtraction by <= 1/2 ulp of the result.
  int i1 = mpfr_mul(t1.get(), a.re().get(), b.re().get(), MPFR_RNDN);
  int i2 = mpfr_mul(t2.get(), a.im().get(), b.im().get(), MPFR_RNDN);
  int i3 = mpfr_sub(out.re().get(), t1.get(), t2.get(), MPFR_RNDN);
  out.clear_rad();
  if (i1 != 0) out.add_error_ulp(t1);
  if (i2 != 0) out.add_error_ulp(t2);
  if (i3 != 0) out.add_error_ulp(out.re());

  // im = a.re*b.im + a.im*b.re
  i1 = mpfr_mul(t1.get(), a.re().get(), b.im().get(), MPFR_RNDN);
  i2 = mpfr_mul(t2.get(), a.im().get(), b.re().get(), MPFR_RNDN);
  i3 = mpfr_add(out.im().get(), t1.get(), t2.get(), MPFR_RNDN);
  if (i1 != 0) out.add_error_ulp(t1);
  if (i2 != 0) out.add_error_ulp(t2);
  if (i3 != 0) out.add_error_ulp(out.im());

  // Interval term: |a|*rb + |b|*ra + ra*rb, all outward.
  if (!(a.is_exact() && b.is_exact())) {
    BigReal ma = detail::center_mag1_up(a);
    BigReal mb = detail::center_mag1_up(b);
    out.add_error(rmul_up(ma, b.rad()));
    out.add_error(rmul_up(mb, a.rad()));
    out.add_error(rmul_up(a.rad(), b.rad()));
  }
  return out;
}

inline Ball ball_sqr(const Ball& a) { return ball_mul(a, a); }

inline Ball ball_scale(const Ball& a, const BigReal& s) {
  // real scalar multiplication
  Ball out(std::max(a.precision(), s.precision()));
  int ir = mpfr_mul(out.re().get(), a.re().get(), s.get(), MPFR_RNDN);
  int ii = mpfr_mul(out.im().get(), a.im().get(), s.get(), MPFR_RNDN);
  BigReal sa(kRadiusPrecision);
  mpfr_abs(sa.get(), s.get(), MPFR_RNDU);
  out.set_rad(rmul_up(a.rad(), sa));
  if (ir != 0) out.add_error_ulp(out.re());
  if (ii != 0) out.add_error_ulp(out.im());
  return out;
}

// Exact multiplication by 2^e.
inline Ball ball_mul_2exp(const Ball& a, long e) {
  Ball out = a;
  mpfr_mul_2si(out.re().get(), out.re().get(), e, MPFR_RNDN);
  mpfr_mul_2si(out.im().get(), out.im().get(), e, MPFR_RNDN);
  BigReal r(kRadiusPrecision);
  mpfr_mul_2si(r.get(), a.rad().get(), e, MPFR_RNDU);
  out.set_rad(r);
  return out;
}

inline Ball ball_inv(const Ball& b) {
  BigReal lo = b.hypot_down();
  if (!(lo > b.rad())) throw DivisionByZeroBall();
  mpfr_prec_t p = b.precision();
  Ball out(p);
  // center: conj(c)/|c|^2
  BigReal n(p), t(p);
  int i1 = mpfr_mul(n.get(), b.re().get(), b.re().get(), MPFR_RNDN);
  int i2 = mpfr_mul(t.get(), b.im().get(), b.im().get(), MPFR_RNDN);
  int i3 = mpfr_add(n.get(), n.get(), t.get(), MPFR_RNDN);
  int i4 = mpfr_div(out.re().get(), b.re().get(), n.get(), MPFR_RNDN);
  int i5 = mpfr_div(out.im().get(), b.im().get(), n.get(), MPFR_RNDN);
  mpfr_neg(out.im().get(), out.im().get(), MPFR_RNDN);
  out.clear_rad();
  // radius of the exact inverse: rb / (|c| (|c| - rb)), outward
  if (!b.is_exact()) {
    BigReal d(kRadiusPrecision);
    mpfr_sub(d.get(), lo.get(), b.rad().get(), MPFR_RNDD);
    BigReal den(kRadiusPrecision);
    mpfr_mul(den.get(), lo.get(), d.get(), MPFR_RNDD);
    BigReal r(kRadiusPrecision);
    mpfr_div(r.get(), b.rad().get(), den.get(), MPFR_RNDU);
    out.add_error(r);
  }
  if ((i1 | i2 | i3 | i4 | i5) != 0) {
    // the five roundings compound; 4 ulps of each output component is a
    // generous cover for relative error (3/2)^5 - 1 < 8 half-ulps
    for (int k = 0; k < 4; ++k) {
      out.add_error_ulp(out.re());
      out.add_error_ulp(out.im());
    }
  }
  return out;
}

inline Ball ball_div(const Ball& a, const Ball& b) {
  // exact real-divisor shortcut: keeps e.g. 1/2 rounding-free
  if (a.is_exact() && b.is_exact() && b.im().is_zero() && !b.re().is_zero()) {
    mpfr_prec_t p = std::max(a.precision(), b.precision());
    Ball out(p);
    int i1 = mpfr_div(out.re().get(), a.re().get(), b.re().get(), MPFR_RNDN);
    int i2 = mpfr_div(out.im().get(), a.im().get(), b.re().get(), MPFR_RNDN);
    if (i1 != 0) out.add_error_ulp(out.re());
    if (i2 != 0) out.add_error_ulp(out.im());
    return out;
  }
  return ball_mul(a, ball_inv(b));
}

inline Ball ball_pow_ui(const Ball& a, unsigned long n) {
  mpfr_prec_t p = a.precision();
  Ball acc(p);
  mpfr_set_ui(acc.re().get(), 1, MPFR_RNDN);
  Ball base = a;
  while (n > 0) {
    if (n & 1) acc = ball_mul(acc, base);
    n >>= 1;
    if (n) base = ball_sqr(base);
  }
  return acc;
}

// lo <= |x| <= hi for every x in the ball.
inline std::pair<BigReal, BigReal> ball_abs(const Ball& a) {
  return {a.abs_lower(), a.abs_upper()};
}

// Operator sugar for non-hot paths.
inline Ball operator+(const Ball& a, const Ball& b) { return ball_add(a, b); }
inline Ball operator-(const Ball& a, const Ball& b) { return ball_sub(a, b); }
inline Ball operator*(const Ball& a, const Ball& b) { return ball_mul(a, b); }
inline Ball operator/(const Ball& a, const Ball& b) { return ball_div(a, b); }

// Working precision for deciding pixels at resolution level n:
// ceil(budget_factor * n^2) + 64 bits.
inline mpfr_prec_t precision_for_pixel(long n, const mpq_class& budget_factor = 1) {
  if (n < 1) throw std::invalid_argument("resolution level must be >= 1");
  mpq_class q = budget_factor * n * n;
  mpz_class c = (q.get_num() + q.get_den() - 1) / q.get_den();
  return (mpfr_prec_t)c.get_si() + 64;
}

// Certainly x subset of b: |center(b)-center(x)| + rad(x) <= rad(b).
inline bool ball_contains(const Ball& b, const Ball& x) {
  BigReal dr(kRadiusPrecision + 32), di(kRadiusPrecision + 32);
  mpfr_sub(dr.get(), b.re().get(), x.re().get(), MPFR_RNDA);
  mpfr_sub(di.get(), b.im().get(), x.im().get(), MPFR_RNDA);
  BigReal lhs(kRadiusPrecision + 32);
  mpfr_hypot(lhs.get(), dr.get(), di.get(), MPFR_RNDU);
  mpfr_add(lhs.get(), lhs.get(), x.rad().get(), MPFR_RNDU);
  return lhs <= b.rad();
}

}  // namespace parabolica
