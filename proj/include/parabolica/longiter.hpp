/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <memory>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "parabolica/series.hpp"

// Accelerated iteration near a parabolic fixed point: for a germ tangent to
// the identity and |z| < 1/m, the ell-th iterate with ell = floor(m^r / C)
// is computed from the coefficient-polynomial table in time polynomial in
// the precision and log m, instead of ell map applications.

namespace parabolica {

struct IterationTooShort : std::runtime_error {
  IterationTooShort()
      : std::runtime_error("m^r < C: accelerated step would be empty") {}
};
struct BallTooLarge : std::runtime_error {
  explicit BallTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Smallest A = 2^a with |a_i| < A^{i-1} for ALL coefficients of the rational
// germ num/den, certified from a geometric majorant of the rational form,
// not just the probed prefix.
//
// With c = den(0), E = sum_{j>=1} |den_j / c| and N = max(1, max_j |num_j/c|),
// the Taylor coefficients are dominated by those of
//   N (z + ... + z^dn) * (1-z) / (1 - (E+1) z),
// whose tail is exactly geometric with ratio E+1 past degree dn.  It is
// enough to check the true coefficients up to the probe degree, the majorant
// between dn and the probe, and E+1 <= A.
inline long compute_scaling_A_exp(const std::vector<mpq_class>& num,
                                  const std::vector<mpq_class>& den,
                                  size_t probe_degree = 48) {
  if (den.empty() || den[0] == 0)
    throw std::invalid_argument("denominator constant term must be nonzero");
  size_t dn = num.size() ? num.size() - 1 : 0;
  size_t probe = std::max({probe_degree, dn + 2, (size_t)8});
  std::vector<mpq_class> t = rational_germ_coeffs(num, den, probe);

  mpq_class E = 0, N = 1;
  for (size_t j = 1; j < den.size(); ++j) E += abs(mpq_class(den[j] / den[0]));
  for (size_t j = 1; j < num.size(); ++j) {
    mpq_class c = abs(mpq_class(num[j] / den[0]));
    if (c > N) N = c;
  }

  // majorant coefficients m_i = N * sum_{k=1}^{min(dn,i)} phi_{i-k},
  // phi_0 = 1, phi_j = E (E+1)^{j-1}
  std::vector<mpq_class> phi(probe, mpq_class(0));
  phi[0] = 1;
  for (size_t j = 1; j < probe; ++j)
    phi[j] = (j == 1) ? E : phi[j - 1] * (E + 1);
  std::vector<mpq_class> maj(probe + 1, mpq_class(0));
  for (size_t i = 1; i <= probe; ++i)
    for (size_t k = 1; k <= dn && k <= i; ++k) maj[i] += N * phi[i - k];

  for (long a = 0; a <= 256; ++a) {
    mpq_class A = mpz_class(1) << a;
    if (E + 1 > A) continue;
    bool ok = true;
    mpq_class Apow = A;  // A^{i-1} at i = 2
    for (size_t i = 2; i <= probe && ok; ++i) {
      if (!(abs(t[i - 1]) < Apow)) ok = false;
      if (i > dn && !(maj[i] < Apow)) ok = false;
      Apow *= A;
    }
    if (ok) return a;
  }
  throw std::runtime_error("no scaling power of two up to 2^256");
}

// A parabolic germ z + a_{r+1} z^{r+1} + ... given in rational form, with
// the scaling/step constants of the accelerated iteration and a lazily
// built coefficient table for the conjugated germ g(z) = A f(z/A).
class ParabolicGerm {
 public:
  ParabolicGerm(std::vector<mpq_class> num, std::vector<mpq_class> den,
                size_t probe_degree = 48)
      : num_(std::move(num)), den_(std::move(den)) {
    std::vector<mpq_class> t = rational_germ_coeffs(num_, den_, probe_degree);
    size_t first = 0;
    for (size_t i = 2; i <= t.size(); ++i)
      if (t[i - 1] != 0) {
        first = i;
        break;
      }
    if (first == 0)
      throw std::invalid_argument("germ is the identity to probe depth");
    r_ = (int)(first - 1);
    a_exp_ = compute_scaling_A_exp(num_, den_, probe_degree);
    alpha_ = 2L * r_ * r_ * r_;
    // C: smallest power of two strictly above 2^r * alpha * A^r
    mpz_class bound = mpz_class(alpha_) << (r_ + a_exp_ * r_);
    c_exp_ = (long)mpz_sizeinbase(bound.get_mpz_t(), 2);  // floor(log2)+1
    R_lower_ = mpq_class(1) / (mpz_class(1) << a_exp_);
  }

  int r() const { return r_; }
  long A_exp() const { return a_exp_; }
  long C_exp() const { return c_exp_; }
  long alpha() const { return alpha_; }
  const mpq_class& R_lower() const { return R_lower_; }
  const std::vector<mpq_class>& num() const { return num_; }
  const std::vector<mpq_class>& den() const { return den_; }

  std::vector<mpq_class> coeffs(size_t J) const {
    return rational_germ_coeffs(num_, den_, J);
  }

  TruncatedSeries series(size_t J, mpfr_prec_t prec) const {
    return rational_to_series(num_, den_, J, prec);
  }

  // Conjugated germ g = A f(z/A); all |coefficients| < 1.
  TruncatedSeries conjugated_series(size_t J, mpfr_prec_t prec) const {
    return conjugate_scale(series(J, prec), a_exp_);
  }

  // Table for g covering degree >= K and radii <= 2^{-s}; grown lazily and
  // shared (requests are rounded up to cut rebuild churn).
  std::shared_ptr<const IterCoeffTable> table(size_t K, long s_bits) const {
    std::lock_guard<std::mutex> lock(mu_);
    if (table_ && table_->max_degree() >= K && table_->target_bits() >= s_bits)
      return table_;
    size_t Kr = ((std::max(K, (size_t)8) + 31) / 32) * 32;
    long sr = ((std::max(s_bits, 64L) + 63) / 64) * 64;
    mpfr_prec_t p = (mpfr_prec_t)(sr + detail::table_margin_bits(Kr) + 32);
    table_ = std::make_shared<const IterCoeffTable>(
        iterate_coeff_table(conjugated_series(Kr, p), Kr, sr));
    return table_;
  }

  void set_table(std::shared_ptr<const IterCoeffTable> t) const {
    std::lock_guard<std::mutex> lock(mu_);
    table_ = std::move(t);
  }

 private:
  std::vector<mpq_class> num_, den_;
  int r_ = 1;
  long a_exp_ = 0, c_exp_ = 0, alpha_ = 2;
  mpq_class R_lower_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const IterCoeffTable> table_;
};

// Certified upper bound on |a_k^{(ell)} z^{k+1}| (f-coordinates):
// (alpha A^r ell)^{k/r} * z_hi^{k+1}, outward.
inline BigReal tail_bound(const ParabolicGerm& germ, size_t k,
                          const mpz_class& ell, const BigReal& z_abs_hi) {
  mpfr_prec_t p = 96;
  BigReal base(p);
  mpz_class c = mpz_class(germ.alpha()) << (germ.A_exp() * germ.r());
  c *= ell;
  mpfr_set_z(base.get(), c.get_mpz_t(), MPFR_RNDU);
  BigReal t(p);
  mpfr_pow_ui(t.get(), base.get(), (unsigned long)k, MPFR_RNDU);
  mpfr_rootn_ui(t.get(), t.get(), (unsigned long)germ.r(), MPFR_RNDU);
  BigReal zp(p);
  mpfr_pow_ui(zp.get(), z_abs_hi.get(), (unsigned long)(k + 1), MPFR_RNDU);
  BigReal out(p);
  mpfr_mul(out.get(), t.get(), zp.get(), MPFR_RNDU);
  return out;
}

struct LongIterateResult {
  Ball w;   // f^ell(z)
  Ball dw;  // (f^ell)'(z)
  mpz_class ell;
};

// f^ell(z) and (f^ell)'(z) for an explicit iteration count ell >= 1, via the
// coefficient table of the conjugated germ: one fused table walk, certified
// tails added to both radii.  The caller must keep z inside the certified
// regime (the internal geometric-tail check rejects anything else).
inline LongIterateResult long_iterate_count(const ParabolicGerm& germ,
                                            const Ball& z,
                                            const mpz_class& ell,
                                            long s_bits) {
  if (sgn(ell) <= 0) throw IterationTooShort();

  size_t K = (size_t)(2 * s_bits + 3);
  auto table = germ.table(K, s_bits + germ.A_exp() + 8);

  mpfr_prec_t p0 = std::max<mpfr_prec_t>(
      z.precision(), s_bits + detail::table_margin_bits(K) + 64);
  BigReal target = BigReal::pow2(-s_bits);

  for (int attempt = 0; attempt < 4; ++attempt, p0 *= 2) {
    mpfr_prec_t p = p0;
    Ball Z = ball_mul_2exp(z.at_precision(p), germ.A_exp());
    BigReal Zhi = Z.abs_upper();

    // q = (alpha*ell)^{1/r} * |Z|  (< 1/2 by choice of C)
    BigReal q(96);
    {
      BigReal al(96);
      mpz_class ae = mpz_class(germ.alpha()) * ell;
      mpfr_set_z(al.get(), ae.get_mpz_t(), MPFR_RNDU);
      mpfr_rootn_ui(q.get(), al.get(), (unsigned long)germ.r(), MPFR_RNDU);
      mpfr_mul(q.get(), q.get(), Zhi.get(), MPFR_RNDU);
    }
    BigReal half = BigReal::pow2(-1);
    if (!(q < half)) {
      // geometric tail control failed; only tighter input can fix this
      throw BallTooLarge("tail ratio not certified below 1/2");
    }

    // fused Horner: accv = sum_j b_j Z^{j-1}, accd = sum_j j b_j Z^{j-1}
    Ball accv(p), accd(p);
    for (size_t j = K; j >= 2; --j) {
      Ball bj = eval_coeff(*table, j, ell, p);
      accv = ball_mul(ball_add(accv, bj), Z);
      accd = ball_mul(ball_add(accd, ball_scale(bj, BigReal((long)j, 64))), Z);
    }
    Ball one = Ball::exact(1.0, 0.0, p);
    Ball wg = ball_mul(ball_add(one, accv), Z);  // g^ell(Z) = Z(1 + sum ...)
    Ball dwg = ball_add(one, accd);

    // truncation tails: sum_{k>=K} q^k |Z| for the value,
    // sum_{k>=K} (k+1) q^k <= (K+1) q^K / (1-2q) for the derivative
    {
      BigReal qK(96), tv(96), td(96), den(96);
      mpfr_pow_ui(qK.get(), q.get(), (unsigned long)K, MPFR_RNDU);
      mpfr_ui_sub(den.get(), 1, q.get(), MPFR_RNDD);
      mpfr_mul(tv.get(), qK.get(), Zhi.get(), MPFR_RNDU);
      mpfr_div(tv.get(), tv.get(), den.get(), MPFR_RNDU);
      wg.add_error(tv);
      mpfr_mul_2ui(den.get(), q.get(), 1, MPFR_RNDU);
      mpfr_ui_sub(den.get(), 1, den.get(), MPFR_RNDD);
      mpfr_mul_ui(td.get(), qK.get(), (unsigned long)(K + 1), MPFR_RNDU);
      mpfr_div(td.get(), td.get(), den.get(), MPFR_RNDU);
      dwg.add_error(td);
    }

    Ball w = ball_mul_2exp(wg, -germ.A_exp());
    Ball dw = dwg;  // d/dz [g^ell(Az)/A] = (g^ell)'(Az)

    // accept when the certified radius is 2^{-s} plus what the input ball
    // itself forces through the derivative
    BigReal allowance(96);
    mpfr_mul(allowance.get(), z.rad().get(), dw.abs_upper().get(), MPFR_RNDU);
    mpfr_mul_2ui(allowance.get(), allowance.get(), 2, MPFR_RNDU);
    mpfr_add(allowance.get(), allowance.get(), target.get(), MPFR_RNDU);
    if (w.rad() <= allowance && dw.rad() <= allowance) {
      return {w, dw, ell};
    }
  }
  throw PrecisionExhausted("long_iterate: radius above target after retries");
}

// f^ell(z) for ell = floor(m^r / C) with the block contract |z| < 1/m and
// 1/m below the certified convergence radius.
inline LongIterateResult long_iterate(const ParabolicGerm& germ, const Ball& z,
                                      const mpz_class& m, long s_bits) {
  if (sgn(m) <= 0) throw std::invalid_argument("m must be positive");
  mpz_class mr;
  mpz_pow_ui(mr.get_mpz_t(), m.get_mpz_t(), (unsigned long)germ.r());
  mpz_class ell = mr >> germ.C_exp();
  if (ell == 0) throw IterationTooShort();
  if (!(mpq_class(1) / m < germ.R_lower()))
    throw BallTooLarge("1/m is not below the certified convergence radius");
  {
    // certify |z| * m < 1
    BigReal t(96);
    mpfr_mul_z(t.get(), z.abs_upper().get(), m.get_mpz_t(), MPFR_RNDU);
    if (!(mpfr_cmp_ui(t.get(), 1) < 0))
      throw BallTooLarge("ball not certified inside |z| < 1/m");
  }
  return long_iterate_count(germ, z, ell, s_bits);
}

inline LongIterateResult long_iterate(const ParabolicGerm& germ, const Ball& z,
                                      long m, long s_bits) {
  return long_iterate(germ, z, mpz_class(m), s_bits);
}

// Plain certified iteration of the germ (ball map evaluation), used by the
// oracle tests and as the fallback when m^r < C.
inline Ball germ_apply(const ParabolicGerm& germ, const Ball& z) {
  mpfr_prec_t p = z.precision();
  Ball num(p), den(p);
  const auto& nc = germ.num();
  const auto& dc = germ.den();
  for (size_t j = nc.size(); j >= 1; --j) {
    num = ball_mul(num, z);
    num = ball_add(num, Ball::exact(nc[j - 1], 0, p));
  }
  for (size_t j = dc.size(); j >= 1; --j) {
    den = ball_mul(den, z);
    den = ball_add(den, Ball::exact(dc[j - 1], 0, p));
  }
  return ball_div(num, den);
}

}  // namespace parabolica
