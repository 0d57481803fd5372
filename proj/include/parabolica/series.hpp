/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include "parabolica/arith.hpp"

// Truncated power-series algebra and the iterate-coefficient machinery:
// for a germ f(z) = z + a_2 z^2 + ... tangent to the identity, the
// coefficient of z^k in the n-th iterate f^n is a polynomial in n of degree
// at most k-1.  This module computes those polynomials with certified error
// balls, which is what makes "long" iterations near a parabolic point cheap.

namespace parabolica {

struct NotTangentToIdentity : std::runtime_error {
  NotTangentToIdentity()
      : std::runtime_error("germ is not tangent to the identity at 0") {}
};
struct DegreeOutOfRange : std::runtime_error {
  DegreeOutOfRange() : std::runtime_error("coefficient degree out of range") {}
};
struct PrecisionExhausted : std::runtime_error {
  explicit PrecisionExhausted(const std::string& what)
      : std::runtime_error(what) {}
};

// Coefficients c_1..c_J of a power series with zero constant term, chopped
// at degree J.  coeff(j) is the coefficient of z^j.
class TruncatedSeries {
 public:
  TruncatedSeries(size_t degree, mpfr_prec_t prec)
      : coeffs_(degree, Ball(prec)) {}

  size_t degree() const { return coeffs_.size(); }
  const Ball& coeff(size_t j) const {
    if (j < 1 || j > coeffs_.size()) throw DegreeOutOfRange();
    return coeffs_[j - 1];
  }
  void set_coeff(size_t j, const Ball& b) {
    if (j < 1 || j > coeffs_.size()) throw DegreeOutOfRange();
    coeffs_[j - 1] = b;
  }

  TruncatedSeries at_precision(mpfr_prec_t p) const {
    TruncatedSeries s(coeffs_.size(), p);
    for (size_t i = 0; i < coeffs_.size(); ++i)
      s.coeffs_[i] = coeffs_[i].at_precision(p);
    return s;
  }

  bool tangent_to_identity() const {
    if (coeffs_.empty()) return false;
    const Ball& c1 = coeffs_[0];
    return c1.is_exact() && c1.im().is_zero() &&
           mpfr_cmp_ui(c1.re().get(), 1) == 0;
  }

  // Ball evaluation by Horner (no constant term).
  Ball eval(const Ball& z) const {
    mpfr_prec_t p = std::max(z.precision(), coeffs_.empty()
                                                ? (mpfr_prec_t)64
                                                : coeffs_[0].precision());
    Ball acc(p);
    for (size_t j = coeffs_.size(); j >= 1; --j) {
      acc = ball_add(acc, coeffs_[j - 1]);
      acc = ball_mul(acc, z);
    }
    return acc;
  }

 private:
  std::vector<Ball> coeffs_;  // index i holds coefficient of z^{i+1}
};

// Product of two truncated series, chopped at degree J.
inline TruncatedSeries series_mul_chop(const TruncatedSeries& a,
                                       const TruncatedSeries& b, size_t J) {
  mpfr_prec_t p = 64;
  if (a.degree() >= 1) p = std::max(p, a.coeff(1).precision());
  if (b.degree() >= 1) p = std::max(p, b.coeff(1).precision());
  TruncatedSeries out(J, p);
  for (size_t k = 2; k <= J; ++k) {
    Ball acc(p);
    bool any = false;
    for (size_t i = 1; i + 1 <= k; ++i) {
      size_t j = k - i;
      if (i > a.degree() || j > b.degree()) continue;
      acc = ball_add(acc, ball_mul(a.coeff(i), b.coeff(j)));
      any = true;
    }
    if (any) out.set_coeff(k, acc);
  }
  return out;
}

// f(z)^m chopped at degree J via binary powering.
inline TruncatedSeries series_pow_doubling(const TruncatedSeries& f,
                                           unsigned long m, size_t J) {
  if (m < 1) throw std::invalid_argument("power must be >= 1");
  std::optional<TruncatedSeries> acc;
  TruncatedSeries base = f;
  while (true) {
    if (m & 1) acc = acc ? series_mul_chop(*acc, base, J) : base;
    m >>= 1;
    if (!m) break;
    base = series_mul_chop(base, base, J);
  }
  return *acc;
}

// Conjugation by z -> Cz with C = 2^c: g(z) = C f(z/C), coefficients
// a_i / C^{i-1}; exact (dyadic scaling).
inline TruncatedSeries conjugate_scale(const TruncatedSeries& f, long c_exp) {
  if (c_exp < 0) throw std::invalid_argument("C must be a power of two >= 1");
  TruncatedSeries g(f.degree(), f.degree() ? f.coeff(1).precision() : 64);
  for (size_t j = 1; j <= f.degree(); ++j)
    g.set_coeff(j, ball_mul_2exp(f.coeff(j), -c_exp * (long)(j - 1)));
  return g;
}

namespace detail {

// Bernoulli numbers (B_1 = -1/2 convention), cached.
inline const mpq_class& bernoulli(size_t m) {
  static std::vector<mpq_class> cache = {mpq_class(1)};
  while (cache.size() <= m) {
    size_t k = cache.size();
    // B_k = -1/(k+1) * sum_{i=0}^{k-1} C(k+1, i) B_i
    mpq_class s = 0;
    mpz_class binom = 1;  // C(k+1, 0)
    for (size_t i = 0; i < k; ++i) {
      s += mpq_class(binom) * cache[i];
      binom = binom * (k + 1 - i) / (i + 1);
    }
    mpq_class b = -s / (int)(k + 1);
    b.canonicalize();
    cache.push_back(b);
  }
  return cache[m];
}

// Coefficients (of n^0..n^{j+1}) of the Faulhaber polynomial
// S_j(n) = sum_{i=1}^{n} i^j.
inline std::vector<mpq_class> faulhaber_coeffs(size_t j) {
  // With B_1 = -1/2 the classical formula gives sum_{i=0}^{n-1} i^j;
  // shift by n^j - 0^j to get sum_{i=1}^{n}.
  std::vector<mpq_class> out(j + 2, mpq_class(0));
  mpz_class binom = 1;  // C(j+1, k)
  for (size_t k = 0; k <= j; ++k) {
    // term C(j+1,k) B_k n^{j+1-k} / (j+1)
    mpq_class c = mpq_class(binom) * bernoulli(k) / (int)(j + 1);
    c.canonicalize();
    out[j + 1 - k] += c;
    binom = binom * (j + 1 - k) / (k + 1);
  }
  out[j] += 1;
  if (j == 0) out[0] -= 1;
  return out;
}

}  // namespace detail

// Exact power sum: sum_{i=1}^{n} i^j, evaluated as a degree-(j+1)
// polynomial in n (cost polynomial in j and log n, not O(n)).
inline mpq_class power_sum(size_t j, const mpz_class& n) {
  if (sgn(n) < 0) throw std::invalid_argument("n must be >= 0");
  std::vector<mpq_class> cs = detail::faulhaber_coeffs(j);
  mpq_class acc = 0;
  for (size_t d = cs.size(); d >= 1; --d) {
    acc = acc * n + cs[d - 1];
  }
  return acc;
}

// First J Taylor coefficients of a rational germ num(z)/den(z), computed
// exactly over the rationals.  Requires den(0) != 0, num(0) == 0 and a unit
// linear coefficient after division by den(0).
inline std::vector<mpq_class> rational_germ_coeffs(
    const std::vector<mpq_class>& num, const std::vector<mpq_class>& den,
    size_t J) {
  if (den.empty() || den[0] == 0)
    throw std::invalid_argument("denominator constant term must be nonzero");
  if (!num.empty() && num[0] != 0) throw NotTangentToIdentity();
  // t_k from num_k = sum_{i=0}^{k} den_i t_{k-i}
  std::vector<mpq_class> t(J + 1, mpq_class(0));
  for (size_t k = 1; k <= J; ++k) {
    mpq_class s = (k < num.size()) ? num[k] : mpq_class(0);
    for (size_t i = 1; i <= k && i < den.size(); ++i) s -= den[i] * t[k - i];
    t[k] = s / den[0];
    t[k].canonicalize();
  }
  if (t[1] != 1) throw NotTangentToIdentity();
  return std::vector<mpq_class>(t.begin() + 1, t.end());  // degrees 1..J
}

inline TruncatedSeries rational_to_series(const std::vector<mpq_class>& num,
                                          const std::vector<mpq_class>& den,
                                          size_t J, mpfr_prec_t prec) {
  std::vector<mpq_class> t = rational_germ_coeffs(num, den, J);
  TruncatedSeries f(J, prec);
  for (size_t j = 1; j <= J; ++j)
    f.set_coeff(j, Ball::exact(t[j - 1], 0, prec));
  return f;
}

// For each k in 2..K, the coefficients (of n^0..n^{k-1}) of the polynomial
// a_k^{(n)}, with certified error balls.
class IterCoeffTable {
 public:
  IterCoeffTable(size_t K, long s_bits) : K_(K), s_bits_(s_bits) {}

  size_t max_degree() const { return K_; }
  long target_bits() const { return s_bits_; }

  const std::vector<Ball>& poly(size_t k) const {
    if (k < 2 || k > K_) throw DegreeOutOfRange();
    return polys_[k - 2];
  }

  std::vector<std::vector<Ball>>& mutable_polys() { return polys_; }

 private:
  size_t K_;
  long s_bits_;
  std::vector<std::vector<Ball>> polys_;  // polys_[k-2] for k in 2..K
};

namespace detail {

// Working-precision margin for the table build; kappa = 0.3, calibrated so
// final radii land below 2^{-s} on the germs this library targets (the
// paper-level loss is O(K log^2 K) bits).  Doubled on retry.
inline long table_margin_bits(size_t K) {
  double lg = std::log2((double)K + 2);
  return 64 + (long)(0.3 * (double)K * lg * lg);
}

}  // namespace detail

// Builds the table of coefficient polynomials for f tangent to identity,
// each coefficient certified to radius <= 2^{-s_bits}.
inline IterCoeffTable iterate_coeff_table(const TruncatedSeries& f, size_t K,
                                          long s_bits) {
  if (!f.tangent_to_identity()) throw NotTangentToIdentity();
  if (K < 2) throw std::invalid_argument("K must be >= 2");
  if (f.degree() < K)
    throw std::invalid_argument("germ series shorter than requested K");

  long margin = detail::table_margin_bits(K);
  for (int attempt = 0; attempt < 4; ++attempt, margin *= 2) {
    mpfr_prec_t p = (mpfr_prec_t)(s_bits + margin);
    TruncatedSeries g = f.at_precision(p);

    // Powers cache: pw[t] = f^t chopped at K, t = 1..K; each power feeds
    // the coefficients c_k^{(t)} for every k.
    std::vector<TruncatedSeries> pw;
    pw.reserve(K);
    pw.push_back(g);
    for (size_t t = 2; t <= K; ++t)
      pw.push_back(series_mul_chop(pw.back(), g, K));

    // Faulhaber polynomials of (n-1): F_d(n) = sum_{i=1}^{n-1} i^d as exact
    // rational coefficients of n^0..n^{d+1}.
    std::vector<std::vector<mpq_class>> F(K);  // d = 0..K-1
    for (size_t d = 0; d + 2 <= K + 1 && d < K; ++d) {
      std::vector<mpq_class> s = detail::faulhaber_coeffs(d);  // S_d(m)
      // substitute m = n-1 via binomial expansion
      std::vector<mpq_class> out(d + 2, mpq_class(0));
      for (size_t e = 0; e < s.size(); ++e) {
        // s[e] * (n-1)^e
        mpz_class binom = 1;
        for (size_t t = 0; t <= e; ++t) {
          mpq_class c = s[e] * binom;
          if ((e - t) % 2 == 1) c = -c;
          out[t] += c;
          binom = binom * (e - t) / (t + 1);
        }
      }
      for (auto& q : out) q.canonicalize();
      F[d] = std::move(out);
    }

    IterCoeffTable table(K, s_bits);
    auto& polys = table.mutable_polys();
    polys.clear();
    polys.reserve(K - 1);

    bool ok = true;
    BigReal target = BigReal::pow2(-s_bits);
    for (size_t k = 2; k <= K && ok; ++k) {
      // Summand polynomial P_k(i) = a_k + sum_{t=2}^{k-1} c_k^{(t)} polys[t](i)
      std::vector<Ball> P(std::max<size_t>(k - 1, 1), Ball(p));
      P[0] = g.coeff(k);
      for (size_t t = 2; t + 1 <= k; ++t) {
        const Ball& c = pw[t - 1].coeff(k);
        const std::vector<Ball>& pt = polys[t - 2];
        for (size_t d = 0; d < pt.size(); ++d)
          P[d] = ball_add(P[d], ball_mul(c, pt[d]));
      }
      // a_k^{(n)} = a_k + sum_d P[d] * F_d(n)
      std::vector<Ball> poly(k, Ball(p));
      poly[0] = g.coeff(k);
      for (size_t d = 0; d + 2 <= k; ++d) {
        const std::vector<mpq_class>& Fd = F[d];
        for (size_t e = 1; e < Fd.size() && e < k; ++e) {
          if (Fd[e] == 0) continue;
          Ball c = ball_scale(P[d], BigReal(Fd[e], p));
          poly[e] = ball_add(poly[e], c);
        }
        // constant term of F_d is 0 by construction (F_d(... ) has no n^0
        // term beyond what cancels), but keep it general:
        if (Fd[0] != 0)
          poly[0] = ball_add(poly[0], ball_scale(P[d], BigReal(Fd[0], p)));
      }
      for (const Ball& c : poly)
        if (!(c.rad() <= target)) {
          ok = false;
          break;
        }
      polys.push_back(std::move(poly));
    }
    if (ok) return table;
  }
  throw PrecisionExhausted("iterate_coeff_table: radii above target");
}

// a_k^{(n)} by Horner evaluation of the coefficient polynomial at an exact
// integer n.
inline Ball eval_coeff(const IterCoeffTable& table, size_t k,
                       const mpz_class& n, mpfr_prec_t prec) {
  if (k < 2 || k > table.max_degree()) throw DegreeOutOfRange();
  if (sgn(n) <= 0) throw std::invalid_argument("n must be >= 1");
  mpfr_prec_t pn = (mpfr_prec_t)mpz_sizeinbase(n.get_mpz_t(), 2) + 1;
  mpfr_prec_t p = std::max(prec, pn);
  Ball nb = Ball::exact(mpq_class(n), 0, p);
  const std::vector<Ball>& poly = table.poly(k);
  Ball acc(p);
  for (size_t d = poly.size(); d >= 1; --d) {
    acc = ball_mul(acc, nb);
    acc = ball_add(acc, poly[d - 1].at_precision(p));
  }
  return acc;
}

inline Ball eval_coeff(const IterCoeffTable& table, size_t k, long n,
                       mpfr_prec_t prec) {
  return eval_coeff(table, k, mpz_class(n), prec);
}

}  // namespace parabolica
