/* SPDX-License-Identifier: Apache-2.0 */
#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "parabolica/series.hpp"

using namespace parabolica;

namespace {

// ---- exact-rational oracle -------------------------------------------------
// Polynomials over Q with zero constant term, coefficients of z^1..z^K.
using QPoly = std::vector<mpq_class>;

QPoly q_mul_chop(const QPoly& a, const QPoly& b, size_t K) {
  QPoly c(K, mpq_class(0));
  for (size_t i = 1; i <= a.size(); ++i)
    for (size_t j = 1; j <= b.size() && i + j <= K; ++j)
      c[i + j - 1] += a[i - 1] * b[j - 1];
  for (auto& q : c) q.canonicalize();
  return c;
}

// a(b(z)) chopped at K.
QPoly q_compose(const QPoly& a, const QPoly& b, size_t K) {
  QPoly out(K, mpq_class(0));
  QPoly pw = b;  // b^j
  for (size_t j = 1; j <= a.size(); ++j) {
    if (j > 1) pw = q_mul_chop(pw, b, K);
    if (a[j - 1] == 0) continue;
    for (size_t d = 1; d <= K; ++d) {
      size_t idx = d - 1;
      if (idx < pw.size()) out[idx] += a[j - 1] * pw[idx];
    }
  }
  for (auto& q : out) q.canonicalize();
  return out;
}

QPoly q_iterate(const QPoly& f, long n, size_t K) {
  QPoly acc = f;
  for (long i = 1; i < n; ++i) acc = q_compose(f, acc, K);
  return acc;
}

bool ball_holds(const Ball& b, const mpq_class& q, double tol = 1e-10) {
  mpfr_prec_t p = std::max<mpfr_prec_t>(b.precision(), 128);
  Ball qq = Ball::exact(q, 0, p);
  Ball diff = ball_sub(b, qq);
  return diff.hypot_up().to_double() <= b.rad_double() + tol;
}

TruncatedSeries from_qpoly(const QPoly& f, mpfr_prec_t prec) {
  TruncatedSeries s(f.size(), prec);
  for (size_t j = 1; j <= f.size(); ++j)
    s.set_coeff(j, Ball::exact(f[j - 1], 0, prec));
  return s;
}

double coeff_center(const TruncatedSeries& s, size_t j) {
  return s.coeff(j).re().to_double();
}

}  // namespace

TEST_CASE("chopped multiplication matches direct expansion") {
  QPoly f = {1, 1};  // z + z^2
  TruncatedSeries fs = from_qpoly(f, 128);
  TruncatedSeries p = series_mul_chop(fs, fs, 3);
  CHECK(coeff_center(p, 1) == 0.0);
  CHECK(coeff_center(p, 2) == 1.0);
  CHECK(coeff_center(p, 3) == 2.0);

  // multiplication by z shifts
  QPoly idp = {1};
  TruncatedSeries shifted = series_mul_chop(fs, from_qpoly(idp, 128), 4);
  CHECK(coeff_center(shifted, 2) == 1.0);
  CHECK(coeff_center(shifted, 3) == 1.0);
  CHECK(coeff_center(shifted, 4) == 0.0);

  QPoly g = {1, 1, 1};  // z+z^2+z^3
  QPoly sq = q_mul_chop(g, g, 4);
  TruncatedSeries bs = series_mul_chop(from_qpoly(g, 128), from_qpoly(g, 128), 4);
  for (size_t j = 1; j <= 4; ++j) REQUIRE(ball_holds(bs.coeff(j), sq[j - 1]));
}

TEST_CASE("binary powering matches repeated multiplication") {
  QPoly f = {1, 1};
  TruncatedSeries cube = series_pow_doubling(from_qpoly(f, 128), 3, 4);
  QPoly oracle = q_mul_chop(q_mul_chop(f, f, 4), f, 4);
  for (size_t j = 1; j <= 4; ++j) REQUIRE(ball_holds(cube.coeff(j), oracle[j - 1]));
  CHECK(coeff_center(cube, 3) == 1.0);
  CHECK(coeff_center(cube, 4) == 3.0);

  TruncatedSeries f1 = series_pow_doubling(from_qpoly(f, 128), 1, 4);
  CHECK(coeff_center(f1, 1) == 1.0);
  CHECK(coeff_center(f1, 2) == 1.0);

  QPoly z = {1};
  TruncatedSeries zm = series_pow_doubling(from_qpoly(z, 128), 5, 6);
  for (size_t j = 1; j <= 6; ++j)
    CHECK(coeff_center(zm, j) == (j == 5 ? 1.0 : 0.0));
}

TEST_CASE("rational germ expansion") {
  // z/(1-z): all-ones coefficients
  TruncatedSeries f = rational_to_series({0, 1}, {1, -1}, 8, 128);
  for (size_t j = 1; j <= 8; ++j) {
    CHECK(coeff_center(f, j) == 1.0);
    CHECK(f.coeff(j).is_exact());
  }

  // germ of z^2 + 1/4 at p = 1/2: substitute w = z - 1/2 -> w + w^2
  TruncatedSeries g = rational_to_series({0, 1, 1}, {1}, 5, 128);
  CHECK(coeff_center(g, 1) == 1.0);
  CHECK(coeff_center(g, 2) == 1.0);
  CHECK(coeff_center(g, 3) == 0.0);

  CHECK_THROWS_AS(rational_to_series({0, 2}, {1, -1}, 4, 128),
                  NotTangentToIdentity);
  // z/(1-2z) is fine: a_1 = 1
  TruncatedSeries h = rational_to_series({0, 1}, {1, -2}, 4, 128);
  CHECK(coeff_center(h, 2) == 2.0);
}

TEST_CASE("dyadic conjugation scales coefficients exactly") {
  TruncatedSeries f = from_qpoly({1, 2}, 128);
  TruncatedSeries g = conjugate_scale(f, 1);
  CHECK(coeff_center(g, 1) == 1.0);
  CHECK(coeff_center(g, 2) == 1.0);
  CHECK(g.coeff(2).is_exact());

  TruncatedSeries same = conjugate_scale(f, 0);
  CHECK(coeff_center(same, 2) == 2.0);

  TruncatedSeries h = conjugate_scale(from_qpoly({1, 4, 16}, 128), 2);
  for (size_t j = 1; j <= 3; ++j) CHECK(coeff_center(h, j) == 1.0);
}

TEST_CASE("power sums are exact and polynomial-time in n") {
  CHECK(power_sum(1, 10) == 55);
  CHECK(power_sum(2, 4) == 30);
  CHECK(power_sum(3, 3) == 36);
  CHECK(power_sum(0, 7) == 7);
  // brute-force cross-check
  for (size_t j = 0; j <= 8; ++j) {
    for (long n : {1L, 2L, 13L, 57L}) {
      mpq_class brute = 0;
      for (long i = 1; i <= n; ++i) {
        mpz_class t;
        mpz_ui_pow_ui(t.get_mpz_t(), (unsigned long)i, (unsigned long)j);
        brute += mpq_class(t);
      }
      REQUIRE(power_sum(j, n) == brute);
    }
  }
  // huge n stays instant
  mpz_class big("1000000000000000000000000");
  mpq_class v = power_sum(1, big);
  CHECK(v == mpq_class(big) * (mpq_class(big) + 1) / 2);
}

TEST_CASE("iterate table: all-ones germ has a_k^(n) = n^(k-1)") {
  TruncatedSeries f = rational_to_series({0, 1}, {1, -1}, 5, 192);
  IterCoeffTable t = iterate_coeff_table(f, 5, 80);
  for (size_t k = 2; k <= 5; ++k) {
    const std::vector<Ball>& poly = t.poly(k);
    REQUIRE(poly.size() <= k);  // degree <= k-1
    // monomial n^{k-1}
    for (size_t d = 0; d < poly.size(); ++d) {
      mpq_class expect = (d == k - 1) ? 1 : 0;
      REQUIRE(ball_holds(poly[d], expect));
    }
  }
  Ball v = eval_coeff(t, 4, 1000, 192);
  CHECK(ball_holds(v, mpq_class(1000000000)));
}

TEST_CASE("iterate table: z+z^2") {
  TruncatedSeries f = from_qpoly({1, 1, 0, 0}, 192);
  IterCoeffTable t = iterate_coeff_table(f, 4, 80);
  REQUIRE(ball_holds(t.poly(2)[0], 0));
  REQUIRE(ball_holds(t.poly(2)[1], 1));  // a_2^(n) = n
  // a_3^(n) = n^2 - n
  REQUIRE(ball_holds(t.poly(3)[0], 0));
  REQUIRE(ball_holds(t.poly(3)[1], -1));
  REQUIRE(ball_holds(t.poly(3)[2], 1));
  CHECK(ball_holds(eval_coeff(t, 3, 2, 192), mpq_class(2)));
  CHECK(ball_holds(eval_coeff(t, 3, 4, 192), mpq_class(12)));
}

TEST_CASE("table at n=1 recovers the germ") {
  QPoly f = {1, 2, -1, 3, 0, 1};
  IterCoeffTable t = iterate_coeff_table(from_qpoly(f, 256), 6, 100);
  for (size_t k = 2; k <= 6; ++k)
    REQUIRE(ball_holds(eval_coeff(t, k, 1, 256), f[k - 1]));
  CHECK_THROWS_AS(eval_coeff(t, 1, 3, 256), DegreeOutOfRange);
  CHECK_THROWS_AS(eval_coeff(t, 7, 3, 256), DegreeOutOfRange);
}

TEST_CASE("oracle equivalence on random integer germs") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> coeff(-3, 3);
  const size_t K = 8;
  for (int trial = 0; trial < 12; ++trial) {
    QPoly f(K, mpq_class(0));
    f[0] = 1;
    for (size_t j = 2; j <= K; ++j) f[j - 1] = coeff(rng);
    IterCoeffTable t = iterate_coeff_table(from_qpoly(f, 320), K, 128);
    for (long n = 1; n <= 6; ++n) {
      QPoly fn = q_iterate(f, n, K);
      for (size_t k = 2; k <= K; ++k) {
        INFO("trial " << trial << " n " << n << " k " << k);
        REQUIRE(ball_holds(eval_coeff(t, k, n, 320), fn[k - 1]));
      }
    }
  }
}

TEST_CASE("semigroup property via series composition") {
  QPoly f = {1, 1, -2, 1, 0, 2, -1, 0};
  const size_t K = 8;
  IterCoeffTable t = iterate_coeff_table(from_qpoly(f, 320), K, 128);
  long a = 3, b = 4;
  QPoly fab = q_iterate(f, a + b, K);
  // reconstruct f^a, f^b from the table and compose with the exact oracle
  // midpoint check: centers of the composed series match f^{a+b}
  auto reconstruct = [&](long n) {
    TruncatedSeries s(K, 320);
    s.set_coeff(1, Ball::exact(mpq_class(1), 0, 320));
    for (size_t k = 2; k <= K; ++k) s.set_coeff(k, eval_coeff(t, k, n, 320));
    return s;
  };
  TruncatedSeries sa = reconstruct(a), sb = reconstruct(b);
  // compose ball series: sa(sb(z)) chopped at K
  TruncatedSeries comp(K, 320);
  comp.set_coeff(1, Ball::exact(mpq_class(0), 0, 320));
  {
    TruncatedSeries pw = sb;
    TruncatedSeries acc(K, 320);
    for (size_t j = 1; j <= K; ++j) {
      if (j > 1) pw = series_mul_chop(pw, sb, K);
      for (size_t dd = 1; dd <= K; ++dd)
        acc.set_coeff(dd, ball_add(acc.coeff(dd),
                                   ball_mul(sa.coeff(j), pw.coeff(dd))));
    }
    comp = acc;
  }
  for (size_t k = 1; k <= K; ++k) {
    INFO("degree " << k);
    REQUIRE(ball_holds(comp.coeff(k), fab[k - 1], 1e-8));
  }
}

TEST_CASE("growth bound for dominated germs") {
  // f = z + z^{r+1} + z^{r+2} + ... is exactly the paper's dominating
  // series; |a_k^{(n)}| <= (2 r^3 n)^{k/r}.
  const size_t K = 16;
  for (int r : {1, 2, 3}) {
    QPoly f(K, mpq_class(0));
    f[0] = 1;
    for (size_t j = r + 1; j <= K; ++j) f[j - 1] = 1;
    IterCoeffTable t = iterate_coeff_table(from_qpoly(f, 320), K, 128);
    double alpha = 2.0 * r * r * r;
    for (long n : {1L, 10L, 100L, 1000L}) {
      for (size_t k = 2; k <= 15; ++k) {
        Ball v = eval_coeff(t, k, n, 320);
        double bound = std::pow(alpha * (double)n, (double)k / r);
        INFO("r " << r << " n " << n << " k " << k);
        REQUIRE(v.abs_upper().to_double() <= bound * (1 + 1e-9));
      }
    }
  }
}
