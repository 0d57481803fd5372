/* SPDX-License-Identifier: Apache-2.0 */
#include <catch2/catch_amalgamated.hpp>

#include "parabolica/longiter.hpp"

using namespace parabolica;

namespace {

// Independent oracle: plain ball iteration at high precision.
Ball naive_iterate(const ParabolicGerm& g, Ball z, const mpz_class& n) {
  for (mpz_class i = 0; i < n; ++i) z = germ_apply(g, z);
  return z;
}

bool overlap(const Ball& a, const Ball& b) {
  Ball d = ball_sub(a, b);
  BigReal rr(96);
  mpfr_add(rr.get(), a.rad().get(), b.rad().get(), MPFR_RNDU);
  return d.hypot_down() <= rr;
}

ParabolicGerm cauliflower_germ() {  // w + w^2 (germ of z^2+1/4 at 1/2)
  return ParabolicGerm({0, 1, 1}, {1});
}
ParabolicGerm milnor_germ() {  // z + z^4
  return ParabolicGerm({0, 1, 0, 0, 1}, {1});
}
ParabolicGerm geometric_germ() {  // z/(1-z)
  return ParabolicGerm({0, 1}, {1, -1});
}

}  // namespace

TEST_CASE("scaling constant A") {
  CHECK(compute_scaling_A_exp({0, 1, 1}, {1}) == 1);       // z+z^2 -> A=2
  CHECK(compute_scaling_A_exp({0, 1}, {1, -1}) == 1);      // z/(1-z) -> A=2
  CHECK(compute_scaling_A_exp({0, 1, 4}, {1}) == 3);       // z+4z^2 -> A=8
}

TEST_CASE("germ constants") {
  ParabolicGerm c = cauliflower_germ();
  CHECK(c.r() == 1);
  CHECK(c.A_exp() == 1);
  CHECK(c.alpha() == 2);
  CHECK(c.C_exp() == 4);  // C = 16 > 2^1 * 2 * 2^1 = 8
  CHECK(c.R_lower() == mpq_class(1, 2));

  ParabolicGerm m = milnor_germ();
  CHECK(m.r() == 3);
  CHECK(m.A_exp() == 1);
  CHECK(m.alpha() == 54);
  CHECK(m.C_exp() == 12);  // C = 4096 > 2^3 * 54 * 2^3 = 3456
}

TEST_CASE("closed form for the geometric germ") {
  // f^n(z) = z/(1-nz); m=1024, ell = 2^10/16 = 64, z = 2^-11
  ParabolicGerm g = geometric_germ();
  Ball z = Ball::exact(mpq_class(1, 2048), 0, 256);
  LongIterateResult res = long_iterate(g, z, 1024, 64);
  CHECK(res.ell == 64);
  mpq_class den = 1 - mpq_class(64, 2048);
  mpq_class w_exact = mpq_class(1, 2048) / den;
  mpq_class dw_exact = 1 / (den * den);
  Ball we = Ball::exact(w_exact, 0, 256);
  Ball dwe = Ball::exact(dw_exact, 0, 256);
  CHECK(overlap(res.w, we));
  CHECK(overlap(res.dw, dwe));
  CHECK(res.w.rad_double() <= std::ldexp(1.0, -60));
}

TEST_CASE("fixed point at the origin") {
  ParabolicGerm g = cauliflower_germ();
  Ball z = Ball::exact(0.0, 0.0, 128);
  LongIterateResult res = long_iterate(g, z, 64, 53);
  CHECK(res.w.hypot_up().to_double() == 0.0);
  Ball one = Ball::exact(1.0, 0.0, 128);
  CHECK(overlap(res.dw, one));
}

TEST_CASE("agreement with naive iteration, r = 1") {
  ParabolicGerm g = cauliflower_germ();
  for (long e = 4; e <= 10; ++e) {
    mpz_class m = mpz_class(1) << e;
    // z = (1 + i) / (2m sqrt(2))-ish: pick exact dyadic inside |z| < 1/m
    Ball z = Ball::exact(mpq_class(1, 4 * m), mpq_class(1, 4 * m), 512);
    LongIterateResult res = long_iterate(g, z, m, 53);
    Ball ref = naive_iterate(g, z, res.ell);
    INFO("m = 2^" << e << ", ell = " << res.ell.get_str());
    REQUIRE(overlap(res.w, ref));
  }
}

TEST_CASE("agreement with naive iteration, r = 3") {
  ParabolicGerm g = milnor_germ();
  for (long e = 2; e <= 6; ++e) {
    mpz_class m = mpz_class(1) << e;
    mpz_class mr = m * m * m;
    Ball z = Ball::exact(mpq_class(1, 4 * m), mpq_class(1, 4 * m), 512);
    if (mr < (mpz_class(1) << g.C_exp())) {
      // m^r < C leaves no accelerated step to take
      CHECK_THROWS_AS(long_iterate(g, z, m, 53), IterationTooShort);
      continue;
    }
    LongIterateResult res = long_iterate(g, z, m, 53);
    Ball ref = naive_iterate(g, z, res.ell);
    INFO("m = 2^" << e << ", ell = " << res.ell.get_str());
    REQUIRE(overlap(res.w, ref));
  }
}

TEST_CASE("ball preconditions") {
  ParabolicGerm g = cauliflower_germ();
  Ball big = Ball::exact(mpq_class(1, 16), 0, 128);
  CHECK_THROWS_AS(long_iterate(g, big, 64, 53), BallTooLarge);  // |z| = 4/m
  CHECK_THROWS_AS(long_iterate(g, big, 2, 53), IterationTooShort);
}

TEST_CASE("tail bounds") {
  ParabolicGerm g = geometric_germ();  // alpha=2, A=2, C=16
  mpz_class ell = 64;
  BigReal zhi(96);
  mpfr_set_ui_2exp(zhi.get(), 1, -10, MPFR_RNDU);
  BigReal b = tail_bound(g, 10, ell, zhi);
  CHECK(b <= BigReal::pow2(-10));
  CHECK(b.to_double() == Catch::Approx(std::ldexp(1.0, -30)).epsilon(1e-6));

  // derivative weight: (k+1) * bound <= 2^{-k/2} for large k
  for (size_t k = 20; k <= 60; k += 10) {
    BigReal t = tail_bound(g, k, ell, zhi);
    BigReal weighted(96);
    mpfr_mul_ui(weighted.get(), t.get(), (unsigned long)(k + 1), MPFR_RNDU);
    REQUIRE(weighted <= BigReal::pow2(-(long)k / 2));
  }
}

TEST_CASE("semigroup against one naive continuation") {
  ParabolicGerm g = cauliflower_germ();
  Ball z = Ball::exact(mpq_class(1, 2048), mpq_class(1, 8192), 512);
  LongIterateResult first = long_iterate(g, z, 1024, 80);
  // |w| is still below 1/512
  LongIterateResult second = long_iterate(g, first.w, 512, 80);
  Ball ref = naive_iterate(g, z, first.ell + second.ell);
  REQUIRE(overlap(second.w, ref));
}

TEST_CASE("derivative matches a central finite difference") {
  ParabolicGerm g = cauliflower_germ();
  const long s = 64;
  mpq_class z0(1, 2048), h(1, mpz_class(1) << 40);  // h ~ |z| 2^{-s/2}
  Ball zp = Ball::exact(z0 + h, 0, 768);
  Ball zm = Ball::exact(z0 - h, 0, 768);
  LongIterateResult res =
      long_iterate(g, Ball::exact(z0, 0, 768), 1024, s);
  Ball fp = naive_iterate(g, zp, res.ell);
  Ball fm = naive_iterate(g, zm, res.ell);
  Ball diff = ball_div(ball_sub(fp, fm), Ball::exact(2 * h, 0, 768));
  Ball err = ball_sub(diff, res.dw);
  double rel = err.abs_upper().to_double() / res.dw.hypot_down().to_double();
  REQUIRE(rel <= std::ldexp(1.0, -s / 4));
}

TEST_CASE("monotone escape on the repelling axis") {
  for (auto* germ : {"c", "m"}) {
    ParabolicGerm g = (*germ == 'c') ? cauliflower_germ() : milnor_germ();
    for (long e = 4; e <= 8; ++e) {
      mpz_class m = mpz_class(1) << e;
      mpz_class mr;
      mpz_pow_ui(mr.get_mpz_t(), m.get_mpz_t(), (unsigned long)g.r());
      if (mr < (mpz_class(1) << g.C_exp())) continue;
      Ball z = Ball::exact(mpq_class(1, 2 * m), 0, 256);
      LongIterateResult res = long_iterate(g, z, m, 53);
      INFO((*germ == 'c' ? "cauliflower" : "milnor4") << " m = 2^" << e);
      REQUIRE(res.w.abs_lower() > z.abs_upper());
    }
  }
}
