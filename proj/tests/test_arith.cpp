/* SPDX-License-Identifier: Apache-2.0 */
#include <catch2/catch_amalgamated.hpp>

#include <complex>
#include <random>

#include "parabolica/arith.hpp"

using namespace parabolica;

namespace {

Ball make_ball(double re, double im, double rad, mpfr_prec_t prec = 64) {
  return Ball(BigReal(re, prec), BigReal(im, prec), BigReal(rad, prec));
}

double d(const BigReal& x) { return x.to_double(); }

// A random point guaranteed inside the ball.
std::complex<double> point_in(const Ball& b, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double th = 2 * 3.14159265358979 * u(rng);
  double rr = 0.999 * b.rad_double() * u(rng);
  return {d(b.re()) + rr * std::cos(th), d(b.im()) + rr * std::sin(th)};
}

bool inside(const Ball& b, std::complex<double> z, double slack = 1e-12) {
  double dr = z.real() - d(b.re());
  double di = z.imag() - d(b.im());
  return std::hypot(dr, di) <= b.rad_double() + slack;
}

}  // namespace

TEST_CASE("ball add accumulates radii") {
  Ball a = make_ball(1, 0, 0.1);
  Ball b = make_ball(2, 0, 0.2);
  Ball c = ball_add(a, b);
  CHECK(d(c.re()) == 3.0);
  CHECK(d(c.im()) == 0.0);
  CHECK(c.rad_double() >= 0.3);
  CHECK(c.rad_double() <= 0.3 + 1e-9);
}

TEST_CASE("zero annihilates exactly in multiplication") {
  Ball zero = Ball::exact(0.0, 0.0, 64);
  Ball b = make_ball(5, 0, 1.0);
  Ball c = ball_mul(zero, b);
  CHECK(c.re().is_zero());
  CHECK(c.im().is_zero());
  CHECK(c.is_exact());
}

TEST_CASE("exact dyadic quotient stays exact") {
  Ball one = Ball::exact(1.0, 0.0, 64);
  Ball two = Ball::exact(2.0, 0.0, 64);
  Ball half = ball_div(one, two);
  CHECK(d(half.re()) == 0.5);
  CHECK(half.is_exact());
}

TEST_CASE("division by a ball containing zero throws") {
  Ball a = Ball::exact(1.0, 0.0, 64);
  Ball b = make_ball(0.5, 0, 0.6);
  CHECK_THROWS_AS(ball_div(a, b), DivisionByZeroBall);
}

TEST_CASE("ball_abs brackets the modulus") {
  auto [lo1, hi1] = ball_abs(Ball::exact(3.0, 4.0, 64));
  CHECK(d(lo1) == Catch::Approx(5.0));
  CHECK(d(hi1) == Catch::Approx(5.0));
  CHECK(lo1 <= hi1);

  auto [lo2, hi2] = ball_abs(make_ball(0, 0, 2.0));
  CHECK(d(lo2) == 0.0);
  CHECK(d(hi2) >= 2.0);

  auto [lo3, hi3] = ball_abs(make_ball(1, 0, 0.25));
  CHECK(d(lo3) <= 0.75);
  CHECK(d(lo3) == Catch::Approx(0.75));
  CHECK(d(hi3) == Catch::Approx(1.25));
}

TEST_CASE("precision_for_pixel formula and monotonicity") {
  CHECK(precision_for_pixel(10) == 164);
  CHECK(precision_for_pixel(1) == 65);
  CHECK(precision_for_pixel(30, 2) == 1864);
  mpfr_prec_t prev = 0;
  for (long n = 1; n <= 64; ++n) {
    mpfr_prec_t p = precision_for_pixel(n);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("containment under random sampling") {
  std::mt19937_64 rng(20260826);
  std::uniform_real_distribution<double> uc(-4.0, 4.0);
  std::uniform_real_distribution<double> ur(0.0, 0.5);
  for (int it = 0; it < 10000; ++it) {
    Ball a = make_ball(uc(rng), uc(rng), ur(rng));
    Ball b = make_ball(uc(rng), uc(rng), ur(rng));
    auto x = point_in(a, rng);
    auto y = point_in(b, rng);
    int op = it % 4;
    if (op == 3 && (std::abs(y) < 0.75 || !(b.hypot_down() > b.rad()))) op = 2;
    Ball out = (op == 0)   ? ball_add(a, b)
               : (op == 1) ? ball_sub(a, b)
               : (op == 2) ? ball_mul(a, b)
                           : ball_div(a, b);
    std::complex<double> exact = (op == 0)   ? x + y
                                 : (op == 1) ? x - y
                                 : (op == 2) ? x * y
                                             : x / y;
    INFO("op " << op << " iter " << it);
    REQUIRE(inside(out, exact, 1e-9));
  }
}

TEST_CASE("shrinking input radii never enlarges output radius") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uc(-2.0, 2.0);
  std::uniform_real_distribution<double> ur(0.01, 0.3);
  for (int it = 0; it < 300; ++it) {
    double ar = uc(rng), ai = uc(rng), br = uc(rng), bi = uc(rng);
    double ra = ur(rng), rb = ur(rng);
    Ball a1 = make_ball(ar, ai, ra), b1 = make_ball(br, bi, rb);
    Ball a2 = make_ball(ar, ai, ra / 2), b2 = make_ball(br, bi, rb / 2);
    CHECK(ball_add(a2, b2).rad_double() <= ball_add(a1, b1).rad_double());
    CHECK(ball_mul(a2, b2).rad_double() <= ball_mul(a1, b1).rad_double());
  }
}

TEST_CASE("raising precision does not increase rounding radius") {
  // pi/3-ish non-dyadic centers so every op rounds
  for (mpfr_prec_t p : {64, 128, 256, 512}) {
    Ball a = Ball::exact(mpq_class(1, 3), mpq_class(2, 7), p);
    Ball b = Ball::exact(mpq_class(5, 11), mpq_class(-3, 13), p);
    Ball lo = ball_mul(ball_add(a, b), a);
    Ball a2 = Ball::exact(mpq_class(1, 3), mpq_class(2, 7), 2 * p);
    Ball b2 = Ball::exact(mpq_class(5, 11), mpq_class(-3, 13), 2 * p);
    Ball hi = ball_mul(ball_add(a2, b2), a2);
    CHECK(hi.rad_double() <= lo.rad_double());
  }
}

TEST_CASE("integer powers stay certified") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> uc(-1.2, 1.2);
  for (int it = 0; it < 500; ++it) {
    Ball a = make_ball(uc(rng), uc(rng), 0.01);
    auto x = point_in(a, rng);
    unsigned long n = 1 + it % 6;
    Ball out = ball_pow_ui(a, n);
    std::complex<double> e = std::pow(x, (int)n);
    REQUIRE(inside(out, e, 1e-9));
  }
}

TEST_CASE("ball_contains certifies subset relation") {
  Ball big = make_ball(0, 0, 1.0);
  CHECK(ball_contains(big, make_ball(0.2, 0.2, 0.5)));
  CHECK_FALSE(ball_contains(big, make_ball(0.8, 0.0, 0.5)));
  CHECK(ball_contains(big, big));
}
