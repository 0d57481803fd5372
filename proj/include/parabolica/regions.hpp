/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <utility>
#include <vector>

#include "parabolica/arith.hpp"
#include "parabolica/map.hpp"

// Three-valued certified membership tests for the region primitives used by
// the per-point decision procedure: round disks, angular sectors about a set
// of axis directions, and the diamond-shaped invariant petals that trap
// orbits converging to a parabolic point.

namespace parabolica {

enum class Tri { Inside, Outside, Undecided };

inline Tri tri_all(Tri a, Tri b) {
  if (a == Tri::Inside && b == Tri::Inside) return Tri::Inside;
  if (a == Tri::Outside || b == Tri::Outside) return Tri::Outside;
  return Tri::Undecided;
}

inline Tri tri_any(Tri a, Tri b) {
  if (a == Tri::Inside || b == Tri::Inside) return Tri::Inside;
  if (a == Tri::Outside && b == Tri::Outside) return Tri::Outside;
  return Tri::Undecided;
}

inline Tri tri_not(Tri a) {
  if (a == Tri::Inside) return Tri::Outside;
  if (a == Tri::Outside) return Tri::Inside;
  return Tri::Undecided;
}

// |w - c| versus R.
inline Tri disk_membership(const Ball& w, const QPoint& c,
                           const mpq_class& R) {
  Ball d = ball_sub(w, Ball::exact(c.x, c.y, w.precision()));
  auto [lo, hi] = ball_abs(d);
  if (mpfr_cmp_q(hi.get(), R.get_mpq_t()) < 0) return Tri::Inside;
  if (mpfr_cmp_q(lo.get(), R.get_mpq_t()) > 0) return Tri::Outside;
  return Tri::Undecided;
}

// |w - c|^2 versus R2.  Used for disks whose radius is irrational but whose
// squared radius is rational, so both sides stay exactly representable.
inline Tri disk_membership_sq(const Ball& w, const QPoint& c,
                              const mpq_class& R2) {
  Ball d = ball_sub(w, Ball::exact(c.x, c.y, w.precision()));
  auto [lo, hi] = ball_abs(d);
  mpfr_sqr(hi.get(), hi.get(), MPFR_RNDU);
  if (mpfr_cmp_q(hi.get(), R2.get_mpq_t()) < 0) return Tri::Inside;
  mpfr_sqr(lo.get(), lo.get(), MPFR_RNDD);
  if (mpfr_cmp_q(lo.get(), R2.get_mpq_t()) > 0) return Tri::Outside;
  return Tri::Undecided;
}

// Round trap disk tangent to a parabolic point, stored with an exact squared
// radius.  Forward invariance is checked by boundary sampling at scene load,
// with an exemption in a small sector near the tangency where the inward
// margin degenerates quadratically.
struct TrapDisk {
  QPoint center;
  mpq_class radius2;

  Tri membership(const Ball& w) const {
    return disk_membership_sq(w, center, radius2);
  }
};

namespace detail {

// Directed bounds on Re z and |Im z| of a ball, at radius precision.
struct BoxBounds {
  BigReal re_lo{kRadiusPrecision}, re_hi{kRadiusPrecision};
  BigReal im_abs_lo{kRadiusPrecision}, im_abs_hi{kRadiusPrecision};
};

inline BoxBounds box_bounds(const Ball& z) {
  BoxBounds b;
  BigReal r(kRadiusPrecision);
  mpfr_set(r.get(), z.rad().get(), MPFR_RNDU);
  mpfr_sub(b.re_lo.get(), z.re().get(), r.get(), MPFR_RNDD);
  mpfr_add(b.re_hi.get(), z.re().get(), r.get(), MPFR_RNDU);
  BigReal ia(kRadiusPrecision);
  mpfr_abs(ia.get(), z.im().get(), MPFR_RNDD);
  mpfr_sub(b.im_abs_lo.get(), ia.get(), r.get(), MPFR_RNDD);
  if (mpfr_sgn(b.im_abs_lo.get()) < 0) mpfr_set_zero(b.im_abs_lo.get(), 1);
  mpfr_abs(ia.get(), z.im().get(), MPFR_RNDU);
  mpfr_add(b.im_abs_hi.get(), ia.get(), r.get(), MPFR_RNDU);
  return b;
}

}  // namespace detail

// Sector {|arg((w - apex) conj(axis))| < theta} given a certified enclosure
// [cos_hi is the upper end of cos(theta), cos_lo the lower].  Works for any
// theta in (0, pi): the test is Re t vs cos(theta)|t|.
struct Cone {
  QPoint apex;
  double ax = 1.0, ay = 0.0;      // exact dyadic axis direction (unit-ish)
  BigReal cos_lo{64}, cos_hi{64};

  Tri membership(const Ball& w) const {
    Ball zeta = ball_sub(w, Ball::exact(apex.x, apex.y, w.precision()));
    Ball t = ball_mul(zeta, Ball::exact(ax, -ay, w.precision()));
    auto b = detail::box_bounds(t);
    auto [abs_lo, abs_hi] = ball_abs(t);
    BigReal thr(kRadiusPrecision);
    // inside: Re t > upper(cos * |t|)
    if (mpfr_sgn(cos_hi.get()) >= 0)
      mpfr_mul(thr.get(), cos_hi.get(), abs_hi.get(), MPFR_RNDU);
    else
      mpfr_mul(thr.get(), cos_hi.get(), abs_lo.get(), MPFR_RNDU);
    if (mpfr_cmp(b.re_lo.get(), thr.get()) > 0) return Tri::Inside;
    // outside: Re t < lower(cos * |t|)
    if (mpfr_sgn(cos_lo.get()) >= 0)
      mpfr_mul(thr.get(), cos_lo.get(), abs_lo.get(), MPFR_RNDD);
    else
      mpfr_mul(thr.get(), cos_lo.get(), abs_hi.get(), MPFR_RNDD);
    if (mpfr_cmp(b.re_hi.get(), thr.get()) < 0) return Tri::Outside;
    return Tri::Undecided;
  }
};

// Certified enclosure of cos(pi * q) for rational q, as a Cone angle.
inline std::pair<BigReal, BigReal> cos_pi_enclosure(const mpq_class& q) {
  BigReal lo(64), hi(64);
  BigReal pi(128), x(128);
  mpfr_const_pi(pi.get(), MPFR_RNDD);
  mpfr_mul_q(x.get(), pi.get(), q.get_mpq_t(), MPFR_RNDD);
  mpfr_cos(lo.get(), x.get(), MPFR_RNDN);
  mpfr_const_pi(pi.get(), MPFR_RNDU);
  mpfr_mul_q(x.get(), pi.get(), q.get_mpq_t(), MPFR_RNDU);
  mpfr_cos(hi.get(), x.get(), MPFR_RNDN);
  if (mpfr_cmp(lo.get(), hi.get()) > 0) mpfr_swap(lo.get(), hi.get());
  // widen by a couple of ulps to absorb the RNDN cosine calls
  mpfr_nextbelow(lo.get());
  mpfr_nextbelow(lo.get());
  mpfr_nextabove(hi.get());
  mpfr_nextabove(hi.get());
  return {std::move(lo), std::move(hi)};
}

// Union of sectors about the repelling axes through one point, restricted by
// the resolvability gate: the test is only attempted when
// radius(w) < |center(w) - apex|^2, otherwise Undecided.
struct WedgeSet {
  std::vector<Cone> cones;

  Tri membership(const Ball& w) const {
    if (cones.empty()) return Tri::Outside;
    const QPoint& q = cones.front().apex;
    Ball zeta = ball_sub(w, Ball::exact(q.x, q.y, w.precision()));
    BigReal c2(kRadiusPrecision);
    mpfr_hypot(c2.get(), zeta.re().get(), zeta.im().get(), MPFR_RNDD);
    mpfr_sqr(c2.get(), c2.get(), MPFR_RNDD);
    if (mpfr_cmp(zeta.rad().get(), c2.get()) >= 0) return Tri::Undecided;
    Tri acc = Tri::Outside;
    for (const auto& c : cones) acc = tri_any(acc, c.membership(w));
    return acc;
  }
};

// Four-line petal: the intersection of a cone with vertex `apex` along
// `axis` and the opposite cone with vertex apex + length*axis.  Forward
// invariance under the map is checked by boundary sampling at scene load.
struct Diamond {
  Cone near, far;

  Tri membership(const Ball& w) const {
    return tri_all(near.membership(w), far.membership(w));
  }

  static Diamond make(const QPoint& p, double ax, double ay,
                      const mpq_class& cos_q_lo, const mpq_class& cos_q_hi,
                      const mpq_class& length) {
    Diamond d;
    d.near.apex = p;
    d.near.ax = ax;
    d.near.ay = ay;
    mpfr_set_q(d.near.cos_lo.get(), cos_q_lo.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(d.near.cos_hi.get(), cos_q_hi.get_mpq_t(), MPFR_RNDU);
    d.far.apex.x = p.x + length * mpq_class(ax);
    d.far.apex.y = p.y + length * mpq_class(ay);
    d.far.ax = -ax;
    d.far.ay = -ay;
    d.far.cos_lo = d.near.cos_lo;
    d.far.cos_hi = d.near.cos_hi;
    return d;
  }
};

// Distance from a ball to the union of rays from `apex` along the given
// axes, as certified lower/upper bounds.  For a point behind the apex the
// distance to a ray is the full distance to the apex.
struct RayDistance {
  BigReal lo{kRadiusPrecision}, hi{kRadiusPrecision};
};

inline RayDistance ray_set_distance(
    const Ball& w, const QPoint& apex,
    const std::vector<std::pair<double, double>>& axes) {
  Ball zeta = ball_sub(w, Ball::exact(apex.x, apex.y, w.precision()));
  RayDistance out;
  bool first = true;
  for (const auto& ax : axes) {
    Ball t = ball_mul(zeta, Ball::exact(ax.first, -ax.second,
                                        w.precision()));
    auto b = detail::box_bounds(t);
    auto [abs_lo, abs_hi] = ball_abs(t);
    BigReal dlo(kRadiusPrecision), dhi(kRadiusPrecision);
    if (mpfr_sgn(b.re_lo.get()) >= 0) {
      // entirely in front: distance is |Im t|
      dlo = b.im_abs_lo;
      dhi = b.im_abs_hi;
    } else if (mpfr_sgn(b.re_hi.get()) <= 0) {
      // entirely behind: distance is |t|
      dlo = abs_lo;
      dhi = abs_hi;
    } else {
      // straddles the apex-normal line
      dlo = b.im_abs_lo;
      dhi = abs_hi;
    }
    if (first || mpfr_cmp(dlo.get(), out.lo.get()) < 0)
      mpfr_set(out.lo.get(), dlo.get(), MPFR_RNDD);
    if (first || mpfr_cmp(dhi.get(), out.hi.get()) < 0)
      mpfr_set(out.hi.get(), dhi.get(), MPFR_RNDU);
    first = false;
  }
  return out;
}

}  // namespace parabolica
