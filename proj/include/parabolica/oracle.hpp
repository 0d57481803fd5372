/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "parabolica/arith.hpp"
#include "parabolica/map.hpp"
#include "parabolica/regions.hpp"

// Reference classification by plain ball iteration.  This path shares only
// the ball arithmetic with the fast per-pixel decision procedure; it never
// consults coefficient tables, coarse pictures, or distance estimates, so it
// can serve as an independent check on them.

namespace parabolica {

enum class OrbitFate { Escaped, Converged, Undecided };

struct NaiveVerdict {
  OrbitFate fate = OrbitFate::Undecided;
  long steps = 0;
};

// Petal traps attached to their parabolic points, as the convergence
// criterion: an orbit that certifiably enters a validated forward-invariant
// trap converges to that parabolic point.
struct TrapSet {
  struct Entry {
    QPoint p;
    std::vector<Diamond> traps;
    std::vector<TrapDisk> disks;
  };
  std::vector<Entry> entries;

  Tri membership(const Ball& w) const {
    Tri acc = Tri::Outside;
    for (const auto& e : entries) {
      for (const auto& t : e.traps)
        acc = tri_any(acc, t.membership(w));
      for (const auto& d : e.disks)
        acc = tri_any(acc, d.membership(w));
    }
    return acc;
  }

  // Exact coincidence with one of the parabolic points themselves.
  bool at_fixed_point(const Ball& w) const {
    if (!w.is_exact()) return false;
    for (const auto& e : entries)
      if (mpfr_cmp_q(w.re().get(), e.p.x.get_mpq_t()) == 0 &&
          mpfr_cmp_q(w.im().get(), e.p.y.get_mpq_t()) == 0)
        return true;
    return false;
  }
};

// Iterate z under the map until the orbit certifiably escapes past
// escape_radius, certifiably enters a trap, or the budget runs out.  The
// ball is abandoned early once its radius exceeds give_up_radius, since no
// further conclusion can be certified from it.
inline NaiveVerdict naive_classify(const RationalMap& map, const TrapSet& traps,
                                   const mpq_class& escape_radius, Ball z,
                                   long max_steps,
                                   double give_up_radius = 1.0) {
  // Centered form: iterate the (nearly exact) center and transport the input
  // radius by sup |r'| over the hull.  Plain ball iteration would lose the
  // contraction inside attracting petals to interval dependency and blow up
  // long before the orbit certifiably reaches a trap.
  Ball c = z;
  c.clear_rad();
  BigReal R = z.rad();
  for (long k = 0; k <= max_steps; ++k) {
    Ball hull = c;
    hull.add_error(R);
    BigReal lo = hull.abs_lower();
    if (mpfr_cmp_q(lo.get(), escape_radius.get_mpq_t()) > 0)
      return {OrbitFate::Escaped, k};
    if (traps.at_fixed_point(hull) || traps.membership(hull) == Tri::Inside)
      return {OrbitFate::Converged, k};
    if (hull.rad_double() > give_up_radius) return {OrbitFate::Undecided, k};
    if (k == max_steps) break;
    R = rmul_up(map.derivative(hull).abs_upper(), R);
    c = map.apply(c);
  }
  return {OrbitFate::Undecided, max_steps};
}

// Escape-time count for the degenerate one-parameter experiment: w starts at
// eps > 0 on the repelling axis of w + w^{r+1} and is iterated until it
// leaves the disc of the given radius.  The count grows like 1/(r eps^r).
// Plain doubles suffice for the accuracy this is used at; the increment
// w^{r+1} stays far above the relative rounding error for eps >= 1e-4.
// Number of plain iterations of w -> w + w^4 a real seed takes to leave
// B(0,2).  Certified by bracketing: the map is increasing on positive reals,
// so outward-rounded lower and upper orbits pin the count when they agree.
inline long long milnor_escape_count(const mpq_class& eps) {
  if (!(eps > 0) || !(eps < mpq_class(1, 10)))
    throw std::invalid_argument("seed must lie in (0, 1/10)");
  double mid = eps.get_d();
  double lo = std::nextafter(mid, 0.0);
  double hi = std::nextafter(mid, 1.0);
  long long klo = -1, khi = -1;
  auto down = [](double x) { return std::nextafter(x, 0.0); };
  auto up = [](double x) { return std::nextafter(x, 1e300); };
  for (long long k = 0; klo < 0 || khi < 0; ++k) {
    if (klo < 0 && lo >= 2.0) klo = k;
    if (khi < 0 && hi >= 2.0) khi = k;
    double p = down(lo * lo);
    lo = down(lo + down(p * p));
    p = up(hi * hi);
    hi = up(hi + up(p * p));
  }
  if (klo != khi)
    throw std::runtime_error("escape count not pinned at double precision");
  return klo;
}

}  // namespace parabolica
