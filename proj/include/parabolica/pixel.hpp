/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <cstdio>
#include <stdexcept>
#include <deque>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "parabolica/geometry.hpp"
#include "parabolica/longiter.hpp"

// Per-point decision procedure: iterate the point with a cumulative
// derivative interval, take accelerated blocks near the parabolic points,
// and exit through a Koebe-certified distance comparison against the pixel
// scale 2^-n.  One means the point is not farther than 256 * 2^-n from the
// set; Zero means it is not closer than 2^-n.

namespace parabolica {

struct MembershipUnresolvable : std::runtime_error {
  explicit MembershipUnresolvable(const std::string& what)
      : std::runtime_error(what) {}
};

enum class PixelValue { One, Zero };

struct PixelCertificate {
  int exit_step = 0;            // dispatch case that produced the answer
  bool boundary_default = false;  // One issued inside the open threshold gap
  bool has_estimate = false;
  BigReal e{64};                // distance estimate at the exit, if any
  BigReal d_lo{64}, d_hi{64};   // cumulative derivative interval at the exit
  long step7 = 0;               // single steps outside the inner disks
  long step9 = 0;               // single steps inside preparabolic disks
  long step11_blocks = 0;       // accelerated blocks taken
  long step11_naive = 0;        // germ-region steps too far out for a block
  long max_consecutive_step9 = 0;
  long deferred = 0;            // exit estimates retried after a plain step
  long iterations = 0;          // total dispatch loop iterations
  long precision_bits = 0;
  long escalations = 0;
};

struct PixelDecision {
  PixelValue value = PixelValue::One;
  PixelCertificate cert;
};

// Smallest N with c0^N >= K * 2^n, i.e. ceil(log_c0(K 2^n)), computed with
// exact rational powers.
inline long compute_N(long n, const SceneConstants& k) {
  if (!(k.c0 > 1)) throw InvariantViolation(6, "step constant must exceed 1");
  if (!(k.n_mult >= 1))
    throw InvariantViolation(6, "scale multiplier must be at least 1");
  mpq_class target = k.n_mult * (mpz_class(1) << n);
  mpq_class p = 1;
  long N = 0;
  while (p < target) {
    p *= k.c0;
    ++N;
  }
  return N;
}

// Certified interval for d(z, J) from an estimate e <= d(w, J) <= 2e at the
// exit point and a derivative interval d_lo <= |dr^k/dz| <= d_hi <= 2 d_lo.
inline std::pair<BigReal, BigReal> koebe_bounds(const BigReal& e,
                                                const BigReal& d_lo,
                                                const BigReal& d_hi) {
  mpfr_prec_t p = std::max<mpfr_prec_t>(e.precision(), 64);
  BigReal lo(p), hi(p);
  mpfr_div(lo.get(), e.get(), d_hi.get(), MPFR_RNDD);
  mpfr_mul_2si(lo.get(), lo.get(), -3, MPFR_RNDD);
  mpfr_div(hi.get(), e.get(), d_lo.get(), MPFR_RNDU);
  mpfr_mul_2si(hi.get(), hi.get(), 4, MPFR_RNDU);
  return {lo, hi};
}

// Working precision for a resolution-n decision: the quadratic budget plus
// a fixed floor for the coarse geometry.
inline mpfr_prec_t precision_for_pixel(long n, const SceneConstants& k) {
  mpq_class q = k.budget_factor * n * n + 64;
  mpz_class c = (q.get_num() + q.get_den() - 1) / q.get_den();
  return (mpfr_prec_t)c.get_si();
}

namespace detail {

// thrown internally to restart the decision at doubled working precision
struct NeedMorePrecision {
  std::string where;
};

inline std::string ball_brief(const Ball& w) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "(%.6g,%.6g)~%.2g",
                mpfr_get_d(w.re().get(), MPFR_RNDN),
                mpfr_get_d(w.im().get(), MPFR_RNDN), w.rad_double());
  return buf;
}

class PixelRun {
 public:
  PixelRun(const Scene& scene, long n, mpfr_prec_t prec,
           std::vector<std::string>* trace)
      : s(scene), n_(n), prec_(prec), trace_(trace) {
    N_ = compute_N(n_, s.k);
    D_lo_ = BigReal(prec_);
    D_hi_ = BigReal(prec_);
    mpfr_set_ui(D_lo_.get(), 1, MPFR_RNDN);
    mpfr_set_ui(D_hi_.get(), 1, MPFR_RNDN);
    // target radius of accelerated blocks: keep certified balls well below
    // the pixel scale so the wedge tests near the parabolic points resolve
    s_bits_ = std::max<long>(64, 4 * n_);
  }

  PixelDecision run(const Ball& z0) {
    Ball w = z0.at_precision(prec_);
    cert_.precision_bits = prec_;
    chain_reset(w);
    // one membership pass per loop iteration: U(w) carries over single steps
    // because V(w) = U(r(w))
    Tri u_cur = Tri::Undecided;
    long consec9 = 0;
    const long iter_cap = 4096 * (n_ + 4) * (n_ + 4);
    for (;; ++cert_.iterations) {
      if (cert_.iterations > iter_cap)
        throw PrecisionExhausted("decision loop exceeded the n^2 budget cap");
      // exact hit on a parabolic point: distance zero, One at every n
      if (w.is_exact() && at_parabolic_point(w)) {
        cert_.exit_step = 0;
        return finish(PixelValue::One);
      }
      Tri e1 = s.in_E1(w);
      Ball next = chain_next(w);
      Tri u_next = Tri::Undecided;
      bool u_next_known = false;
      // step 6: certified outside V and the inner disks, exit on the
      // picture-backed estimate
      if (e1 == Tri::Outside) {
        u_next = chain_in_U(1);
        u_next_known = true;
        if (u_next == Tri::Outside && w.rad_double() <= 1.0) {
          if (auto d = exit_estimate(6, w)) return *d;
          // bracket straddles the cut: an uncounted step separates the
          // scales (the orbit leaves the near field, the bracket tightens)
          if (++cert_.deferred > defer_cap())
            throw NeedMorePrecision{"estimate deferral budget exhausted at " +
                                    ball_brief(w)};
          step_derivative(w);
          w = next;
          chain_advance(w);
          u_cur = u_next_known ? u_next : Tri::Undecided;
          continue;
        }
      }
      // step 8: capture ball around a preparabolic center
      int which = -1;
      Tri e2 = s.in_E2(w, &which);
      if (e2 == Tri::Inside && which >= int(s.parabolic.size())) {
        const auto& q = s.preparabolic[which - s.parabolic.size()];
        Ball d = ball_sub(w, Ball::exact(q.location.x, q.location.y, prec_));
        BigReal cut = BigReal::pow2(-s.k.beta * n_, 64);
        if (d.abs_upper() < cut) {
          log(8, w);
          cert_.exit_step = 8;
          return finish(PixelValue::One);
        }
      }
      // step 10: inside an outer disk, certified off the repelling wedges
      if (e2 == Tri::Inside && which >= 0 &&
          s.membership(w, RegionId::A1) == Tri::Outside) {
        if (auto d = exit_estimate(10, w, which)) return *d;
        if (++cert_.deferred > defer_cap())
          throw NeedMorePrecision{"estimate deferral budget exhausted at " +
                                  ball_brief(w)};
        step_derivative(w);
        w = next;
        chain_advance(w);
        u_cur = u_next_known ? u_next : Tri::Undecided;
        continue;
      }
      // step 11: inside a parabolic outer disk on the wedge around the
      // repelling directions; take an accelerated block
      if (e2 == Tri::Inside && which >= 0 && which < int(s.parabolic.size()) &&
          s.wedge_a2(which).membership(w) == Tri::Inside) {
        consec9 = 0;
        if (long_block(w, which, next)) {
          chain_reset(w);
          u_cur = Tri::Undecided;  // unknown after a jump; recompute lazily
          continue;
        }
        // too far out for a block: plain step, not counted against N
        ++cert_.step11_naive;
        step_derivative(w);
        w = next;
        chain_advance(w);
        u_cur = u_next_known ? u_next : Tri::Undecided;
        continue;
      }
      // step 9: single step inside a preparabolic outer disk
      if (e2 == Tri::Inside && which >= int(s.parabolic.size()) &&
          s.wedge_a2(which).membership(w) == Tri::Inside) {
        ++cert_.step9;
        ++consec9;
        cert_.max_consecutive_step9 =
            std::max(cert_.max_consecutive_step9, consec9);
        log(9, w);
        step_derivative(w);
        w = next;
        chain_advance(w);
        u_cur = u_next_known ? u_next : Tri::Undecided;
        continue;
      }
      consec9 = 0;
      // step 7: single step inside U away from the inner disks
      if (u_cur == Tri::Undecided) u_cur = chain_in_U(0);
      if (u_cur == Tri::Inside && e1 == Tri::Outside) {
        ++cert_.step7;
        log(7, w);
        if (cert_.step7 > N_) {
          cert_.exit_step = 7;
          return finish(PixelValue::One);
        }
        step_derivative(w);
        w = next;
        chain_advance(w);
        u_cur = u_next_known ? u_next : Tri::Undecided;
        continue;
      }
      // inside an inner disk of a parabolic point without a certified wedge
      // position: the point is within e1 of the set, which forces One for
      // every feasible n (e1 is far above 256 * 2^-n at working resolutions)
      if (e1 == Tri::Inside && inner_forces_one(w)) {
        cert_.exit_step = 6;
        cert_.boundary_default = true;
        return finish(PixelValue::One);
      }
      throw NeedMorePrecision{"dispatch: no region test certified at " +
                              ball_brief(w)};
    }
  }

 private:
  const Scene& s;
  long n_, N_, s_bits_;
  mpfr_prec_t prec_;
  std::vector<std::string>* trace_;
  BigReal D_lo_{64}, D_hi_{64};
  PixelCertificate cert_;

  // Forward-orbit lookahead: chain_[t] encloses r^(base+t) of the pixel,
  // with chain_[0] the current w.  U membership needs the iterate at
  // preimage depth u ahead, so sharing one advancing orbit makes the deep
  // sweeps cost one map application per single step instead of one full
  // sweep per membership test.  An iterate certified outside Utilde settles
  // every earlier query (the complement of Utilde is forward invariant); a
  // certified landing in Utilde at exactly depth u settles Inside on its
  // own, so intermediate iterates never need to resolve.
  std::deque<Ball> chain_;
  std::deque<Tri> chain_ut_;
  long chain_base_ = 0;   // absolute orbit index of chain_[0]
  long outside_abs_ = -1; // earliest iterate certified outside Utilde
  long dead_abs_ = -1;    // extension stopped on an oversized ball

  void chain_reset(const Ball& w) {
    chain_.assign(1, w);
    chain_ut_.assign(1, s.in_Utilde(w));
    chain_base_ = 0;
    outside_abs_ = chain_ut_[0] == Tri::Outside ? 0 : -1;
    dead_abs_ = -1;
  }

  // the loop stepped w to its image: drop the stale front entry
  void chain_advance(const Ball& w_new) {
    extend_to(chain_base_ + 1, false);
    if (long(chain_.size()) < 2) {
      chain_reset(w_new);
      return;
    }
    chain_.pop_front();
    chain_ut_.pop_front();
    ++chain_base_;
  }

  // grow the chain until absolute index a exists; a ball past unit radius
  // certifies nothing further and ends extension for good.  An exit from
  // Utilde already settles pending U queries, so those stop early too.
  void extend_to(long a, bool stop_at_outside) {
    while (chain_base_ + long(chain_.size()) <= a) {
      if (dead_abs_ >= 0) return;
      if (stop_at_outside && outside_abs_ >= 0) return;
      if (chain_.back().rad_double() > 1.0) {
        dead_abs_ = chain_base_ + long(chain_.size()) - 1;
        return;
      }
      Ball z = s.map.apply(chain_.back());
      Tri t = s.in_Utilde(z);
      if (t == Tri::Outside && outside_abs_ < 0)
        outside_abs_ = chain_base_ + long(chain_.size());
      chain_.push_back(std::move(z));
      chain_ut_.push_back(t);
    }
  }

  // r(w) for the dispatch loop; falls back to a direct application when the
  // chain refuses to extend past an oversized ball
  Ball chain_next(const Ball& w) {
    extend_to(chain_base_ + 1, false);
    if (long(chain_.size()) >= 2) return chain_[1];
    return s.map.apply(w);
  }

  // U membership of chain_[t]
  Tri chain_in_U(long t) {
    long a = chain_base_ + t;
    if (outside_abs_ >= 0 && outside_abs_ <= a + s.k.u_depth)
      return Tri::Outside;
    extend_to(a + s.k.u_depth, true);
    if (outside_abs_ >= 0 && outside_abs_ <= a + s.k.u_depth)
      return Tri::Outside;
    if (dead_abs_ >= 0 && dead_abs_ <= a + s.k.u_depth) return Tri::Undecided;
    return chain_ut_[a + s.k.u_depth - chain_base_];
  }

  long defer_cap() const { return 64 * (n_ + 4); }

  bool transported_ = false;  // any single step taken (D no longer exactly 1)

  bool at_parabolic_point(const Ball& w) const {
    for (const auto& p : s.parabolic)
      if (mpfr_cmp_q(w.re().get(), p.location.x.get_mpq_t()) == 0 &&
          mpfr_cmp_q(w.im().get(), p.location.y.get_mpq_t()) == 0)
        return true;
    return false;
  }

  void log(int step, const Ball& w) {
    if (!trace_) return;
    trace_->push_back("step=" + std::to_string(step) + " w=" + ball_brief(w) +
                      " D=[" + std::to_string(mpfr_get_d(D_lo_.get(), MPFR_RNDN)) +
                      "," + std::to_string(mpfr_get_d(D_hi_.get(), MPFR_RNDN)) +
                      "]");
  }

  PixelDecision finish(PixelValue v) {
    cert_.d_lo = D_lo_;
    cert_.d_hi = D_hi_;
    return {v, cert_};
  }

  // the One exit is valid whenever d(z, J) <= 256 * 2^-n cannot be ruled
  // out; inside an inner disk that holds as long as the derivative interval
  // alone cannot push e1 + |radius| past the threshold with D_lo = 1 steps,
  // i.e. whenever e1 <= 2^-n (the coarse region scale dwarfs pixel scales)
  bool inner_forces_one(const Ball& w) const {
    // d(w, J) <= e1 diameter bound transfers through the orbit only with an
    // estimate, which is unavailable here; but the dispatch reaches this
    // case only for the initial point (D = 1, no steps taken), where
    // d(z, J) <= 2 e1 < 256 * 2^-n iff e1_max < 2^{7-n}
    if (cert_.step7 + cert_.step9 + cert_.step11_blocks +
            cert_.step11_naive >
        0)
      return false;
    (void)w;
    mpq_class emax = 0;
    for (const auto& p : s.parabolic) emax = std::max(emax, p.e1_radius);
    for (const auto& q : s.preparabolic) emax = std::max(emax, q.e1_radius);
    return emax * (mpz_class(1) << n_) < (mpz_class(1) << 7);
  }

  void step_derivative(const Ball& w) {
    Ball d = s.map.derivative(w);
    BigReal lo = d.abs_lower();
    BigReal hi = d.abs_upper();
    accumulate_derivative(lo, hi);
  }

  void accumulate_derivative(const BigReal& lo, const BigReal& hi) {
    transported_ = true;
    if (mpfr_sgn(lo.get()) <= 0)
      throw NeedMorePrecision{"derivative ball straddles zero"};
    mpfr_mul(D_lo_.get(), D_lo_.get(), lo.get(), MPFR_RNDD);
    mpfr_mul(D_hi_.get(), D_hi_.get(), hi.get(), MPFR_RNDU);
    BigReal twice(prec_);
    mpfr_mul_2si(twice.get(), D_lo_.get(), 1, MPFR_RNDD);
    if (mpfr_cmp(D_hi_.get(), twice.get()) > 0)
      throw NeedMorePrecision{"derivative interval wider than factor two"};
  }

  // Distance comparison at an exit.  With the derivative interval
  // [D_lo, 2 D_lo] the transported bounds place d(z, J) between
  // d_lo(w)/(16 D_lo) and 16 d_hi(w)/D_lo, so the single cut
  // 2^(4-n) D_lo decides both ways: d_hi below it forces One (z within
  // 256 * 2^-n), d_lo above it forces Zero (z beyond 2^-n).  The scaling
  // is an exact power of two, so the comparisons are exact.  A bracket
  // straddling the cut decides nothing; the caller steps on and retries
  // once the scales separate.
  std::optional<PixelDecision> exit_estimate(int step, const Ball& w,
                                             int which = -1) {
    log(step, w);
    DistEstimate est;
    try {
      est = (step == 10) ? s.estimate_line(w, which) : s.coarse_distance(w);
    } catch (const EstimatorOutOfDomain& ex) {
      throw NeedMorePrecision{std::string("estimator: ") + ex.what()};
    }
    auto decide = [&](PixelValue v) {
      cert_.exit_step = step;
      cert_.has_estimate = true;
      cert_.e = est.e;
      return finish(v);
    };
    if (!transported_) {
      // no steps taken: the estimate bounds d(z, J) itself, so Zero fires
      // right at the pixel scale and keeps the drawn band tight
      BigReal zc = BigReal::pow2(-n_, prec_);
      BigReal oc = BigReal::pow2(8 - n_, prec_);
      if (mpfr_cmp(est.d_lo.get(), zc.get()) >= 0)
        return decide(PixelValue::Zero);
      if (mpfr_cmp(est.d_hi.get(), oc.get()) <= 0)
        return decide(PixelValue::One);
      return std::nullopt;
    }
    BigReal cut(prec_);
    mpfr_mul_2si(cut.get(), D_lo_.get(), 4 - n_, MPFR_RNDN);
    if (mpfr_cmp(est.d_hi.get(), cut.get()) <= 0)
      return decide(PixelValue::One);
    if (mpfr_cmp(est.d_lo.get(), cut.get()) >= 0)
      return decide(PixelValue::Zero);
    return std::nullopt;
  }

  // evaluate r^u from the germ table, in germ coordinates around p
  LongIterateResult probe(const ParabolicGerm& g, const Ball& zeta,
                          const mpz_class& u) {
    return long_iterate_count(g, zeta, u, s_bits_);
  }

  // accelerated block at parabolic point i; returns false when the point is
  // too far out for a block (caller falls back to a plain step)
  bool long_block(Ball& w, int i, const Ball& next) {
    const auto& p = s.parabolic[i];
    const ParabolicGerm& g = *p.germ;
    Ball zeta = ball_sub(w, Ball::exact(p.location.x, p.location.y, prec_));
    BigReal zhi = zeta.abs_upper();
    if (mpfr_zero_p(zhi.get())) return false;  // exact hit, handled upstream
    long t = -mpfr_get_exp(zhi.get());
    if (t <= g.A_exp()) return false;  // outside the certified germ radius
    if (g.r() * t <= g.C_exp()) return false;  // block would be empty
    mpz_class m = mpz_class(1) << t;
    LongIterateResult res;
    try {
      res = long_iterate(g, zeta, m, s_bits_);
    } catch (const BallTooLarge&) {
      return false;
    } catch (const IterationTooShort&) {
      return false;
    }
    ++cert_.step11_blocks;
    log(11, w);
    Ball pc = Ball::exact(p.location.x, p.location.y, prec_);
    Ball y = ball_add(pc, res.w);
    Tri in_disk = disk_membership(y, p.location, p.e2_radius);
    Tri a2 = s.wedge_a2(i).membership(y);
    if (in_disk == Tri::Inside && a2 == Tri::Outside) {
      // overshot the wedge inside the disk: binary search the first iterate
      // certified between the inner and outer wedges, then exit through the
      // line estimate at the next dispatch
      binary_search_band(w, i, zeta, res.ell);
      return true;
    }
    if (in_disk == Tri::Undecided || (in_disk == Tri::Inside &&
                                      a2 == Tri::Undecided))
      throw NeedMorePrecision{"block landing not certified at " +
                              ball_brief(y)};
    accumulate_derivative(res.dw.abs_lower(), res.dw.abs_upper());
    w = y;
    (void)next;
    return true;
  }

  void binary_search_band(Ball& w, int i, const Ball& zeta,
                          const mpz_class& v) {
    const auto& p = s.parabolic[i];
    const ParabolicGerm& g = *p.germ;
    Ball pc = Ball::exact(p.location.x, p.location.y, prec_);
    mpz_class lo = 0, hi = v;
    while (hi - lo > 1) {
      mpz_class mid = (lo + hi) / 2;
      LongIterateResult r = probe(g, zeta, mid);
      Tri a1 = s.wedge_a1(i).membership(ball_add(pc, r.w));
      if (a1 == Tri::Inside) {
        lo = mid;
      } else if (a1 == Tri::Outside) {
        hi = mid;
      } else {
        throw NeedMorePrecision{"band search probe not certified"};
      }
    }
    LongIterateResult r = probe(g, zeta, hi);
    Ball y = ball_add(pc, r.w);
    if (s.wedge_a1(i).membership(y) != Tri::Outside ||
        s.wedge_a2(i).membership(y) != Tri::Inside ||
        disk_membership(y, p.location, p.e2_radius) != Tri::Inside)
      throw NeedMorePrecision{"band landing not certified at " +
                              ball_brief(y)};
    accumulate_derivative(r.dw.abs_lower(), r.dw.abs_upper());
    w = y;
    if (trace_)
      trace_->push_back("step=11 band u=" + hi.get_str());
  }
};

}  // namespace detail

// Decide the pixel color of z at resolution n: One when the point cannot be
// farther than 256 * 2^-n from the set, Zero when it cannot be closer than
// 2^-n.  Pure given an immutable scene; safe to call from many threads.
inline PixelDecision decide_point(const Ball& z, long n, const Scene& scene,
                                  std::vector<std::string>* trace = nullptr) {
  mpfr_prec_t prec = precision_for_pixel(n, scene.k);
  std::string last;
  for (int attempt = 0; attempt <= 3; ++attempt) {
    try {
      detail::PixelRun run(scene, n, prec, trace);
      PixelDecision d = run.run(z);
      d.cert.escalations = attempt;
      return d;
    } catch (detail::NeedMorePrecision& e) {
      last = e.where;
      prec *= 2;
    }
  }
  throw MembershipUnresolvable("unresolved after precision escalation: " +
                               last);
}

}  // namespace parabolica
