/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "parabolica/arith.hpp"
#include "parabolica/longiter.hpp"
#include "parabolica/map.hpp"
#include "parabolica/oracle.hpp"
#include "parabolica/regions.hpp"

// Scene-level geometry: the nonuniform data the per-point algorithm consumes.
// Everything here is configuration input validated at load time, plus the
// coarse certified picture of the Julia set that backs the far-field
// distance estimator.

namespace parabolica {

struct InvariantViolation : std::runtime_error {
  int item;
  InvariantViolation(int item_, const std::string& msg)
      : std::runtime_error("scene invariant " + std::to_string(item_) +
                           " violated: " + msg),
        item(item_) {}
};

struct NewtonDiverged : std::runtime_error {
  NewtonDiverged() : std::runtime_error("Newton refinement diverged") {}
};

struct EstimatorOutOfDomain : std::runtime_error {
  explicit EstimatorOutOfDomain(const std::string& msg)
      : std::runtime_error("distance estimator out of domain: " + msg) {}
};

struct OracleBudgetExceeded : std::runtime_error {
  OracleBudgetExceeded()
      : std::runtime_error("coarse picture oracle budget exceeded") {}
};

struct InvarianceCheckFailed : std::runtime_error {
  explicit InvarianceCheckFailed(const std::string& msg)
      : std::runtime_error("trap invariance check failed: " + msg) {}
};

// ---------------------------------------------------------------------------
// Point specifications

struct ParabolicPointSpec {
  QPoint location;
  int u_exp = 1;  // germ degeneracy: leading term a (z-p)^{u_exp+1}
  std::vector<std::pair<double, double>> repelling_axes;
  std::vector<std::pair<double, double>> attracting_axes;
  mpq_class e1_radius, e2_radius;
  // trap petal parameters (vertex angle fraction and spine length); a zero
  // length means no diamond petals are built for that family
  mpq_class u_trap_fraction, u_trap_length;
  mpq_class oracle_trap_fraction, oracle_trap_length;
  std::vector<Diamond> u_traps;       // petals removed from the U region
  std::vector<Diamond> oracle_traps;  // larger petals for fast convergence
  std::vector<TrapDisk> u_trap_disks;       // tangent disk traps, same roles
  std::vector<TrapDisk> oracle_trap_disks;
  WedgeSet a1, a2;
  std::shared_ptr<ParabolicGerm> germ;
};

struct CriticalPoint {
  QPoint location;   // exact dyadic approximation
  mpq_class radius;  // certified enclosure radius around the true point
};

// disk removed from U~ so the U region avoids the postcritical set and the
// low-derivative locus; each disk must map into the excluded structure
struct ExcludedDisk {
  QPoint center;
  mpq_class radius;
};

struct PreparabolicPointSpec {
  QPoint location;
  int order = 1;   // steps until the orbit reaches the parent point
  int parent = 0;  // index into the parabolic point list
  mpq_class e1_radius, e2_radius;
  std::vector<std::pair<double, double>> axes;
  WedgeSet a1, a2;
};

struct SceneConstants {
  mpq_class c0;             // Poincare expansion constant, > 1
  mpq_class n_mult;         // multiplier K in N = ceil(log_c0(K 2^n))
  mpq_class d_lo;           // derivative floor on r(U) and the E2 disks
  mpq_class sep_d;          // separation between V and the U complement
  mpq_class alpha;          // wedge half-angle of A2, as a fraction of pi
  mpq_class B;              // bounding radius: the Julia set is in B(0,B)
  mpq_class u_radius;       // radius of the disk whose trap complement is U~
  mpq_class escape_radius;  // certified escape threshold for the oracle
  mpq_class budget_factor;  // scales the per-pixel precision n^2 budget
  long beta = 12;           // exponent of the preparabolic capture ball
  int c_pix = 8;            // coarse picture resolution level
  int grid_radius = 4;      // half-extent of the coarse grid, in units
  long coarse_budget = 1 << 14;  // oracle iterations per coarse cell
  int u_depth = 0;               // preimage depth u in U = r^{-u}(Utilde)
};

// ---------------------------------------------------------------------------
// Coarse picture: certified bitmap plus exact squared distance transform

class CoarsePicture {
 public:
  // cell classifications
  static constexpr uint8_t kEscaped = 0;
  static constexpr uint8_t kConverged = 1;
  static constexpr uint8_t kDrawn = 2;

  int c_pix = 8;
  long grid_radius = 4;
  long W = 0;  // cells per side; grid covers [-grid_radius, grid_radius]^2
  std::vector<uint8_t> cls;
  std::vector<uint8_t> certified;  // drawn cells proven to contain a set point
  std::vector<uint8_t> tight;  // drawn cells with both verdicts within 2
  std::vector<int64_t> dt2;     // squared cell distance to the drawn set
  std::vector<int64_t> dt2_hi;  // squared cell distance to the tight set
  long budget_used = 0;

  long idx(long i, long j) const { return j * W + i; }
  bool in_grid(long i, long j) const {
    return i >= 0 && i < W && j >= 0 && j < W;
  }
  long drawn_count() const {
    long c = 0;
    for (uint8_t v : cls) c += (v == kDrawn);
    return c;
  }

  // exact integer squared Euclidean distance transform (two-pass lower
  // envelope), distances in cell units
  void compute_dt() {
    mark_tight();
    squared_edt(W, W, [&](long t) { return cls[t] == kDrawn; }, dt2);
    squared_edt(W, W, [&](long t) { return tight[t] != 0; }, dt2_hi);
  }

  // free-standing transform, reusable on any raster; index = j * W + i
  template <class Pred>
  static void squared_edt(long W, long H, Pred on, std::vector<int64_t>& dt) {
    const int64_t INF = int64_t(1) << 62;
    dt.assign(size_t(W) * H, INF);
    long M = std::max(W, H);
    std::vector<int64_t> col(M), out(M);
    std::vector<long> v(M);
    std::vector<double> z(M + 1);
    // vertical pass: per column, distance to the nearest marked row
    for (long i = 0; i < W; ++i) {
      int64_t d = INF;
      for (long j = 0; j < H; ++j) {
        d = on(j * W + i) ? 0 : (d >= INF ? INF : d + 1);
        dt[j * W + i] = d >= INF ? INF : d * d;
      }
      d = INF;
      for (long j = H - 1; j >= 0; --j) {
        d = on(j * W + i) ? 0 : (d >= INF ? INF : d + 1);
        if (d < INF) dt[j * W + i] = std::min(dt[j * W + i], d * d);
      }
    }
    // horizontal pass: 1D squared-distance lower envelope per row
    for (long j = 0; j < H; ++j) {
      for (long i = 0; i < W; ++i) col[i] = dt[j * W + i];
      long k = 0;
      v[0] = 0;
      z[0] = -1e300;
      z[1] = 1e300;
      for (long q = 1; q < W; ++q) {
        double s;
        while (true) {
          long p = v[k];
          s = (double(col[q]) - double(col[p]) + double(q * q - p * p)) /
              (2.0 * double(q - p));
          if (s > z[k] || k == 0) break;
          --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = 1e300;
      }
      long kk = 0;
      for (long q = 0; q < W; ++q) {
        while (z[kk + 1] < double(q)) ++kk;
        long p = v[kk];
        out[q] = col[p] >= INF ? INF : col[p] + (q - p) * (q - p);
      }
      for (long i = 0; i < W; ++i) dt[j * W + i] = out[i];
    }
  }

 private:
  // a drawn cell is tight when an escaped and a converged cell both sit
  // within Chebyshev distance 2; the set then passes within a few cells
  void mark_tight() {
    tight.assign(size_t(W) * W, 0);
    if (certified.empty()) certified.assign(size_t(W) * W, 0);
    for (long j = 0; j < W; ++j)
      for (long i = 0; i < W; ++i) {
        if (cls[idx(i, j)] != kDrawn) continue;
        if (certified[idx(i, j)]) { tight[idx(i, j)] = 1; continue; }
        bool esc = false, conv = false;
        for (long dj = -2; dj <= 2; ++dj)
          for (long di = -2; di <= 2; ++di) {
            long ii = i + di, jj = j + dj;
            if (!in_grid(ii, jj)) continue;
            uint8_t c = cls[idx(ii, jj)];
            esc = esc || c == kEscaped;
            conv = conv || c == kConverged;
          }
        if (esc && conv) tight[idx(i, j)] = 1;
      }
  }
};

// Build the picture by hierarchical refinement: start at a low level, keep
// only cells whose covering ball the oracle cannot classify, and subdivide
// those.  Classified cells pass their verdict to all descendants.
inline CoarsePicture build_coarse_picture(const RationalMap& map,
                                          const TrapSet& traps,
                                          const SceneConstants& k) {
  // cell radii are ~2^-c_pix, far above the rounding scale of 64-bit balls
  const mpfr_prec_t prec = 64;
  CoarsePicture pic;
  pic.c_pix = k.c_pix;
  pic.grid_radius = k.grid_radius;
  int c_start = std::min(5, k.c_pix);
  // covering-ball classification of cell (i, j) at level c
  auto classify = [&](long i, long j, long Wn, int c) {
    mpq_class cx(2 * (i - Wn / 2) + 1, 2);
    mpq_class cy(2 * (j - Wn / 2) + 1, 2);
    cx /= (1L << c);
    cy /= (1L << c);
    // exact dyadic center, radius (3/4) h
    Ball cell = Ball::exact(cx, cy, prec);
    BigReal r(kRadiusPrecision);
    mpfr_set_ui(r.get(), 3, MPFR_RNDU);
    mpfr_mul_2si(r.get(), r.get(), -c - 2, MPFR_RNDU);
    cell.add_error(r);
    NaiveVerdict v = naive_classify(map, traps, k.escape_radius, cell,
                                    k.coarse_budget);
    pic.budget_used += v.steps;
    return v.fate;
  };
  std::vector<uint8_t> cur, next;
  long Wc = 0;
  for (int c = c_start; c <= k.c_pix; ++c) {
    long Wn = (2L * k.grid_radius) << c;
    next.assign(size_t(Wn) * Wn, CoarsePicture::kDrawn);
    for (long j = 0; j < Wn; ++j) {
      for (long i = 0; i < Wn; ++i) {
        if (c > c_start) {
          uint8_t parent = cur[(j / 2) * Wc + (i / 2)];
          if (parent != CoarsePicture::kDrawn) {
            next[j * Wn + i] = parent;
            continue;
          }
        }
        OrbitFate f = classify(i, j, Wn, c);
        if (f == OrbitFate::Escaped)
          next[j * Wn + i] = CoarsePicture::kEscaped;
        else if (f == OrbitFate::Converged)
          next[j * Wn + i] = CoarsePicture::kConverged;
      }
    }
    cur.swap(next);
    Wc = Wn;
  }
  pic.W = Wc;
  pic.cls = std::move(cur);
  // a picture drowning in unclassified cells is useless as an estimator
  if (pic.drawn_count() * 10 > long(pic.cls.size()))
    throw OracleBudgetExceeded();
  // Refinement pass.  A cell can stay unclassified purely through radius
  // amplification of its covering ball; its subcells suffer much less of
  // it.  All subcells escaped (or all converged) reclassifies the cell.
  // Subcells of both fates prove the cell contains a point of the set
  // (any path between the two open basins crosses it).
  const int refine_depth = 3;
  pic.certified.assign(pic.cls.size(), 0);
  for (long j = 0; j < pic.W; ++j)
    for (long i = 0; i < pic.W; ++i) {
      if (pic.cls[pic.idx(i, j)] != CoarsePicture::kDrawn) continue;
      bool esc = false, conv = false, open = false;
      std::vector<std::array<long, 3>> st = {
          {2 * i, 2 * j, 1}, {2 * i + 1, 2 * j, 1},
          {2 * i, 2 * j + 1, 1}, {2 * i + 1, 2 * j + 1, 1}};
      while (!st.empty() && !(esc && conv)) {
        auto [ci, cj, d] = st.back();
        st.pop_back();
        OrbitFate f = classify(ci, cj, pic.W << d, int(k.c_pix + d));
        if (f == OrbitFate::Escaped)
          esc = true;
        else if (f == OrbitFate::Converged)
          conv = true;
        else if (d < refine_depth)
          for (long t = 0; t < 4; ++t)
            st.push_back({2 * ci + (t & 1), 2 * cj + (t >> 1), d + 1});
        else
          open = true;
      }
      if (esc && conv)
        pic.certified[pic.idx(i, j)] = 1;
      else if (!open && esc)
        pic.cls[pic.idx(i, j)] = CoarsePicture::kEscaped;
      else if (!open && conv)
        pic.cls[pic.idx(i, j)] = CoarsePicture::kConverged;
    }
  pic.compute_dt();
  return pic;
}

// ---------------------------------------------------------------------------
// Newton refinement of a parabolic point

namespace detail {

// one exact complex-rational map application (validation helper)
inline QPoint apply_exact(const RationalMap& map, const QPoint& z) {
  auto horner = [&](const std::vector<mpq_class>& p) {
    mpq_class re = 0, im = 0;
    for (size_t j = p.size(); j >= 1; --j) {
      mpq_class nre = re * z.x - im * z.y + p[j - 1];
      im = re * z.y + im * z.x;
      re = std::move(nre);
    }
    return QPoint{re, im};
  };
  QPoint n = horner(map.num());
  QPoint d = horner(map.den());
  mpq_class m2 = d.x * d.x + d.y * d.y;
  if (m2 == 0) throw std::invalid_argument("pole hit in exact evaluation");
  return {(n.x * d.x + n.y * d.y) / m2, (n.y * d.x - n.x * d.y) / m2};
}

// continued-fraction rational reconstruction of an mpfr value
inline bool reconstruct_rational(const mpfr_t x, long max_den_bits,
                                 mpq_class& out) {
  mpfr_prec_t p = mpfr_get_prec(x);
  mpfr_t rem, fl;
  mpfr_init2(rem, p);
  mpfr_init2(fl, p);
  mpfr_set(rem, x, MPFR_RNDN);
  mpq_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;  // convergents
  bool ok = false;
  for (int it = 0; it < 64; ++it) {
    mpfr_floor(fl, rem);
    mpz_class a;
    mpfr_get_z(a.get_mpz_t(), fl, MPFR_RNDN);
    mpq_class h = mpq_class(a) * h1 + h0;
    mpq_class q = mpq_class(a) * k1 + k0;
    h0 = h1;
    h1 = h;
    k0 = k1;
    k1 = q;
    if (mpz_sizeinbase(k1.get_num().get_mpz_t(), 2) > (size_t)max_den_bits)
      break;
    // residual of the convergent against x
    mpfr_t err;
    mpfr_init2(err, p);
    mpq_class cand = h1 / k1;
    mpfr_set_q(err, cand.get_mpq_t(), MPFR_RNDN);
    mpfr_sub(err, err, x, MPFR_RNDN);
    mpfr_abs(err, err, MPFR_RNDN);
    bool close = mpfr_cmp_d(err, 0.0) == 0 ||
                 mpfr_get_exp(err) < -(long)(p / 2);
    mpfr_clear(err);
    if (close) {
      out = cand;
      ok = true;
      break;
    }
    mpfr_sub(rem, rem, fl, MPFR_RNDN);
    if (mpfr_zero_p(rem)) break;
    mpfr_ui_div(rem, 1, rem, MPFR_RNDN);
  }
  mpfr_clear(rem);
  mpfr_clear(fl);
  return ok;
}

}  // namespace detail

// Newton's method on r^v(z) - z with the multiplicity correction for a
// degeneracy-u_exp parabolic point, followed by exact rational snapping.
// The returned ball is exact when the point is rational; otherwise its
// radius is certified through the residual check.
inline Ball refine_parabolic_point(const RationalMap& map, const QPoint& seed,
                                   int u_exp, int period, long target_bits) {
  mpfr_prec_t prec = mpfr_prec_t(2 * target_bits + 128);
  Ball z = Ball::exact(seed.x, seed.y, prec);
  long mult = u_exp + 1;
  const long max_steps = 4 * target_bits;
  bool contracted = false;
  for (long step = 0; step < max_steps; ++step) {
    // h(z) = r^v(z) - z and h'(z), accumulated along the cycle
    Ball w = z, dw = Ball::exact(mpq_class(1), mpq_class(0), prec);
    for (int i = 0; i < period; ++i) {
      dw = ball_mul(dw, map.derivative(w));
      w = map.apply(w);
    }
    Ball h = ball_sub(w, z);
    Ball hp = ball_sub(dw, Ball::exact(mpq_class(1), mpq_class(0), prec));
    if (hp.contains_zero_maybe()) {
      // multiplicity-corrected step is unusable this close in; perturb out
      throw NewtonDiverged();
    }
    Ball delta = ball_div(h, hp);
    delta = ball_scale(delta, BigReal((double)mult));
    Ball znew = ball_sub(z, delta);
    znew.clear_rad();  // plain Newton on centers; certification comes later
    BigReal step_size = delta.abs_upper();
    z = znew;
    if (mpfr_zero_p(step_size.get()) ||
        mpfr_get_exp(step_size.get()) < -(target_bits + 8)) {
      contracted = true;
      break;
    }
  }
  if (!contracted) throw NewtonDiverged();
  // try exact rational snapping, verified symbolically
  mpq_class rx, ry;
  if (detail::reconstruct_rational(z.re().get(), 64, rx) &&
      detail::reconstruct_rational(z.im().get(), 64, ry)) {
    QPoint cand{rx, ry};
    QPoint img = cand;
    for (int i = 0; i < period; ++i) img = detail::apply_exact(map, img);
    if (img.x == cand.x && img.y == cand.y)
      return Ball::exact(cand.x, cand.y, prec);
  }
  // fall back to a residual-certified enclosure
  Ball w = z;
  for (int i = 0; i < period; ++i) w = map.apply(w);
  Ball res = ball_sub(w, z);
  BigReal rbound = res.abs_upper();
  BigReal thr = BigReal::pow2(1 - target_bits);
  if (!(rbound < thr)) throw NewtonDiverged();
  Ball out = z;
  out.add_error(rbound);
  return out;
}

// ---------------------------------------------------------------------------
// Trap construction: invariant diamond petals

// One diamond per attracting direction, with vertex angle angle_fraction
// times pi/u_exp and the given spine length.  Forward invariance is checked
// by covering the boundary with overlapping balls and certifying that every
// image lands inside.  The inward drift of the germ at distance d from the
// vertex scales like |lead| d^{u_exp+1}, so the covering radius follows that
// scale: no fixed sample count can resolve the margin near the vertex.
// Within length/6 of the vertex even that fails, so the apex segment is
// exempt; the germ rotates edge points there strictly inward, and the
// interior sample stands in for the segment.
inline std::vector<Diamond> build_trap_region(const RationalMap& map,
                                              const ParabolicPointSpec& pt,
                                              const mpq_class& angle_fraction,
                                              const mpq_class& length) {
  if (!(angle_fraction > 0) || !(angle_fraction < 1))
    throw InvarianceCheckFailed("angle fraction must be in (0,1)");
  // half-angle = angle_fraction * pi / (2 u_exp), as a fraction of pi
  mpq_class half_turns = angle_fraction / (2 * pt.u_exp);
  auto [clo, chi] = cos_pi_enclosure(half_turns);
  std::vector<Diamond> out;
  for (const auto& ax : pt.attracting_axes) {
    Diamond d;
    d.near.apex = pt.location;
    d.near.ax = ax.first;
    d.near.ay = ax.second;
    d.near.cos_lo = clo;
    d.near.cos_hi = chi;
    d.far.apex.x = pt.location.x + length * mpq_class(ax.first);
    d.far.apex.y = pt.location.y + length * mpq_class(ax.second);
    d.far.ax = -ax.first;
    d.far.ay = -ax.second;
    d.far.cos_lo = clo;
    d.far.cos_hi = chi;
    // boundary sampling: walk each of the four sides from its outer end
    // toward the vertex, with the step matched to the local margin
    double px = mpq_class(pt.location.x).get_d();
    double py = mpq_class(pt.location.y).get_d();
    double L = length.get_d();
    double theta = angle_fraction.get_d() * 3.14159265358979 /
                   (2.0 * pt.u_exp);
    double tanth = std::tan(theta * 0.999);  // stay inside the enclosure
    double sec = std::hypot(1.0, tanth);
    auto [gn, gd] = map.germ_at(pt.location.x);
    double lead =
        std::fabs(rational_germ_coeffs(gn, gd, pt.u_exp + 1)[pt.u_exp]
                      .get_d());
    const mpfr_prec_t prec = 64;  // the ball radius carries the rigor
    long samples = 0;
    // cone-test slack per unit drift: vertex edges gain sin(theta) per unit
    // of inward rotation sin(u theta); the outer edges bottom out at the far
    // vertex, where an axial drift only clears the cone by 1 - cos(theta)
    double k_near = std::sin(theta) * std::sin(pt.u_exp * theta);
    double k_far = 1.0 - std::cos(theta);
    for (int side = 0; side < 4; ++side) {
      double x_hi = (side < 2) ? L / 2 : L;
      double x_lo = (side < 2) ? L / 6 : L / 2;  // apex exemption
      for (double lx = x_hi; lx > x_lo;) {
        double ly = (side < 2) ? lx * tanth : (L - lx) * tanth;
        if (side % 2) ly = -ly;
        double wx = px + lx * ax.first - ly * ax.second;
        double wy = py + lx * ax.second + ly * ax.first;
        double dv = std::hypot(lx, ly);  // distance to the vertex
        double step = 0.25 * lead * ((side < 2) ? k_near : k_far) *
                      std::pow(dv, pt.u_exp + 1);
        step = std::min(step, L * sec / 512);
        Ball b = Ball::exact(wx, wy, prec);
        BigReal cover(kRadiusPrecision);
        mpfr_set_d(cover.get(), step * 0.8 + 1e-12, MPFR_RNDU);
        b.add_error(cover);
        if (d.membership(map.apply(b)) != Tri::Inside)
          throw InvarianceCheckFailed("boundary image escapes the petal");
        if (++samples > 4000000)
          throw InvarianceCheckFailed("boundary cover budget exceeded");
        lx -= step / sec;
      }
    }
    // one interior sample, for the open-mapping argument
    Ball mid = Ball::exact(px + ax.first * L / 2, py + ax.second * L / 2,
                           prec);
    if (d.membership(map.apply(mid)) != Tri::Inside)
      throw InvarianceCheckFailed("interior sample leaves the petal");
    out.push_back(std::move(d));
  }
  return out;
}

// Forward invariance of a tangent trap disk, by covering the boundary circle
// with 2^11 overlapping balls and certifying every image lands back inside.
// The inward margin of a disk tangent to its parabolic point degenerates
// quadratically at the tangency, so boundary samples within 0.4 radii of the
// tangency are exempt; interior samples on that side stand in for them.
inline void certify_trap_disk(const RationalMap& map, const QPoint& tangency,
                              const TrapDisk& d) {
  const int samples = 2048;
  const mpfr_prec_t prec = 128;
  const double pi = 3.14159265358979;
  double cx = mpq_class(d.center.x).get_d();
  double cy = mpq_class(d.center.y).get_d();
  double R = std::sqrt(d.radius2.get_d());
  double px = mpq_class(tangency.x).get_d();
  double py = mpq_class(tangency.y).get_d();
  double step = 2 * pi * R / samples;
  int exempt = 0;
  for (int si = 0; si < samples; ++si) {
    double phi = 2 * pi * (si + 0.5) / samples;
    double wx = cx + R * std::cos(phi), wy = cy + R * std::sin(phi);
    if (std::hypot(wx - px, wy - py) < 0.4 * R) {
      ++exempt;
      continue;
    }
    Ball b = Ball::exact(wx, wy, prec);
    BigReal cover(kRadiusPrecision);
    mpfr_set_d(cover.get(), step * 0.75 + 1e-12, MPFR_RNDU);
    b.add_error(cover);
    if (d.membership(map.apply(b)) != Tri::Inside)
      throw InvarianceCheckFailed("disk boundary image escapes the trap");
  }
  if (exempt * 4 > samples)
    throw InvarianceCheckFailed("tangency exemption covers too much boundary");
  Ball ctr = Ball::exact(d.center.x, d.center.y, prec);
  if (d.membership(map.apply(ctr)) != Tri::Inside)
    throw InvarianceCheckFailed("disk center leaves the trap");
  Ball mid = Ball::exact((cx + px) / 2, (cy + py) / 2, prec);
  if (d.membership(map.apply(mid)) != Tri::Inside)
    throw InvarianceCheckFailed("tangency-side sample leaves the trap");
}

// ---------------------------------------------------------------------------
// The scene: validated configuration plus the coarse picture

enum class RegionId { E1, E2, A1, A2, U, V, Utilde, Trap };

struct DistEstimate {
  BigReal e{64};     // the estimator value: e <= d <= 2e
  BigReal d_lo{64};  // certified lower bound on d(w, J)
  BigReal d_hi{64};  // certified upper bound on d(w, J)
};

class Scene {
 public:
  std::string name;
  RationalMap map;
  SceneConstants k;
  std::vector<ParabolicPointSpec> parabolic;
  std::vector<PreparabolicPointSpec> preparabolic;
  std::vector<CriticalPoint> critical_points;
  std::vector<ExcludedDisk> excluded;
  CoarsePicture picture;
  uint64_t content_hash = 0;  // config hash, stamped into rendered images
  std::vector<std::pair<double, double>> postcritical;  // orbit samples

  explicit Scene(RationalMap m) : map(std::move(m)) {}

  TrapSet oracle_trap_set() const {
    TrapSet t;
    for (const auto& p : parabolic)
      t.entries.push_back({p.location, p.oracle_traps, p.oracle_trap_disks});
    return t;
  }
  TrapSet u_trap_set() const {
    TrapSet t;
    for (const auto& p : parabolic)
      t.entries.push_back({p.location, p.u_traps, p.u_trap_disks});
    return t;
  }

  // ---- membership -------------------------------------------------------

  Tri in_E1(const Ball& w) const {
    Tri acc = Tri::Outside;
    for (const auto& p : parabolic)
      acc = tri_any(acc, disk_membership(w, p.location, p.e1_radius));
    for (const auto& q : preparabolic)
      acc = tri_any(acc, disk_membership(w, q.location, q.e1_radius));
    return acc;
  }

  // index of the (pre)parabolic point whose E2 disk certifiably holds w;
  // parabolic points come first in the combined indexing
  Tri in_E2(const Ball& w, int* which = nullptr) const {
    Tri acc = Tri::Outside;
    int n = 0;
    auto probe = [&](const QPoint& c, const mpq_class& r) {
      Tri t = disk_membership(w, c, r);
      if (t == Tri::Inside && which) *which = n;
      acc = tri_any(acc, t);
      ++n;
    };
    for (const auto& p : parabolic) probe(p.location, p.e2_radius);
    for (const auto& q : preparabolic) probe(q.location, q.e2_radius);
    return acc;
  }

  int point_count() const {
    return int(parabolic.size() + preparabolic.size());
  }
  const WedgeSet& wedge_a1(int i) const {
    return i < int(parabolic.size()) ? parabolic[i].a1
                                     : preparabolic[i - parabolic.size()].a1;
  }
  const WedgeSet& wedge_a2(int i) const {
    return i < int(parabolic.size()) ? parabolic[i].a2
                                     : preparabolic[i - parabolic.size()].a2;
  }
  const QPoint& point_location(int i) const {
    return i < int(parabolic.size())
               ? parabolic[i].location
               : preparabolic[i - parabolic.size()].location;
  }
  bool point_is_parabolic(int i) const { return i < int(parabolic.size()); }

  Tri in_trap(const Ball& w) const {
    Tri acc = Tri::Outside;
    for (const auto& p : parabolic) {
      for (const auto& t : p.u_traps) acc = tri_any(acc, t.membership(w));
      for (const auto& d : p.u_trap_disks) acc = tri_any(acc, d.membership(w));
    }
    return acc;
  }

  Tri in_Utilde(const Ball& w) const {
    Tri acc = tri_all(disk_membership(w, QPoint{0, 0}, k.u_radius),
                      tri_not(in_trap(w)));
    for (const auto& d : excluded) {
      if (acc == Tri::Outside) break;
      acc = tri_all(acc, tri_not(disk_membership(w, d.center, d.radius)));
    }
    return acc;
  }

  // U is the depth-u preimage of U~: iterate forward u times, test once.
  // The complement of U~ is forward invariant (traps and excluded disks map
  // into the excluded structure, |r| >= |z| past u_radius is certified at
  // load), so certified exits from U~ along the way settle the answer early.
  Tri in_U(const Ball& w) const {
    Ball z = w;
    for (int j = 0; j < k.u_depth; ++j) {
      if (z.rad_double() > 1.0) return Tri::Undecided;
      if ((j & 7) == 0 && in_Utilde(z) == Tri::Outside) return Tri::Outside;
      z = map.apply(z);
    }
    return in_Utilde(z);
  }

  Tri in_V(const Ball& w) const {
    if (w.rad_double() > 1.0) return Tri::Undecided;
    return in_U(map.apply(w));
  }

  Tri membership(const Ball& w, RegionId region) const {
    switch (region) {
      case RegionId::E1:
        return in_E1(w);
      case RegionId::E2:
        return in_E2(w);
      case RegionId::A1: {
        Tri acc = Tri::Outside;
        for (int i = 0; i < point_count(); ++i)
          acc = tri_any(acc, tri_all(wedge_a1(i).membership(w),
                                     e2_disk(i, w)));
        return acc;
      }
      case RegionId::A2: {
        Tri acc = Tri::Outside;
        for (int i = 0; i < point_count(); ++i)
          acc = tri_any(acc, tri_all(wedge_a2(i).membership(w),
                                     e2_disk(i, w)));
        return acc;
      }
      case RegionId::U:
        return in_U(w);
      case RegionId::V:
        return in_V(w);
      case RegionId::Utilde:
        return in_Utilde(w);
      case RegionId::Trap:
        return in_trap(w);
    }
    return Tri::Undecided;
  }

  Tri e2_disk(int i, const Ball& w) const {
    return i < int(parabolic.size())
               ? disk_membership(w, parabolic[i].location,
                                 parabolic[i].e2_radius)
               : disk_membership(w, preparabolic[i - parabolic.size()].location,
                                 preparabolic[i - parabolic.size()].e2_radius);
  }

  // ---- distance estimator -----------------------------------------------

  // picture-backed estimate, for w certified outside V and the E1 disks
  DistEstimate estimate_far(const Ball& w) const {
    const long c = picture.c_pix;
    mpq_class h(1, 1L << c);
    mpq_class rad(mpfr_get_d(w.rad().get(), MPFR_RNDU));
    // locate the cell of the center
    double cx = mpfr_get_d(w.re().get(), MPFR_RNDN);
    double cy = mpfr_get_d(w.im().get(), MPFR_RNDN);
    long i = -1, j = -1;
    if (std::fabs(cx) < double(picture.grid_radius) &&
        std::fabs(cy) < double(picture.grid_radius)) {
      i = long(std::floor(cx * double(1L << c))) + picture.W / 2;
      j = long(std::floor(cy * double(1L << c))) + picture.W / 2;
    }
    mpq_class dlo, dhi;
    if (picture.in_grid(i, j) &&
        picture.dt2_hi[picture.idx(i, j)] < (int64_t(1) << 62)) {
      auto floor_sqrt = [](int64_t q2) {
        int64_t s = int64_t(std::sqrt(double(q2)));
        while (s * s > q2) --s;
        while ((s + 1) * (s + 1) <= q2) ++s;
        return s;
      };
      // the set is contained in the drawn cells, so their distance bounds
      // it from below
      int64_t s = floor_sqrt(picture.dt2[picture.idx(i, j)]);
      dlo = (mpq_class(s) - mpq_class(3, 2)) * h - rad;
      // a tight cell has the set within 2*sqrt(2) cells of its center, so
      // the tight-set distance bounds it from above
      int64_t qh = picture.dt2_hi[picture.idx(i, j)];
      int64_t sh = floor_sqrt(qh);
      int64_t s2 = (sh * sh == qh) ? sh : sh + 1;
      dhi = (mpq_class(s2) + mpq_class(15, 4)) * h + rad;
      // the bracket can be arbitrarily loose this close to the set; the
      // caller decides whether it separates the scales it cares about
      if (dlo < 0) dlo = 0;
    } else {
      // far outside the grid: the parabolic points are on the set, so the
      // nearest one bounds from above; the bounding radius bounds from below
      mpq_class wlo(mpfr_get_d(w.abs_lower().get(), MPFR_RNDD));
      dhi = 0;
      bool first = true;
      for (const auto& p : parabolic) {
        Ball d = ball_sub(w, Ball::exact(p.location.x, p.location.y,
                                         w.precision()));
        mpq_class du(mpfr_get_d(d.abs_upper().get(), MPFR_RNDU));
        if (first || du < dhi) dhi = du;
        first = false;
      }
      if (wlo - k.B <= 0 || dhi > 2 * (wlo - k.B))
        throw EstimatorOutOfDomain("outer bracket exceeds factor two");
      dlo = dhi / 2;
    }
    DistEstimate out;
    mpfr_set_q(out.d_lo.get(), dlo.get_mpq_t(), MPFR_RNDD);
    mpfr_set_q(out.d_hi.get(), dhi.get_mpq_t(), MPFR_RNDU);
    out.e = out.d_lo;
    return out;
  }

  // repelling-ray estimate inside E2 - A1 of point i
  DistEstimate estimate_line(const Ball& w, int i) const {
    const QPoint& apex = point_location(i);
    const auto& axes = i < int(parabolic.size())
                           ? parabolic[i].repelling_axes
                           : preparabolic[i - parabolic.size()].axes;
    RayDistance rd = ray_set_distance(w, apex, axes);
    Ball zeta = ball_sub(w, Ball::exact(apex.x, apex.y, w.precision()));
    BigReal zhi = zeta.abs_upper();
    // deviation allowance: the Julia arcs stay within an eighth of the A2
    // angle of the rays (validated configuration margin)
    BigReal dev(64);
    {
      BigReal pi(64), x(64);
      mpfr_const_pi(pi.get(), MPFR_RNDU);
      mpq_class eighth = k.alpha / 8;
      mpfr_mul_q(x.get(), pi.get(), eighth.get_mpq_t(), MPFR_RNDU);
      mpfr_sin(x.get(), x.get(), MPFR_RNDU);
      mpfr_nextabove(x.get());
      mpfr_mul(dev.get(), x.get(), zhi.get(), MPFR_RNDU);
      mpfr_mul_2si(dev.get(), dev.get(), 1, MPFR_RNDU);  // 2 |zeta| sin(a/8)
    }
    if (!point_is_parabolic(i)) {
      // preparabolic centers are rational approximations; allow for the
      // apex offset admitted by the landing check
      BigReal slack(64);
      mpfr_set_ui_2exp(slack.get(), 1, -32, MPFR_RNDU);
      mpfr_add(dev.get(), dev.get(), slack.get(), MPFR_RNDU);
    }
    DistEstimate out;
    mpfr_sub(out.d_lo.get(), rd.lo.get(), dev.get(), MPFR_RNDD);
    if (mpfr_sgn(out.d_lo.get()) < 0) mpfr_set_zero(out.d_lo.get(), 1);
    // every ray point within |zeta| of the apex has an arc point within the
    // deviation allowance, so the ray distance also bounds from above
    mpfr_add(out.d_hi.get(), rd.hi.get(), dev.get(), MPFR_RNDU);
    out.e = out.d_lo;
    return out;
  }

  // the public estimator: picks the line model inside an E2 disk and the
  // picture elsewhere
  DistEstimate coarse_distance(const Ball& w) const {
    int which = -1;
    if (in_E2(w, &which) == Tri::Inside && which >= 0)
      return estimate_line(w, which);
    return estimate_far(w);
  }

  // lower bound on the picture distance at a point, in world units; used by
  // the sampled postcritical check and the renderer's far-field prefilter
  double picture_distance_floor(double x, double y) const {
    double h = 1.0 / double(1L << picture.c_pix);
    if (std::fabs(x) >= double(picture.grid_radius) ||
        std::fabs(y) >= double(picture.grid_radius))
      return 0.0;
    long i = long(std::floor(x / h)) + picture.W / 2;
    long j = long(std::floor(y / h)) + picture.W / 2;
    if (!picture.in_grid(i, j)) return 0.0;
    int64_t q2 = picture.dt2[picture.idx(i, j)];
    if (q2 >= (int64_t(1) << 62)) return 0.0;
    double s = std::floor(std::sqrt(double(q2)));
    while (s * s > double(q2)) --s;
    return std::max(0.0, (s - 1.5) * h);
  }
};

// ---------------------------------------------------------------------------
// Scene finalization: derive germs, wedges, and traps from the raw config

namespace detail {

inline WedgeSet make_wedges(const QPoint& apex,
                            const std::vector<std::pair<double, double>>& axes,
                            const mpq_class& half_angle_turns) {
  auto [clo, chi] = cos_pi_enclosure(half_angle_turns);
  WedgeSet ws;
  for (const auto& a : axes) {
    Cone c;
    c.apex = apex;
    c.ax = a.first;
    c.ay = a.second;
    c.cos_lo = clo;
    c.cos_hi = chi;
    ws.cones.push_back(std::move(c));
  }
  return ws;
}

inline void check_axis_set(const std::vector<std::pair<double, double>>& axes,
                           int u_exp, const mpq_class& lead, bool repelling,
                           int item) {
  if (int(axes.size()) != u_exp)
    throw InvariantViolation(item, "axis count must equal the degeneracy");
  double la = lead.get_d();
  for (const auto& a : axes) {
    double norm = std::hypot(a.first, a.second);
    if (std::fabs(norm - 1.0) > 1e-9)
      throw InvariantViolation(item, "axis directions must be unit vectors");
    // repelling: lead * axis^u_exp on the positive real axis;
    // attracting: on the negative real axis
    double re = 1, im = 0;
    for (int i = 0; i < u_exp; ++i) {
      double nr = re * a.first - im * a.second;
      im = re * a.second + im * a.first;
      re = nr;
    }
    re *= la;
    im *= la;
    double want = repelling ? 1.0 : -1.0;
    if (std::fabs(im) > 1e-6 || re * want < 0.9)
      throw InvariantViolation(item, "axis misaligned with the germ");
  }
}

}  // namespace detail

// Build derived data and check the cheap (exact) invariants.  The sampled
// checks live in validate_scene, after the coarse picture exists.
inline void finalize_scene(Scene& s) {
  if (!(s.k.c0 > 1))
    throw InvariantViolation(6, "expansion constant c0 must exceed 1");
  if (!(s.k.n_mult >= 1))
    throw InvariantViolation(6, "step multiplier must be at least 1");
  if (!(s.k.d_lo > 0) || s.k.d_lo > 1)
    throw InvariantViolation(7, "derivative floor must lie in (0,1]");
  if (!(s.k.alpha > 0) || !(s.k.alpha < mpq_class(1, 2)))
    throw InvariantViolation(5, "wedge angle must lie in (0, pi/2)");
  // beta > 8 - log2(d_lo) + eta with eta from the step multiplier
  double eta = std::ceil(std::log2(std::max(1.0, s.k.n_mult.get_d()))) + 2;
  if (double(s.k.beta) <= 8 - std::log2(s.k.d_lo.get_d()) + eta)
    throw InvariantViolation(5, "capture exponent beta too small");
  if (!s.map.escape_certified(s.k.B, mpq_class(21, 20)))
    throw InvariantViolation(8, "bounding radius not certified to escape");
  if (!s.map.escape_certified(s.k.escape_radius, mpq_class(21, 20)))
    throw InvariantViolation(8, "escape radius not certified");
  if (mpq_class(s.k.grid_radius) < 3 * s.k.B)
    throw InvariantViolation(8, "coarse grid must reach three bounding radii");
  // the in_U early exit needs |z| > u_radius to be forward invariant
  if (s.k.u_radius < s.k.B)
    throw InvariantViolation(3, "U~ disk must contain the bounding disk");
  if (!s.map.escape_certified(s.k.u_radius, mpq_class(1)))
    throw InvariantViolation(3, "U~ radius not certified non-contracting");

  for (auto& p : s.parabolic) {
    if (p.location.y != 0)
      throw InvariantViolation(2, "parabolic points must be real rational");
    if (!(p.e1_radius > 0) || !(p.e1_radius < p.e2_radius))
      throw InvariantViolation(4, "E1 disk must sit strictly inside E2");
    if (p.u_trap_length == 0 && p.u_trap_disks.empty())
      throw InvariantViolation(3, "parabolic point has no membership trap");
    if (p.oracle_trap_length == 0 && p.oracle_trap_disks.empty())
      throw InvariantViolation(3, "parabolic point has no oracle trap");
    auto [gn, gd] = s.map.germ_at(p.location.x);
    auto coeffs = rational_germ_coeffs(gn, gd, p.u_exp + 2);
    if (coeffs[0] != 1)
      throw InvariantViolation(1, "multiplier at a parabolic point is not 1");
    for (int j = 2; j <= p.u_exp; ++j)
      if (coeffs[j - 1] != 0)
        throw InvariantViolation(2, "germ degeneracy below the configured one");
    mpq_class lead = coeffs[p.u_exp];
    if (lead == 0)
      throw InvariantViolation(2, "germ degeneracy above the configured one");
    detail::check_axis_set(p.repelling_axes, p.u_exp, lead, true, 2);
    detail::check_axis_set(p.attracting_axes, p.u_exp, lead, false, 2);
    p.germ = std::make_shared<ParabolicGerm>(gn, gd);
    p.a1 = detail::make_wedges(p.location, p.repelling_axes, s.k.alpha / 2);
    p.a2 = detail::make_wedges(p.location, p.repelling_axes, s.k.alpha);
    if (p.u_trap_length > 0)
      p.u_traps = build_trap_region(s.map, p, p.u_trap_fraction,
                                    p.u_trap_length);
    if (p.oracle_trap_length > 0) {
      if (p.oracle_trap_fraction == p.u_trap_fraction &&
          p.oracle_trap_length == p.u_trap_length)
        p.oracle_traps = p.u_traps;  // identical parameters, one build
      else
        p.oracle_traps = build_trap_region(s.map, p, p.oracle_trap_fraction,
                                           p.oracle_trap_length);
    }
    for (const auto& d : p.u_trap_disks)
      certify_trap_disk(s.map, p.location, d);
    for (const auto& d : p.oracle_trap_disks)
      certify_trap_disk(s.map, p.location, d);
  }
  for (auto& q : s.preparabolic) {
    if (q.parent < 0 || q.parent >= int(s.parabolic.size()))
      throw InvariantViolation(2, "preparabolic parent index out of range");
    if (!(q.e1_radius > 0) || !(q.e1_radius < q.e2_radius))
      throw InvariantViolation(4, "E1 disk must sit strictly inside E2");
    // the configured center must land deep inside the parent petal disk in
    // `order` steps; rational approximations of irrational preimages are
    // fine as long as they land well within the parent's inner disk
    QPoint z = q.location;
    for (int i = 0; i < q.order; ++i) z = detail::apply_exact(s.map, z);
    const auto& par = s.parabolic[q.parent];
    mpq_class dx = z.x - par.location.x, dy = z.y - par.location.y;
    mpq_class lim = par.e1_radius / 8;
    mpq_class cap(1, 1L << 36);  // apex error must stay below pixel scales
    if (cap < lim) lim = cap;
    if (dx * dx + dy * dy > lim * lim)
      throw InvariantViolation(2, "preparabolic point misses its parent");
    q.a1 = detail::make_wedges(q.location, q.axes, s.k.alpha / 2);
    q.a2 = detail::make_wedges(q.location, q.axes, s.k.alpha);
  }
  // E2 disks pairwise disjoint (exact rational check)
  std::vector<std::pair<QPoint, mpq_class>> disks;
  for (const auto& p : s.parabolic)
    disks.push_back({p.location, p.e2_radius});
  for (const auto& q : s.preparabolic)
    disks.push_back({q.location, q.e2_radius});
  for (size_t a = 0; a < disks.size(); ++a)
    for (size_t b = a + 1; b < disks.size(); ++b) {
      mpq_class dx = disks[a].first.x - disks[b].first.x;
      mpq_class dy = disks[a].first.y - disks[b].first.y;
      mpq_class rr = disks[a].second + disks[b].second;
      if (!(dx * dx + dy * dy > rr * rr))
        throw InvariantViolation(4, "E2 disks overlap");
    }

  // each excluded disk must map into the complement of U~ (another excluded
  // disk, a membership trap, or past the outer disk), so V stays inside U
  {
    const mpfr_prec_t prec = 128;
    TrapSet traps = s.u_trap_set();
    for (const auto& d : s.excluded) {
      Ball z = Ball::exact(d.center.x, d.center.y, prec);
      BigReal r0(kRadiusPrecision);
      mpfr_set_q(r0.get(), d.radius.get_mpq_t(), MPFR_RNDU);
      z.add_error(r0);
      Ball img = s.map.apply(z);
      bool ok = traps.membership(img) == Tri::Inside ||
                disk_membership(img, QPoint{0, 0}, s.k.u_radius) ==
                    Tri::Outside;
      for (const auto& e : s.excluded) {
        if (ok) break;
        ok = disk_membership(img, e.center, e.radius) == Tri::Inside;
      }
      if (!ok)
        throw InvariantViolation(3,
                                 "excluded disk escapes the U complement");
    }
  }
}

// Sampled invariants; requires the coarse picture.  Fills in the
// postcritical sample orbit as a side effect.
inline void validate_scene(Scene& s) {
  const mpfr_prec_t prec = 128;
  // critical orbits must certifiably enter an oracle trap
  TrapSet traps = s.oracle_trap_set();
  s.postcritical.clear();
  for (const auto& cp : s.critical_points) {
    Ball z = Ball::exact(cp.location.x, cp.location.y, prec);
    BigReal r0(kRadiusPrecision);
    mpfr_set_q(r0.get(), cp.radius.get_mpq_t(), MPFR_RNDU);
    z.add_error(r0);
    z = s.map.apply(z);  // postcritical orbit starts at the critical value
    bool trapped = false;
    for (long step = 0; step < s.k.coarse_budget; ++step) {
      s.postcritical.push_back({mpfr_get_d(z.re().get(), MPFR_RNDN),
                                mpfr_get_d(z.im().get(), MPFR_RNDN)});
      if (traps.membership(z) == Tri::Inside) {
        trapped = true;
        break;
      }
      if (z.rad_double() > 0.25)
        throw InvariantViolation(3, "critical orbit lost certification");
      z = s.map.apply(z);
    }
    if (!trapped)
      throw InvariantViolation(3, "critical orbit failed to reach a trap");
    // a short certified tail inside the trap, for the margin check
    for (int extra = 0; extra < 64 && z.rad_double() < 0.25; ++extra) {
      z = s.map.apply(z);
      s.postcritical.push_back({mpfr_get_d(z.re().get(), MPFR_RNDN),
                                mpfr_get_d(z.im().get(), MPFR_RNDN)});
    }
    // the parabolic limit points themselves are postcritical
  }
  for (const auto& p : s.parabolic)
    s.postcritical.push_back({mpq_class(p.location.x).get_d(),
                              mpq_class(p.location.y).get_d()});

  // sampled region relations
  std::mt19937_64 rng(0x70617261626f6cULL);
  double R = s.k.u_radius.get_d();
  std::uniform_real_distribution<double> uni(-R, R);
  std::vector<std::pair<double, double>> inside_v, outside_u;
  const int kSamples = 10000;
  for (int t = 0; t < kSamples; ++t) {
    double x = uni(rng), y = uni(rng);
    Ball w = Ball::exact(x, y, prec);
    Tri tu = s.in_U(w), tv = s.in_V(w);
    if (tv == Tri::Inside && tu == Tri::Outside)
      throw InvariantViolation(3, "sample inside V but outside U");
    Tri e1 = s.in_E1(w);
    if (e1 != Tri::Outside) continue;
    if (tv == Tri::Inside) inside_v.push_back({x, y});
    if (tu == Tri::Outside) outside_u.push_back({x, y});
    // derivative floor and postcritical margin on samples of r(U)
    if (tu == Tri::Inside) {
      Ball img = s.map.apply(w);
      BigReal dl = s.map.derivative(img).abs_lower();
      if (mpfr_cmp_q(dl.get(), s.k.d_lo.get_mpq_t()) <= 0)
        throw InvariantViolation(7, "derivative floor fails on r(U)");
      double ux = mpfr_get_d(img.re().get(), MPFR_RNDN);
      double uy = mpfr_get_d(img.im().get(), MPFR_RNDN);
      double dp = 1e300;
      for (const auto& ps : s.postcritical)
        dp = std::min(dp, std::hypot(ux - ps.first, uy - ps.second));
      // the drawn cells track the Julia set only to within a band of a few
      // cells, so discount that band before applying the margin factor
      double slack = 4.0 / double(1L << s.picture.c_pix);
      double dj = std::max(0.0, s.picture_distance_floor(ux, uy) - slack);
      if (dp < 32.0 * dj)
        throw InvariantViolation(3, "postcritical margin fails at a sample");
    }
  }
  // separation between V and the complement of U, away from E1
  mpq_class sep2 = s.k.sep_d * s.k.sep_d;
  double sepd = std::sqrt(sep2.get_d());
  for (const auto& a : inside_v)
    for (const auto& b : outside_u) {
      if (std::hypot(a.first - b.first, a.second - b.second) <= sepd)
        throw InvariantViolation(4, "V and the U complement come too close");
    }

  // wedge and derivative checks inside the E2 disks
  for (int i = 0; i < s.point_count(); ++i) {
    const QPoint& c = s.point_location(i);
    double cx = mpq_class(c.x).get_d(), cy = mpq_class(c.y).get_d();
    double r2 = i < int(s.parabolic.size())
                    ? s.parabolic[i].e2_radius.get_d()
                    : s.preparabolic[i - s.parabolic.size()].e2_radius.get_d();
    std::uniform_real_distribution<double> ang(0.0, 6.283185307179586);
    std::uniform_real_distribution<double> rad01(0.0, 1.0);
    for (int t = 0; t < 512; ++t) {
      double rho = r2 * std::sqrt(rad01(rng));
      double th = ang(rng);
      Ball w = Ball::exact(cx + rho * std::cos(th), cy + rho * std::sin(th),
                           prec);
      Tri a1 = s.wedge_a1(i).membership(w);
      Tri a2 = s.wedge_a2(i).membership(w);
      if (a1 == Tri::Inside && a2 == Tri::Outside)
        throw InvariantViolation(5, "A1 escapes A2 at a sample");
      if (a2 == Tri::Inside && s.e2_disk(i, w) == Tri::Inside) {
        // in_V iterates to the full preimage depth here, so cap how many
        // samples pay that price
        if ((t & 3) == 0 && s.in_V(w) == Tri::Outside)
          throw InvariantViolation(5, "A2 sample leaves V");
        if (s.point_is_parabolic(i)) {
          BigReal dl = s.map.derivative(w).abs_lower();
          if (mpfr_cmp_ui(dl.get(), 1) <= 0)
            throw InvariantViolation(5, "map fails to expand on A2");
        }
      }
      // derivative floor applies on all of E2
      BigReal dl = s.map.derivative(w).abs_lower();
      if (mpfr_cmp_q(dl.get(), s.k.d_lo.get_mpq_t()) <= 0)
        throw InvariantViolation(7, "derivative floor fails inside E2");
    }
  }
}

}  // namespace parabolica
