/* SPDX-License-Identifier: Apache-2.0 */
#pragma once

#include <stdexcept>
#include <vector>

#include "parabolica/arith.hpp"

// Exact rational map r(z) = num(z)/den(z) with certified ball evaluation
// and exact germ extraction at rational fixed points.

namespace parabolica {

struct QPoint {
  mpq_class x, y;
};

class RationalMap {
 public:
  RationalMap(std::vector<mpq_class> num, std::vector<mpq_class> den)
      : num_(std::move(num)), den_(std::move(den)) {
    if (den_.empty() || poly_is_zero(den_))
      throw std::invalid_argument("zero denominator");
    if (num_.empty()) num_ = {mpq_class(0)};
    dnum_ = differentiate(num_);
    dden_ = differentiate(den_);
  }

  const std::vector<mpq_class>& num() const { return num_; }
  const std::vector<mpq_class>& den() const { return den_; }
  bool is_polynomial() const { return den_.size() == 1; }
  size_t degree() const { return std::max(num_.size(), den_.size()) - 1; }

  Ball apply(const Ball& z) const {
    Ball n = eval_poly(num_, z);
    if (is_polynomial()) {
      if (den_[0] == 1) return n;
      return ball_div(n, Ball::exact(den_[0], 0, z.precision()));
    }
    return ball_div(n, eval_poly(den_, z));
  }

  // r'(z), via (n'd - nd')/d^2.
  Ball derivative(const Ball& z) const {
    Ball dn = eval_poly(dnum_, z);
    if (is_polynomial()) {
      if (den_[0] == 1) return dn;
      return ball_div(dn, Ball::exact(den_[0], 0, z.precision()));
    }
    Ball n = eval_poly(num_, z);
    Ball d = eval_poly(den_, z);
    Ball dd = eval_poly(dden_, z);
    Ball top = ball_sub(ball_mul(dn, d), ball_mul(n, dd));
    return ball_div(top, ball_mul(d, d));
  }

  // Exact rational evaluation at a real rational point (maps with real
  // coefficients only need this for real arguments).
  mpq_class apply_exact_real(const mpq_class& x) const {
    mpq_class n = 0, d = 0;
    for (size_t j = num_.size(); j >= 1; --j) n = n * x + num_[j - 1];
    for (size_t j = den_.size(); j >= 1; --j) d = d * x + den_[j - 1];
    if (d == 0) throw std::invalid_argument("pole at rational point");
    return n / d;
  }

  // Germ at an exact rational fixed point p (real): w -> r(p+w) - p as a
  // rational function of w, both polynomials shifted exactly.
  std::pair<std::vector<mpq_class>, std::vector<mpq_class>> germ_at(
      const mpq_class& p) const {
    std::vector<mpq_class> n = shift(num_, p);
    std::vector<mpq_class> d = shift(den_, p);
    // num(p+w) - p*den(p+w)
    if (n.size() < d.size()) n.resize(d.size(), mpq_class(0));
    for (size_t j = 0; j < d.size(); ++j) n[j] -= p * d[j];
    if (n[0] != 0)
      throw std::invalid_argument("point is not a fixed point of the map");
    return {n, d};
  }

  // Exact check that |r(z)| >= lambda |z| for all |z| >= R (polynomial maps):
  // requires g = |a_top| - sum_{j<top} |a_j| R^{j-top} > 0 and
  // R^{top-1} g >= lambda.
  bool escape_certified(const mpq_class& R, const mpq_class& lambda) const {
    if (!is_polynomial() || num_.size() < 2) return false;
    size_t top = num_.size() - 1;
    mpq_class g = abs(mpq_class(num_[top] / den_[0]));
    mpq_class Rp = 1;  // R^{j-top} accumulated downward
    for (size_t j = top; j >= 1;) {
      --j;
      Rp /= R;
      g -= abs(mpq_class(num_[j] / den_[0])) * Rp;
    }
    if (!(g > 0)) return false;
    mpq_class lhs = g;
    for (size_t i = 0; i + 1 < top; ++i) lhs *= R;
    return lhs >= lambda;
  }

 private:
  static bool poly_is_zero(const std::vector<mpq_class>& p) {
    for (const auto& c : p)
      if (c != 0) return false;
    return true;
  }
  static std::vector<mpq_class> differentiate(
      const std::vector<mpq_class>& p) {
    std::vector<mpq_class> d;
    for (size_t j = 1; j < p.size(); ++j) d.push_back(p[j] * (long)j);
    if (d.empty()) d.push_back(mpq_class(0));
    return d;
  }
  static std::vector<mpq_class> shift(const std::vector<mpq_class>& p,
                                      const mpq_class& a) {
    // coefficients of p(a + w) by repeated synthetic division
    std::vector<mpq_class> c = p;
    std::vector<mpq_class> out(p.size(), mpq_class(0));
    for (size_t k = 0; k < p.size(); ++k) {
      std::vector<mpq_class> q(c.size() - 1, mpq_class(0));
      mpq_class carry = 0;
      for (size_t j = c.size(); j >= 2; --j) {
        carry = carry * a + c[j - 1];
        q[j - 2] = carry;
      }
      out[k] = carry * a + c[0];
      c = std::move(q);
      if (c.empty()) break;
    }
    return out;
  }

  static Ball eval_poly(const std::vector<mpq_class>& p, const Ball& z) {
    mpfr_prec_t pr = z.precision();
    Ball acc(pr);
    for (size_t j = p.size(); j >= 1; --j) {
      acc = ball_mul(acc, z);
      if (p[j - 1] != 0)
        acc = ball_add(acc, Ball::exact(p[j - 1], 0, pr));
    }
    return acc;
  }

  std::vector<mpq_class> num_, den_, dnum_, dden_;
};

}  // namespace parabolica
