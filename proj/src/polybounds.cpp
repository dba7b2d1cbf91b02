#include "qproj/polybounds.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace qproj {

std::vector<Integer> chebyshev(int m) {
  if (m < 0) throw usage_error("Chebyshev degree must be nonnegative");
  std::vector<Integer> prev{1}, cur{0, 1};
  if (m == 0) return prev;
  for (int k = 1; k < m; ++k) {
    std::vector<Integer> next(k + 2, 0);
    for (int i = 0; i <= k; ++i) next[i + 1] += 2 * cur[i];
    for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= prev[i];
    prev = std::move(cur);
    cur = std::move(next);
  }
  return cur;
}

long double chebyshev_eval(int m, long double x) {
  if (m == 0) return 1;
  long double prev = 1, cur = x;
  for (int k = 1; k < m; ++k) {
    const long double next = 2 * x * cur - prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

OrGadget or_gadget(int n) {
  if (n < 1) throw usage_error("gadget arity must be positive");
  const long double pi = std::numbers::pi_v<long double>;
  const long double lo = pi * std::sqrt(static_cast<long double>(n)) / 2;
  OrGadget g;
  g.n = n;
  g.m = static_cast<int>(std::ceil(lo));
  const long double s = std::sin(pi / (2 * g.m));
  g.one_minus_alpha = n * s * s;
  g.alpha = 1 - g.one_minus_alpha;
  if (!(g.alpha > 0 && g.alpha < 1)) throw std::logic_error("gadget alpha outside (0,1)");
  return g;
}

long double eval_h(const OrGadget& g, Input y) {
  // alpha + (1-alpha)(N - 2k)/N = 1 - 2k(1-alpha)/N with k = #{j : y_j = -1}.
  const int k = std::popcount(y);
  return 1 - 2 * k * g.one_minus_alpha / g.n;
}

long double composed_gadget(const OrGadget& g, Input y) { return chebyshev_eval(g.m, eval_h(g, y)); }

GadgetReport check_gadget(int n) {
  check_arity(n);
  const auto g = or_gadget(n);
  GadgetReport r;
  r.n = n;
  r.m = g.m;
  r.alpha = g.alpha;
  r.at_ones = composed_gadget(g, 0);
  const long double c = std::cos(std::numbers::pi_v<long double> / g.m);
  for (int j = 0; j < n; ++j) {
    const Input y = Input{1} << j;
    r.at_flip_err = std::max(r.at_flip_err, std::fabs(composed_gadget(g, y) + 1));
    r.h_flip_err = std::max(r.h_flip_err, std::fabs(eval_h(g, y) - c));
  }
  for (Input y = 0; y < (Input{1} << n); ++y) {
    r.max_abs = std::max(r.max_abs, std::fabs(composed_gadget(g, y)));
    r.max_abs_h = std::max(r.max_abs_h, std::fabs(eval_h(g, y)));
  }
  return r;
}

MultilinearPoly blockify(const MultilinearPoly& f, Input x, const std::vector<Input>& blocks) {
  Input seen = 0;
  for (Input b : blocks) {
    if (b & seen) throw usage_error("blocks overlap");
    seen |= b;
  }
  const Input full = f.arity() >= 32 ? ~Input{0} : (Input{1} << f.arity()) - 1;
  if (seen != full) throw usage_error("blocks do not cover every variable");

  const auto q = f.to_basis(Basis::PlusMinus);
  MultilinearPoly out(static_cast<int>(blocks.size()), Basis::PlusMinus);
  for (const auto& [s, c] : q.coeffs()) {
    Input t = 0;
    for (std::size_t j = 0; j < blocks.size(); ++j)
      if (std::popcount(s & blocks[j]) & 1) t |= Input{1} << j;
    out.add(t, (std::popcount(s & x) & 1) ? Rational(-c) : c);
  }
  return out;
}

Rational real_sensitivity(const MultilinearPoly& p, Input x) {
  Rational s = 0;
  for (int j = 0; j < p.arity(); ++j) s += real_block_sens(p, x, Input{1} << j);
  return s;
}

Rational pi_sq_over_4_lower() { return Rational(2467, 1000); }

WeightWitness fbsdeg_witness(const PartialFn& f) {
  if (f.arity() > 8) throw usage_error("fbsdeg_witness supports n <= 8");
  WeightWitness w;
  w.degree = degree(f);
  w.bound = pi_sq_over_4_lower() * w.degree * w.degree;
  w.covers = true;
  w.within_bound = true;
  for (Input x = 0; x < f.size(); ++x) {
    auto c = frac_cert(f, x);
    w.covers = w.covers && is_fractional_certificate(f, c);
    w.within_bound = w.within_bound && c.value <= w.bound;
    w.weights.push_back(std::move(c));
  }
  return w;
}

}  // namespace qproj
