#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "qproj/polybounds.hpp"

using namespace qproj;

namespace {

// T_m coefficients by expanding cos(m t) = Re (cos t + i sin t)^m.
std::vector<Integer> chebyshev_binomial(int m) {
  std::vector<Integer> out(m + 1, 0);
  // T_m(x) = sum_k C(m,2k) x^{m-2k} (x^2-1)^k
  auto binom = [](int n, int k) {
    Integer r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return r;
  };
  for (int k = 0; 2 * k <= m; ++k) {
    for (int j = 0; j <= k; ++j) {
      Integer term = binom(m, 2 * k) * binom(k, j);
      if ((k - j) % 2) term = -term;
      out[m - 2 * k + 2 * j] += term;
    }
  }
  return out;
}

PartialFn random_total(int n, std::mt19937_64& rng) {
  return PartialFn::tabulate(n, [&](Input) { return (rng() & 1) != 0; });
}

}  // namespace

TEST_CASE("chebyshev coefficients") {
  CHECK(chebyshev(0) == std::vector<Integer>{1});
  CHECK(chebyshev(1) == std::vector<Integer>{0, 1});
  CHECK(chebyshev(2) == std::vector<Integer>{-1, 0, 2});
  for (int m = 0; m <= 12; ++m) CHECK(chebyshev(m) == chebyshev_binomial(m));
  for (int m = 0; m <= 10; ++m) {
    Integer s = 0;
    for (const auto& c : chebyshev(m)) s += c;
    CHECK(s == 1);
    CHECK(chebyshev_eval(m, 1.0L) == 1.0L);
  }
  for (int m = 2; m <= 8; ++m)
    CHECK(std::fabs(chebyshev_eval(m, std::cos(std::numbers::pi_v<long double> / m)) + 1) <= 1e-12L);
  CHECK_THROWS_AS(chebyshev(-1), usage_error);
}

TEST_CASE("or gadget") {
  const long double pi = std::numbers::pi_v<long double>;
  auto g = or_gadget(4);
  CHECK(g.m == 4);
  CHECK(eval_h(g, 0) == 1.0L);
  CHECK(std::fabs(eval_h(g, 0b0001) - std::cos(pi / 4)) <= 1e-12L);
  CHECK(std::fabs(eval_h(g, 0b1111) - (2 * g.alpha - 1)) <= 1e-15L);
  CHECK(std::fabs(g.alpha - (1 - 2 * (1 - std::cos(pi / 4)))) <= 1e-15L);

  for (int n = 1; n <= 200; ++n) {
    auto h = or_gadget(n);
    const long double lo = pi * std::sqrt(static_cast<long double>(n)) / 2;
    CHECK(h.m >= lo);
    CHECK(h.m < lo + 1);
    CHECK(h.alpha > 0);
    CHECK(h.alpha < 1);
  }

  // N = 1, m = 2: h(y) = alpha + (1-alpha) y, T_2(h) = 2h^2 - 1.
  auto one = or_gadget(1);
  CHECK(one.m == 2);
  for (Input y = 0; y < 2; ++y) {
    const long double yy = y ? -1 : 1;
    const long double h = one.alpha + (1 - one.alpha) * yy;
    CHECK(std::fabs(composed_gadget(one, y) - (2 * h * h - 1)) <= 1e-15L);
  }
}

TEST_CASE("composed gadget is bounded with the right endpoints") {
  for (int n : {1, 2, 3, 4, 9, 16}) {
    auto r = check_gadget(n);
    CHECK(std::fabs(r.at_ones - 1) <= 1e-9L);
    CHECK(r.at_flip_err <= 1e-9L);
    CHECK(r.h_flip_err <= 1e-12L);
    CHECK(r.max_abs <= 1 + 1e-9L);
    CHECK(r.max_abs_h <= 1.0L);
  }
}

TEST_CASE("blockify") {
  auto xor4 = poly_of(make_xor(4));
  auto g = blockify(xor4, 0b1111, {0b0011, 0b1100});
  CHECK(g.arity() == 2);
  // Flipping a two-element block leaves XOR unchanged, so f' is constant XOR_4(1^4) = 0.
  for (Input y = 0; y < 4; ++y) CHECK(g.eval(y) == 0);

  // Odd blocks turn XOR_4 into XOR_2.
  auto h = blockify(xor4, 0b1111, {0b0001, 0b1110});
  for (Input y = 0; y < 4; ++y) CHECK(h.eval(y) == (std::popcount(y) & 1));

  CHECK_THROWS_AS(blockify(xor4, 0, {0b0011, 0b0110, 0b1000}), usage_error);
  CHECK_THROWS_AS(blockify(xor4, 0, {0b0011, 0b0100}), usage_error);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + static_cast<int>(trial % 4);
    auto f = random_total(n, rng);
    auto p = poly_of(f);
    const Input x = static_cast<Input>(rng() % f.size());
    // singleton partition: f'(y) = f(x xor y)
    std::vector<Input> singles;
    for (int i = 0; i < n; ++i) singles.push_back(Input{1} << i);
    auto s = blockify(p, x, singles);
    for (Input y = 0; y < f.size(); ++y) CHECK(s.eval(y) == (f.bit(x ^ y) ? 1 : 0));
    // single block
    const Input full = static_cast<Input>(f.size() - 1);
    auto b = blockify(p, x, {full});
    CHECK(b.eval(0) == (f.bit(x) ? 1 : 0));
    CHECK(b.eval(1) == (f.bit(x ^ full) ? 1 : 0));
  }
}

TEST_CASE("blockify preserves the block sensitivity chain") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(trial % 6);
    auto f = random_total(n, rng);
    const Input x = static_cast<Input>(rng() % f.size());
    auto blocks = block_packing(f, x);
    Input used = 0;
    for (Input b : blocks) used |= b;
    const auto k = static_cast<int>(blocks.size());
    for (int i = 0; i < n; ++i)
      if (!((used >> i) & 1)) blocks.push_back(Input{1} << i);

    auto p = poly_of(f);
    auto g = blockify(p, x, blocks);
    // re-evaluate the table directly
    for (Input y = 0; y < (Input{1} << blocks.size()); ++y) {
      Input flip = 0;
      for (std::size_t j = 0; j < blocks.size(); ++j)
        if ((y >> j) & 1) flip |= blocks[j];
      CHECK(g.eval(y) == (f.bit(x ^ flip) ? 1 : 0));
    }
    // point 1^k is the all-plus-one input, packed as 0
    auto gf = PartialFn::tabulate(static_cast<int>(blocks.size()), [&](Input y) { return g.eval(y) == 1; });
    const int s = sensitivity(gf, 0);
    CHECK(k == block_sensitivity(f, x));
    CHECK(k <= s);
    CHECK(g.degree() <= p.degree());
    CHECK(s <= g.degree() * g.degree());
    // +-1 valued form 1 - 2g
    MultilinearPoly pm(g.arity(), Basis::PlusMinus);
    pm.add(0, 1);
    for (const auto& [m, c] : g.coeffs()) pm.add(m, -2 * c);
    CHECK(real_sensitivity(pm, 0) == s);
  }
}

TEST_CASE("fractional certificate weights against degree") {
  auto w = fbsdeg_witness(make_or(2));
  CHECK(w.degree == 2);
  CHECK(w.weights[0].weights == std::vector<Rational>{1, 1});
  CHECK(w.weights[0].value == 2);
  CHECK(w.covers);
  CHECK(w.within_bound);

  auto c = fbsdeg_witness(PartialFn::constant(3, true));
  for (const auto& fc : c.weights)
    for (const auto& v : fc.weights) CHECK(v == 0);

  auto x3 = fbsdeg_witness(make_xor(3));
  for (const auto& fc : x3.weights) CHECK(fc.value == 3);
  CHECK(x3.bound == pi_sq_over_4_lower() * 9);
  CHECK(x3.within_bound);
  CHECK_THROWS_AS(fbsdeg_witness(make_or(9)), usage_error);
}

TEST_CASE("exhaustive fbs against degree at n = 2, 3") {
  for (int n : {2, 3}) {
    const std::uint64_t count = std::uint64_t{1} << (1u << n);
    for (std::uint64_t t = 0; t < count; ++t) {
      auto f = PartialFn::tabulate(n, [&](Input x) { return ((t >> x) & 1u) != 0; });
      auto w = fbsdeg_witness(f);
      CHECK(w.covers);
      CHECK(w.within_bound);
    }
  }
}
