#include <doctest.h>

#include <random>

#include "qproj/measures.hpp"
#include "qproj/oracles.hpp"

using namespace qproj;

namespace {

PartialFn random_partial(int n, std::mt19937_64& rng, int bottom_one_in = 4) {
  return PartialFn::tabulate(n, [&](Input) {
    if (rng() % bottom_one_in == 0) return Value::Bottom;
    return rng() & 1 ? Value::One : Value::Zero;
  });
}

PartialFn from_index(int n, std::uint64_t table) {
  return PartialFn::tabulate(n, [&](Input x) { return ((table >> x) & 1u) != 0; });
}

}  // namespace

TEST_CASE("decision tree depth") {
  CHECK(dt_depth(make_or(3)) == 3);
  CHECK(dt_depth(PartialFn::constant(4, true)) == 0);
  CHECK(dt_depth(make_xor(2)) == 2);
  CHECK(dt_depth(make_maj(3)) == 3);

  // Undefined points are free: f defined only on 000 and 111 needs one query.
  PartialFn promise(3, {0b10000000}, {0b10000001});
  CHECK(dt_depth(promise) == 1);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 1 + static_cast<int>(trial % 4);
    auto f = random_partial(n, rng);
    CHECK(dt_depth(f) == oracle::dt_depth(f));
  }
}

TEST_CASE("certificate complexity") {
  CHECK(cert_complexity(make_or(3), 0b000) == 3);
  CHECK(cert_complexity(make_or(3), 0b001) == 1);
  for (Input x = 0; x < 4; ++x) CHECK(cert_complexity(make_xor(2), x) == 2);
  for (int n = 1; n <= 8; ++n) CHECK(cert_complexity(make_or(n), 0) == n);
  CHECK_THROWS_AS(cert_complexity(PartialFn(1, {0}, {0b01}), 1), usage_error);

  auto f = make_maj(3);
  CHECK(cert_complexity(f) == 2);
  CHECK(cert_complexity_at_value(f, true) == 2);
  CHECK(cert_complexity_at_value(make_or(4), true) == 1);
  CHECK(cert_complexity_at_value(make_or(4), false) == 4);

  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(trial % 5);
    auto g = random_partial(n, rng);
    for (Input x = 0; x < g.size(); ++x)
      if (g.defined(x)) CHECK(cert_complexity(g, x) == oracle::cert_complexity(g, x));
  }
}

TEST_CASE("sensitivity") {
  CHECK(sensitivity(make_or(3), 0) == 3);
  CHECK(sensitivity(make_or(3), 0b011) == 0);
  for (int n = 1; n <= 6; ++n)
    for (Input x = 0; x < (Input{1} << n); ++x) CHECK(sensitivity(make_xor(n), x) == n);
  // A flip leaving the domain does not count.
  PartialFn f(2, {0b0010}, {0b0011});
  CHECK(sensitivity(f, 0) == 1);
}

TEST_CASE("block sensitivity") {
  CHECK(block_sensitivity(make_or(3), 0) == 3);
  for (Input x = 0; x < 16; ++x) CHECK(block_sensitivity(make_xor(4), x) == 4);
  CHECK(block_sensitivity(PartialFn::constant(3, false)) == 0);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(trial % 5);
    auto g = random_partial(n, rng);
    for (Input x = 0; x < g.size(); ++x)
      if (g.defined(x)) CHECK(block_sensitivity(g, x) == oracle::block_sensitivity(g, x));
  }
}

TEST_CASE("fractional certificate and block sensitivity") {
  for (int n = 1; n <= 8; ++n) {
    auto c = frac_cert(make_or(n), 0);
    CHECK(c.value == n);
    for (const auto& w : c.weights) CHECK(w == 1);
    CHECK(frac_cert(make_or(n), 1).value == 1);
  }
  CHECK(frac_cert(PartialFn::constant(3, true), 5).value == 0);
  CHECK(frac_block_sens(make_or(3), 0) == 3);
  for (Input x = 0; x < 8; ++x) CHECK(frac_block_sens(make_xor(3), x) == 3);

  // Sort function on 3 bits has fractional value 3/2 at 010.
  auto f = PartialFn::tabulate(3, [](Input x) { return x == 0b010 || x == 0b011 || x == 0b110; });
  CHECK(frac_cert(f, 0b010).value == frac_block_sens(f, 0b010));

  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 120; ++trial) {
    const int n = 1 + static_cast<int>(trial % 6);
    auto g = random_partial(n, rng);
    for (Input x = 0; x < g.size(); ++x) {
      if (!g.defined(x)) continue;
      auto primal = frac_cert(g, x, LpRoute::Primal);
      auto dual = frac_cert(g, x, LpRoute::Dual);
      CHECK(primal.value == dual.value);
      CHECK(is_fractional_certificate(g, primal));
      CHECK(is_fractional_certificate(g, dual));
      CHECK(primal.value == frac_block_sens(g, x));
    }
  }
}

TEST_CASE("degree") {
  CHECK(degree(make_and(2)) == 2);
  for (int n = 1; n <= 6; ++n) CHECK(degree(make_xor(n)) == n);
  CHECK(degree(PartialFn::constant(3, true)) == 0);
  CHECK_THROWS_AS(degree(PartialFn(2, {0}, {0b0111})), usage_error);

  auto p = poly_of(make_or(2));
  CHECK(p.coeff(0b01) == 1);
  CHECK(p.coeff(0b10) == 1);
  CHECK(p.coeff(0b11) == -1);

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 1 + static_cast<int>(trial % 6);
    auto f = random_partial(n, rng, 1 << 30);
    auto q = poly_of(f);
    for (Input x = 0; x < f.size(); ++x) CHECK(q.eval(x) == (f.bit(x) ? 1 : 0));
    CHECK(q.degree() == oracle::degree(f));
    auto pm = q.to_basis(Basis::PlusMinus);
    CHECK(pm.degree() == q.degree());
    for (Input x = 0; x < f.size(); ++x) CHECK(pm.eval(x) == q.eval(x));
    CHECK(pm.to_basis(Basis::ZeroOne) == q);
  }
}

TEST_CASE("approximate degree") {
  auto r = approx_degree(make_or(2));
  CHECK(r.degree == 1);
  CHECK(is_approximation(make_or(2), r.witness, Rational(1, 3)));
  CHECK(r.witness.degree() <= 1);
  CHECK(!approx_poly(make_or(2), 0, Rational(1, 3)));

  MultilinearPoly hand(2, Basis::ZeroOne);
  hand.add(0, Rational(1, 3));
  hand.add(0b01, Rational(1, 3));
  hand.add(0b10, Rational(1, 3));
  CHECK(is_approximation(make_or(2), hand, Rational(1, 3)));

  CHECK(approx_degree(PartialFn::constant(3, true)).degree == 0);
  CHECK(approx_degree(make_xor(2)).degree == 2);
  CHECK(!approx_poly(make_xor(2), 1, Rational(1, 3)));

  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 1 + static_cast<int>(trial % 3);
    auto f = random_partial(n, rng, 1 << 30);
    auto a = approx_degree(f);
    CHECK(a.degree <= degree(f));
    CHECK(a.witness.degree() <= a.degree);
    CHECK(is_approximation(f, a.witness, Rational(1, 3)));
  }
}

TEST_CASE("real-valued block sensitivity") {
  MultilinearPoly x1(3, Basis::PlusMinus);
  x1.add(0b001, 1);
  CHECK(real_block_sens(x1, 0, 0b001) == 1);
  CHECK(real_block_sens(x1, 0, 0b010) == 0);
  MultilinearPoly avg(2, Basis::PlusMinus);
  avg.add(0b01, Rational(1, 2));
  avg.add(0b10, Rational(1, 2));
  CHECK(real_block_sens(avg, 0, 0b01) == Rational(1, 2));
}

TEST_CASE("measure chain over all functions on three bits") {
  const Rational pi2_over_4_lower(2467, 1000);
  for (std::uint64_t t = 0; t < 256; ++t) {
    auto f = from_index(3, t);
    auto r = measure_all(f, false);
    const int d = *r.deg;
    CHECK(r.s <= r.bs);
    CHECK(r.bs <= r.fbs);
    CHECK(r.fbs <= r.c);
    CHECK(r.s <= d * d);
    CHECK(r.bs <= d * d);
    CHECK(r.fbs <= pi2_over_4_lower * d * d);
    CHECK(r.dt >= r.c);
  }
}
