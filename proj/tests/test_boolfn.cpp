#include <doctest.h>

#include <random>
#include <sstream>

#include "qproj/boolfn.hpp"

using namespace qproj;

namespace {

PartialFn random_partial(int n, std::mt19937_64& rng) {
  return PartialFn::tabulate(n, [&](Input) {
    auto r = rng() % 4;
    return r == 0 ? Value::Bottom : (r & 1 ? Value::One : Value::Zero);
  });
}

Restriction random_restriction(int n, std::mt19937_64& rng) {
  std::vector<Cell> cells(n);
  for (auto& c : cells) c = static_cast<Cell>(rng() % 3);
  return Restriction(cells);
}

}  // namespace

TEST_CASE("evaluate") {
  auto or2 = make_or(2);
  CHECK(or2.evaluate(Assignment::parse("00")) == Value::Zero);
  CHECK(or2.evaluate(Assignment::parse("10")) == Value::One);

  PartialFn f(2, {0b0110}, {0b0111});
  CHECK(f.evaluate(Assignment::parse("11")) == Value::Bottom);
  CHECK(f.evaluate(Assignment::parse("01")) == Value::One);
  CHECK_THROWS_AS(f.evaluate(Assignment::parse("011")), usage_error);
}

TEST_CASE("assignment index is LSB-first") {
  auto x = Assignment::parse("100");
  CHECK(x.index() == 1);
  CHECK(Assignment::from_index(3, 6).str() == "011");
}

TEST_CASE("restrict examples") {
  auto or2 = make_or(2);
  CHECK(restrict(or2, Restriction::parse("1*")) == PartialFn::constant(1, true));
  auto id = restrict(or2, Restriction::parse("0*"));
  CHECK(id.at(0) == Value::Zero);
  CHECK(id.at(1) == Value::One);

  // x1 = 1 turns XOR_3 into NOT XOR_2; retabulated independently.
  auto r = restrict(make_xor(3), Restriction::parse("1**"));
  auto expect = PartialFn::tabulate(2, [](Input y) {
    int a = y & 1, b = (y >> 1) & 1;
    return ((1 ^ a ^ b) & 1) != 0;
  });
  CHECK(r == expect);
}

TEST_CASE("restrict keeps domain") {
  PartialFn f(2, {0b0010}, {0b0011});
  auto g = restrict(f, Restriction::parse("*1"));
  CHECK(g.at(0) == Value::Bottom);
  CHECK(g.at(1) == Value::Bottom);
  auto h = restrict(f, Restriction::parse("*0"));
  CHECK(h.at(1) == Value::One);
}

TEST_CASE("restriction composition") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng() % 8);
    auto f = random_partial(n, rng);
    auto r1 = random_restriction(n, rng);
    auto r2 = random_restriction(r1.free_count(), rng);
    CHECK(restrict(restrict(f, r1), r2) == restrict(f, compose(r1, r2)));
  }
  CHECK_THROWS_AS(compose(Restriction::parse("**"), Restriction::parse("1")), usage_error);
}

TEST_CASE("project examples") {
  // AND over 2 blocks of length 2, all stars.
  auto and4 = make_and(4);
  BlockRestriction all_star(2, 2, std::vector<Cell>(4, Cell::Star));
  CHECK(project(and4, all_star) == make_and(2));

  // No stars: constant f(rho).
  auto maj = make_maj(3);
  BlockRestriction fixed(3, 1, {Cell::One, Cell::Zero, Cell::One});
  CHECK(project(maj, fixed) == PartialFn::constant(3, true));

  // XOR_4 with (*,1 | *,*) projects to NOT x1.
  BlockRestriction rho(2, 2, {Cell::Star, Cell::One, Cell::Star, Cell::Star});
  auto g = project(make_xor(4), rho);
  auto expect = PartialFn::tabulate(2, [](Input y) { return (y & 1) == 0; });
  CHECK(g == expect);

  CHECK_THROWS_AS(project(make_xor(3), rho), usage_error);
}

TEST_CASE("project with unit blocks is the identity") {
  std::mt19937_64 rng(5);
  for (int n = 1; n <= 8; ++n) {
    auto f = random_partial(n, rng);
    BlockRestriction rho(n, 1, std::vector<Cell>(n, Cell::Star));
    CHECK(project(f, rho) == f);
  }
}

TEST_CASE("lift examples") {
  std::vector<Cell> b1{Cell::One, Cell::One, Cell::One};
  std::vector<Cell> b2{Cell::One, Cell::Star, Cell::One};
  std::vector<Cell> b3{Cell::Zero, Cell::Star, Cell::One};
  CHECK(lift_block(b1.data(), 3, Gate::And) == Cell::One);
  CHECK(lift_block(b2.data(), 3, Gate::And) == Cell::Star);
  CHECK(lift_block(b3.data(), 3, Gate::And) == Cell::Zero);
  // Under OR the one dominates.
  CHECK(lift_block(b3.data(), 3, Gate::Or) == Cell::One);
  std::vector<Cell> b4{Cell::Zero, Cell::Star};
  CHECK(lift_block(b4.data(), 2, Gate::Or) == Cell::Star);
}

TEST_CASE("lift of full assignments matches gate evaluation") {
  for (int w = 1; w <= 4; ++w)
    for (int blocks = 1; blocks <= 3; ++blocks) {
      const int n = w * blocks;
      for (Input x = 0; x < (Input{1} << n); ++x) {
        std::vector<Cell> cells(n);
        for (int i = 0; i < n; ++i) cells[i] = ((x >> i) & 1u) ? Cell::One : Cell::Zero;
        BlockRestriction tau(blocks, w, cells);
        auto and_vals = lift(tau, Gate::And);
        auto or_vals = lift(tau, Gate::Or);
        for (int b = 0; b < blocks; ++b) {
          const Input block = (x >> (b * w)) & ((Input{1} << w) - 1);
          const bool and_v = block == (Input{1} << w) - 1;
          const bool or_v = block != 0;
          CHECK(and_vals[b] == (and_v ? Cell::One : Cell::Zero));
          CHECK(or_vals[b] == (or_v ? Cell::One : Cell::Zero));
        }
      }
    }
}

TEST_CASE("flip_block") {
  CHECK(flip_block(Assignment::parse("00"), {0, 1}).str() == "11");
  CHECK(flip_block(Assignment::parse("101"), {}).str() == "101");
  CHECK(flip_block(Assignment::parse("101"), {2}).str() == "100");
  CHECK_THROWS_AS(flip_block(Assignment::parse("101"), {3}), usage_error);
  std::mt19937_64 rng(3);
  for (int t = 0; t < 100; ++t) {
    auto x = Assignment::from_index(10, static_cast<Input>(rng() % 1024));
    std::vector<int> b;
    for (int i = 0; i < 10; ++i)
      if (rng() & 1) b.push_back(i);
    CHECK(flip_block(flip_block(x, b), b) == x);
  }
}

TEST_CASE("truth table file round trip") {
  std::istringstream in("n=2\nvalues=e\n");
  auto f = read_truth_table(in);
  CHECK(f == make_or(2));
  CHECK(format_truth_table(f) == "n=2\nvalues=e\n");

  std::mt19937_64 rng(9);
  for (int n = 0; n <= 9; ++n) {
    auto g = random_partial(n, rng);
    std::istringstream back(format_truth_table(g));
    CHECK(read_truth_table(back) == g);
  }

  std::istringstream bad("n=2\nvalues=1f\n");
  CHECK_THROWS_AS(read_truth_table(bad), usage_error);
  CHECK_THROWS_AS(PartialFn(25), usage_error);
}

TEST_CASE("builtins") {
  CHECK(make_builtin("maj", 3).at(0b011) == Value::One);
  CHECK(make_builtin("MAJ", 3).at(0b100) == Value::Zero);
  CHECK_THROWS_AS(make_maj(4), usage_error);
  CHECK_THROWS_AS(make_builtin("nand", 2), usage_error);
}
