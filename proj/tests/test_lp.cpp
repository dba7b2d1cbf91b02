#include <doctest.h>

#include <random>

#include "qproj/lp.hpp"
#include "qproj/rational.hpp"

using namespace qproj;

TEST_CASE("lp small examples") {
  LinearProgram a(1, Sense::Max);
  a.objective = {1};
  a.add({1}, Relation::Le, 3);
  auto sa = solve(a);
  CHECK(sa.status == LpStatus::Optimal);
  CHECK(sa.value == 3);

  LinearProgram b(2, Sense::Min);
  b.objective = {1, 1};
  b.add({1, 1}, Relation::Ge, 1);
  auto sb = solve(b);
  CHECK(sb.status == LpStatus::Optimal);
  CHECK(sb.value == 1);

  LinearProgram c(1, Sense::Max);
  c.objective = {1};
  c.add({1}, Relation::Ge, 0);
  CHECK(solve(c).status == LpStatus::Unbounded);
}

TEST_CASE("lp infeasible, equalities, bounds, free variables") {
  LinearProgram p(2, Sense::Min);
  p.objective = {1, 1};
  p.add({1, 1}, Relation::Le, 1);
  p.add({1, 1}, Relation::Ge, 2);
  CHECK(solve(p).status == LpStatus::Infeasible);

  // min x - y, x + y = 4, x - y >= -2, x in [0,3], y free.
  LinearProgram q(2, Sense::Min);
  q.objective = {1, -1};
  q.add({1, 1}, Relation::Eq, 4);
  q.add({1, -1}, Relation::Ge, -2);
  q.bounds[0].upper = Rational(3);
  q.set_free(1);
  auto s = solve(q);
  CHECK(s.status == LpStatus::Optimal);
  CHECK(s.value == -2);
  CHECK(s.assignment[0] == 1);
  CHECK(s.assignment[1] == 3);

  // Negative lower bound and an upper-only bound.
  LinearProgram r(2, Sense::Max);
  r.objective = {-1, 1};
  r.bounds[0] = VarBounds{Rational(-5), Rational(2)};
  r.bounds[1] = VarBounds{std::nullopt, Rational(7, 2)};
  r.add({1, 1}, Relation::Le, 10);
  auto sr = solve(r);
  CHECK(sr.status == LpStatus::Optimal);
  CHECK(sr.value == Rational(17, 2));

  // Redundant equality rows.
  LinearProgram t(2, Sense::Min);
  t.objective = {2, 3};
  t.add({1, 1}, Relation::Eq, 1);
  t.add({2, 2}, Relation::Eq, 2);
  auto st = solve(t);
  CHECK(st.status == LpStatus::Optimal);
  CHECK(st.value == 2);
}

TEST_CASE("lp primal and dual routes agree") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 4);
    const int m = 3 + static_cast<int>(rng() % 12);
    LinearProgram p(n, Sense::Min);
    for (auto& c : p.objective) c = Rational(static_cast<int>(rng() % 5));
    for (int i = 0; i < m; ++i) {
      std::vector<Rational> row(n);
      for (auto& v : row) v = Rational(static_cast<int>(rng() % 7) - 2);
      p.add(row, i % 5 == 4 ? Relation::Le : Relation::Ge, Rational(static_cast<int>(rng() % 5) - 1));
    }
    auto a = solve(p, {LpRoute::Primal});
    auto b = solve(p, {LpRoute::Dual});
    REQUIRE(a.status == b.status);
    if (a.status == LpStatus::Optimal) CHECK(a.value == b.value);
  }
}

TEST_CASE("lp strong duality on random feasible pairs") {
  // max c.x, Ax <= b, x >= 0 against min b.y, A^T y >= c, y >= 0.
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 5, n = 8;
    std::vector<std::vector<Rational>> a(m, std::vector<Rational>(n));
    std::vector<Rational> b(m), c(n);
    for (auto& row : a)
      for (auto& v : row) v = Rational(static_cast<int>(rng() % 9) + 1, static_cast<int>(rng() % 3) + 1);
    for (auto& v : b) v = Rational(static_cast<int>(rng() % 20) + 1);
    for (auto& v : c) v = Rational(static_cast<int>(rng() % 11) - 3);

    LinearProgram primal(n, Sense::Max);
    primal.objective = c;
    for (int i = 0; i < m; ++i) primal.add(a[i], Relation::Le, b[i]);
    LinearProgram dual(m, Sense::Min);
    dual.objective = b;
    for (int j = 0; j < n; ++j) {
      std::vector<Rational> col(m);
      for (int i = 0; i < m; ++i) col[i] = a[i][j];
      dual.add(col, Relation::Ge, c[j]);
    }
    auto sp = solve(primal);
    auto sd = solve(dual);
    REQUIRE(sp.status == LpStatus::Optimal);
    REQUIRE(sd.status == LpStatus::Optimal);
    CHECK(sp.value == sd.value);
    CHECK(satisfies(primal, sp.assignment));
    CHECK(satisfies(dual, sd.assignment));
  }
}

TEST_CASE("lp resource cap") {
  LinearProgram p(2, Sense::Max);
  p.objective = {1, 1};
  p.add({Rational(1, 3), Rational(1, 7)}, Relation::Le, Rational(1, 11));
  p.add({Rational(1, 5), Rational(1, 13)}, Relation::Le, Rational(1, 17));
  CHECK_THROWS_AS(solve(p, {LpRoute::Primal, 4}), lp_resource_error);
  CHECK(solve(p).status == LpStatus::Optimal);
}

TEST_CASE("rational parsing") {
  CHECK(parse_rational("0.3") == Rational(3, 10));
  CHECK(parse_rational("-2/5") == Rational(-2, 5));
  CHECK(parse_rational("1e-3") == Rational(1, 1000));
  CHECK(parse_rational("1.5E2") == 150);
  CHECK_THROWS(parse_rational("abc"));
  CHECK_THROWS(parse_rational("1/0"));
}
