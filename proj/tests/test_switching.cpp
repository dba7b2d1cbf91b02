#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>

#include "qproj/switching.hpp"

using namespace qproj;

namespace {

PartialFn random_total(int n, Rng& rng) {
  return PartialFn::tabulate(n, [&](Input) { return (rng.next() & 1) != 0; });
}

PartialFn random_partial(int n, Rng& rng) {
  return PartialFn::tabulate(n, [&](Input) {
    if (rng.below(4) == 0) return Value::Bottom;
    return rng.next() & 1 ? Value::One : Value::Zero;
  });
}

// Independent model of the round procedure: certificates found by direct
// enumeration over partial assignments, the procedure run on one input at a time.
struct Cert {
  std::vector<int> idx;
  std::vector<int> val;
};

bool is_cert(const PartialFn& g, const Cert& c, bool b) {
  bool hit = false;
  for (Input y = 0; y < g.size(); ++y) {
    bool match = true;
    for (std::size_t j = 0; j < c.idx.size(); ++j)
      if (static_cast<int>((y >> c.idx[j]) & 1u) != c.val[j]) match = false;
    if (!match || !g.defined(y)) continue;
    if (g.bit(y) != b) return false;
    hit = true;
  }
  return hit;
}

std::vector<Cert> certs(const PartialFn& g, bool b, int width) {
  const int n = g.arity();
  std::vector<Cert> all;
  for (Input mask = 0; mask < g.size(); ++mask) {
    if (std::popcount(mask) > width) continue;
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if ((mask >> i) & 1u) idx.push_back(i);
    for (Input v = 0; v < (Input{1} << idx.size()); ++v) {
      Cert c{idx, {}};
      for (std::size_t j = 0; j < idx.size(); ++j) c.val.push_back((v >> j) & 1u);
      if (!is_cert(g, c, b)) continue;
      bool minimal = true;
      for (std::size_t drop = 0; drop < idx.size(); ++drop) {
        Cert s;
        for (std::size_t j = 0; j < idx.size(); ++j)
          if (j != drop) {
            s.idx.push_back(idx[j]);
            s.val.push_back(c.val[j]);
          }
        if (is_cert(g, s, b)) minimal = false;
      }
      if (minimal) all.push_back(c);
    }
  }
  std::sort(all.begin(), all.end(), [](const Cert& a, const Cert& b) {
    if (a.idx != b.idx) return a.idx < b.idx;
    return a.val < b.val;
  });
  return all;
}

struct Run {
  bool out;
  int queries;
};

Run simulate(const PartialFn& g, int k, Input y) {
  const int w = std::min(k * k, g.arity());
  const auto zeros = certs(g, false, w), ones = certs(g, true, w);
  std::map<int, int> known;
  auto status = [&](const Cert& c) {  // 1 confirmed, -1 contradicted, 0 open
    bool all = true;
    for (std::size_t j = 0; j < c.idx.size(); ++j) {
      auto it = known.find(c.idx[j]);
      if (it == known.end()) all = false;
      else if (it->second != c.val[j]) return -1;
    }
    return all ? 1 : 0;
  };
  for (int r = 0;; ++r) {
    for (const auto& c : zeros)
      if (status(c) == 1) return {false, static_cast<int>(known.size())};
    bool open = false;
    for (const auto& c : ones) {
      if (status(c) == 1) return {true, static_cast<int>(known.size())};
      if (status(c) == 0) open = true;
    }
    if (!open) return {false, static_cast<int>(known.size())};
    if (r >= k * k) return {false, static_cast<int>(known.size())};
    const Cert* pick = nullptr;
    for (const auto& c : zeros)
      if (status(c) != -1) {
        pick = &c;
        break;
      }
    if (!pick) return {true, static_cast<int>(known.size())};
    for (int i : pick->idx) known[i] = static_cast<int>((y >> i) & 1u);
  }
}

int simulated_height(const PartialFn& g, int k) {
  int h = 0;
  for (Input y = 0; y < g.size(); ++y) h = std::max(h, simulate(g, k, y).queries);
  return h;
}

Rational oracle_switch_fail(const PartialFn& f, Input x, Input y, const Rational& p, int d) {
  const int n = f.arity();
  Rational total = 0;
  for (Input s = 0; s < f.size(); ++s) {
    std::vector<Cell> cells(n);
    Input ys = 0;
    int j = 0;
    for (int i = 0; i < n; ++i) {
      if ((s >> i) & 1u) {
        cells[i] = Cell::Star;
        if ((y >> i) & 1u) ys |= Input{1} << j;
        ++j;
      } else {
        cells[i] = ((x >> i) & 1u) ? Cell::One : Cell::Zero;
      }
    }
    auto g = restrict(f, Restriction(cells));
    int k = 0;
    while (k * k < g.arity()) ++k;
    while (k > 0 && simulated_height(g, k) > d) --k;
    if (g.defined(ys) && simulate(g, k, ys).out != g.bit(ys)) {
      Rational w = 1;
      for (int i = 0; i < n; ++i) w *= ((s >> i) & 1u) ? p : Rational(1) - p;
      total += w;
    }
  }
  return total;
}

}  // namespace

TEST_CASE("free set sampling") {
  Rng rng(1);
  CHECK(sample_free_set(6, 0.0, rng).mask == 0);
  CHECK(sample_free_set(6, 1.0, rng).mask == 0b111111);
  CHECK_THROWS_AS(sample_free_set(3, 1.5, rng), usage_error);

  // Exact law of |S| at n = 4, p = 1/2 by enumeration of the 16 outcomes.
  int size_two = 0;
  for (Input s = 0; s < 16; ++s) size_two += std::popcount(s) == 2;
  CHECK(Rational(size_two, 16) == Rational(6, 16));

  Rng a(99), b(99);
  for (int i = 0; i < 20; ++i) CHECK(sample_free_set(10, 0.3, a).mask == sample_free_set(10, 0.3, b).mask);
}

TEST_CASE("heavy set and stability") {
  auto cert = frac_cert(make_or(3), 0);
  CHECK(heavy_set(cert, 0b101, Rational(1, 2)) == 0b101);
  CHECK(heavy_set(cert, 0b111, Rational(1)) == 0);
  CHECK(heavy_set(cert, 0b111, Rational(0)) == 0b111);

  CHECK(restricted_stability_check(make_or(3), cert, 0b101, 0b101, Rational(0)));
  CHECK(restricted_stability_check(make_or(3), cert, 0b010, 0, Rational(1)));
  CHECK(!restricted_stability_check(make_or(3), cert, 0b010, 0, Rational(1, 2)));

  auto xc = frac_cert(make_xor(2), 0);
  CHECK(xc.weights[0] == 1);
  CHECK(restricted_stability_check(make_xor(2), xc, 0b01, 0, Rational(1)));

  // K counted out: weight outside S \ K is not credited.
  FractionalCertificate bad{0, {0, 1, 1}, 2};
  CHECK(!restricted_stability_check(make_or(3), bad, 0b001, 0, Rational(1)));

  // |S \ K| budget against the size-weighted bound, for random certificates.
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    auto f = random_total(5, rng);
    const Input x = static_cast<Input>(rng.below(32));
    auto c = frac_cert(f, x);
    const Input s = static_cast<Input>(rng.below(32));
    const Rational tau(1, 2);
    const Input k = heavy_set(c, s, tau);
    CHECK(std::popcount(k) * tau <= c.value);
    Rational bound = tau * std::popcount(s);
    Rational budget = 0;
    for (int i = 0; i < 5; ++i)
      if (((s & ~k) >> i) & 1u) budget += c.weights[i];
    CHECK(budget <= bound);
    CHECK(restricted_stability_check(f, c, s, k, Rational(1)) ==
          (budget >= 1 || [&] {
            for (Input d = 0; d < 32; ++d)
              if ((d & ~(s & ~k)) == 0 && f.bit(x ^ d) != f.bit(x)) return false;
            return true;
          }()));
  }
}

TEST_CASE("stagewise sampling") {
  Rng r1(3);
  auto same = stagewise_sample(make_or(4), 0, 0, 0.5, 6, r1);
  CHECK(same.terminated);
  CHECK(same.stages.size() == 1);
  CHECK(same.stages[0].flipped == 0);

  Rng r2(3);
  auto none = stagewise_sample(make_or(4), 0, 0b1111, 0.0, 6, r2);
  CHECK(none.terminated);
  CHECK(none.stages[0].sampled == 0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng a(seed), b(seed);
    auto t1 = stagewise_sample(make_or(4), 0, 0b1111, 0.5, 6, a);
    auto t2 = stagewise_sample(make_or(4), 0, 0b1111, 0.5, 6, b);
    REQUIRE(t1.stages.size() == t2.stages.size());
    for (std::size_t j = 0; j < t1.stages.size(); ++j) {
      CHECK(t1.stages[j].candidates == t2.stages[j].candidates);
      CHECK(t1.stages[j].sampled == t2.stages[j].sampled);
      CHECK(t1.stages[j].flipped == t2.stages[j].flipped);
    }
    CHECK(t1.tau == t2.tau);
  }

  // Structural invariants on larger k.
  Rng rng(8);
  for (int t = 0; t < 40; ++t) {
    auto f = random_total(6, rng);
    const Input x = static_cast<Input>(rng.below(64)), y = static_cast<Input>(rng.below(64));
    auto tr = stagewise_sample(f, x, y, 0.4, 30, rng);
    CHECK(tr.stage_limit == 5);
    CHECK(tr.stages.size() <= 5);
    CHECK(tr.terminated != tr.truncated);
    Input prev_a = 0, prev_cand = 0, seen_s = 0;
    for (const auto& st : tr.stages) {
      CHECK((prev_a & ~st.flipped) == 0);
      CHECK((st.candidates & prev_cand) == 0);
      CHECK((st.sampled & seen_s) == 0);
      CHECK((st.sampled & ~st.candidates) == 0);
      prev_a = st.flipped;
      prev_cand |= st.candidates;
      seen_s |= st.sampled;
    }
  }

  // Both coordinates are heavy at 00, and the flip to 11 leaves the domain.
  PartialFn hole(2, {0b0110}, {0b0111});
  Rng rr(1);
  CHECK_THROWS_AS(stagewise_sample(hole, 0, 0b11, 1.0, 12, rr), std::domain_error);
}

TEST_CASE("stage heavy-set probability is bounded by p F / tau") {
  // k = 1, p = 1/16: p F / tau = (k/2) p^{1/4} = 1/4.
  const double p = 1.0 / 16;
  const int trials = 4000;
  for (auto f : {make_or(5), make_maj(5), make_xor(4)}) {
    const auto wt = weight_table(f);
    const auto fb = wt.fbs;
    CHECK(fb == fbs(f));
    const auto tau = heavy_threshold(fb, p, 1);
    const double limit = p * to_double(fb) / to_double(tau);
    CHECK(limit <= 0.5);
    int hits = 0;
    for (int t = 0; t < trials; ++t) {
      Rng rng(derive_seed(17, 1, t));
      auto tr = stagewise_sample(f, wt, 0, static_cast<Input>(f.size() - 1), p, 1, rng);
      hits += tr.stages[0].sampled != 0;
    }
    const double freq = static_cast<double>(hits) / trials;
    CHECK(freq <= limit + 3 * std::sqrt(limit * (1 - limit) / trials));
  }
}

TEST_CASE("certificate ordering and enumeration") {
  CHECK(cert_less({0b001, 0}, {0b010, 0}));
  CHECK(cert_less({0b001, 0}, {0b011, 0}));
  CHECK(cert_less({0b101, 0}, {0b010, 0}));
  // values read in index order: 0b10 is (0,1), 0b01 is (1,0)
  CHECK(cert_less({0b011, 0b10}, {0b011, 0b01}));
  CHECK(!cert_less({0b011, 0b01}, {0b011, 0b10}));

  Rng rng(21);
  for (int t = 0; t < 60; ++t) {
    const int n = 1 + static_cast<int>(t % 5);
    auto g = t % 2 ? random_total(n, rng) : random_partial(n, rng);
    SubcubeTable table(g);
    for (int b = 0; b < 2; ++b)
      for (int w = 0; w <= n; ++w) {
        auto mine = small_certificates(table, b, w);
        auto theirs = certs(g, b, w);
        REQUIRE(mine.size() == theirs.size());
        for (std::size_t i = 0; i < mine.size(); ++i) {
          Input mask = 0, vals = 0;
          for (std::size_t j = 0; j < theirs[i].idx.size(); ++j) {
            mask |= Input{1} << theirs[i].idx[j];
            if (theirs[i].val[j]) vals |= Input{1} << theirs[i].idx[j];
          }
          CHECK(mine[i] == Certificate{mask, vals});
        }
      }
  }
}

TEST_CASE("certificate DNF") {
  auto one = cert_dnf(PartialFn::constant(3, true), 1);
  REQUIRE(one.terms.size() == 1);
  CHECK(one.terms[0].mask == 0);
  CHECK(one.eval(0b101));

  auto orr = cert_dnf(make_or(2), 2);
  REQUIRE(orr.terms.size() == 2);
  CHECK(orr.terms[0] == Certificate{0b01, 0b01});
  CHECK(orr.terms[1] == Certificate{0b10, 0b10});

  auto x = cert_dnf(make_xor(2), 1);
  CHECK(x.terms.empty());
  for (Input y = 0; y < 4; ++y) CHECK(x.eval(y) == false);

  // Never errs on 0-inputs; exact when the width covers C.
  Rng rng(22);
  for (int t = 0; t < 80; ++t) {
    const int n = 2 + static_cast<int>(t % 7);
    auto f = t % 3 ? random_total(n, rng) : random_partial(n, rng);
    const Input s = static_cast<Input>(rng.below(f.size()));
    auto rho = Restriction::from_free_set(Assignment::from_index(n, static_cast<Input>(rng.below(f.size()))), s);
    auto g = restrict(f, rho);
    for (int k = 0; k <= 3; ++k) {
      auto dnf = cert_dnf(f, rho, k);
      const bool covers = cert_complexity_at_value(g, true) <= k * k;
      for (Input y = 0; y < g.size(); ++y) {
        if (!g.defined(y)) continue;
        if (!g.bit(y)) CHECK(!dnf.eval(y));
        if (covers) CHECK(dnf.eval(y) == g.bit(y));
      }
    }
  }
}

TEST_CASE("certificate decision tree") {
  auto c = cert_dt(PartialFn::constant(4, false), 2);
  CHECK(c.depth() == 0);
  CHECK(c.eval(0b1010) == false);
  CHECK(cert_dt(PartialFn::constant(4, true), 2).depth() == 0);

  auto a = cert_dt(make_and(2), 2);
  CHECK(a.depth() <= 2);
  for (Input y = 0; y < 4; ++y) CHECK(a.eval(y) == (y == 3));

  Rng rng(23);
  for (int t = 0; t < 150; ++t) {
    const int n = 2 + static_cast<int>(t % 7);
    auto f = random_total(n, rng);
    const Input s = static_cast<Input>(rng.below(f.size()));
    auto g = restrict(f, Restriction::from_free_set(Assignment::from_index(n, static_cast<Input>(rng.below(f.size()))), s));
    const int cg = cert_complexity(g);
    for (int k = 0; k <= 3; ++k) {
      auto tree = cert_dt(g, k);
      CHECK(tree.depth() <= k * k * k * k);
      CHECK(tree.queries_distinct());
      if (cg <= k * k)
        for (Input y = 0; y < g.size(); ++y) CHECK(tree.eval(y) == g.bit(y));
      if (g.arity() <= 5) {
        CHECK(tree.depth() == simulated_height(g, k));
        for (Input y = 0; y < g.size(); ++y) CHECK(tree.eval(y) == simulate(g, k, y).out);
      }
    }
  }
  // Partial functions: the structural bounds still hold.
  for (int t = 0; t < 60; ++t) {
    auto g = random_partial(2 + static_cast<int>(t % 5), rng);
    for (int k = 0; k <= 2; ++k) {
      auto tree = cert_dt(g, k);
      CHECK(tree.depth() <= k * k * k * k);
      CHECK(tree.queries_distinct());
    }
  }
}

TEST_CASE("exact switching failure") {
  CHECK(switch_fail_exact(PartialFn::constant(5, true), 0, 0b10101, Rational(1, 2), 0) == 0);
  Rng rng(31);
  auto f = random_total(6, rng);
  for (Input y = 0; y < 64; y += 7) CHECK(switch_fail_exact(f, 5, y, Rational(1, 3), 6) == 0);

  CHECK(switch_fail_exact(make_or(4), 0, 0b1111, Rational(1, 4), 1) ==
        oracle_switch_fail(make_or(4), 0, 0b1111, Rational(1, 4), 1));

  for (int t = 0; t < 25; ++t) {
    const int n = 3 + static_cast<int>(t % 4);
    auto g = t % 4 == 3 ? random_partial(n, rng) : random_total(n, rng);
    const Input x = static_cast<Input>(rng.below(g.size())), y = static_cast<Input>(rng.below(g.size()));
    const Rational p(1 + static_cast<int>(rng.below(4)), 5);
    const int d = static_cast<int>(rng.below(n + 1));
    CHECK(switch_fail_exact(g, x, y, p, d) == oracle_switch_fail(g, x, y, p, d));
  }
  CHECK_THROWS_AS(switch_fail_exact(make_or(13), 0, 0, Rational(1, 2), 1), usage_error);
}

TEST_CASE("monte carlo switching failure") {
  Rng rng(41);
  auto f = random_total(6, rng);
  CHECK(switch_fail_mc(f, 3, 60, 0.0, 1, 1000, 5).estimate == 0);

  const auto a = switch_fail_mc(f, 3, 60, 0.4, 1, 20000, 5);
  const auto b = switch_fail_mc(f, 3, 60, 0.4, 1, 20000, 5, 4);
  CHECK(a.failures == b.failures);
  const double exact = to_double(switch_fail_exact(f, 3, 60, Rational(2, 5), 1));
  const double se = std::sqrt(exact * (1 - exact) / 20000);
  CHECK(std::fabs(a.estimate - exact) <= 3 * se);

  const auto u1 = switch_fail_mc_uniform(f, 0.4, 1, 5000, 9, 1);
  const auto u3 = switch_fail_mc_uniform(f, 0.4, 1, 5000, 9, 3);
  CHECK(u1.failures == u3.failures);
  CHECK(switch_fail_mc_uniform(f, 0.4, 6, 2000, 9).failures == 0);
}

TEST_CASE("reporting bounds") {
  CHECK(qswitching_bound(1) == doctest::Approx(std::exp(-1.0)));
  CHECK(uniform_switching_bound(32) == doctest::Approx(std::exp(-std::pow(32.0, 0.1))));
  CHECK(restlowdeg_failure_bound(6) == doctest::Approx(3 * std::exp(-1.0)));
}
