#include "qproj/switching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace qproj {

namespace {

constexpr std::uint64_t kStreamSwitch = 0x5357'0001;
constexpr std::uint64_t kStreamSwitchUniform = 0x5357'0002;

Input full_mask(int n) { return n >= 32 ? ~Input{0} : (Input{1} << n) - 1; }

// Bits of y at the positions of mask, packed from the lowest position up.
Input pack_bits(Input y, Input mask) {
  Input out = 0;
  int j = 0;
  for (Input m = mask; m; m &= m - 1, ++j)
    if (y & (m & -m)) out |= Input{1} << j;
  return out;
}

Rational weight_of(const FractionalCertificate& cert, Input mask) {
  Rational s = 0;
  for (Input m = mask; m; m &= m - 1) s += cert.weights[std::countr_zero(m)];
  return s;
}

Rational subset_probability(const Rational& p, int size, int n) {
  return pow(p, static_cast<unsigned>(size)) * pow(Rational(1) - p, static_cast<unsigned>(n - size));
}

int width_for(int k, int arity) {
  const long long w = static_cast<long long>(k) * k;
  return static_cast<int>(std::min<long long>(w, arity));
}

class TreeBuilder {
 public:
  TreeBuilder(const PartialFn& g, int k) : table_(g), rounds_(static_cast<long long>(k) * k) {
    const int w = width_for(k, g.arity());
    zeros_ = small_certificates(table_, false, w);
    ones_ = small_certificates(table_, true, w);
    tree_.arity = g.arity();
  }

  DecisionTree run() {
    tree_.nodes.emplace_back();
    round(0, 0, 0, 0);
    return std::move(tree_);
  }

 private:
  static bool confirmed(const Certificate& c, Input known, Input vals) {
    return (c.mask & ~known) == 0 && c.consistent(vals);
  }

  static bool contradicted(const Certificate& c, Input known, Input vals) {
    return ((vals ^ c.values) & c.mask & known) != 0;
  }

  void leaf(int node, bool v) {
    tree_.nodes[node].var = -1;
    tree_.nodes[node].leaf = v;
  }

  void round(int node, Input known, Input vals, long long r) {
    for (const auto& c : zeros_)
      if (confirmed(c, known, vals)) return leaf(node, false);
    bool any_one = false;
    for (const auto& c : ones_) {
      if (confirmed(c, known, vals)) return leaf(node, true);
      any_one = any_one || !contradicted(c, known, vals);
    }
    // Every small 1-certificate contradicted.
    if (!any_one) return leaf(node, false);
    if (r >= rounds_) return leaf(node, false);
    const Certificate* pick = nullptr;
    for (const auto& c : zeros_)
      if (!contradicted(c, known, vals)) {
        pick = &c;
        break;
      }
    if (!pick) return leaf(node, true);
    query(node, known, vals, pick->mask & ~known, r);
  }

  void query(int node, Input known, Input vals, Input todo, long long r) {
    if (!todo) return round(node, known, vals, r + 1);
    const int var = std::countr_zero(todo);
    const Input bit = Input{1} << var;
    tree_.nodes[node].var = var;
    for (int b = 0; b < 2; ++b) {
      const int child = static_cast<int>(tree_.nodes.size());
      tree_.nodes.emplace_back();
      tree_.nodes[node].child[b] = child;
      query(child, known | bit, b ? vals | bit : vals, todo & ~bit, r);
    }
  }

  SubcubeTable table_;
  long long rounds_;
  std::vector<Certificate> zeros_, ones_;
  DecisionTree tree_;
};

bool tree_errs(const PartialFn& g, const DecisionTree& t, Input y) { return g.defined(y) && t.eval(y) != g.bit(y); }

}  // namespace

FreeSet sample_free_set(int n, double p, Rng& rng) {
  check_arity(n);
  if (!(p >= 0 && p <= 1)) throw usage_error("p must lie in [0,1]");
  FreeSet s{n, 0, p};
  for (int i = 0; i < n; ++i)
    if (rng.bernoulli(p)) s.mask |= Input{1} << i;
  return s;
}

Input heavy_set(const FractionalCertificate& cert, Input s, const Rational& tau) {
  Input k = 0;
  for (std::size_t i = 0; i < cert.weights.size(); ++i)
    if (((s >> i) & 1u) && cert.weights[i] > tau) k |= Input{1} << i;
  return k;
}

bool restricted_stability_check(const PartialFn& f, const FractionalCertificate& cert, Input s, Input k,
                                const Rational& bound) {
  if (static_cast<int>(cert.weights.size()) != f.arity()) throw usage_error("certificate arity mismatch");
  const Input free = s & ~k & full_mask(f.arity());
  if (std::popcount(free) > 20) throw usage_error("stability check enumerates at most 2^20 points");
  const Rational budget = weight_of(cert, free);
  const Input x = cert.x;
  if (!f.defined(x)) throw usage_error("certificate point outside dom(f)");
  // Subsets of free, including the empty one.
  Input d = 0;
  do {
    const Input y = x ^ d;
    if (f.defined(y)) {
      const int delta = f.bit(y) != f.bit(x) ? 1 : 0;
      if (delta > budget || delta > bound) return false;
    }
    d = (d - free) & free;
  } while (d != 0);
  return true;
}

Rational heavy_threshold(const Rational& fbs, double p, int k) {
  if (k < 1) throw usage_error("k must be positive");
  const long double t = 2 * std::pow(static_cast<long double>(p), 0.75L) *
                        static_cast<long double>(to_double(fbs)) / k;
  return Rational(static_cast<double>(t));
}

WeightTable weight_table(const PartialFn& f) {
  if (f.arity() > kMaxDtArity) throw usage_error("weight_table supports n <= 16");
  WeightTable w;
  w.certs.resize(f.size());
  w.fbs = 0;
  for (Input z = 0; z < f.size(); ++z) {
    if (!f.defined(z)) continue;
    w.certs[z] = frac_cert(f, z);
    w.fbs = std::max(w.fbs, w.certs[z].value);
  }
  return w;
}

HeavyTrace stagewise_sample(const PartialFn& f, Input x, Input y, double p, int k, Rng& rng) {
  return stagewise_sample(f, weight_table(f), x, y, p, k, rng);
}

HeavyTrace stagewise_sample(const PartialFn& f, const WeightTable& w, Input x, Input y, double p, int k, Rng& rng) {
  if (k < 1) throw usage_error("k must be positive");
  if (w.certs.size() != f.size()) throw usage_error("weight table does not match f");
  HeavyTrace tr;
  tr.k = k;
  tr.p = p;
  tr.fbs = w.fbs;
  tr.tau = heavy_threshold(tr.fbs, p, k);
  tr.stage_limit = (k + 5) / 6;

  auto h = [&](Input z) {
    if (!f.defined(z)) throw std::domain_error("hybrid " + Assignment::from_index(f.arity(), z).str() + " outside dom(f)");
    return heavy_set(w.certs[z], full_mask(f.arity()), tr.tau);
  };

  Input a = 0, seen = 0, sampled = 0;
  for (int j = 0;; ++j) {
    if (j == tr.stage_limit) {
      tr.truncated = true;
      break;
    }
    const Input hz = h(x ^ a);
    HeavyStage st;
    st.candidates = hz & ~seen;
    seen |= hz;
    for (Input m = st.candidates; m; m &= m - 1)
      if (rng.bernoulli(p)) st.sampled |= m & -m;
    sampled |= st.sampled;
    st.flipped = sampled & (x ^ y);
    tr.stages.push_back(st);
    if (st.flipped == a) {
      tr.terminated = true;
      break;
    }
    a = st.flipped;
  }
  return tr;
}

bool cert_less(const Certificate& a, const Certificate& b) {
  Input ma = a.mask, mb = b.mask;
  while (ma && mb) {
    const int ia = std::countr_zero(ma), ib = std::countr_zero(mb);
    if (ia != ib) return ia < ib;
    ma &= ma - 1;
    mb &= mb - 1;
  }
  if (ma || mb) return mb != 0;
  for (Input m = a.mask; m; m &= m - 1) {
    const Input bit = m & -m;
    if ((a.values & bit) != (b.values & bit)) return (a.values & bit) == 0;
  }
  return false;
}

std::vector<Certificate> small_certificates(const SubcubeTable& table, bool value, int width) {
  const int n = table.arity();
  const std::uint8_t target = value ? SubcubeTable::kHasOne : SubcubeTable::kHasZero;
  std::vector<Certificate> out;
  for (Input mask = 0; mask <= full_mask(n); ++mask) {
    if (std::popcount(mask) > width) {
      if (mask == full_mask(n)) break;
      continue;
    }
    Input v = 0;
    do {
      if (table.summary(table.encode(mask, v)) == target) {
        bool minimal = true;
        for (Input m = mask; m && minimal; m &= m - 1)
          if (table.summary(table.encode(mask & ~(m & -m), v)) == target) minimal = false;
        if (minimal) out.push_back({mask, v});
      }
      v = (v - mask) & mask;
    } while (v != 0);
    if (mask == full_mask(n)) break;
  }
  std::sort(out.begin(), out.end(), cert_less);
  return out;
}

bool CertDnf::eval(Input y) const {
  for (const auto& t : terms)
    if (t.consistent(y)) return true;
  return false;
}

CertDnf cert_dnf(const PartialFn& g, int k) {
  if (k < 0) throw usage_error("k must be nonnegative");
  SubcubeTable table(g);
  CertDnf dnf;
  dnf.arity = g.arity();
  dnf.width = width_for(k, g.arity());
  dnf.terms = small_certificates(table, true, dnf.width);
  return dnf;
}

CertDnf cert_dnf(const PartialFn& f, const Restriction& rho, int k) { return cert_dnf(restrict(f, rho), k); }

bool DecisionTree::eval(Input y) const {
  int i = 0;
  while (nodes[i].var >= 0) i = nodes[i].child[(y >> nodes[i].var) & 1u];
  return nodes[i].leaf;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  // Children are appended after their parent.
  for (std::size_t i = nodes.size(); i-- > 0;)
    if (nodes[i].var >= 0) d[i] = 1 + std::max(d[nodes[i].child[0]], d[nodes[i].child[1]]);
  return d.empty() ? 0 : d[0];
}

bool DecisionTree::queries_distinct() const {
  std::vector<Input> seen(nodes.size(), 0);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].var < 0) continue;
    const Input bit = Input{1} << nodes[i].var;
    if (seen[i] & bit) return false;
    for (int c : nodes[i].child) seen[c] = seen[i] | bit;
  }
  return true;
}

DecisionTree cert_dt(const PartialFn& g, int k) {
  if (k < 0) throw usage_error("k must be nonnegative");
  if (g.arity() > kMaxDtArity) throw usage_error("cert_dt supports at most 16 free variables");
  return TreeBuilder(g, k).run();
}

DecisionTree cert_dt(const PartialFn& f, const Restriction& rho, int k) { return cert_dt(restrict(f, rho), k); }

DecisionTree switch_tree(const PartialFn& g, int d) {
  int k = 0;
  while (k * k < g.arity()) ++k;
  // Beyond k^2 >= arity every larger k yields the same tree.
  for (; k > 0; --k) {
    auto t = cert_dt(g, k);
    if (t.depth() <= d) return t;
  }
  return cert_dt(g, 0);
}

Rational switch_fail_exact(const PartialFn& f, Input x, Input y, const Rational& p, int d) {
  const int n = f.arity();
  if (n > 12) throw usage_error("switch_fail_exact supports n <= 12");
  if (p < 0 || p > 1) throw usage_error("p must lie in [0,1]");
  const auto xa = Assignment::from_index(n, x);
  Rational total = 0;
  for (Input s = 0; s <= full_mask(n); ++s) {
    const int size = std::popcount(s);
    const Rational w = subset_probability(p, size, n);
    if (w != 0) {
      auto g = restrict(f, Restriction::from_free_set(xa, s));
      if (tree_errs(g, switch_tree(g, d), pack_bits(y, s))) total += w;
    }
    if (s == full_mask(n)) break;
  }
  return total;
}

namespace {

McEstimate finish(std::uint64_t trials, std::uint64_t failures) {
  McEstimate e;
  e.trials = trials;
  e.failures = failures;
  e.estimate = trials ? static_cast<double>(failures) / static_cast<double>(trials) : 0.0;
  e.stderr_ = trials ? std::sqrt(e.estimate * (1 - e.estimate) / static_cast<double>(trials)) : 0.0;
  return e;
}

}  // namespace

McEstimate switch_fail_mc(const PartialFn& f, Input x, Input y, double p, int d, std::uint64_t trials,
                          std::uint64_t seed, int jobs) {
  const int n = f.arity();
  if (n > kMaxDtArity) throw usage_error("switch_fail_mc supports n <= 16");
  if (trials < 1) throw usage_error("trials must be at least 1");
  if (!(p >= 0 && p <= 1)) throw usage_error("p must lie in [0,1]");
  const auto xa = Assignment::from_index(n, x);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::max(jobs, 1)), 0);
  parallel_chunks(trials, jobs, [&](std::size_t b, std::size_t e, std::size_t c) {
    std::unordered_map<Input, bool> cache;
    std::uint64_t fails = 0;
    for (std::size_t t = b; t < e; ++t) {
      Rng rng(derive_seed(seed, kStreamSwitch, t));
      const Input s = sample_free_set(n, p, rng).mask;
      auto it = cache.find(s);
      if (it == cache.end()) {
        auto g = restrict(f, Restriction::from_free_set(xa, s));
        it = cache.emplace(s, tree_errs(g, switch_tree(g, d), pack_bits(y, s))).first;
      }
      fails += it->second;
    }
    counts[c] = fails;
  });
  std::uint64_t total = 0;
  for (auto v : counts) total += v;
  return finish(trials, total);
}

McEstimate switch_fail_mc_uniform(const PartialFn& f, double p, int d, std::uint64_t trials, std::uint64_t seed,
                                  int jobs) {
  const int n = f.arity();
  if (n > kMaxDtArity) throw usage_error("switch_fail_mc supports n <= 16");
  if (trials < 1) throw usage_error("trials must be at least 1");
  if (!(p >= 0 && p <= 1)) throw usage_error("p must lie in [0,1]");
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(std::max(jobs, 1)), 0);
  parallel_chunks(trials, jobs, [&](std::size_t b, std::size_t e, std::size_t c) {
    struct Entry {
      PartialFn g;
      DecisionTree tree;
    };
    std::unordered_map<std::uint64_t, Entry> cache;
    std::uint64_t fails = 0;
    for (std::size_t t = b; t < e; ++t) {
      Rng rng(derive_seed(seed, kStreamSwitchUniform, t));
      const Input s = sample_free_set(n, p, rng).mask;
      const Input x = static_cast<Input>(rng.below(f.size())) & ~s;
      const Input y = static_cast<Input>(rng.below(f.size()));
      const std::uint64_t key = (std::uint64_t{s} << 32) | x;
      auto it = cache.find(key);
      if (it == cache.end()) {
        auto g = restrict(f, Restriction::from_free_set(Assignment::from_index(n, x), s));
        auto tree = switch_tree(g, d);
        it = cache.emplace(key, Entry{std::move(g), std::move(tree)}).first;
      }
      fails += tree_errs(it->second.g, it->second.tree, pack_bits(y, s));
    }
    counts[c] = fails;
  });
  std::uint64_t total = 0;
  for (auto v : counts) total += v;
  return finish(trials, total);
}

double qswitching_bound(int d) { return std::exp(-std::pow(static_cast<double>(d), 0.2)); }
double uniform_switching_bound(int d) { return std::exp(-std::pow(static_cast<double>(d), 0.1)); }
double restlowdeg_failure_bound(int k) { return (2 + k / 6.0) * std::exp(-k / 6.0); }

}  // namespace qproj
