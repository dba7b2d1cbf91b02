#include "qproj/measures.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>

namespace qproj {

namespace {

void require_defined(const PartialFn& f, Input x) {
  if (x >= f.size()) throw usage_error("input outside 2^n");
  if (!f.defined(x)) throw usage_error("input " + Assignment::from_index(f.arity(), x).str() + " is outside dom(f)");
}

void require_arity(const PartialFn& f, int cap, const char* what) {
  if (f.arity() > cap)
    throw usage_error(std::string(what) + " supports n <= " + std::to_string(cap) + ", got " +
                      std::to_string(f.arity()));
}

Input full_mask(int n) { return n >= 32 ? ~Input{0} : (Input{1} << n) - 1; }

// Sets whose intersection with x's differing coordinates change f.
std::vector<Input> opposing_masks(const PartialFn& f, Input x) {
  std::vector<Input> out;
  const bool fx = f.bit(x);
  for (Input y = 0; y < f.size(); ++y)
    if (f.defined(y) && f.bit(y) != fx) out.push_back(x ^ y);
  return out;
}

void hitting_set(const std::vector<Input>& sets, Input chosen, int size, int& best) {
  if (size >= best) return;
  const Input* unhit = nullptr;
  for (const auto& s : sets)
    if ((s & chosen) == 0) {
      unhit = &s;
      break;
    }
  if (!unhit) {
    best = size;
    return;
  }
  if (size + 1 >= best) return;
  for (Input rest = *unhit; rest; rest &= rest - 1) hitting_set(sets, chosen | (rest & -rest), size + 1, best);
}

struct Packing {
  const std::vector<Input>& blocks;
  int min_size;
  Input full;
  std::vector<Input> current, best;

  void run(std::size_t start, Input used) {
    if (current.size() > best.size()) best = current;
    const std::size_t room = static_cast<std::size_t>(std::popcount(full & ~used) / min_size);
    if (current.size() + room <= best.size()) return;
    for (std::size_t j = start; j < blocks.size(); ++j)
      if ((blocks[j] & used) == 0) {
        current.push_back(blocks[j]);
        run(j + 1, used | blocks[j]);
        current.pop_back();
      }
  }
};

}  // namespace

SubcubeTable::SubcubeTable(const PartialFn& f) : n_(f.arity()) {
  if (n_ > kMaxDtArity) throw usage_error("subcube table supports n <= 16");
  pow3_.resize(n_ + 1);
  pow3_[0] = 1;
  for (int i = 1; i <= n_; ++i) pow3_[i] = pow3_[i - 1] * 3;
  summary_.assign(pow3_[n_], 0);
  std::vector<std::uint8_t> digit(n_ + 1, 0);
  for (std::size_t s = 0; s < summary_.size(); ++s) {
    int star = -1;
    Input point = 0;
    for (int i = 0; i < n_; ++i) {
      if (digit[i] == 2) {
        star = i;
        break;
      }
      point |= Input{digit[i]} << i;
    }
    if (star < 0) {
      if (f.defined(point)) summary_[s] = f.bit(point) ? kHasOne : kHasZero;
    } else {
      summary_[s] = summary_[s - 2 * pow3_[star]] | summary_[s - pow3_[star]];
    }
    for (int i = 0; i <= n_; ++i) {
      if (digit[i] < 2) {
        ++digit[i];
        break;
      }
      digit[i] = 0;
    }
  }
}

std::size_t SubcubeTable::encode(Input mask, Input values) const {
  std::size_t s = 0;
  for (int i = 0; i < n_; ++i) s += ((mask >> i) & 1u ? ((values >> i) & 1u) : 2u) * pow3_[i];
  return s;
}

int dt_depth(const PartialFn& f) {
  require_arity(f, kMaxDtArity, "dt_depth");
  SubcubeTable table(f);
  const int n = f.arity();
  std::vector<std::uint8_t> depth(table.size(), 0);
  std::vector<std::uint8_t> digit(n + 1, 0);
  for (std::size_t s = 0; s < table.size(); ++s) {
    if (table.summary(s) == (SubcubeTable::kHasZero | SubcubeTable::kHasOne)) {
      int best = 255;
      for (int i = 0; i < n; ++i) {
        if (digit[i] != 2) continue;
        const std::size_t p = table.pow3(i);
        best = std::min(best, 1 + std::max<int>(depth[s - 2 * p], depth[s - p]));
      }
      depth[s] = static_cast<std::uint8_t>(best);
    }
    for (int i = 0; i <= n; ++i) {
      if (digit[i] < 2) {
        ++digit[i];
        break;
      }
      digit[i] = 0;
    }
  }
  return depth.back();
}

std::vector<Input> minimal_sets(std::vector<Input> sets) {
  std::sort(sets.begin(), sets.end(), [](Input a, Input b) {
    const int pa = std::popcount(a), pb = std::popcount(b);
    return pa != pb ? pa < pb : a < b;
  });
  sets.erase(std::unique(sets.begin(), sets.end()), sets.end());
  std::vector<Input> kept;
  for (Input s : sets) {
    bool dominated = false;
    for (Input k : kept)
      if ((k & s) == k) {
        dominated = true;
        break;
      }
    if (!dominated) kept.push_back(s);
  }
  return kept;
}

int cert_complexity(const PartialFn& f, Input x) {
  require_defined(f, x);
  const auto sets = minimal_sets(opposing_masks(f, x));
  int best = f.arity() + 1;
  hitting_set(sets, 0, 0, best);
  return best;
}

int cert_complexity(const PartialFn& f) {
  int c = 0;
  for (Input x = 0; x < f.size(); ++x)
    if (f.defined(x)) c = std::max(c, cert_complexity(f, x));
  return c;
}

int cert_complexity_at_value(const PartialFn& f, bool value) {
  int c = 0;
  for (Input x = 0; x < f.size(); ++x)
    if (f.defined(x) && f.bit(x) == value) c = std::max(c, cert_complexity(f, x));
  return c;
}

int sensitivity(const PartialFn& f, Input x) {
  require_defined(f, x);
  int s = 0;
  for (int i = 0; i < f.arity(); ++i) {
    const Input y = x ^ (Input{1} << i);
    if (f.defined(y) && f.bit(y) != f.bit(x)) ++s;
  }
  return s;
}

int sensitivity(const PartialFn& f) {
  int s = 0;
  for (Input x = 0; x < f.size(); ++x)
    if (f.defined(x)) s = std::max(s, sensitivity(f, x));
  return s;
}

std::vector<Input> sensitive_blocks(const PartialFn& f, Input x) {
  require_defined(f, x);
  return opposing_masks(f, x);
}

std::vector<Input> block_packing(const PartialFn& f, Input x) {
  require_arity(f, kMaxBsArity, "block_sensitivity");
  const auto blocks = minimal_sets(sensitive_blocks(f, x));
  if (blocks.empty()) return {};
  Packing pk{blocks, std::popcount(blocks.front()), full_mask(f.arity()), {}, {}};
  pk.run(0, 0);
  return pk.best;
}

int block_sensitivity(const PartialFn& f, Input x) { return static_cast<int>(block_packing(f, x).size()); }

int block_sensitivity(const PartialFn& f) {
  int bs = 0;
  for (Input x = 0; x < f.size(); ++x)
    if (f.defined(x)) bs = std::max(bs, block_sensitivity(f, x));
  return bs;
}

FractionalCertificate frac_cert(const PartialFn& f, Input x, LpRoute route) {
  require_arity(f, kMaxDtArity, "frac_cert");
  require_defined(f, x);
  const int n = f.arity();
  FractionalCertificate cert;
  cert.x = x;
  cert.weights.assign(n, Rational(0));
  const auto masks = opposing_masks(f, x);
  if (masks.empty() || n == 0) return cert;

  LinearProgram lp(n, Sense::Min);
  for (auto& c : lp.objective) c = 1;
  // Rows with f(y) = f(x) have right-hand side 0 and hold for any c >= 0.
  for (Input m : masks) {
    std::vector<Rational> row(n);
    for (int i = 0; i < n; ++i)
      if ((m >> i) & 1u) row[i] = 1;
    lp.add(std::move(row), Relation::Ge, 1);
  }
  auto sol = solve(lp, {route});
  if (sol.status != LpStatus::Optimal) throw std::logic_error("certificate LP not optimal");
  cert.weights = std::move(sol.assignment);
  cert.value = sol.value;
  return cert;
}

Rational frac_block_sens(const PartialFn& f, Input x) {
  require_arity(f, kMaxFbsArity, "frac_block_sens");
  const auto blocks = sensitive_blocks(f, x);
  if (blocks.empty()) return 0;
  const int nb = static_cast<int>(blocks.size());
  LinearProgram lp(nb, Sense::Max);
  for (auto& c : lp.objective) c = 1;
  for (int i = 0; i < f.arity(); ++i) {
    std::vector<Rational> row(nb);
    bool any = false;
    for (int b = 0; b < nb; ++b)
      if ((blocks[b] >> i) & 1u) {
        row[b] = 1;
        any = true;
      }
    if (any) lp.add(std::move(row), Relation::Le, 1);
  }
  auto sol = solve(lp, {LpRoute::Primal});
  if (sol.status != LpStatus::Optimal) throw std::logic_error("block LP not optimal");
  return sol.value;
}

Rational fbs(const PartialFn& f) {
  Rational best = 0;
  for (Input x = 0; x < f.size(); ++x)
    if (f.defined(x)) best = std::max(best, frac_cert(f, x).value);
  return best;
}

bool is_fractional_certificate(const PartialFn& f, const FractionalCertificate& c) {
  if (static_cast<int>(c.weights.size()) != f.arity() || !f.defined(c.x)) return false;
  Rational total = 0;
  for (const auto& w : c.weights) {
    if (w < 0) return false;
    total += w;
  }
  if (total != c.value) return false;
  for (Input y = 0; y < f.size(); ++y) {
    if (!f.defined(y) || f.bit(y) == f.bit(c.x)) continue;
    Rational covered = 0;
    for (int i = 0; i < f.arity(); ++i)
      if (((c.x ^ y) >> i) & 1u) covered += c.weights[i];
    if (covered < 1) return false;
  }
  return true;
}

MultilinearPoly poly_of(const PartialFn& f) {
  if (!f.is_total()) throw usage_error("degree needs a total function; use approx_degree for partial ones");
  std::vector<long long> a(f.size());
  for (Input x = 0; x < f.size(); ++x) a[x] = f.bit(x) ? 1 : 0;
  for (int i = 0; i < f.arity(); ++i)
    for (Input x = 0; x < f.size(); ++x)
      if ((x >> i) & 1u) a[x] -= a[x ^ (Input{1} << i)];
  MultilinearPoly p(f.arity(), Basis::ZeroOne);
  for (Input s = 0; s < f.size(); ++s)
    if (a[s] != 0) p.add(s, Rational(a[s]));
  return p;
}

int degree(const PartialFn& f) { return poly_of(f).degree(); }

std::optional<MultilinearPoly> approx_poly(const PartialFn& f, int d, const Rational& eps) {
  require_arity(f, kMaxAdegArity, "approx_degree");
  const int n = f.arity();
  std::vector<Input> monomials;
  for (Input s = 0; s < f.size(); ++s)
    if (std::popcount(s) <= d) monomials.push_back(s);
  const int m = static_cast<int>(monomials.size());
  LinearProgram lp(m, Sense::Min);
  for (int j = 0; j < m; ++j) lp.set_free(j);
  for (Input x = 0; x < f.size(); ++x) {
    Rational lo = 0, hi = 1;
    if (f.defined(x)) {
      const Rational v = f.bit(x) ? 1 : 0;
      lo = std::max(lo, Rational(v - eps));
      hi = std::min(hi, Rational(v + eps));
    }
    std::vector<Rational> row(m);
    for (int j = 0; j < m; ++j)
      if ((monomials[j] & x) == monomials[j]) row[j] = 1;
    if (lo == hi) {
      lp.add(std::move(row), Relation::Eq, lo);
    } else {
      lp.add(row, Relation::Ge, lo);
      lp.add(std::move(row), Relation::Le, hi);
    }
  }
  auto sol = solve(lp);
  if (sol.status != LpStatus::Optimal) return std::nullopt;
  MultilinearPoly p(n, Basis::ZeroOne);
  for (int j = 0; j < m; ++j) p.add(monomials[j], sol.assignment[j]);
  return p;
}

ApproxDegree approx_degree(const PartialFn& f, const Rational& eps) {
  if (eps < 0) throw usage_error("approximation error must be nonnegative");
  for (int d = 0; d <= f.arity(); ++d)
    if (auto p = approx_poly(f, d, eps)) return {d, *p};
  throw std::logic_error("no approximating polynomial up to full degree");
}

bool is_approximation(const PartialFn& f, const MultilinearPoly& p, const Rational& eps) {
  for (Input x = 0; x < f.size(); ++x) {
    const Rational v = p.eval(x);
    if (v < 0 || v > 1) return false;
    if (f.defined(x) && abs(v - (f.bit(x) ? 1 : 0)) > eps) return false;
  }
  return true;
}

Rational real_block_sens(const MultilinearPoly& p, Input x, Input block) {
  const auto q = p.to_basis(Basis::PlusMinus);
  return abs(q.eval(x) - q.eval(x ^ block)) / 2;
}

MeasureReport measure_all(const PartialFn& f, bool with_adeg) {
  require_arity(f, kMaxBsArity, "measure report");
  MeasureReport r;
  r.n = f.arity();
  r.dt = dt_depth(f);
  r.c = cert_complexity(f);
  r.c0 = cert_complexity_at_value(f, false);
  r.c1 = cert_complexity_at_value(f, true);
  r.s = sensitivity(f);
  r.bs = block_sensitivity(f);
  r.fbs = fbs(f);
  if (f.is_total()) r.deg = degree(f);
  if (with_adeg) r.adeg = approx_degree(f).degree;
  return r;
}

}  // namespace qproj
