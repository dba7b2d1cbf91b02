#include "qproj/oracles.hpp"

#include <algorithm>
#include <bit>
#include <vector>

namespace qproj::oracle {

namespace {

int tree_search(const PartialFn& f, const std::vector<Input>& points, Input queried) {
  bool any0 = false, any1 = false;
  for (Input x : points)
    if (f.defined(x)) (f.bit(x) ? any1 : any0) = true;
  if (!(any0 && any1)) return 0;
  int best = f.arity() + 1;
  for (int i = 0; i < f.arity(); ++i) {
    if ((queried >> i) & 1u) continue;
    std::vector<Input> zero, one;
    for (Input x : points) ((x >> i) & 1u ? one : zero).push_back(x);
    const Input q = queried | (Input{1} << i);
    best = std::min(best, 1 + std::max(tree_search(f, zero, q), tree_search(f, one, q)));
  }
  return best;
}

int disjoint_family(const std::vector<Input>& blocks, std::size_t start, Input used) {
  int best = 0;
  for (std::size_t j = start; j < blocks.size(); ++j)
    if ((blocks[j] & used) == 0) best = std::max(best, 1 + disjoint_family(blocks, j + 1, used | blocks[j]));
  return best;
}

}  // namespace

int dt_depth(const PartialFn& f) {
  std::vector<Input> all(f.size());
  for (Input x = 0; x < f.size(); ++x) all[x] = x;
  return tree_search(f, all, 0);
}

int cert_complexity(const PartialFn& f, Input x) {
  for (int size = 0; size <= f.arity(); ++size)
    for (Input k = 0; k < f.size(); ++k) {
      if (std::popcount(k) != size) continue;
      bool forces = true;
      for (Input y = 0; y < f.size() && forces; ++y)
        if (f.defined(y) && ((x ^ y) & k) == 0 && f.bit(y) != f.bit(x)) forces = false;
      if (forces) return size;
    }
  return f.arity();
}

int block_sensitivity(const PartialFn& f, Input x) {
  std::vector<Input> blocks;
  for (Input b = 1; b < f.size(); ++b)
    if (f.defined(x ^ b) && f.bit(x ^ b) != f.bit(x)) blocks.push_back(b);
  return disjoint_family(blocks, 0, 0);
}

int degree(const PartialFn& f) {
  int d = 0;
  for (Input s = 0; s < f.size(); ++s) {
    long long sum = 0;
    for (Input x = 0; x < f.size(); ++x) {
      const int v = f.bit(x) ? -1 : 1;
      sum += (std::popcount(s & x) & 1) ? -v : v;
    }
    if (sum != 0) d = std::max(d, std::popcount(s));
  }
  return d;
}

}  // namespace qproj::oracle
