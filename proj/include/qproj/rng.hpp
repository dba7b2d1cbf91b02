#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <random>
#include <thread>
#include <vector>

namespace qproj {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for trial `index` of experiment stream `stream` under `root`. Trials
// never share state, so any partition of the index range gives the same draws.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t s = root;
  std::uint64_t a = splitmix64(s);
  s = a ^ stream;
  std::uint64_t b = splitmix64(s);
  s = b ^ index;
  return splitmix64(s);
}

// Distribution code is written out here rather than taken from <random>,
// whose distributions are not specified bit-for-bit across libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }
  // Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform on [0, n), n >= 1, by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    for (;;) {
      const std::uint64_t r = eng_();
      if (r < limit) return r % n;
    }
  }

 private:
  std::mt19937_64 eng_;
};

// Runs fn(begin, end, chunk) over [0, count) split into `jobs` contiguous chunks.
template <class F>
void parallel_chunks(std::size_t count, int jobs, F&& fn) {
  const std::size_t j = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), count));
  if (j <= 1) {
    fn(std::size_t{0}, count, std::size_t{0});
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(j);
  for (std::size_t c = 0; c < j; ++c) {
    const std::size_t b = count * c / j, e = count * (c + 1) / j;
    pool.emplace_back([&fn, &errors, b, e, c] {
      try {
        fn(b, e, c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& err : errors)
    if (err) std::rethrow_exception(err);
}

}  // namespace qproj
