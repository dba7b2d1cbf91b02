#pragma once

#include <optional>
#include <vector>

#include "qproj/boolfn.hpp"
#include "qproj/lp.hpp"
#include "qproj/poly.hpp"
#include "qproj/rational.hpp"

namespace qproj {

// Per-subcube summary used by the tree and certificate searches. A subcube
// is a ternary string (digit i: 0, 1, or 2 for a free coordinate) read as a
// base-3 number with coordinate 0 least significant.
class SubcubeTable {
 public:
  static constexpr std::uint8_t kHasZero = 1;
  static constexpr std::uint8_t kHasOne = 2;

  explicit SubcubeTable(const PartialFn& f);

  int arity() const { return n_; }
  std::size_t size() const { return summary_.size(); }
  std::uint8_t summary(std::size_t cube) const { return summary_[cube]; }
  std::size_t pow3(int i) const { return pow3_[i]; }
  // Cube fixing the coordinates in mask to the bits of values; others free.
  std::size_t encode(Input mask, Input values) const;

 private:
  int n_;
  std::vector<std::size_t> pow3_;
  std::vector<std::uint8_t> summary_;
};

constexpr int kMaxDtArity = 16;
constexpr int kMaxBsArity = 12;
constexpr int kMaxFbsArity = 10;
constexpr int kMaxAdegArity = 12;

int dt_depth(const PartialFn& f);

int cert_complexity(const PartialFn& f, Input x);
int cert_complexity(const PartialFn& f);
// Max of C(f,x) over defined x with f(x) = value; 0 when there are none.
int cert_complexity_at_value(const PartialFn& f, bool value);

int sensitivity(const PartialFn& f, Input x);
int sensitivity(const PartialFn& f);

// Masks B with x^B in dom(f) and f(x^B) != f(x).
std::vector<Input> sensitive_blocks(const PartialFn& f, Input x);
// Inclusion-minimal members, ordered by size then value.
std::vector<Input> minimal_sets(std::vector<Input> sets);

// A largest family of disjoint sensitive blocks at x.
std::vector<Input> block_packing(const PartialFn& f, Input x);
int block_sensitivity(const PartialFn& f, Input x);
int block_sensitivity(const PartialFn& f);

struct FractionalCertificate {
  Input x = 0;
  std::vector<Rational> weights;
  Rational value;
};

FractionalCertificate frac_cert(const PartialFn& f, Input x, LpRoute route = LpRoute::Auto);
// Block-weight LP over every sensitive block.
Rational frac_block_sens(const PartialFn& f, Input x);
// max over dom(f) of FC(f,x).
Rational fbs(const PartialFn& f);

// Checks sum_{i: x_i != y_i} c_i >= |f(x) - f(y)| for every defined y.
bool is_fractional_certificate(const PartialFn& f, const FractionalCertificate& c);

MultilinearPoly poly_of(const PartialFn& f);
int degree(const PartialFn& f);

struct ApproxDegree {
  int degree = 0;
  MultilinearPoly witness;
};

// Feasibility LP at d = 0, 1, ... for |p - f| <= eps on dom(f), 0 <= p <= 1 everywhere.
std::optional<MultilinearPoly> approx_poly(const PartialFn& f, int d, const Rational& eps);
ApproxDegree approx_degree(const PartialFn& f, const Rational& eps = Rational(1, 3));
bool is_approximation(const PartialFn& f, const MultilinearPoly& p, const Rational& eps);

// |p(x) - p(x^B)| / 2 for p in the PlusMinus basis.
Rational real_block_sens(const MultilinearPoly& p, Input x, Input block);

struct MeasureReport {
  int n = 0;
  int dt = 0;
  int c = 0, c0 = 0, c1 = 0;
  int s = 0;
  int bs = 0;
  Rational fbs;
  std::optional<int> deg;
  std::optional<int> adeg;
};

// n <= 12. deg is filled for total functions; adeg only when asked.
MeasureReport measure_all(const PartialFn& f, bool with_adeg);

}  // namespace qproj
