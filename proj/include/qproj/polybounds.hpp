#pragma once

#include <vector>

#include "qproj/boolfn.hpp"
#include "qproj/measures.hpp"
#include "qproj/poly.hpp"
#include "qproj/rational.hpp"

namespace qproj {

// Coefficients of T_m, index k holding the x^k coefficient.
std::vector<Integer> chebyshev(int m);
// T_m(x) by the three-term recurrence.
long double chebyshev_eval(int m, long double x);

// h(y) = alpha + (1 - alpha)/N * sum_j y_j over y in {1,-1}^N, with
// alpha = 1 - (N/2)(1 - cos(pi/m)) and m the integer in [pi sqrt(N)/2, pi sqrt(N)/2 + 1).
struct OrGadget {
  int n = 0;
  int m = 0;
  long double alpha = 0;
  // 1 - alpha = N sin^2(pi/(2m)), kept separately to avoid cancellation.
  long double one_minus_alpha = 0;
};

OrGadget or_gadget(int n);
// y is a packed point: bit j set means y_j = -1.
long double eval_h(const OrGadget& g, Input y);
long double composed_gadget(const OrGadget& g, Input y);

struct GadgetReport {
  int n = 0;
  int m = 0;
  long double alpha = 0;
  long double at_ones = 0;       // T_m(h(1^N))
  long double at_flip_err = 0;   // max_j |T_m(h((1^N)^j)) + 1|
  long double h_flip_err = 0;    // max_j |h((1^N)^j) - cos(pi/m)|
  long double max_abs = 0;       // max over all points of |T_m(h(y))|
  long double max_abs_h = 0;     // max over all points of |h(y)|
};

// Exhaustive over {1,-1}^N; N <= 24.
GadgetReport check_gadget(int n);

// f'(y) = f(x^{B_y}) where B_y is the union of blocks j with y_j = -1.
// Result is in the PlusMinus basis over blocks.size() variables.
MultilinearPoly blockify(const MultilinearPoly& f, Input x, const std::vector<Input>& blocks);

// Sum over j of |p(x) - p(x^{e_j})| / 2.
Rational real_sensitivity(const MultilinearPoly& p, Input x);

// Rational lower bound for pi^2/4 used in exact comparisons.
Rational pi_sq_over_4_lower();

struct WeightWitness {
  int degree = 0;
  std::vector<FractionalCertificate> weights;  // one per input
  Rational bound;                             // pi_sq_over_4_lower() * degree^2
  bool covers = false;                        // every pair inequality holds
  bool within_bound = false;                  // every total weight <= bound
};

WeightWitness fbsdeg_witness(const PartialFn& f);

}  // namespace qproj
