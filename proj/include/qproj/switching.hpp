#pragma once

#include <cstdint>
#include <vector>

#include "qproj/boolfn.hpp"
#include "qproj/measures.hpp"
#include "qproj/rational.hpp"
#include "qproj/rng.hpp"

namespace qproj {

struct FreeSet {
  int n = 0;
  Input mask = 0;
  double p = 0;
};

FreeSet sample_free_set(int n, double p, Rng& rng);

// {i in S : c_i > tau}.
Input heavy_set(const FractionalCertificate& cert, Input s, const Rational& tau);

// Enumerates every y in dom(f) that differs from cert.x only inside S \ K and
// checks |f(x) - f(y)| <= sum of c_i over the differing positions, and <= bound.
// |S \ K| <= 20.
bool restricted_stability_check(const PartialFn& f, const FractionalCertificate& cert, Input s, Input k,
                                const Rational& bound);

struct HeavyStage {
  Input candidates = 0;  // h(x^{A_j}) minus earlier h-sets
  Input sampled = 0;     // S_j
  Input flipped = 0;     // A_{j+1}
};

struct HeavyTrace {
  int k = 0;
  double p = 0;
  Rational fbs;
  Rational tau;
  int stage_limit = 0;
  std::vector<HeavyStage> stages;
  bool terminated = false;  // A_{j+1} = A_j reached
  bool truncated = false;   // stage limit reached first
};

// tau = 2 p^{3/4} F / k with F = fbs(f), as a rational rounded from long double.
Rational heavy_threshold(const Rational& fbs, double p, int k);

// FC(f, z) at every defined z, and F = max of their values.
struct WeightTable {
  std::vector<FractionalCertificate> certs;  // indexed by input; empty weights off the domain
  Rational fbs;
};

WeightTable weight_table(const PartialFn& f);

// f must be defined on every hybrid x^{A_j} reached; std::domain_error otherwise.
HeavyTrace stagewise_sample(const PartialFn& f, Input x, Input y, double p, int k, Rng& rng);
HeavyTrace stagewise_sample(const PartialFn& f, const WeightTable& w, Input x, Input y, double p, int k, Rng& rng);

// Partial assignment over the variables of some function: the coordinates in
// mask are fixed to the matching bits of values.
struct Certificate {
  Input mask = 0;
  Input values = 0;

  bool consistent(Input y) const { return ((y ^ values) & mask) == 0; }
  bool operator==(const Certificate&) const = default;
};

// Sorted index tuple first, then the values read in index order.
bool cert_less(const Certificate& a, const Certificate& b);

// Inclusion-minimal b-certificates of width <= width that contain at least one
// b-input, sorted by cert_less.
std::vector<Certificate> small_certificates(const SubcubeTable& table, bool value, int width);

struct CertDnf {
  int arity = 0;
  int width = 0;
  std::vector<Certificate> terms;

  bool eval(Input y) const;
};

CertDnf cert_dnf(const PartialFn& g, int k);
CertDnf cert_dnf(const PartialFn& f, const Restriction& rho, int k);

class DecisionTree {
 public:
  struct Node {
    int var = -1;  // -1 for a leaf
    bool leaf = false;
    int child[2] = {-1, -1};
  };

  int arity = 0;
  std::vector<Node> nodes;  // nodes[0] is the root

  bool eval(Input y) const;
  int depth() const;
  // No variable is queried twice on one path.
  bool queries_distinct() const;
};

// Round procedure over minimal 0-certificates of width <= k^2. g has at most 16 variables.
DecisionTree cert_dt(const PartialFn& g, int k);
DecisionTree cert_dt(const PartialFn& f, const Restriction& rho, int k);

// cert_dt for the largest k whose tree has height <= d.
DecisionTree switch_tree(const PartialFn& g, int d);

// Pr_S[D_{x,S}(y|_S) != f_{x_{S-bar}}(y|_S)], undefined points counting as agreement. n <= 12.
Rational switch_fail_exact(const PartialFn& f, Input x, Input y, const Rational& p, int d);

struct McEstimate {
  std::uint64_t trials = 0;
  std::uint64_t failures = 0;
  double estimate = 0;
  double stderr_ = 0;  // from the sample frequency
};

McEstimate switch_fail_mc(const PartialFn& f, Input x, Input y, double p, int d, std::uint64_t trials,
                          std::uint64_t seed, int jobs = 1);
// x and y drawn uniformly per trial.
McEstimate switch_fail_mc_uniform(const PartialFn& f, double p, int d, std::uint64_t trials, std::uint64_t seed,
                                  int jobs = 1);

// Reporting-only bounds.
double qswitching_bound(int d);          // e^{-d^{1/5}}
double uniform_switching_bound(int d);   // e^{-d^{1/10}}
double restlowdeg_failure_bound(int k);  // (2 + k/6) e^{-k/6}

}  // namespace qproj
