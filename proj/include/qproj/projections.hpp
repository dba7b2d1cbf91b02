#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "qproj/boolfn.hpp"
#include "qproj/rational.hpp"
#include "qproj/rng.hpp"

namespace qproj {

using Real = boost::multiprecision::cpp_bin_float_100;

// A probability or parameter fell outside its legal range.
class parameter_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Quantity too large to represent or enumerate.
class resource_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log is base 2 throughout, so "log e" is log2(e).
struct SipParams {
  int m = 0;
  int d = 0;
  Real w, q, p, lambda;
  std::vector<Real> t;       // t[k] for 1 <= k <= d-1; t[0] unused
  Real w0;                   // NaN when t_1 is not in (0,1)
  std::vector<Real> fanins;  // w_0 .. w_{d-1}
  Real n;                    // product of the fan-ins
  std::vector<std::string> violations;

  double beta(int k) const;  // 1/3 + (d-k-1)/(12d)
};

SipParams sip_params(int m, int d);

struct SipPrimeParams : SipParams {
  Real qprime, x, p1, N;
  Real w_dm2, w_dm1;  // replaced bottom fan-ins w_{d-2}, w_{d-1}
  Real n_sip;         // variable count of SIP_d with the same m, d
  Real N_formula;     // (q/q')(n/m) log2(1/p_1); compared for d >= 3 only
};

// N is the fixed point of N = product of fan-ins (w_{d-2}, w_{d-1} depend on N).
SipPrimeParams sipprime_params(int m, int d);

struct QcmaParams {
  int m = 0;
  int d = 0;
  Real w, q, p, lambda;
  std::vector<Real> t;       // t[k], 1 <= k <= 2d+1
  Real w0;
  std::vector<Real> Ni, qi, lambdai, f;  // index i in 1..d; [0] unused
  std::vector<Real> fanins;  // w_0 .. w_{2d+1}
  Real N;
  std::vector<std::string> violations;

  double beta(int k) const;  // 1/3 + (2d-k+1)/(24(d+1))
};

QcmaParams qcma_params(int m, int d);

// Read-once alternating formula. fanins[k] is the fan-in of depth-k gates,
// inputs are block-major with the last coordinate fastest, so the children of
// a depth-k gate are contiguous.
struct SipFormula {
  std::vector<int> fanins;
  Gate bottom = Gate::And;

  int depth() const { return static_cast<int>(fanins.size()); }
  Gate gate_at(int k) const;
  std::size_t count(int k) const;  // |A_k|
  std::size_t inputs() const { return count(depth()); }
};

constexpr std::size_t kMaxSipInputs = std::size_t{1} << 20;

SipFormula build_sip(const std::vector<long long>& fanins, Gate bottom = Gate::And);
bool eval_sip(const SipFormula& f, const std::vector<std::uint8_t>& x);
// layers[k] holds the {0,1,*} value of every gate in A_k; layers[d] is x.
std::vector<std::vector<Cell>> eval_sip_partial(const SipFormula& f, const std::vector<Cell>& x);
Cell eval_sip_cell(const SipFormula& f, const std::vector<Cell>& x);
PartialFn sip_function(const SipFormula& f);  // inputs <= kMaxArity

// "d=<depth>", "fanins=<comma list>", "bottom=AND|OR"; '#' comments.
SipFormula read_sip_spec(std::istream& in);
SipFormula read_sip_spec_file(const std::string& path);

struct BiasedProduct {
  std::vector<Rational> p1;  // Pr[bit i = 1]

  int arity() const { return static_cast<int>(p1.size()); }
  static BiasedProduct uniform(int n, const Rational& p);
};

// Pr_D[f = 1] over the whole cube; undefined points count for neither value.
Rational prob_one(const PartialFn& f, const BiasedProduct& d);
Rational prob_zero(const PartialFn& f, const BiasedProduct& d);
// min(Pr[f=0], Pr[f=1]); arity <= 20.
Rational bias(const PartialFn& f, const BiasedProduct& d);
Rational bias(const SipFormula& f, const BiasedProduct& d);

struct Cnf {
  int arity = 0;
  // Literal +v / -v refers to x_v (1-based), negated when negative.
  std::vector<std::vector<int>> clauses;

  int width() const;
  bool eval(Input y) const;
};

struct CnfGap {
  Rational disagreement;  // Pr_Y[OR_tau(Y) != C(Y)]
  Rational bias;          // bias(OR_tau, Y)
  Rational rp;            // width * p
  bool holds = false;     // disagreement >= bias - rp
};

// Y ~ {0_{1-p}, 1_p}^n; OR_tau(Y) reads Y on the stars of tau. n <= 20.
CnfGap or_cnf_gap(const Restriction& tau, const Cnf& c, const Rational& p);

// Per block: 1^l w.p. x, uniform on {*,1}^l \ {1^l} w.p. q', uniform on
// {0,1}^l \ {1^l} otherwise.
BlockRestriction sample_r_init(int blocks, int block_len, double x, double qprime, Rng& rng);

struct InitCompletion {
  Rational tv;        // TV distance of X_a from uniform on {0,1}^w
  Rational residual;  // x + q't - 2^{-w}
};

InitCompletion completion_check_init(int w, const Rational& x, const Rational& qprime, const Rational& t);

// One step R(tau) applied to blocks feeding gates of kind `gate`. For AND
// gates a free bit becomes 0 w.p. t_child; for OR the roles of 0 and 1 swap.
struct RLayer {
  Gate gate = Gate::And;
  Rational t_child;   // t_k
  Rational t_parent;  // t_{k-1}
  Rational lambda;
  Rational center, radius;  // |S_a| window
};

Rational q_a(const RLayer& layer, int stars);
bool in_window(const RLayer& layer, int stars);

BlockRestriction sample_r_tau(const BlockRestriction& tau, const RLayer& layer, Rng& rng);
// Exact Pr[R(tau) = rho].
Rational r_tau_probability(const BlockRestriction& tau, const BlockRestriction& rho, const RLayer& layer);

Rational to_rational(const Real& v);  // via double

// Layer for R(tau) on A_k of SIP_d, 2 <= k <= d-1.
RLayer sip_layer(const SipParams& p, int k);
// rho_{i,kind}; i <= d-1 for kind 1, i <= d for kind 2.
RLayer qcma_layer(const QcmaParams& p, int i, int kind);
// rho_{d,1} is the initial-style sampler with lambda_d, q_d; others use qcma_layer.
BlockRestriction sample_rho_qcma(int i, int kind, const BlockRestriction& tau, const QcmaParams& p, Rng& rng);

// Exact two-step chain: sigma over A_k (gates of kind `first.gate` above it),
// then R of its lift (outer blocks of length outer_len, gates of kind
// `second.gate`), then each star of the second lift set to the non-controlling
// value of second.gate w.p. t_top. Returns TV of the completed string on the
// stars of sigma from the product that puts the controlling value of
// first.gate w.p. first.t_child.
struct ChainCompletion {
  Rational tv;
  std::size_t atoms = 0;
};

ChainCompletion chain_completion_check(const BlockRestriction& sigma, const RLayer& first, int outer_len,
                                       const RLayer& second, const Rational& t_top);

struct TypicalWindow {
  Rational c1_center, c1_radius;  // stars per A_{k-2} block of the lift
  Rational c2_lo, c2_hi;          // stars per A_{k-3} block of the double lift
};

struct TypicalReport {
  bool typical = false;
  bool cond1 = false;
  bool cond2 = false;
  bool upper_undetermined = false;  // every A_{k-3} gate is * after a third lift
  std::vector<std::pair<std::size_t, int>> cond1_failures;  // (address, star count)
  std::vector<std::pair<std::size_t, int>> cond2_failures;
};

// tau over A_k of f, 3 <= k <= depth.
TypicalReport is_typical(const std::vector<Cell>& tau, const SipFormula& f, int k, const TypicalWindow& win);
TypicalWindow sip_typical_window(const SipParams& p, int k);

struct RateEstimate {
  std::uint64_t trials = 0;
  std::uint64_t typical = 0;
  std::uint64_t cond1_failures = 0;
  std::uint64_t cond2_failures = 0;
  double rate = 0;  // typical / trials
  double stderr_ = 0;
  double cond1_rate = 0;
  double cond1_stderr = 0;
};

using TauSampler = std::function<std::vector<Cell>(Rng&)>;
using TypicalCheck = std::function<TypicalReport(const std::vector<Cell>&)>;

RateEstimate typicality_rate_mc(const TauSampler& sampler, const TypicalCheck& check, std::uint64_t trials,
                                std::uint64_t seed, int jobs = 1);

// Toy family: SIP fan-ins (1, B, 2), tau from R_init with x = 0 and q' = s, so
// each bottom gate is * w.p. s. Window sB +- (sB)^{2/3}.
struct ToyTypicality {
  SipFormula formula;
  TypicalWindow window;
  Rational s;
};

ToyTypicality toy_typicality(int blocks, const Rational& s);
RateEstimate toy_typicality_mc(int blocks, const Rational& s, std::uint64_t trials, std::uint64_t seed, int jobs = 1);
// Pr[Bin(B, s) outside the window].
Rational toy_cond1_failure_exact(int blocks, const Rational& s);

// Psi = proj_{rho(2)} ... proj_{rho(d)}; restrictions listed rho(2) first.
PartialFn projection_chain(const PartialFn& f, const std::vector<BlockRestriction>& restrictions);
// Point of the original cube reached from y on the final variables.
Input complete_assignment(const std::vector<BlockRestriction>& restrictions, Input y);

struct QiaEntry {
  Real size;
  Real q_ia;
  Real lo, hi;
  bool in_window = false;  // precondition; false means vacuous
  bool within = false;
};

struct QiaReport {
  std::vector<QiaEntry> entries;
  bool ok = false;  // every in-window entry is within
};

QiaReport qia_bound_check(const QcmaParams& p, int i, const std::vector<Real>& sizes);
// The two window edges q f_i -+ w^{beta(2i+2)}.
std::vector<Real> qia_window_edges(const QcmaParams& p, int i);

// d = 2 toy: q = t = w^{-1/2}, w_0 minimal with (1-t)^{q w_0} <= 1/2,
// x = 1/(w_0 w^{1/4}), q' = q, bottom blocks of length 2.
struct UnbiasedToy {
  int w = 0;
  int w0 = 0;
  Rational t, x, qprime;
};

UnbiasedToy unbiased_toy(int w);
// bias of the OR over the lifted bottom gates under {0_{1-t}, 1_t}.
Rational or_projection_bias(const std::vector<Cell>& lifted, const Rational& t);

struct MeanEstimate {
  std::uint64_t trials = 0;
  double mean = 0;
  double stderr_ = 0;
};

MeanEstimate unbiasedor_mc(int w, std::uint64_t trials, std::uint64_t seed, int jobs = 1);

struct TailEstimate {
  std::uint64_t trials = 0;
  std::uint64_t exceed = 0;
  double rate = 0;
  double stderr_ = 0;
};

// Frequency of DT(proj_rho f) > s with rho from R_init over blocks of length block_len.
TailEstimate projected_dt_tail_mc(const PartialFn& f, int block_len, double x, double qprime, int s,
                                  std::uint64_t trials, std::uint64_t seed, int jobs = 1);

}  // namespace qproj
