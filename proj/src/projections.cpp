#include "qproj/projections.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <boost/math/special_functions/log1p.hpp>

#include "qproj/measures.hpp"

namespace qproj {

namespace mp = boost::multiprecision;

namespace {

const Real kHalf = Real(1) / 2;

Real nan_real() { return std::numeric_limits<Real>::quiet_NaN(); }

Real log2r(const Real& v) { return mp::log(v) / mp::log(Real(2)); }

std::string fmt(const Real& v) { return v.str(12); }

bool close(const Real& a, const Real& b, const Real& rel = Real("1e-35")) {
  return mp::abs(a - b) <= rel * std::max(Real(1), std::max(mp::abs(a), mp::abs(b)));
}

bool unit_open(const Real& v) { return v > 0 && v < 1; }

void require_finite(const Real& v, const char* what, int m, int d) {
  if (mp::isinf(v))
    throw resource_error(std::string(what) + " overflows at m=" + std::to_string(m) + ", d=" + std::to_string(d));
}

// log(1 - t) through log1p, so tiny t keeps its digits; NaN for t >= 1.
Real log1m(const Real& t) {
  if (mp::isnan(t) || t >= 1) return nan_real();
  return boost::math::log1p(-t);
}

Real pow1m(const Real& t, const Real& e) {
  if (t == 1 && e > 0) return 0;
  return mp::exp(e * log1m(t));
}

// min{i : (1-t1)^{q i} <= 1/2}; NaN when t1 is not in (0,1).
Real min_w0(const Real& t1, const Real& q) {
  if (!unit_open(t1)) return nan_real();
  auto ok = [&](const Real& i) { return pow1m(t1, q * i) <= kHalf; };
  Real i = mp::ceil(mp::log(kHalf) / (q * log1m(t1)));
  if (i < 1) i = 1;
  // Off by at most a step or two from rounding.
  for (int step = 0; step < 4 && i > 1 && ok(i - 1); ++step) i -= 1;
  for (int step = 0; step < 4 && !ok(i); ++step) i += 1;
  return i;
}

void check_w0(const Real& t1, const Real& q, const Real& w0, std::vector<std::string>& out) {
  if (mp::isnan(w0)) {
    out.push_back("w_0 undefined: t_1 = " + fmt(t1) + " not in (0,1)");
    return;
  }
  const bool at = pow1m(t1, q * w0) <= kHalf;
  const bool before = w0 > 1 && pow1m(t1, q * (w0 - 1)) <= kHalf;
  if (!at || before) out.push_back("w_0 = " + fmt(w0) + " is not the minimal i with (1-t_1)^{qi} <= 1/2");
}

// t_last = (p - lambda)/q, t_{k-1} = ((1-t_k)^{qw} - lambda)/q down to t_1.
std::vector<Real> t_chain(int last, const Real& p, const Real& q, const Real& w, const Real& lambda) {
  std::vector<Real> t(last + 1, Real(0));
  t[last] = (p - lambda) / q;
  for (int k = last; k >= 2; --k) t[k - 1] = (pow1m(t[k], q * w) - lambda) / q;
  return t;
}

void check_t_chain(const std::vector<Real>& t, const Real& p, const Real& q, const Real& w, const Real& lambda,
                   std::vector<std::string>& out) {
  const int last = static_cast<int>(t.size()) - 1;
  for (int k = 1; k <= last; ++k)
    if (!unit_open(t[k])) out.push_back("t_" + std::to_string(k) + " = " + fmt(t[k]) + " not in (0,1)");
  if (!close(q * t[last] + lambda, p)) out.push_back("t_" + std::to_string(last) + " recurrence fails");
  for (int k = last; k >= 2; --k) {
    const Real rhs = pow1m(t[k], q * w);
    if (!mp::isnan(rhs) && !close(q * t[k - 1] + lambda, rhs))
      out.push_back("t_" + std::to_string(k - 1) + " recurrence fails");
  }
}

Real product(const std::vector<Real>& v) {
  Real r = 1;
  for (const auto& x : v) r *= x;
  return r;
}

// q_a window check for one R(tau) layer at both edges of the |S_a| window.
void check_layer_window(const std::string& name, const Real& tc, const Real& tp, const Real& lambda,
                        const Real& center, const Real& radius, std::vector<std::string>& out) {
  for (const Real& s : {center - radius, center + radius}) {
    const Real sz = std::max(s, Real(0));
    const Real qa = (pow1m(tc, sz) - lambda) / tp;
    if (!(qa >= 0 && qa <= 1 && lambda + qa <= 1))
      out.push_back(name + ": q_a = " + fmt(qa) + " at |S_a| = " + fmt(sz) + " outside [0, 1 - lambda]");
  }
}

}  // namespace

double SipParams::beta(int k) const { return 1.0 / 3 + static_cast<double>(d - k - 1) / (12.0 * d); }

double QcmaParams::beta(int k) const {
  return 1.0 / 3 + static_cast<double>(2 * d - k + 1) / (24.0 * (d + 1));
}

SipParams sip_params(int m, int d) {
  if (m < 2 || d < 2) throw usage_error("SIP parameters need m >= 2 and d >= 2");
  SipParams s;
  s.m = m;
  s.d = d;
  const Real log2e = 1 / mp::log(Real(2));
  s.w = mp::floor(Real(m) * mp::pow(Real(2), m) / log2e);
  require_finite(s.w, "w", m, d);
  s.q = mp::pow(Real(2), Real(-m) / 2);
  s.p = s.q * s.q;
  s.lambda = mp::pow(log2r(s.w), Real(3) / 2) / mp::pow(s.w, Real(5) / 4);
  s.t = t_chain(d - 1, s.p, s.q, s.w, s.lambda);
  s.w0 = min_w0(s.t[1], s.q);

  s.fanins.assign(d, s.w);
  s.fanins[0] = s.w0;
  s.fanins[d - 1] = m;
  s.n = product(s.fanins);
  require_finite(s.n, "n", m, d);

  check_t_chain(s.t, s.p, s.q, s.w, s.lambda, s.violations);
  check_w0(s.t[1], s.q, s.w0, s.violations);
  for (int k = 2; k <= d - 1; ++k)
    check_layer_window("R(tau) on A_" + std::to_string(k), s.t[k], s.t[k - 1], s.lambda, s.q * s.w,
                       mp::pow(s.w, Real(s.beta(k))), s.violations);
  return s;
}

SipPrimeParams sipprime_params(int m, int d) {
  SipPrimeParams r;
  static_cast<SipParams&>(r) = sip_params(m, d);
  r.n_sip = r.n;
  const Real td = r.t[d - 1];
  // p_1 = a N^{-5/7} once x and q' are written in terms of N.
  const Real a = 1 / (r.q * mp::pow(r.w, Real(5) / 4)) + td;
  // N = C N^{5/7} w_{d-1}(N); for d = 2 the SIP' w_{d-2} replaces w_0.
  const Real c = r.q * r.w * (d >= 3 ? r.w0 * mp::pow(r.w, d - 3) : Real(1));
  r.qprime = r.x = r.p1 = r.N = r.w_dm2 = r.w_dm1 = r.N_formula = nan_real();
  if (!(a > 0) || mp::isnan(c)) {
    r.violations.push_back("N undefined: p_1 = (1/(q w^{5/4}) + t_{d-1}) N^{-5/7} with 1/(q w^{5/4}) + t_{d-1} = " +
                           fmt(a) + (mp::isnan(c) ? ", w_0 undefined" : ""));
    return r;
  }
  const Real seven_halves = Real(7) / 2, five_sevenths = Real(5) / 7;
  Real n = mp::pow(c * m, seven_halves);
  for (int it = 0; it < 500; ++it) {
    const Real wl = five_sevenths * log2r(n) - log2r(a);
    if (!(wl > 0)) break;
    const Real next = mp::pow(c * wl, seven_halves);
    require_finite(next, "N", m, d);
    const bool done = close(next, n, Real("1e-45"));
    n = next;
    if (done) break;
  }
  r.N = n;
  r.qprime = 1 / mp::pow(n, five_sevenths);
  r.w_dm2 = r.q * r.w * mp::pow(n, five_sevenths);
  r.x = 1 / (r.w_dm2 * mp::pow(r.w, Real(1) / 4));
  r.p1 = r.x + r.qprime * ((r.p - r.lambda) / r.q);
  r.w_dm1 = -log2r(r.p1);
  r.fanins[d - 2] = r.w_dm2;
  r.fanins[d - 1] = r.w_dm1;
  r.n = product(r.fanins);
  r.N_formula = (r.q / r.qprime) * (r.n_sip / m) * log2r(1 / r.p1);

  auto& v = r.violations;
  if (!close(r.p1, r.x + r.qprime * td)) v.push_back("p_1 identity fails");
  if (!unit_open(r.p1)) v.push_back("p_1 = " + fmt(r.p1) + " not in (0,1)");
  if (!close(mp::pow(Real(2), -r.w_dm1), r.p1)) v.push_back("2^{-w_{d-1}} != p_1");
  if (!(r.w_dm1 >= 1)) v.push_back("w_{d-1} = " + fmt(r.w_dm1) + " < 1");
  if (!(r.x >= 0 && r.x + r.qprime <= 1)) v.push_back("x + q' = " + fmt(r.x + r.qprime) + " exceeds 1");
  if (!close(r.n, r.N, Real("1e-30"))) v.push_back("N = " + fmt(r.N) + " is not the product of fan-ins " + fmt(r.n));
  if (d >= 3 && !close(r.N_formula, r.N, Real("1e-30")))
    v.push_back("N = (q/q')(n/m)log(1/p_1) gives " + fmt(r.N_formula) + ", fixed point " + fmt(r.N));
  return r;
}

QcmaParams qcma_params(int m, int d) {
  if (m < 2 || d < 2) throw usage_error("QCMA parameters need m >= 2 and d >= 2");
  QcmaParams s;
  s.m = m;
  s.d = d;
  const Real log2e = 1 / mp::log(Real(2));
  s.w = mp::floor(Real(m) * mp::pow(Real(2), m) / log2e);
  require_finite(s.w, "w", m, d);
  s.q = mp::pow(Real(2), Real(-m) / 2);
  s.p = s.q * s.q;
  s.lambda = mp::pow(log2r(s.w), Real(3) / 2) / mp::pow(s.w, Real(5) / 4);
  s.t = t_chain(2 * d + 1, s.p, s.q, s.w, s.lambda);
  s.w0 = min_w0(s.t[1], s.q);

  const Real base = s.w0 * s.q * s.w * s.w * s.w;
  const Real b2 = s.q * s.w * s.w;
  const Real r72 = Real(7) / 2, r75 = Real(7) / 5, r57 = Real(5) / 7;
  s.Ni.assign(d + 1, Real(0));
  s.qi = s.lambdai = s.f = s.Ni;
  for (int i = 1; i <= d; ++i) {
    Real ni = mp::pow(base, mp::pow(r72, i)) * mp::pow(b2, r75 * (mp::pow(r72, i - 1) - 1));
    if (i == d) ni *= mp::pow(s.q * s.w, r72);
    require_finite(ni, "N_i", m, d);
    s.Ni[i] = ni;
    s.qi[i] = 1 / mp::pow(ni, r57);
    s.lambdai[i] = s.qi[i] / (s.q * mp::pow(s.w, Real(5) / 4));
  }
  for (int i = 1; i <= d - 1; ++i)
    s.f[i] = mp::log(s.lambdai[i] + s.qi[i] * s.t[2 * i + 1]) / (s.q * log1m(s.t[2 * i + 2]));
  // Stated without a sign; the block length must be positive, so -log2.
  s.f[d] = -log2r(s.lambdai[d] + s.qi[d] * s.t[2 * d + 1]);

  s.fanins.assign(2 * d + 2, Real(0));
  s.fanins[0] = s.w0;
  s.fanins[1] = s.w;
  for (int i = 1; i <= d; ++i) {
    s.fanins[2 * i] = s.q * s.w * mp::pow(s.Ni[i], r57);
    s.fanins[2 * i + 1] = s.f[i];
  }
  s.N = product(s.fanins);
  require_finite(s.N, "N", m, d);

  auto& v = s.violations;
  check_t_chain(s.t, s.p, s.q, s.w, s.lambda, v);
  check_w0(s.t[1], s.q, s.w0, v);
  for (int k = 1; k <= 2 * d + 1; ++k)
    if (!(s.beta(k) < 5.0 / 12)) v.push_back("beta(" + std::to_string(k) + ", 2d+2) >= 5/12");
  for (int i = 1; i <= d; ++i) {
    const std::string tag = "_" + std::to_string(i);
    if (!unit_open(s.qi[i])) v.push_back("q" + tag + " = " + fmt(s.qi[i]) + " not in (0,1)");
    if (!(s.lambdai[i] + s.qi[i] <= 1)) v.push_back("lambda" + tag + " + q" + tag + " exceeds 1");
    const Real arg = s.lambdai[i] + s.qi[i] * s.t[2 * i + 1];
    if (!unit_open(arg)) v.push_back("lambda" + tag + " + q" + tag + " t_{2i+1} = " + fmt(arg) + " not in (0,1)");
    if (!(s.f[i] > 0) || mp::isinf(s.f[i])) v.push_back("f" + tag + " = " + fmt(s.f[i]) + " not a positive length");
    check_layer_window("rho" + tag + ",2", s.t[2 * i + 1], s.t[2 * i], s.lambda, s.q * s.w,
                       mp::pow(s.w, Real(s.beta(2 * i + 1))), v);
  }
  for (int i = 1; i <= d - 1; ++i) {
    const auto rep = qia_bound_check(s, i, qia_window_edges(s, i));
    for (const auto& e : rep.entries) {
      if (!e.in_window || !e.within)
        v.push_back("q_{" + std::to_string(i) + ",a} = " + fmt(e.q_ia) + " at |S_a| = " + fmt(e.size) +
                    " outside [" + fmt(e.lo) + ", " + fmt(e.hi) + "]");
      else if (!(e.q_ia >= 0 && e.q_ia <= 1 && e.q_ia + s.lambdai[i] <= 1))
        v.push_back("q_{" + std::to_string(i) + ",a} = " + fmt(e.q_ia) + " not a probability");
    }
  }
  return s;
}

std::vector<Real> qia_window_edges(const QcmaParams& p, int i) {
  if (i < 1 || i > p.d - 1) throw usage_error("q_{i,a} needs 1 <= i <= d-1");
  const Real c = p.q * p.f[i], r = mp::pow(p.w, Real(p.beta(2 * i + 2)));
  return {c - r, c + r};
}

QiaReport qia_bound_check(const QcmaParams& p, int i, const std::vector<Real>& sizes) {
  if (i < 1 || i > p.d - 1) throw usage_error("q_{i,a} needs 1 <= i <= d-1");
  const Real c = p.q * p.f[i], r = mp::pow(p.w, Real(p.beta(2 * i + 2)));
  const Real t2 = p.t[2 * i + 2], t1 = p.t[2 * i + 1];
  QiaReport rep;
  rep.ok = true;
  for (const Real& s : sizes) {
    QiaEntry e;
    e.size = s;
    e.in_window = mp::abs(s - c) <= r * (1 + Real("1e-40"));
    e.q_ia = (pow1m(t2, s) - p.lambdai[i]) / t1;
    e.lo = p.qi[i] * (1 - 2 * t2 * r);
    e.hi = p.qi[i] * (1 + 2 * t2 * r);
    e.within = e.q_ia >= e.lo && e.q_ia <= e.hi;
    if (e.in_window && !e.within) rep.ok = false;
    rep.entries.push_back(e);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Formula

Gate SipFormula::gate_at(int k) const {
  const bool same = ((depth() - 1 - k) % 2) == 0;
  if (same) return bottom;
  return bottom == Gate::And ? Gate::Or : Gate::And;
}

std::size_t SipFormula::count(int k) const {
  std::size_t c = 1;
  for (int j = 0; j < k; ++j) c *= static_cast<std::size_t>(fanins[j]);
  return c;
}

SipFormula build_sip(const std::vector<long long>& fanins, Gate bottom) {
  if (fanins.empty()) throw usage_error("SIP formula needs depth >= 1");
  long double size = 1;
  for (long long w : fanins) {
    if (w < 1) throw usage_error("SIP fan-ins must be positive");
    size *= static_cast<long double>(w);
  }
  if (size > static_cast<long double>(kMaxSipInputs)) {
    std::ostringstream os;
    os << "SIP formula has " << std::fixed << std::setprecision(0) << size << " inputs; the cap is 2^20";
    throw resource_error(os.str());
  }
  SipFormula f;
  f.bottom = bottom;
  for (long long w : fanins) f.fanins.push_back(static_cast<int>(w));
  return f;
}

std::vector<std::vector<Cell>> eval_sip_partial(const SipFormula& f, const std::vector<Cell>& x) {
  if (x.size() != f.inputs())
    throw usage_error("SIP input has " + std::to_string(x.size()) + " cells, expected " + std::to_string(f.inputs()));
  const int d = f.depth();
  std::vector<std::vector<Cell>> layers(d + 1);
  layers[d] = x;
  for (int k = d - 1; k >= 0; --k) {
    const int w = f.fanins[k];
    const std::size_t gates = f.count(k);
    layers[k].resize(gates);
    for (std::size_t a = 0; a < gates; ++a)
      layers[k][a] = lift_block(layers[k + 1].data() + a * w, w, f.gate_at(k));
  }
  return layers;
}

Cell eval_sip_cell(const SipFormula& f, const std::vector<Cell>& x) { return eval_sip_partial(f, x)[0][0]; }

bool eval_sip(const SipFormula& f, const std::vector<std::uint8_t>& x) {
  std::vector<Cell> cells(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) cells[i] = x[i] ? Cell::One : Cell::Zero;
  return eval_sip_cell(f, cells) == Cell::One;
}

PartialFn sip_function(const SipFormula& f) {
  const auto n = f.inputs();
  if (n > static_cast<std::size_t>(kMaxArity))
    throw resource_error("SIP formula has " + std::to_string(n) + " inputs; tabulation needs <= 24");
  std::vector<std::uint8_t> bits(n);
  return PartialFn::tabulate(static_cast<int>(n), [&](Input x) {
    for (std::size_t i = 0; i < n; ++i) bits[i] = (x >> i) & 1u;
    return eval_sip(f, bits);
  });
}

namespace {

std::string trim_copy(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string upper_copy(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace

SipFormula read_sip_spec(std::istream& in) {
  int d = -1;
  std::vector<long long> fanins;
  Gate bottom = Gate::And;
  std::string line;
  while (std::getline(in, line)) {
    line = trim_copy(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw usage_error("SIP spec line without '=': " + line);
    const auto key = upper_copy(trim_copy(line.substr(0, eq)));
    const auto val = trim_copy(line.substr(eq + 1));
    try {
      if (key == "D") {
        d = std::stoi(val);
      } else if (key == "FANINS") {
        std::stringstream ss(val);
        std::string tok;
        while (std::getline(ss, tok, ',')) fanins.push_back(std::stoll(trim_copy(tok)));
      } else if (key == "BOTTOM") {
        const auto g = upper_copy(val);
        if (g == "AND") bottom = Gate::And;
        else if (g == "OR") bottom = Gate::Or;
        else throw usage_error("bottom must be AND or OR, got " + val);
      } else {
        throw usage_error("unknown SIP spec key: " + key);
      }
    } catch (const std::logic_error& e) {
      if (dynamic_cast<const usage_error*>(&e)) throw;
      throw usage_error("bad SIP spec value: " + line);
    }
  }
  if (d < 1) throw usage_error("SIP spec needs d >= 1");
  if (static_cast<int>(fanins.size()) != d)
    throw usage_error("SIP spec lists " + std::to_string(fanins.size()) + " fan-ins for d=" + std::to_string(d));
  return build_sip(fanins, bottom);
}

SipFormula read_sip_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw usage_error("cannot open " + path);
  return read_sip_spec(in);
}

// ---------------------------------------------------------------------------
// Bias and OR vs CNF

BiasedProduct BiasedProduct::uniform(int n, const Rational& p) {
  if (p < 0 || p > 1) throw parameter_error("probability " + to_string(p) + " outside [0,1]");
  return BiasedProduct{std::vector<Rational>(n, p)};
}

namespace {

// Sum over x of v(x) Pr_D[x], folding one variable at a time.
Rational weighted_sum(std::vector<Rational> v, const BiasedProduct& d) {
  for (int i = d.arity() - 1; i >= 0; --i) {
    const std::size_t half = std::size_t{1} << i;
    const Rational& p = d.p1[i];
    if (p < 0 || p > 1) throw parameter_error("probability " + to_string(p) + " outside [0,1]");
    for (std::size_t x = 0; x < half; ++x) v[x] = (1 - p) * v[x] + p * v[x + half];
    v.resize(half);
  }
  return v[0];
}

void check_product(const PartialFn& f, const BiasedProduct& d) {
  if (f.arity() != d.arity()) throw usage_error("distribution arity does not match the function");
  if (f.arity() > 20) throw resource_error("exact bias needs arity <= 20");
}

}  // namespace

Rational prob_one(const PartialFn& f, const BiasedProduct& d) {
  check_product(f, d);
  std::vector<Rational> v(f.size());
  for (Input x = 0; x < f.size(); ++x) v[x] = f.at(x) == Value::One ? 1 : 0;
  return weighted_sum(std::move(v), d);
}

Rational prob_zero(const PartialFn& f, const BiasedProduct& d) {
  check_product(f, d);
  std::vector<Rational> v(f.size());
  for (Input x = 0; x < f.size(); ++x) v[x] = f.at(x) == Value::Zero ? 1 : 0;
  return weighted_sum(std::move(v), d);
}

Rational bias(const PartialFn& f, const BiasedProduct& d) {
  const Rational one = prob_one(f, d), zero = prob_zero(f, d);
  return one < zero ? one : zero;
}

Rational bias(const SipFormula& f, const BiasedProduct& d) { return bias(sip_function(f), d); }

int Cnf::width() const {
  std::size_t w = 0;
  for (const auto& c : clauses) w = std::max(w, c.size());
  return static_cast<int>(w);
}

bool Cnf::eval(Input y) const {
  for (const auto& c : clauses) {
    bool sat = false;
    for (int lit : c) {
      const int v = std::abs(lit) - 1;
      const bool bit = (y >> v) & 1u;
      if (bit == (lit > 0)) {
        sat = true;
        break;
      }
    }
    if (!sat) return false;
  }
  return true;
}

CnfGap or_cnf_gap(const Restriction& tau, const Cnf& c, const Rational& p) {
  const int n = tau.size();
  if (c.arity != n) throw usage_error("CNF arity does not match the restriction");
  if (n > 20) throw resource_error("exact OR/CNF gap needs n <= 20");
  if (p < 0 || p > 1) throw parameter_error("p outside [0,1]");
  for (const auto& cl : c.clauses)
    for (int lit : cl)
      if (lit == 0 || std::abs(lit) > n) throw usage_error("CNF literal out of range");
  Input stars = 0;
  bool fixed_one = false;
  for (int i = 0; i < n; ++i) {
    if (tau[i] == Cell::Star) stars |= Input{1} << i;
    if (tau[i] == Cell::One) fixed_one = true;
  }
  std::vector<Rational> weight(n + 1);
  for (int k = 0; k <= n; ++k) weight[k] = pow(p, k) * pow(Rational(1 - p), n - k);
  CnfGap g;
  g.disagreement = 0;
  for (Input y = 0; y < (Input{1} << n); ++y) {
    const bool or_val = fixed_one || (y & stars) != 0;
    if (or_val != c.eval(y)) g.disagreement += weight[std::popcount(y)];
  }
  const Rational p0 = fixed_one ? Rational(0) : pow(Rational(1 - p), std::popcount(stars));
  const Rational p1 = 1 - p0;
  g.bias = p0 < p1 ? p0 : p1;
  g.rp = c.width() * p;
  g.holds = g.disagreement >= g.bias - g.rp;
  return g;
}

// ---------------------------------------------------------------------------
// Restriction samplers

BlockRestriction sample_r_init(int blocks, int block_len, double x, double qprime, Rng& rng) {
  if (blocks < 0 || block_len < 1) throw usage_error("R_init needs block length >= 1");
  if (x < 0 || qprime < 0 || x + qprime > 1)
    throw parameter_error("R_init needs x, q' >= 0 and x + q' <= 1 (got x=" + std::to_string(x) +
                          ", q'=" + std::to_string(qprime) + ")");
  std::vector<Cell> cells(static_cast<std::size_t>(blocks) * block_len, Cell::One);
  for (int a = 0; a < blocks; ++a) {
    Cell* b = cells.data() + static_cast<std::size_t>(a) * block_len;
    const double u = rng.uniform();
    if (u < x) continue;
    const Cell other = u < x + qprime ? Cell::Star : Cell::Zero;
    for (;;) {
      bool hit = false;
      for (int j = 0; j < block_len; ++j) {
        b[j] = (rng.next() & 1u) ? other : Cell::One;
        hit = hit || b[j] == other;
      }
      if (hit) break;
    }
  }
  return BlockRestriction(blocks, block_len, std::move(cells));
}

InitCompletion completion_check_init(int w, const Rational& x, const Rational& qprime, const Rational& t) {
  if (w < 1 || w > 4) throw usage_error("completion check needs 1 <= w <= 4");
  for (const Rational* v : {&x, &qprime, &t})
    if (*v < 0 || *v > 1) throw parameter_error("completion check probability outside [0,1]");
  if (x + qprime > 1) throw parameter_error("x + q' exceeds 1");
  const Input size = Input{1} << w, ones = size - 1;
  const Rational share = Rational(1) / Rational(size - 1);
  std::vector<Rational> dist(size, Rational(0));
  dist[ones] += x;
  // {*,1}^w \ {1^w}: star mask s != 0; Y = 1 fills with ones, Y = 0 clears s.
  for (Input s = 1; s < size; ++s) {
    dist[ones] += qprime * share * t;
    dist[ones & ~s] += qprime * share * (1 - t);
  }
  for (Input z = 0; z < ones; ++z) dist[z] += (1 - x - qprime) * share;
  InitCompletion r;
  r.tv = 0;
  const Rational u = Rational(1) / Rational(size);
  for (const auto& p : dist) r.tv += abs(p - u);
  r.tv /= 2;
  r.residual = x + qprime * t - u;
  return r;
}

namespace {

Cell controlling(Gate g) { return g == Gate::And ? Cell::Zero : Cell::One; }
Cell yielding(Gate g) { return g == Gate::And ? Cell::One : Cell::Zero; }

Rational checked_q_a(const RLayer& L, int stars, std::size_t block) {
  const Rational q = q_a(L, stars);
  if (q < 0 || q > 1 || L.lambda + q > 1)
    throw parameter_error("q_a = " + to_string(q) + " outside [0, 1 - lambda] at block a=" + std::to_string(block) +
                          " (|S_a| = " + std::to_string(stars) + ")");
  return q;
}

}  // namespace

Rational q_a(const RLayer& L, int stars) {
  if (L.t_parent == 0) throw parameter_error("q_a needs t_{k-1} > 0");
  return (pow(Rational(1 - L.t_child), static_cast<unsigned>(stars)) - L.lambda) / L.t_parent;
}

bool in_window(const RLayer& L, int stars) { return abs(Rational(stars) - L.center) <= L.radius; }

BlockRestriction sample_r_tau(const BlockRestriction& tau, const RLayer& L, Rng& rng) {
  if (L.t_child < 0 || L.t_child > 1 || L.lambda < 0 || L.lambda > 1)
    throw parameter_error("R(tau) probabilities outside [0,1]");
  const Cell ctrl = controlling(L.gate), yield = yielding(L.gate);
  const int len = tau.block_len();
  const double t = to_double(L.t_child), lambda = to_double(L.lambda);
  std::vector<double> qcache(len + 1, -1);
  std::vector<Cell> out = tau.cells();
  for (int a = 0; a < tau.blocks(); ++a) {
    Cell* b = out.data() + static_cast<std::size_t>(a) * len;
    std::vector<int> free;
    for (int j = 0; j < len; ++j)
      if (b[j] == Cell::Star) free.push_back(j);
    if (free.empty()) continue;
    const int s = static_cast<int>(free.size());
    const Cell lifted = lift_block(b, len, L.gate);
    if (lifted == ctrl || !in_window(L, s)) {
      for (int j : free) b[j] = rng.bernoulli(t) ? ctrl : yield;
      continue;
    }
    if (qcache[s] < 0) qcache[s] = to_double(checked_q_a(L, s, a));
    const double u = rng.uniform();
    if (u < lambda) {
      for (int j : free) b[j] = yield;
      continue;
    }
    const Cell other = u < lambda + qcache[s] ? Cell::Star : ctrl;
    for (;;) {
      bool hit = false;
      for (int j : free) {
        b[j] = rng.bernoulli(t) ? other : yield;
        hit = hit || b[j] == other;
      }
      if (hit) break;
    }
  }
  return BlockRestriction(tau.blocks(), len, std::move(out));
}

Rational r_tau_probability(const BlockRestriction& tau, const BlockRestriction& rho, const RLayer& L) {
  if (tau.blocks() != rho.blocks() || tau.block_len() != rho.block_len())
    throw usage_error("R(tau) probability needs matching shapes");
  const Cell ctrl = controlling(L.gate), yield = yielding(L.gate);
  const int len = tau.block_len();
  const Rational& t = L.t_child;
  Rational total = 1;
  for (int a = 0; a < tau.blocks(); ++a) {
    int s = 0, n_ctrl = 0, n_star = 0, n_yield = 0;
    for (int j = 0; j < len; ++j) {
      const Cell c = tau.at(a, j), r = rho.at(a, j);
      if (c != Cell::Star) {
        if (r != c) return 0;
        continue;
      }
      ++s;
      if (r == ctrl) ++n_ctrl;
      else if (r == Cell::Star) ++n_star;
      else ++n_yield;
    }
    if (s == 0) continue;
    const Cell lifted = lift_block(tau.cells().data() + static_cast<std::size_t>(a) * len, len, L.gate);
    const Rational atom = pow(t, n_ctrl + n_star) * pow(Rational(1 - t), n_yield);
    if (lifted == ctrl || !in_window(L, s)) {
      if (n_star) return 0;
      total *= atom;
      continue;
    }
    const Rational q = checked_q_a(L, s, a);
    const Rational excl = 1 - pow(Rational(1 - t), s);
    if (n_yield == s) total *= L.lambda;
    else if (n_ctrl == 0) total *= q * atom / excl;
    else if (n_star == 0) total *= (1 - L.lambda - q) * atom / excl;
    else return 0;
    if (total == 0) return 0;
  }
  return total;
}

Rational to_rational(const Real& v) {
  const double d = v.convert_to<double>();
  if (!std::isfinite(d)) throw parameter_error("parameter " + fmt(v) + " is not a finite double");
  return Rational(d);
}

RLayer sip_layer(const SipParams& p, int k) {
  if (k < 2 || k > p.d - 1) throw usage_error("R(tau) layers run over 2 <= k <= d-1");
  RLayer L;
  L.gate = ((p.d - k) % 2 == 0) ? Gate::And : Gate::Or;
  L.t_child = to_rational(p.t[k]);
  L.t_parent = to_rational(p.t[k - 1]);
  L.lambda = to_rational(p.lambda);
  L.center = to_rational(p.q * p.w);
  L.radius = to_rational(mp::pow(p.w, Real(p.beta(k))));
  return L;
}

RLayer qcma_layer(const QcmaParams& p, int i, int kind) {
  RLayer L;
  if (kind == 1) {
    if (i < 1 || i > p.d - 1) throw usage_error("rho_{i,1} layers run over 1 <= i <= d-1");
    L.gate = Gate::And;
    L.t_child = to_rational(p.t[2 * i + 2]);
    L.t_parent = to_rational(p.t[2 * i + 1]);
    L.lambda = to_rational(p.lambdai[i]);
    L.center = to_rational(p.q * p.f[i]);
    L.radius = to_rational(mp::pow(p.w, Real(p.beta(2 * i + 2))));
  } else if (kind == 2) {
    if (i < 1 || i > p.d) throw usage_error("rho_{i,2} layers run over 1 <= i <= d");
    L.gate = Gate::Or;
    L.t_child = to_rational(p.t[2 * i + 1]);
    L.t_parent = to_rational(p.t[2 * i]);
    L.lambda = to_rational(p.lambda);
    L.center = to_rational(p.q * p.w);
    L.radius = to_rational(mp::pow(p.w, Real(p.beta(2 * i + 1))));
  } else {
    throw usage_error("restriction kind must be 1 or 2");
  }
  return L;
}

BlockRestriction sample_rho_qcma(int i, int kind, const BlockRestriction& tau, const QcmaParams& p, Rng& rng) {
  if (kind == 1 && i == p.d)
    return sample_r_init(tau.blocks(), tau.block_len(), p.lambdai[i].convert_to<double>(),
                         p.qi[i].convert_to<double>(), rng);
  return sample_r_tau(tau, qcma_layer(p, i, kind), rng);
}

// ---------------------------------------------------------------------------
// Chain completion

namespace {

std::vector<std::size_t> star_positions(const std::vector<Cell>& v) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] == Cell::Star) s.push_back(i);
  return s;
}

// Calls fn(rho) for every filling of the stars of base with {0,1,*}.
template <class F>
void each_filling(const std::vector<Cell>& base, F&& fn) {
  const auto stars = star_positions(base);
  std::vector<int> digit(stars.size(), 0);
  std::vector<Cell> cur = base;
  static constexpr Cell kCells[3] = {Cell::Zero, Cell::One, Cell::Star};
  for (;;) {
    for (std::size_t i = 0; i < stars.size(); ++i) cur[stars[i]] = kCells[digit[i]];
    fn(cur);
    std::size_t i = 0;
    while (i < digit.size() && digit[i] == 2) digit[i++] = 0;
    if (i == digit.size()) return;
    ++digit[i];
  }
}

Cell resolve(Cell own, Cell parent) {
  if (own != Cell::Star) return own;
  if (parent == Cell::Star) throw std::logic_error("completion reached an unfilled star");
  return parent;
}

}  // namespace

ChainCompletion chain_completion_check(const BlockRestriction& sigma, const RLayer& first, int outer_len,
                                       const RLayer& second, const Rational& t_top) {
  if (first.gate == second.gate) throw usage_error("chain layers must alternate gate kinds");
  if (outer_len < 1 || sigma.blocks() % outer_len != 0) throw usage_error("outer block length must divide the gates");
  const auto stars0 = star_positions(sigma.cells());
  if (stars0.size() > 12) throw resource_error("chain enumeration needs at most 12 free positions");
  const int len0 = sigma.block_len();
  const Cell ctrl0 = controlling(first.gate), yield2 = yielding(second.gate);

  std::vector<Rational> dist(std::size_t{1} << stars0.size(), Rational(0));
  ChainCompletion out;
  each_filling(sigma.cells(), [&](const std::vector<Cell>& r1) {
    const BlockRestriction rho1(sigma.blocks(), len0, r1);
    const Rational p1 = r_tau_probability(sigma, rho1, first);
    if (p1 == 0) return;
    const BlockRestriction sig2(sigma.blocks() / outer_len, outer_len, lift(rho1, first.gate));
    each_filling(sig2.cells(), [&](const std::vector<Cell>& r2) {
      const BlockRestriction rho2(sig2.blocks(), outer_len, r2);
      const Rational p2 = r_tau_probability(sig2, rho2, second);
      if (p2 == 0) return;
      const auto top = lift(rho2, second.gate);
      const auto stars2 = star_positions(top);
      for (Input y = 0; y < (Input{1} << stars2.size()); ++y) {
        std::vector<Cell> y2 = top;
        Rational py = 1;
        for (std::size_t b = 0; b < stars2.size(); ++b) {
          const bool hit = (y >> b) & 1u;
          y2[stars2[b]] = hit ? yield2 : (yield2 == Cell::One ? Cell::Zero : Cell::One);
          py *= hit ? t_top : Rational(1 - t_top);
        }
        if (py == 0) continue;
        std::vector<Cell> y1(r2.size());
        for (std::size_t j = 0; j < r2.size(); ++j) y1[j] = resolve(r2[j], y2[j / outer_len]);
        Input key = 0;
        for (std::size_t b = 0; b < stars0.size(); ++b)
          if (resolve(r1[stars0[b]], y1[stars0[b] / len0]) == ctrl0) key |= Input{1} << b;
        dist[key] += p1 * p2 * py;
        ++out.atoms;
      }
    });
  });
  out.tv = 0;
  const Rational& t = first.t_child;
  for (Input key = 0; key < dist.size(); ++key) {
    const int c = std::popcount(key);
    const Rational target = pow(t, c) * pow(Rational(1 - t), static_cast<unsigned>(stars0.size()) - c);
    out.tv += abs(dist[key] - target);
  }
  out.tv /= 2;
  return out;
}

// ---------------------------------------------------------------------------
// Typicality

TypicalReport is_typical(const std::vector<Cell>& tau, const SipFormula& f, int k, const TypicalWindow& win) {
  if (k < 3 || k > f.depth()) throw usage_error("typicality needs 3 <= k <= depth");
  if (tau.size() != f.count(k)) throw usage_error("tau does not cover A_k");
  TypicalReport r;
  const auto lift1 = lift(BlockRestriction(static_cast<int>(f.count(k - 1)), f.fanins[k - 1], tau), f.gate_at(k - 1));
  const BlockRestriction hat(static_cast<int>(f.count(k - 2)), f.fanins[k - 2], lift1);
  for (int a = 0; a < hat.blocks(); ++a) {
    int c = 0;
    for (int j = 0; j < hat.block_len(); ++j) c += hat.at(a, j) == Cell::Star;
    if (abs(Rational(c) - win.c1_center) > win.c1_radius) r.cond1_failures.emplace_back(a, c);
  }
  const auto lift2 = lift(hat, f.gate_at(k - 2));
  const BlockRestriction hat2(static_cast<int>(f.count(k - 3)), f.fanins[k - 3], lift2);
  for (int a = 0; a < hat2.blocks(); ++a) {
    int c = 0;
    for (int j = 0; j < hat2.block_len(); ++j) c += hat2.at(a, j) == Cell::Star;
    if (Rational(c) < win.c2_lo || Rational(c) > win.c2_hi) r.cond2_failures.emplace_back(a, c);
  }
  const auto lift3 = lift(hat2, f.gate_at(k - 3));
  r.upper_undetermined = std::all_of(lift3.begin(), lift3.end(), [](Cell c) { return c == Cell::Star; });
  r.cond1 = r.cond1_failures.empty();
  r.cond2 = r.cond2_failures.empty();
  r.typical = r.cond1 && r.cond2;
  return r;
}

TypicalWindow sip_typical_window(const SipParams& p, int k) {
  if (k < 3 || k > p.d) throw usage_error("typicality needs 3 <= k <= d");
  TypicalWindow w;
  w.c1_center = to_rational(p.q * p.w);
  w.c1_radius = to_rational(mp::pow(p.w, Real(p.beta(k - 1))));
  w.c2_hi = to_rational(p.fanins[k - 3]);
  w.c2_lo = to_rational(p.fanins[k - 3] - mp::pow(p.w, Real(4) / 5));
  return w;
}

namespace {

constexpr std::uint64_t kTypicalStream = 0x54590001;
constexpr std::uint64_t kUnbiasedStream = 0x54590002;
constexpr std::uint64_t kTailStream = 0x54590003;

double freq_stderr(double p, std::uint64_t n) { return n ? std::sqrt(p * (1 - p) / static_cast<double>(n)) : 0; }

}  // namespace

RateEstimate typicality_rate_mc(const TauSampler& sampler, const TypicalCheck& check, std::uint64_t trials,
                                std::uint64_t seed, int jobs) {
  struct Counts {
    std::uint64_t typical = 0, c1 = 0, c2 = 0;
  };
  std::vector<Counts> parts(static_cast<std::size_t>(std::max(jobs, 1)));
  parallel_chunks(trials, jobs, [&](std::size_t b, std::size_t e, std::size_t chunk) {
    Counts c;
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(derive_seed(seed, kTypicalStream, i));
      const auto rep = check(sampler(rng));
      c.typical += rep.typical;
      c.c1 += !rep.cond1;
      c.c2 += !rep.cond2;
    }
    parts[chunk] = c;
  });
  RateEstimate r;
  r.trials = trials;
  for (const auto& c : parts) {
    r.typical += c.typical;
    r.cond1_failures += c.c1;
    r.cond2_failures += c.c2;
  }
  if (trials) {
    r.rate = static_cast<double>(r.typical) / static_cast<double>(trials);
    r.cond1_rate = static_cast<double>(r.cond1_failures) / static_cast<double>(trials);
  }
  r.stderr_ = freq_stderr(r.rate, trials);
  r.cond1_stderr = freq_stderr(r.cond1_rate, trials);
  return r;
}

ToyTypicality toy_typicality(int blocks, const Rational& s) {
  if (blocks < 1) throw usage_error("toy typicality needs at least one block");
  if (s <= 0 || s > 1) throw parameter_error("star probability must be in (0,1]");
  ToyTypicality t;
  t.formula = build_sip({1, blocks, 2});
  t.s = s;
  const double sb = to_double(s) * blocks;
  t.window.c1_center = s * blocks;
  t.window.c1_radius = Rational(std::pow(sb, 2.0 / 3));
  // w = (sB)^2, so w^{4/5} = (sB)^{8/5}; w_0 = 1.
  t.window.c2_hi = 1;
  t.window.c2_lo = 1 - Rational(std::pow(sb, 8.0 / 5));
  return t;
}

RateEstimate toy_typicality_mc(int blocks, const Rational& s, std::uint64_t trials, std::uint64_t seed, int jobs) {
  const auto toy = toy_typicality(blocks, s);
  const double sd = to_double(s);
  return typicality_rate_mc(
      [&](Rng& rng) { return sample_r_init(blocks, 2, 0.0, sd, rng).cells(); },
      [&](const std::vector<Cell>& tau) { return is_typical(tau, toy.formula, 3, toy.window); }, trials, seed, jobs);
}

Rational toy_cond1_failure_exact(int blocks, const Rational& s) {
  const auto toy = toy_typicality(blocks, s);
  Rational total = 0;
  Integer binom = 1;
  for (int j = 0; j <= blocks; ++j) {
    if (j > 0) binom = binom * (blocks - j + 1) / j;
    if (abs(Rational(j) - toy.window.c1_center) > toy.window.c1_radius)
      total += Rational(binom) * pow(s, j) * pow(Rational(1 - s), blocks - j);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Projection chains

PartialFn projection_chain(const PartialFn& f, const std::vector<BlockRestriction>& restrictions) {
  PartialFn g = f;
  for (std::size_t i = restrictions.size(); i-- > 0;) {
    if (g.arity() != restrictions[i].size())
      throw usage_error("projection chain stage rho(" + std::to_string(i + 2) + ") covers " +
                        std::to_string(restrictions[i].size()) + " variables, function has " +
                        std::to_string(g.arity()));
    g = project(g, restrictions[i]);
  }
  return g;
}

Input complete_assignment(const std::vector<BlockRestriction>& restrictions, Input y) {
  Input cur = y;
  for (std::size_t s = 0; s < restrictions.size(); ++s) {
    const auto& rho = restrictions[s];
    if (rho.size() > 32) throw usage_error("assignment exceeds 32 variables");
    if (s + 1 < restrictions.size() && restrictions[s + 1].blocks() != rho.size())
      throw usage_error("projection chain stage rho(" + std::to_string(s + 3) + ") does not match rho(" +
                        std::to_string(s + 2) + ")");
    Input next = 0;
    for (int i = 0; i < rho.blocks(); ++i)
      for (int j = 0; j < rho.block_len(); ++j) {
        const Cell c = rho.at(i, j);
        const bool bit = c == Cell::Star ? ((cur >> i) & 1u) : c == Cell::One;
        if (bit) next |= Input{1} << (i * rho.block_len() + j);
      }
    cur = next;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Bias of the projected top OR

UnbiasedToy unbiased_toy(int w) {
  if (w < 2) throw usage_error("toy w must be at least 2");
  UnbiasedToy u;
  u.w = w;
  const double q = 1 / std::sqrt(static_cast<double>(w));
  int w0 = 1;
  while (std::pow(1 - q, q * w0) > 0.5) ++w0;
  u.w0 = w0;
  u.t = Rational(q);
  u.qprime = Rational(q);
  u.x = Rational(1 / (w0 * std::pow(static_cast<double>(w), 0.25)));
  return u;
}

Rational or_projection_bias(const std::vector<Cell>& lifted, const Rational& t) {
  int stars = 0;
  for (Cell c : lifted) {
    if (c == Cell::One) return 0;
    stars += c == Cell::Star;
  }
  if (stars == 0) return 0;
  const Rational p0 = pow(Rational(1 - t), stars);
  const Rational p1 = 1 - p0;
  return p0 < p1 ? p0 : p1;
}

MeanEstimate unbiasedor_mc(int w, std::uint64_t trials, std::uint64_t seed, int jobs) {
  const auto toy = unbiased_toy(w);
  const double x = to_double(toy.x), qp = to_double(toy.qprime);
  // Per-trial values summed in index order so the mean does not depend on jobs.
  std::vector<double> vals(trials);
  parallel_chunks(trials, jobs, [&](std::size_t b, std::size_t e, std::size_t) {
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(derive_seed(seed, kUnbiasedStream, i));
      const auto rho = sample_r_init(toy.w0, 2, x, qp, rng);
      vals[i] = to_double(or_projection_bias(lift(rho, Gate::And), toy.t));
    }
  });
  MeanEstimate m;
  m.trials = trials;
  if (!trials) return m;
  double sum = 0, sq = 0;
  for (double v : vals) sum += v;
  m.mean = sum / static_cast<double>(trials);
  for (double v : vals) sq += (v - m.mean) * (v - m.mean);
  if (trials > 1) m.stderr_ = std::sqrt(sq / static_cast<double>(trials - 1) / static_cast<double>(trials));
  return m;
}

TailEstimate projected_dt_tail_mc(const PartialFn& f, int block_len, double x, double qprime, int s,
                                  std::uint64_t trials, std::uint64_t seed, int jobs) {
  if (block_len < 1 || f.arity() % block_len != 0) throw usage_error("block length must divide the arity");
  const int blocks = f.arity() / block_len;
  std::vector<std::uint64_t> parts(static_cast<std::size_t>(std::max(jobs, 1)), 0);
  parallel_chunks(trials, jobs, [&](std::size_t b, std::size_t e, std::size_t chunk) {
    std::uint64_t c = 0;
    for (std::size_t i = b; i < e; ++i) {
      Rng rng(derive_seed(seed, kTailStream, i));
      c += dt_depth(project(f, sample_r_init(blocks, block_len, x, qprime, rng))) > s;
    }
    parts[chunk] = c;
  });
  TailEstimate t;
  t.trials = trials;
  for (auto c : parts) t.exceed += c;
  if (trials) t.rate = static_cast<double>(t.exceed) / static_cast<double>(trials);
  t.stderr_ = freq_stderr(t.rate, trials);
  return t;
}

}  // namespace qproj
