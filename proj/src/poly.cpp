#include "qproj/poly.hpp"

#include <bit>
#include <sstream>

namespace qproj {

MultilinearPoly::MultilinearPoly(int n, Basis basis) : n_(n), basis_(basis) { check_arity(n); }

void MultilinearPoly::add(Input monomial, const Rational& c) {
  if (n_ < 32 && (monomial >> n_) != 0) throw usage_error("monomial outside polynomial arity");
  if (c == 0) return;
  auto [it, inserted] = coeffs_.try_emplace(monomial, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) coeffs_.erase(it);
  }
}

Rational MultilinearPoly::coeff(Input monomial) const {
  auto it = coeffs_.find(monomial);
  return it == coeffs_.end() ? Rational(0) : it->second;
}

int MultilinearPoly::degree() const {
  int d = 0;
  for (const auto& [m, c] : coeffs_) d = std::max(d, std::popcount(m));
  return d;
}

Rational MultilinearPoly::eval(Input point) const {
  Rational v = 0;
  for (const auto& [m, c] : coeffs_) {
    if (basis_ == Basis::ZeroOne) {
      if ((m & point) == m) v += c;
    } else {
      v += (std::popcount(m & point) & 1) ? Rational(-c) : c;
    }
  }
  return v;
}

MultilinearPoly MultilinearPoly::to_basis(Basis target) const {
  if (target == basis_) return *this;
  MultilinearPoly out(n_, target);
  for (const auto& [s, c] : coeffs_) {
    // x_i = (1 - y_i)/2 and y_i = 1 - 2 x_i; expand over subsets T of S.
    const int k = std::popcount(s);
    const Rational scale = target == Basis::PlusMinus ? Rational(1, Integer(1) << k) : Rational(1);
    const int step = target == Basis::PlusMinus ? -1 : -2;
    for (Input t = s;; t = (t - 1) & s) {
      Rational term = c * scale;
      const int tk = std::popcount(t);
      term *= pow(Rational(step), static_cast<unsigned>(tk));
      out.add(t, term);
      if (t == 0) break;
    }
  }
  return out;
}

std::string MultilinearPoly::str() const {
  if (coeffs_.empty()) return "0";
  std::ostringstream os;
  const char var = basis_ == Basis::ZeroOne ? 'x' : 'y';
  bool first = true;
  for (const auto& [m, c] : coeffs_) {
    if (!first) os << " + ";
    first = false;
    os << c.str();
    for (int i = 0; i < n_; ++i)
      if ((m >> i) & 1u) os << '*' << var << (i + 1);
  }
  return os.str();
}

}  // namespace qproj
