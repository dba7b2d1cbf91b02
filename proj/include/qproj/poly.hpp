#pragma once

#include <map>
#include <string>

#include "qproj/boolfn.hpp"
#include "qproj/rational.hpp"

namespace qproj {

// ZeroOne: monomial x_S = prod_{i in S} x_i over x in {0,1}^n.
// PlusMinus: monomial y_S = prod_{i in S} y_i over y in {1,-1}^n.
// Points are packed inputs in both cases; bit i set means x_i = 1, i.e. y_i = -1.
enum class Basis { ZeroOne, PlusMinus };

class MultilinearPoly {
 public:
  MultilinearPoly() = default;
  MultilinearPoly(int n, Basis basis);

  int arity() const { return n_; }
  Basis basis() const { return basis_; }
  const std::map<Input, Rational>& coeffs() const { return coeffs_; }

  void add(Input monomial, const Rational& c);
  Rational coeff(Input monomial) const;
  // Largest monomial size with a nonzero coefficient; 0 for the zero polynomial.
  int degree() const;
  Rational eval(Input point) const;
  MultilinearPoly to_basis(Basis target) const;
  std::string str() const;

  bool operator==(const MultilinearPoly&) const = default;

 private:
  int n_ = 0;
  Basis basis_ = Basis::ZeroOne;
  std::map<Input, Rational> coeffs_;
};

}  // namespace qproj
