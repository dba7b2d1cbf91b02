#pragma once

#include <string>

#include <boost/multiprecision/gmp.hpp>

namespace qproj {

using Rational = boost::multiprecision::mpq_rational;
using Integer = boost::multiprecision::mpz_int;

// Parses "3", "-2/5", "0.125" or "1e-3" into an exact rational.
Rational parse_rational(const std::string& text);

std::string to_string(const Rational& r);

double to_double(const Rational& r);

Rational pow(const Rational& base, unsigned exponent);

}  // namespace qproj
