#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>
#include <string_view>

namespace bratteli {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt numerator_of(const Rational& q) { return boost::multiprecision::numerator(q); }
inline BigInt denominator_of(const Rational& q) { return boost::multiprecision::denominator(q); }

/// "num/den" in lowest terms; the denominator is always printed.
std::string to_string(const Rational& q);
std::string to_string(const BigInt& z);

double to_double(const Rational& q);

/// Accepts "a/b", "a" or a decimal such as "0.25" (converted exactly).
Rational parse_rational(std::string_view text);

inline Rational abs_value(const Rational& q) { return q < 0 ? Rational(-q) : q; }

BigInt factorial(unsigned n);
BigInt pow_big(const BigInt& base, unsigned exponent);

}  // namespace bratteli
