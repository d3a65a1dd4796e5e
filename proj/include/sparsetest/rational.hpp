#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>

namespace sparsetest {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Doubles are dyadic rationals; this conversion is exact.
inline Rational rational_from_double(double x) { return Rational(x); }

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

// Natural log of a positive big integer, usable far beyond double range.
inline double log_bigint(const BigInt& n) {
  if (n <= 0) return -std::numeric_limits<double>::infinity();
  const std::size_t bits = boost::multiprecision::msb(n);
  if (bits < 900) return std::log(n.convert_to<double>());
  const BigInt top = n >> static_cast<int>(bits - 52);
  return std::log(top.convert_to<double>()) + static_cast<double>(bits - 52) * std::log(2.0);
}

// log |q| for a nonzero rational of any magnitude.
inline double log_abs_rational(const Rational& q) {
  using boost::multiprecision::abs;
  const BigInt num = abs(boost::multiprecision::numerator(q));
  const BigInt den = boost::multiprecision::denominator(q);
  return log_bigint(num) - log_bigint(den);
}

inline BigInt factorial_big(unsigned n) {
  BigInt f = 1;
  for (unsigned i = 2; i <= n; ++i) f *= i;
  return f;
}

inline Rational pow_rational(const Rational& base, unsigned e) {
  Rational acc = 1, b = base;
  while (e) {
    if (e & 1u) acc *= b;
    b *= b;
    e >>= 1u;
  }
  return acc;
}

}  // namespace sparsetest
