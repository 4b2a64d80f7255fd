//===- Rational.h - Exact rational arithmetic for strides -----*- C++ -*-===//
//
// Access strides and connection scaling factors are kept as reduced
// fractions so ratios like 1/2 survive analysis without rounding.
//
//===----------------------------------------------------------------------===//

#pragma once

#include <cstdint>
#include <numeric>
#include <string>

namespace hida {

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  constexpr Rational(std::int64_t n) : num(n), den(1) {}
  constexpr Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
    reduce();
  }

  constexpr void reduce() {
    if (den < 0) {
      num = -num;
      den = -den;
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    if (num == 0)
      den = 1;
  }

  constexpr bool isInteger() const { return den == 1; }
  constexpr bool isZero() const { return num == 0; }

  constexpr Rational operator*(const Rational &o) const {
    return Rational(num * o.num, den * o.den);
  }
  constexpr Rational operator/(const Rational &o) const {
    return Rational(num * o.den, den * o.num);
  }
  constexpr Rational operator+(const Rational &o) const {
    return Rational(num * o.den + o.num * den, den * o.den);
  }
  constexpr Rational operator-(const Rational &o) const {
    return Rational(num * o.den - o.num * den, den * o.den);
  }
  constexpr Rational abs() const { return Rational(num < 0 ? -num : num, den); }

  // Smallest integer >= *this; used when scaled constraints land between
  // integers.
  constexpr std::int64_t ceil() const {
    if (num >= 0)
      return (num + den - 1) / den;
    return -((-num) / den);
  }

  double toDouble() const { return double(num) / double(den); }

  friend constexpr bool operator==(const Rational &, const Rational &) =
      default;
};

inline std::string toString(const Rational &r) {
  if (r.den == 1)
    return std::to_string(r.num);
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

} // namespace hida
