#pragma once

#include <compare>
#include <cstdint>
#include <numeric>
#include <string>

namespace homsusp {

/// Exact rational number with 64-bit numerator/denominator, used for lattice
/// bookkeeping where floating-point comparisons would be ambiguous.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  /// Accepts "p/q", integers, or finite decimals ("0.125").
  static Rational parse(const std::string& text);
  /// Exact conversion of a double whose binary expansion fits (dyadic values),
  /// otherwise the best approximation with denominator <= max_den.
  static Rational from_double(double value, std::int64_t max_den = 1 << 20);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  std::string str() const;

  friend Rational operator+(const Rational& a, const Rational& b);
  friend Rational operator-(const Rational& a, const Rational& b);
  friend Rational operator*(const Rational& a, const Rational& b);
  friend Rational operator/(const Rational& a, const Rational& b);
  friend bool operator==(const Rational& a, const Rational& b) = default;
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b);

  std::int64_t floor() const;
  std::int64_t ceil() const;

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace homsusp
