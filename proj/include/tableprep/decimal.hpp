#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace tableprep {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// Exact base-10 number: value = mantissa * 10^-scale.
///
/// Always normalized (no trailing zero digits in the fractional part, and
/// zero has scale 0), so structural equality is numeric equality.
class Decimal {
 public:
  Decimal() = default;
  explicit Decimal(std::int64_t integer) : mantissa_(integer) {}

  /// Accepts `[+-]?(digits[.digits*] | .digits)`. No exponent, no
  /// separators, no surrounding whitespace.
  static std::optional<Decimal> parse(std::string_view text);

  /// Shortest decimal that round-trips to `value`. Non-finite input yields
  /// nullopt.
  static std::optional<Decimal> from_double(double value);

  /// Canonical rendering: no leading '+', no trailing fractional zeros,
  /// never "-0".
  std::string to_string() const;
  double to_double() const;
  Rational to_rational() const;

  bool is_zero() const { return mantissa_ == 0; }

  friend bool operator==(const Decimal&, const Decimal&) = default;
  friend std::strong_ordering operator<=>(const Decimal& a, const Decimal& b);

 private:
  Decimal(BigInt mantissa, unsigned scale);
  void normalize();

  BigInt mantissa_ = 0;
  unsigned scale_ = 0;
};

/// Decimal rendering of a rational, exact when the denominator has only 2
/// and 5 as prime factors, otherwise rounded to `max_digits` fractional
/// digits.
std::string rational_to_decimal_string(const Rational& value, unsigned max_digits = 17);

/// "p/q" (or "p" when q == 1).
std::string rational_to_fraction_string(const Rational& value);

/// Parses a decimal literal or a "p/q" fraction.
std::optional<Rational> parse_rational(std::string_view text);

}  // namespace tableprep
