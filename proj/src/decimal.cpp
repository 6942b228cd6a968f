#include "tableprep/decimal.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace tableprep {

namespace {

BigInt pow10(unsigned exponent) {
  BigInt result = 1;
  for (unsigned i = 0; i < exponent; ++i) {
    result *= 10;
  }
  return result;
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

Decimal::Decimal(BigInt mantissa, unsigned scale) : mantissa_(std::move(mantissa)), scale_(scale) {
  normalize();
}

void Decimal::normalize() {
  if (mantissa_ == 0) {
    scale_ = 0;
    return;
  }
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
}

std::optional<Decimal> Decimal::parse(std::string_view text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
    negative = text[pos] == '-';
    ++pos;
  }
  std::string digits;
  std::size_t int_digits = 0;
  while (pos < text.size() && is_digit(text[pos])) {
    digits.push_back(text[pos++]);
    ++int_digits;
  }
  unsigned frac_digits = 0;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && is_digit(text[pos])) {
      digits.push_back(text[pos++]);
      ++frac_digits;
    }
  }
  if (pos != text.size() || digits.empty()) {
    return std::nullopt;
  }
  if (int_digits == 0 && frac_digits == 0) {
    return std::nullopt;
  }
  // cpp_int reads a leading 0 as an octal prefix
  const auto first = digits.find_first_not_of('0');
  BigInt mantissa(first == std::string::npos ? std::string("0") : digits.substr(first));
  if (negative) {
    mantissa = -mantissa;
  }
  return Decimal(std::move(mantissa), frac_digits);
}

std::optional<Decimal> Decimal::from_double(double value) {
  if (!std::isfinite(value)) {
    return std::nullopt;
  }
  std::array<char, 512> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
  if (ec != std::errc{}) {
    return std::nullopt;
  }
  return parse(std::string_view(buf.data(), static_cast<std::size_t>(end - buf.data())));
}

std::string Decimal::to_string() const {
  const bool negative = mantissa_ < 0;
  std::string digits = (negative ? BigInt(-mantissa_) : mantissa_).str();
  if (scale_ > 0) {
    if (digits.size() <= scale_) {
      digits.insert(0, scale_ - digits.size() + 1, '0');
    }
    digits.insert(digits.size() - scale_, 1, '.');
  }
  return negative ? "-" + digits : digits;
}

double Decimal::to_double() const { return std::stod(to_string()); }

Rational Decimal::to_rational() const { return Rational(mantissa_, pow10(scale_)); }

std::strong_ordering operator<=>(const Decimal& a, const Decimal& b) {
  const unsigned scale = std::max(a.scale_, b.scale_);
  const BigInt lhs = a.mantissa_ * pow10(scale - a.scale_);
  const BigInt rhs = b.mantissa_ * pow10(scale - b.scale_);
  if (lhs < rhs) return std::strong_ordering::less;
  if (lhs > rhs) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string rational_to_decimal_string(const Rational& value, unsigned max_digits) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  const bool negative = value < 0;
  BigInt num = numerator(value);
  if (negative) num = -num;
  const BigInt den = denominator(value);

  BigInt whole = num / den;
  BigInt rem = num % den;
  std::string frac;
  while (rem != 0 && frac.size() < max_digits) {
    rem *= 10;
    frac.push_back(static_cast<char>('0' + static_cast<int>(rem / den)));
    rem %= den;
  }
  if (rem != 0) {
    // round half up on the truncated tail
    if (rem * 2 >= den) {
      int i = static_cast<int>(frac.size()) - 1;
      for (; i >= 0; --i) {
        if (frac[static_cast<std::size_t>(i)] == '9') {
          frac[static_cast<std::size_t>(i)] = '0';
        } else {
          ++frac[static_cast<std::size_t>(i)];
          break;
        }
      }
      if (i < 0) whole += 1;
    }
  }
  while (!frac.empty() && frac.back() == '0') frac.pop_back();
  std::string out = whole.str();
  if (!frac.empty()) out += "." + frac;
  if (negative && out != "0") out.insert(0, "-");
  return out;
}

std::string rational_to_fraction_string(const Rational& value) {
  using boost::multiprecision::denominator;
  using boost::multiprecision::numerator;
  if (denominator(value) == 1) {
    return numerator(value).str();
  }
  return numerator(value).str() + "/" + denominator(value).str();
}

std::optional<Rational> parse_rational(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    auto d = Decimal::parse(text);
    if (!d) return std::nullopt;
    return d->to_rational();
  }
  auto num = Decimal::parse(text.substr(0, slash));
  auto den = Decimal::parse(text.substr(slash + 1));
  if (!num || !den || den->is_zero()) return std::nullopt;
  return num->to_rational() / den->to_rational();
}

}  // namespace tableprep
