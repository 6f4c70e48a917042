#pragma once

// Arithmetic modes. Every algorithm in the library is a template over the
// scalar type; `Rational` gives exact answers, `double` gives fast ones.

#include <boost/multiprecision/gmp.hpp>

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <string>
#include <string_view>

#include "delegatebox/error.hpp"

namespace delegatebox {

using Integer = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                              boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;

enum class ArithmeticMode { Exact, Float };

inline constexpr std::string_view to_string(ArithmeticMode mode) {
  return mode == ArithmeticMode::Exact ? "exact" : "float";
}

template <class T>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr ArithmeticMode mode = ArithmeticMode::Exact;
  static constexpr double tolerance = 0.0;
  static constexpr double sum_tolerance = 0.0;
};

template <>
struct ScalarTraits<double> {
  static constexpr ArithmeticMode mode = ArithmeticMode::Float;
  static constexpr double tolerance = 1e-9;
  static constexpr double sum_tolerance = 1e-12;
};

template <class T>
concept Scalar = requires { ScalarTraits<T>::mode; };

template <Scalar T>
inline constexpr bool is_exact_v = ScalarTraits<T>::mode == ArithmeticMode::Exact;

template <Scalar T>
T tolerance() {
  return T(ScalarTraits<T>::tolerance);
}

/// a >= b, up to the mode's tolerance (zero in exact mode).
template <Scalar T>
bool approx_ge(const T& a, const T& b) {
  if constexpr (is_exact_v<T>) {
    return a >= b;
  } else {
    return a >= b - ScalarTraits<T>::tolerance * std::max(1.0, std::abs(b));
  }
}

template <Scalar T>
bool approx_eq(const T& a, const T& b) {
  return approx_ge(a, b) && approx_ge(b, a);
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }
inline double to_double(double d) { return d; }

namespace detail {

inline Integer pow10(unsigned k) {
  Integer r = 1;
  for (unsigned i = 0; i < k; ++i) r *= 10;
  return r;
}

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (ch < '0' || ch > '9') return false;
  return true;
}

// Parses [+-]digits[.digits][(e|E)[+-]digits] exactly.
inline Rational parse_decimal(std::string_view text) {
  std::string_view s = text;
  bool negative = false;
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    std::string_view exp_text = s.substr(e + 1);
    bool exp_negative = false;
    if (!exp_text.empty() && (exp_text.front() == '+' || exp_text.front() == '-')) {
      exp_negative = exp_text.front() == '-';
      exp_text.remove_prefix(1);
    }
    if (!all_digits(exp_text) || exp_text.size() > 6)
      throw Error(ErrorKind::ParseError, "bad exponent in '" + std::string(text) + "'");
    exponent = std::stol(std::string(exp_text));
    if (exp_negative) exponent = -exponent;
    s = s.substr(0, e);
  }
  std::string digits;
  long frac_digits = 0;
  if (auto dot = s.find('.'); dot != std::string_view::npos) {
    std::string_view whole = s.substr(0, dot);
    std::string_view frac = s.substr(dot + 1);
    if ((!whole.empty() && !all_digits(whole)) || (!frac.empty() && !all_digits(frac)) ||
        (whole.empty() && frac.empty()))
      throw Error(ErrorKind::ParseError, "bad decimal '" + std::string(text) + "'");
    digits = std::string(whole) + std::string(frac);
    frac_digits = static_cast<long>(frac.size());
  } else {
    if (!all_digits(s)) throw Error(ErrorKind::ParseError, "bad number '" + std::string(text) + "'");
    digits = std::string(s);
  }
  // A leading 0 would make the integer parser read octal.
  digits.erase(0, std::min(digits.find_first_not_of('0'), digits.size() - 1));
  Rational value{Integer(digits)};
  long shift = exponent - frac_digits;
  if (shift > 0) value *= Rational(pow10(static_cast<unsigned>(shift)));
  if (shift < 0) value /= Rational(pow10(static_cast<unsigned>(-shift)));
  return negative ? Rational(-value) : value;
}

}  // namespace detail

/// Parses "3", "0.25", "1e-3" or "1/3".
template <Scalar T>
T parse_scalar(std::string_view text) {
  auto slash = text.find('/');
  if constexpr (is_exact_v<T>) {
    if (slash == std::string_view::npos) return detail::parse_decimal(text);
    Rational num = detail::parse_decimal(text.substr(0, slash));
    Rational den = detail::parse_decimal(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorKind::ParseError, "zero denominator in '" + std::string(text) + "'");
    return num / den;
  } else {
    auto parse_one = [&](std::string_view s) {
      double out = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw Error(ErrorKind::ParseError, "bad number '" + std::string(text) + "'");
      return out;
    };
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    if (slash == std::string_view::npos) return parse_one(text);
    double den = parse_one(text.substr(slash + 1));
    if (den == 0) throw Error(ErrorKind::ParseError, "zero denominator in '" + std::string(text) + "'");
    return parse_one(text.substr(0, slash)) / den;
  }
}

/// Lossless text form: "p/q" (or "p") for rationals, shortest round-trip decimal for doubles.
inline std::string to_string(const Rational& r) {
  Integer num = boost::multiprecision::numerator(r);
  Integer den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

inline std::string to_string(double d) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  return std::string(buf, ptr);
}

/// Short human-readable decimal for tables.
template <Scalar T>
std::string to_display(const T& v, int precision = 10) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), to_double(v), std::chars_format::general,
                                 precision);
  return std::string(buf, ptr);
}

template <Scalar T>
T from_rational(const Rational& r) {
  if constexpr (is_exact_v<T>) {
    return r;
  } else {
    return to_double(r);
  }
}

}  // namespace delegatebox
