#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>

#include "nero/error.hpp"

namespace nero {

/// Exact non-overflowing (checked) rational number, always kept in lowest terms with den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  constexpr Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1) : num(n), den(d) {
    if (den == 0) throw Error("rational with zero denominator");
    normalize();
  }

  void normalize() {
    if (den < 0) {
      num = checked_mul(num, -1);
      den = checked_mul(den, -1);
    }
    std::int64_t g = std::gcd(num < 0 ? -num : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  [[nodiscard]] double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }

  /// Parses "3", "-2/5" or a finite decimal such as "0.125".
  static Rational parse(const std::string& text) {
    if (text.empty()) throw ConfigError("empty rational literal");
    if (auto slash = text.find('/'); slash != std::string::npos) {
      return Rational(std::stoll(text.substr(0, slash)), std::stoll(text.substr(slash + 1)));
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return Rational(std::stoll(text));
    std::string whole = text.substr(0, dot);
    std::string frac = text.substr(dot + 1);
    if (frac.size() > 12) throw ConfigError("too many decimals in rational literal: " + text);
    std::int64_t den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
    bool negative = !whole.empty() && whole[0] == '-';
    std::int64_t w = (whole.empty() || whole == "-" || whole == "+") ? 0 : std::stoll(whole);
    std::int64_t f = frac.empty() ? 0 : std::stoll(frac);
    std::int64_t n = checked_add(checked_mul(w < 0 ? -w : w, den), f);
    return Rational(negative ? -n : n, den);
  }

  /// Nearest rational with denominator dividing 10^6; used for values read as doubles.
  static Rational from_double(double v) {
    if (!std::isfinite(v)) throw ConfigError("non-finite value cannot be made rational");
    constexpr std::int64_t kScale = 1'000'000;
    return Rational(static_cast<std::int64_t>(std::llround(v * kScale)), kScale);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(checked_add(checked_mul(a.num, b.den), checked_mul(b.num, a.den)),
                    checked_mul(a.den, b.den));
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(checked_sub(checked_mul(a.num, b.den), checked_mul(b.num, a.den)),
                    checked_mul(a.den, b.den));
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return Rational(checked_mul(a.num, b.num), checked_mul(a.den, b.den));
  }
  friend bool operator==(const Rational& a, const Rational& b) { return a.num == b.num && a.den == b.den; }
  friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
    return checked_mul(a.num, b.den) <=> checked_mul(b.num, a.den);
  }

  [[nodiscard]] std::string str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
  }
  friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }
};

}  // namespace nero
