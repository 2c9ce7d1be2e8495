#pragma once

#include <cstdint>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mpfair {

/// Exact rational number over int64 with normalized sign and gcd-reduced terms.
/// All arithmetic goes through __int128 intermediates and throws
/// std::overflow_error if a reduced result does not fit in int64.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  Rational(std::int64_t n, std::int64_t d) { assign(n, d); }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_negative() const { return num_ < 0; }

  friend Rational operator+(const Rational& a, const Rational& b) {
    __int128 n = w(a.num_) * b.den_ + w(b.num_) * a.den_;
    __int128 d = w(a.den_) * b.den_;
    return from_wide(n, d);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    __int128 n = w(a.num_) * b.den_ - w(b.num_) * a.den_;
    __int128 d = w(a.den_) * b.den_;
    return from_wide(n, d);
  }
  friend Rational operator*(const Rational& a, const Rational& b) {
    return from_wide(w(a.num_) * b.num_, w(a.den_) * b.den_);
  }
  friend Rational operator/(const Rational& a, const Rational& b) {
    if (b.num_ == 0) throw std::domain_error("rational division by zero");
    return from_wide(w(a.num_) * b.den_, w(a.den_) * b.num_);
  }
  Rational operator-() const { return Rational(-num_, den_); }

  Rational& operator+=(const Rational& o) { return *this = *this + o; }
  Rational& operator-=(const Rational& o) { return *this = *this - o; }
  Rational& operator*=(const Rational& o) { return *this = *this * o; }
  Rational& operator/=(const Rational& o) { return *this = *this / o; }

  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const Rational& a, const Rational& b) { return !(a == b); }
  friend bool operator<(const Rational& a, const Rational& b) {
    return w(a.num_) * b.den_ < w(b.num_) * a.den_;
  }
  friend bool operator>(const Rational& a, const Rational& b) { return b < a; }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
  friend bool operator>=(const Rational& a, const Rational& b) { return !(a < b); }

  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  /// "p" for integers, "p/q" otherwise; the exact wire form used in CSV output.
  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

  /// Fixed-point decimal with `dp` digits, rounded half-up
  /// (50/3 -> "16.67").
  std::string fixed(int dp = 2) const {
    std::int64_t scale = 1;
    for (int i = 0; i < dp; ++i) scale *= 10;
    __int128 n = w(num_) * scale;
    bool neg = n < 0;
    if (neg) n = -n;
    // round half-up on the magnitude
    __int128 q = (2 * n + den_) / (w(den_) * 2);
    std::int64_t whole = static_cast<std::int64_t>(q / scale);
    std::int64_t frac = static_cast<std::int64_t>(q % scale);
    std::string f = std::to_string(frac);
    if (static_cast<int>(f.size()) < dp) f.insert(0, dp - f.size(), '0');
    std::string out = (neg ? "-" : "") + std::to_string(whole);
    if (dp > 0) out += "." + f;
    return out;
  }

  /// Parses "p", "p/q" or a plain decimal like "62.5". Returns false on
  /// malformed input; never throws on bad text.
  static bool parse(std::string_view text, Rational& out) {
    if (text.empty()) return false;
    auto slash = text.find('/');
    if (slash != std::string_view::npos) {
      std::int64_t n, d;
      if (!parse_int(text.substr(0, slash), n)) return false;
      if (!parse_int(text.substr(slash + 1), d)) return false;
      if (d == 0) return false;
      out = Rational(n, d);
      return true;
    }
    auto dot = text.find('.');
    if (dot == std::string_view::npos) {
      std::int64_t n;
      if (!parse_int(text, n)) return false;
      out = Rational(n);
      return true;
    }
    std::string_view ip = text.substr(0, dot);
    std::string_view fp = text.substr(dot + 1);
    if (fp.empty() || fp.size() > 15) return false;
    bool neg = !ip.empty() && ip.front() == '-';
    if (neg) ip.remove_prefix(1);
    if (ip.empty() && fp.empty()) return false;
    std::int64_t whole = 0;
    if (!ip.empty() && !parse_uint(ip, whole)) return false;
    std::int64_t frac = 0;
    if (!parse_uint(fp, frac)) return false;
    std::int64_t scale = 1;
    for (size_t i = 0; i < fp.size(); ++i) scale *= 10;
    __int128 n = w(whole) * scale + frac;
    out = from_wide(neg ? -n : n, scale);
    return true;
  }

  friend std::ostream& operator<<(std::ostream& os, const Rational& r) {
    return os << r.str();
  }

 private:
  static __int128 w(std::int64_t v) { return static_cast<__int128>(v); }

  void assign(std::int64_t n, std::int64_t d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) { n /= g; d /= g; }
    num_ = n;
    den_ = d;
  }

  static Rational from_wide(__int128 n, __int128 d) {
    if (d == 0) throw std::domain_error("rational with zero denominator");
    if (d < 0) { n = -n; d = -d; }
    __int128 a = n < 0 ? -n : n;
    __int128 b = d;
    while (b != 0) { __int128 t = a % b; a = b; b = t; }
    if (a > 1) { n /= a; d /= a; }
    constexpr __int128 kMax = static_cast<__int128>(INT64_MAX);
    constexpr __int128 kMin = -kMax - 1;
    if (n > kMax || n < kMin || d > kMax) throw std::overflow_error("rational overflow");
    Rational r;
    r.num_ = static_cast<std::int64_t>(n);
    r.den_ = static_cast<std::int64_t>(d);
    return r;
  }

  static bool parse_int(std::string_view s, std::int64_t& out) {
    bool neg = !s.empty() && s.front() == '-';
    if (neg) s.remove_prefix(1);
    if (!parse_uint(s, out)) return false;
    if (neg) out = -out;
    return true;
  }
  static bool parse_uint(std::string_view s, std::int64_t& out) {
    if (s.empty() || s.size() > 18) return false;
    std::int64_t v = 0;
    for (char c : s) {
      if (c < '0' || c > '9') return false;
      v = v * 10 + (c - '0');
    }
    out = v;
    return true;
  }

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

}  // namespace mpfair
