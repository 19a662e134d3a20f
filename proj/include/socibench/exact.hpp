#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace socibench {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline int sign_of(const Rational& r) { return r.sign(); }

// Parses "p/q" or "p"; throws on malformed input.
inline Rational rational_from_string(const std::string& s) {
  auto slash = s.find('/');
  try {
    if (slash == std::string::npos) return Rational(BigInt(s));
    BigInt num(s.substr(0, slash));
    BigInt den(s.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator");
    return Rational(num, den);
  } catch (const std::exception&) {
    throw std::invalid_argument("malformed rational: " + s);
  }
}

inline std::string to_string(const Rational& r) {
  if (denominator(r) == 1) return numerator(r).str();
  return numerator(r).str() + "/" + denominator(r).str();
}

// Element of the field Q[sqrt(2)]: a + b*sqrt(2) with exact rational a, b.
// Sign, comparison, and arithmetic are all exact; sqrt(2) being irrational
// guarantees a + b*sqrt(2) = 0 only when a = b = 0.
class Exact {
 public:
  Exact() = default;
  Exact(int v) : a_(v) {}
  Exact(Rational a) : a_(std::move(a)) {}
  Exact(Rational a, Rational b) : a_(std::move(a)), b_(std::move(b)) {}

  static Exact sqrt2() { return Exact(Rational(0), Rational(1)); }
  // 1/sqrt(2) = sqrt(2)/2.
  static Exact inv_sqrt2() { return Exact(Rational(0), Rational(1, 2)); }

  const Rational& rational_part() const { return a_; }
  const Rational& sqrt2_part() const { return b_; }
  bool is_rational() const { return b_ == 0; }

  // Throws when the value is irrational.
  const Rational& as_rational() const {
    if (!is_rational()) throw std::domain_error("exact value is irrational");
    return a_;
  }

  int sign() const {
    int sa = a_.sign(), sb = b_.sign();
    if (sb == 0) return sa;
    if (sa == 0) return sb;
    if (sa == sb) return sa;
    // Opposite signs: compare a^2 with 2 b^2; equality would make sqrt(2) rational.
    Rational a2 = a_ * a_, b22 = 2 * b_ * b_;
    if (a2 == b22) throw std::logic_error("sqrt(2) rationality violated");
    return a2 > b22 ? sa : sb;
  }

  double to_double() const {
    return socibench::to_double(a_) + socibench::to_double(b_) * 1.4142135623730951;
  }

  Exact operator-() const { return Exact(-a_, -b_); }
  Exact& operator+=(const Exact& o) { a_ += o.a_; b_ += o.b_; return *this; }
  Exact& operator-=(const Exact& o) { a_ -= o.a_; b_ -= o.b_; return *this; }
  Exact& operator*=(const Exact& o) {
    Rational a = a_ * o.a_ + 2 * b_ * o.b_;
    Rational b = a_ * o.b_ + b_ * o.a_;
    a_ = std::move(a);
    b_ = std::move(b);
    return *this;
  }
  Exact& operator/=(const Exact& o) {
    Rational d = o.a_ * o.a_ - 2 * o.b_ * o.b_;
    if (d == 0) throw std::domain_error("division by zero");
    Rational a = (a_ * o.a_ - 2 * b_ * o.b_) / d;
    Rational b = (b_ * o.a_ - a_ * o.b_) / d;
    a_ = std::move(a);
    b_ = std::move(b);
    return *this;
  }

  friend Exact operator+(Exact l, const Exact& r) { return l += r; }
  friend Exact operator-(Exact l, const Exact& r) { return l -= r; }
  friend Exact operator*(Exact l, const Exact& r) { return l *= r; }
  friend Exact operator/(Exact l, const Exact& r) { return l /= r; }
  friend bool operator==(const Exact& l, const Exact& r) {
    return l.a_ == r.a_ && l.b_ == r.b_;
  }
  friend bool operator!=(const Exact& l, const Exact& r) { return !(l == r); }
  friend bool operator<(const Exact& l, const Exact& r) { return (l - r).sign() < 0; }
  friend bool operator>(const Exact& l, const Exact& r) { return (l - r).sign() > 0; }
  friend bool operator<=(const Exact& l, const Exact& r) { return (l - r).sign() <= 0; }
  friend bool operator>=(const Exact& l, const Exact& r) { return (l - r).sign() >= 0; }

 private:
  Rational a_;
  Rational b_;
};

inline std::string to_string(const Exact& x) {
  if (x.is_rational()) return to_string(x.rational_part());
  return to_string(x.rational_part()) + "+" + to_string(x.sqrt2_part()) + "*sqrt2";
}

inline double to_double(const Exact& x) { return x.to_double(); }

}  // namespace socibench
