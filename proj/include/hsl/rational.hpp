#pragma once

// Exact rational arithmetic over arbitrary-precision integers. Used by the
// diagram engine where results must be exact (factorials, covariance powers).

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace hsl {

using BigInt = boost::multiprecision::cpp_int;

class BigRational {
 public:
  BigRational() : num_(0), den_(1) {}
  BigRational(long long n) : num_(n), den_(1) {}  // NOLINT: implicit by design
  BigRational(BigInt n) : num_(std::move(n)), den_(1) {}
  BigRational(BigInt n, BigInt d) : num_(std::move(n)), den_(std::move(d)) {
    if (den_ == 0) throw std::domain_error("BigRational: zero denominator");
    normalize();
  }

  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }

  friend BigRational operator+(const BigRational& a, const BigRational& b) {
    return BigRational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend BigRational operator-(const BigRational& a, const BigRational& b) {
    return BigRational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend BigRational operator*(const BigRational& a, const BigRational& b) {
    return BigRational(a.num_ * b.num_, a.den_ * b.den_);
  }
  friend BigRational operator/(const BigRational& a, const BigRational& b) {
    if (b.num_ == 0) throw std::domain_error("BigRational: division by zero");
    return BigRational(a.num_ * b.den_, a.den_ * b.num_);
  }
  BigRational& operator+=(const BigRational& o) { return *this = *this + o; }
  BigRational& operator-=(const BigRational& o) { return *this = *this - o; }
  BigRational& operator*=(const BigRational& o) { return *this = *this * o; }

  friend bool operator==(const BigRational& a, const BigRational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend bool operator!=(const BigRational& a, const BigRational& b) { return !(a == b); }

  BigRational pow(int e) const {
    if (e < 0) throw std::domain_error("BigRational: negative exponent");
    BigRational r(1), base(*this);
    while (e) {
      if (e & 1) r *= base;
      base *= base;
      e >>= 1;
    }
    return r;
  }

  double to_double() const { return num_.convert_to<double>() / den_.convert_to<double>(); }

  std::string str() const {
    if (den_ == 1) return num_.str();
    return num_.str() + "/" + den_.str();
  }

 private:
  void normalize() {
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    if (num_ == 0) {
      den_ = 1;
      return;
    }
    BigInt g = boost::multiprecision::gcd(num_ < 0 ? BigInt(-num_) : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  BigInt num_, den_;
};

inline BigInt factorial_big(int n) {
  BigInt f = 1;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace hsl
