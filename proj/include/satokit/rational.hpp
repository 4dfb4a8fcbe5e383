#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <string>

namespace satokit {

// Exact rational scalar over GMP. Kept canonical at all times:
// gcd(|num|, den) = 1 and den > 0.
class Rational {
  public:
    Rational() : v_(0) {}
    Rational(long n) : v_(n) {}
    Rational(long n, long d);
    explicit Rational(const mpq_class& q) : v_(q) { v_.canonicalize(); }
    // Parses "p", "p/q" or "-p/q" in base 10.
    static Rational parse(const std::string& s);

    Rational operator+(const Rational& o) const { return Rational(mpq_class(v_ + o.v_)); }
    Rational operator-(const Rational& o) const { return Rational(mpq_class(v_ - o.v_)); }
    Rational operator*(const Rational& o) const { return Rational(mpq_class(v_ * o.v_)); }
    Rational operator/(const Rational& o) const;
    Rational operator-() const { return Rational(mpq_class(-v_)); }
    Rational& operator+=(const Rational& o) { v_ += o.v_; return *this; }
    Rational& operator-=(const Rational& o) { v_ -= o.v_; return *this; }
    Rational& operator*=(const Rational& o) { v_ *= o.v_; return *this; }

    bool operator==(const Rational& o) const { return v_ == o.v_; }
    bool operator!=(const Rational& o) const { return v_ != o.v_; }
    bool operator<(const Rational& o) const { return v_ < o.v_; }

    bool is_zero() const { return v_ == 0; }
    bool is_one() const { return v_ == 1; }
    Rational inv() const;
    Rational pow(long e) const;

    // "p" when the denominator is 1, otherwise "p/q"; base 10.
    std::string str() const;
    const mpq_class& raw() const { return v_; }

    static Rational factorial(long n);
    static Rational binomial(long n, long k);
    // (n)!! with (-1)!! = 0!! = 1.
    static Rational double_factorial(long n);

  private:
    mpq_class v_;
};

std::ostream& operator<<(std::ostream& os, const Rational& r);

inline Rational operator*(long n, const Rational& r) { return Rational(n) * r; }

} // namespace satokit
