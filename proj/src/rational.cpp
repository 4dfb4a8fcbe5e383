#include "satokit/rational.hpp"

#include <ostream>

#include "satokit/errors.hpp"

namespace satokit {

Rational::Rational(long n, long d) {
    if (d == 0) throw BadInput("rational with zero denominator");
    v_ = mpq_class(n, d);
    v_.canonicalize();
}

Rational Rational::parse(const std::string& s) {
    auto slash = s.find('/');
    try {
        if (slash == std::string::npos) {
            mpq_class q(s, 10);
            q.canonicalize();
            return Rational(q);
        }
        mpz_class num(s.substr(0, slash), 10);
        mpz_class den(s.substr(slash + 1), 10);
        if (den == 0) throw BadInput("rational with zero denominator: " + s);
        mpq_class q(num, den);
        q.canonicalize();
        return Rational(q);
    } catch (const std::invalid_argument&) {
        throw BadInput("malformed rational: " + s);
    }
}

Rational Rational::operator/(const Rational& o) const {
    if (o.is_zero()) throw NonUnit("division by zero");
    return Rational(mpq_class(v_ / o.v_));
}

Rational Rational::inv() const {
    if (is_zero()) throw NonUnit("inverse of zero");
    return Rational(mpq_class(1 / v_));
}

Rational Rational::pow(long e) const {
    if (e == 0) return Rational(1);
    if (e < 0) return inv().pow(-e);
    mpz_class num, den;
    mpz_pow_ui(num.get_mpz_t(), v_.get_num().get_mpz_t(), (unsigned long)e);
    mpz_pow_ui(den.get_mpz_t(), v_.get_den().get_mpz_t(), (unsigned long)e);
    return Rational(mpq_class(num, den));
}

std::string Rational::str() const {
    if (v_.get_den() == 1) return v_.get_num().get_str(10);
    return v_.get_num().get_str(10) + "/" + v_.get_den().get_str(10);
}

Rational Rational::factorial(long n) {
    if (n < 0) throw BadInput("factorial of negative");
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), (unsigned long)n);
    return Rational(mpq_class(f));
}

Rational Rational::binomial(long n, long k) {
    if (k < 0) return Rational(0);
    if (n >= 0 && k > n) return Rational(0);
    if (n >= 0) {
        mpz_class b;
        mpz_bin_uiui(b.get_mpz_t(), (unsigned long)n, (unsigned long)k);
        return Rational(mpq_class(b));
    }
    // C(n,k) = n(n-1)...(n-k+1)/k! for negative n.
    Rational r(1);
    for (long i = 0; i < k; ++i) r *= Rational(n - i);
    return r / factorial(k);
}

Rational Rational::double_factorial(long n) {
    if (n <= 0) return Rational(1);
    mpz_class f;
    mpz_2fac_ui(f.get_mpz_t(), (unsigned long)n);
    return Rational(mpq_class(f));
}

std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

} // namespace satokit
