#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <compare>
#include <ostream>

namespace rtf {

/// Signed 128-bit integer used for all exact arithmetic.
using Int = __int128;

/// Thrown when an exact operation would leave the 128-bit range.
struct ArithmeticOverflow : std::overflow_error {
    using std::overflow_error::overflow_error;
};

/// Valuation that may be +infinity (valuation of zero).
struct Val {
    static constexpr int kInfinity = std::numeric_limits<int>::max();
    int v = kInfinity;

    constexpr bool infinite() const { return v == kInfinity; }
    constexpr auto operator<=>(const Val&) const = default;
    constexpr bool operator==(const Val&) const = default;
    friend constexpr bool operator==(Val a, int b) { return a.v == b; }
};

namespace detail {

inline Int gcd(Int a, Int b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        Int t = a % b;
        a = b;
        b = t;
    }
    return a;
}

inline Int mul(Int a, Int b) {
    Int r;
    if (__builtin_mul_overflow(a, b, &r)) throw ArithmeticOverflow("rational multiply overflow");
    return r;
}

inline Int add(Int a, Int b) {
    Int r;
    if (__builtin_add_overflow(a, b, &r)) throw ArithmeticOverflow("rational add overflow");
    return r;
}

inline std::string to_string(Int x) {
    if (x == 0) return "0";
    bool neg = x < 0;
    std::string s;
    // work with negative values so INT128_MIN does not overflow
    Int y = neg ? x : -x;
    while (y != 0) {
        s.push_back(static_cast<char>('0' - static_cast<int>(y % 10)));
        y /= 10;
    }
    if (neg) s.push_back('-');
    return {s.rbegin(), s.rend()};
}

inline Int parse_int(const std::string& s) {
    if (s.empty()) throw std::invalid_argument("empty integer literal");
    std::size_t i = 0;
    bool neg = false;
    if (s[0] == '-' || s[0] == '+') {
        neg = s[0] == '-';
        i = 1;
    }
    if (i == s.size()) throw std::invalid_argument("bad integer literal: " + s);
    Int r = 0;
    for (; i < s.size(); ++i) {
        if (s[i] < '0' || s[i] > '9') throw std::invalid_argument("bad integer literal: " + s);
        r = add(mul(r, 10), s[i] - '0');
    }
    return neg ? -r : r;
}

}  // namespace detail

/// Exact rational number num/den with den > 0 and gcd(num, den) = 1.
class Rational {
public:
    Rational() = default;
    Rational(long long n) : num_(n) {}  // NOLINT(implicit)
    Rational(Int n, Int d) : num_(n), den_(d) { normalize(); }

    static Rational from_int(Int n) { return Rational(n, 1); }

    Int num() const { return num_; }
    Int den() const { return den_; }
    bool is_zero() const { return num_ == 0; }
    bool is_integer() const { return den_ == 1; }
    int sign() const { return num_ > 0 ? 1 : (num_ < 0 ? -1 : 0); }

    Rational operator-() const { return Rational(-num_, den_, raw{}); }

    friend Rational operator+(const Rational& a, const Rational& b) {
        if (a.den_ == b.den_) return Rational(detail::add(a.num_, b.num_), a.den_);
        Int g = detail::gcd(a.den_, b.den_);
        Int da = a.den_ / g;
        Int db = b.den_ / g;
        return Rational(detail::add(detail::mul(a.num_, db), detail::mul(b.num_, da)),
                        detail::mul(a.den_, db));
    }
    friend Rational operator-(const Rational& a, const Rational& b) { return a + (-b); }
    friend Rational operator*(const Rational& a, const Rational& b) {
        if (a.num_ == 0 || b.num_ == 0) return {};
        Int g1 = detail::gcd(a.num_, b.den_);
        Int g2 = detail::gcd(b.num_, a.den_);
        return Rational(detail::mul(a.num_ / g1, b.num_ / g2), detail::mul(a.den_ / g2, b.den_ / g1),
                        raw{});
    }
    friend Rational operator/(const Rational& a, const Rational& b) { return a * b.inverse(); }

    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }
    Rational& operator/=(const Rational& o) { return *this = *this / o; }

    Rational inverse() const {
        if (num_ == 0) throw std::domain_error("inverse of zero rational");
        return num_ > 0 ? Rational(den_, num_, raw{}) : Rational(-den_, -num_, raw{});
    }

    friend bool operator==(const Rational& a, const Rational& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }
    friend std::strong_ordering operator<=>(const Rational& a, const Rational& b) {
        Int l = detail::mul(a.num_, b.den_);
        Int r = detail::mul(b.num_, a.den_);
        return l <=> r;
    }

    /// p-adic valuation; +infinity for zero.
    Val val(Int p) const {
        if (num_ == 0) return {};
        int v = 0;
        Int n = num_;
        while (n % p == 0) {
            n /= p;
            ++v;
        }
        Int d = den_;
        while (d % p == 0) {
            d /= p;
            --v;
        }
        return {v};
    }

    /// Integer power (negative exponents allowed for nonzero values).
    Rational pow(int e) const {
        if (e < 0) return inverse().pow(-e);
        Rational r(1);
        Rational b = *this;
        while (e > 0) {
            if (e & 1) r *= b;
            e >>= 1;
            if (e) b *= b;
        }
        return r;
    }

    std::string str() const {
        if (den_ == 1) return detail::to_string(num_);
        return detail::to_string(num_) + "/" + detail::to_string(den_);
    }

    /// Parses "n", "-n" or "n/d".
    static Rational parse(const std::string& s) {
        auto slash = s.find('/');
        if (slash == std::string::npos) return from_int(detail::parse_int(s));
        return Rational(detail::parse_int(s.substr(0, slash)), detail::parse_int(s.substr(slash + 1)));
    }

    friend std::ostream& operator<<(std::ostream& os, const Rational& r) { return os << r.str(); }

private:
    struct raw {};
    Rational(Int n, Int d, raw) : num_(n), den_(d) {}

    void normalize() {
        if (den_ == 0) throw std::domain_error("zero denominator");
        if (den_ < 0) {
            num_ = -num_;
            den_ = -den_;
        }
        Int g = detail::gcd(num_, den_);
        if (g > 1) {
            num_ /= g;
            den_ /= g;
        }
        if (num_ == 0) den_ = 1;
    }

    Int num_ = 0;
    Int den_ = 1;
};

/// p^k as an exact rational.
inline Rational ppow(Int p, int k) { return Rational::from_int(p).pow(k); }

/// Modular inverse of a unit modulo m (m > 1).
inline Int inverse_mod(Int a, Int m) {
    Int r0 = m, r1 = ((a % m) + m) % m;
    Int s0 = 0, s1 = 1;
    while (r1 != 0) {
        Int q = r0 / r1;
        Int t = r0 - q * r1;
        r0 = r1;
        r1 = t;
        t = s0 - q * s1;
        s0 = s1;
        s1 = t;
    }
    if (r0 != 1) throw std::domain_error("inverse_mod: not a unit");
    return ((s0 % m) + m) % m;
}

/// Canonical representative of x modulo p^k Z_(p), for x with v_p(x) arbitrary.
/// The result has the form M / p^j with 0 <= M < p^(k+j), i.e. a fixed set of
/// coset representatives of Q / p^k Z_(p) restricted to p-integral-up-to-p-powers inputs.
inline Rational reduce_mod_ppow(const Rational& x, Int p, int k) {
    if (x.is_zero()) return {};
    // x = N / (p^j * D) with gcd(D, p) = 1
    Int d = x.den();
    int j = 0;
    while (d % p == 0) {
        d /= p;
        ++j;
    }
    Int n = x.num();
    if (k + j <= 0) return {};
    Int mod = 1;
    for (int i = 0; i < k + j; ++i) mod = detail::mul(mod, p);
    Int m = detail::mul(((n % mod) + mod) % mod, inverse_mod(d, mod)) % mod;
    return Rational(m, ppow(p, j).num());
}

}  // namespace rtf
