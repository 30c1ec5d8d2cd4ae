#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "rtf/laurent.hpp"
#include "rtf/rational.hpp"

namespace rtf {

/// Element a + b*sqrt(u) of E = F(sqrt u).
///
/// u is carried along (0 while the element is known to lie in F) so that
/// elements can be combined without a separate field handle.
class EElement {
public:
    EElement() = default;
    EElement(const Rational& a) : a_(a) {}  // NOLINT(implicit)
    EElement(long long a) : a_(a) {}        // NOLINT(implicit)
    EElement(const Rational& a, const Rational& b, Int u) : a_(a), b_(b), u_(b.is_zero() ? 0 : u) {
        if (!b.is_zero() && u == 0) throw std::invalid_argument("EElement: sqrt component without u");
    }

    const Rational& a() const { return a_; }
    const Rational& b() const { return b_; }
    Int u() const { return u_; }
    bool is_zero() const { return a_.is_zero() && b_.is_zero(); }
    bool in_F() const { return b_.is_zero(); }

    EElement conj() const { return make(a_, -b_, u_); }
    Rational norm() const { return a_ * a_ - Rational::from_int(u_) * b_ * b_; }
    Rational trace() const { return a_ + a_; }

    EElement inverse() const {
        if (is_zero()) throw std::domain_error("inverse of zero in E");
        Rational n = norm();
        return make(a_ / n, -b_ / n, u_);
    }

    friend EElement operator+(const EElement& x, const EElement& y) {
        return make(x.a_ + y.a_, x.b_ + y.b_, join(x.u_, y.u_));
    }
    friend EElement operator-(const EElement& x, const EElement& y) {
        return make(x.a_ - y.a_, x.b_ - y.b_, join(x.u_, y.u_));
    }
    EElement operator-() const { return make(-a_, -b_, u_); }
    friend EElement operator*(const EElement& x, const EElement& y) {
        if (x.b_.is_zero() && y.b_.is_zero()) return EElement(x.a_ * y.a_);
        Int u = join(x.u_, y.u_);
        Rational ur = Rational::from_int(u);
        return make(x.a_ * y.a_ + ur * x.b_ * y.b_, x.a_ * y.b_ + x.b_ * y.a_, u);
    }
    friend EElement operator/(const EElement& x, const EElement& y) { return x * y.inverse(); }
    EElement& operator+=(const EElement& o) { return *this = *this + o; }
    EElement& operator-=(const EElement& o) { return *this = *this - o; }
    EElement& operator*=(const EElement& o) { return *this = *this * o; }

    friend bool operator==(const EElement& x, const EElement& y) { return x.a_ == y.a_ && x.b_ == y.b_; }

    /// Valuation in E. Because E/F is unramified and u is a unit non-residue,
    /// val_E(a + b sqrt u) = min(val a, val b).
    Val val(Int p) const { return std::min(a_.val(p), b_.val(p)); }

    std::string str() const {
        if (b_.is_zero()) return a_.str();
        std::string bs = b_ == Rational(1) ? "" : (b_ == Rational(-1) ? "-" : b_.str() + "*");
        std::string s = a_.is_zero() ? "" : a_.str();
        if (!s.empty() && bs.rfind('-', 0) != 0) s += "+";
        return s + bs + "r";
    }
    friend std::ostream& operator<<(std::ostream& os, const EElement& x) { return os << x.str(); }

    /// Parses "a", "a+b r", "a+bi", "b r" forms; "r", "i" and "sqrtu" all denote sqrt(u).
    static EElement parse(std::string s, Int u);

private:
    static EElement make(const Rational& a, const Rational& b, Int u) {
        EElement e;
        e.a_ = a;
        e.b_ = b;
        e.u_ = b.is_zero() ? 0 : u;
        return e;
    }
    static Int join(Int x, Int y) {
        if (x != 0 && y != 0 && x != y) throw std::invalid_argument("EElement: mixing different extensions");
        return x != 0 ? x : y;
    }

    Rational a_;
    Rational b_;
    Int u_ = 0;
};

inline EElement EElement::parse(std::string s, Int u) {
    std::string t;
    for (char ch : s)
        if (ch != ' ' && ch != '*') t += ch;
    for (const char* tag : {"sqrtu", "√u"}) {
        for (auto pos = t.find(tag); pos != std::string::npos; pos = t.find(tag)) t.replace(pos, std::string(tag).size(), "r");
    }
    for (char& ch : t)
        if (ch == 'i') ch = 'r';
    if (t.empty()) throw std::invalid_argument("empty E element");
    // split at the last sign that is not the leading one and not after '/'
    std::size_t split = std::string::npos;
    for (std::size_t i = 1; i < t.size(); ++i)
        if ((t[i] == '+' || t[i] == '-') && t[i - 1] != '/') split = i;
    auto parse_part = [](const std::string& part, Rational& a, Rational& b) {
        if (!part.empty() && part.back() == 'r') {
            std::string coeff = part.substr(0, part.size() - 1);
            if (coeff.empty() || coeff == "+") b += Rational(1);
            else if (coeff == "-") b -= Rational(1);
            else b += Rational::parse(coeff[0] == '+' ? coeff.substr(1) : coeff);
        } else {
            a += Rational::parse(part[0] == '+' ? part.substr(1) : part);
        }
    };
    Rational a, b;
    if (split == std::string::npos) {
        parse_part(t, a, b);
    } else {
        parse_part(t.substr(0, split), a, b);
        parse_part(t.substr(split), a, b);
    }
    if (!b.is_zero() && u == 0) throw std::invalid_argument("E element with sqrt(u) but u unset");
    return EElement(a, b, u);
}

/// Unramified character, determined by its value on a uniformizer.
struct UnramChar {
    std::string name;
    CoeffValue uniformizer_value;

    static UnramChar trivial() { return {"trivial", CoeffValue(1)}; }
    static UnramChar eta() { return {"eta", CoeffValue(-1)}; }
    static UnramChar eta_E() { return {"eta_E", CoeffValue(-1)}; }
    static UnramChar symbolic(int var = sym::c, std::string name = "chi") {
        return {std::move(name), Laurent::var(var)};
    }
};

/// F = Q_p modelled by exact rationals, E = F(sqrt u), and the datum eps.
struct FieldSpec {
    Int p = 3;
    Int u = -1;
    Rational eps = Rational(1);

    FieldSpec() = default;
    FieldSpec(Int p_, Int u_, Rational eps_ = Rational(1)) : p(p_), u(u_), eps(eps_) { validate(); }

    void validate() const {
        if (p < 3 || p % 2 == 0) throw std::invalid_argument("FieldSpec: p must be an odd prime");
        for (Int d = 2; d * d <= p; ++d)
            if (p % d == 0) throw std::invalid_argument("FieldSpec: p must be prime");
        if (u % p == 0) throw std::invalid_argument("FieldSpec: u must be a p-adic unit");
        if (is_square_mod_p(u)) throw std::invalid_argument("FieldSpec: u must be a non-residue mod p");
        if (eps.is_zero()) throw std::invalid_argument("FieldSpec: eps must be nonzero");
    }

    /// Legendre test for a unit residue.
    bool is_square_mod_p(Int x) const {
        Int r = ((x % p) + p) % p;
        if (r == 0) return true;
        Int acc = 1, base = r, e = (p - 1) / 2;
        while (e > 0) {
            if (e & 1) acc = acc * base % p;
            base = base * base % p;
            e >>= 1;
        }
        return acc == 1;
    }

    bool d_split() const { return eps.val(p).v % 2 == 0; }

    EElement sqrt_u() const { return EElement(Rational(0), Rational(1), u); }
    EElement make(const Rational& a, const Rational& b = Rational(0)) const { return EElement(a, b, u); }
    EElement parse(const std::string& s) const { return EElement::parse(s, u); }

    Val val(const EElement& x) const { return x.val(p); }
    Val val(const Rational& x) const { return x.val(p); }

    CoeffValue eval_char(const UnramChar& ch, const EElement& x) const {
        if (x.is_zero()) throw std::domain_error("eval_char: zero argument");
        return ch.uniformizer_value.pow(val(x).v);
    }
    CoeffValue eval_char(const UnramChar& ch, const Rational& x) const { return eval_char(ch, EElement(x)); }

    /// eta(x) = (-1)^val_F(x) and its extension (-1)^val_E(x) to E.
    int eta(const Rational& x) const {
        if (x.is_zero()) throw std::domain_error("eta: zero argument");
        return val(x).v % 2 == 0 ? 1 : -1;
    }
    int eta_E(const EElement& x) const {
        if (x.is_zero()) throw std::domain_error("eta_E: zero argument");
        return val(x).v % 2 == 0 ? 1 : -1;
    }

    /// x in N(E^x), or x in eps N(E^x) when eps_twist is set.
    bool is_norm_class(const Rational& x, bool eps_twist = false) const {
        if (x.is_zero()) throw std::domain_error("is_norm_class: zero argument");
        int v = val(x).v - (eps_twist ? val(eps).v : 0);
        return v % 2 == 0;
    }
};

inline void to_json(nlohmann::json& j, const Rational& r) { j = r.str(); }
inline void from_json(const nlohmann::json& j, Rational& r) {
    if (j.is_number_integer()) r = Rational(j.get<long long>());
    else r = Rational::parse(j.get<std::string>());
}

inline void to_json(nlohmann::json& j, const FieldSpec& f) {
    j = nlohmann::json{{"p", static_cast<long long>(f.p)}, {"u", detail::to_string(f.u)}, {"eps", f.eps.str()}};
}
inline void from_json(const nlohmann::json& j, FieldSpec& f) {
    auto as_int = [](const nlohmann::json& v) -> Int {
        if (v.is_number_integer()) return v.get<long long>();
        Rational r = Rational::parse(v.get<std::string>());
        if (!r.is_integer()) throw std::invalid_argument("FieldSpec: u must be given as an integer");
        return r.num();
    };
    Int p = as_int(j.at("p"));
    Int u = j.contains("u") ? as_int(j.at("u")) : Int(-1);
    Rational eps = Rational(1);
    if (j.contains("eps")) eps = j.at("eps").get<Rational>();
    f = FieldSpec(p, u, eps);
}

/// First quadratic non-residue u in {-1, 2, -2, 3, ...} by |u|, used as a default.
inline Int default_nonresidue(Int p) {
    FieldSpec probe;
    probe.p = p;
    for (Int k = 1;; ++k) {
        for (Int cand : {-k, k})
            if (cand % p != 0 && !probe.is_square_mod_p(cand)) return cand;
    }
}

}  // namespace rtf
