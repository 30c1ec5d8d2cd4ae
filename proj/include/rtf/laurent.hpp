#pragma once

#include <ostream>

#include <map>
#include <string>
#include <vector>

#include "rtf/rational.hpp"

namespace rtf {

/// Indices of the formal symbols used throughout the library.
///  c      value of the unramified character chi on a uniformizer
///  c1, c2 values of the two split-place characters chi_1, chi_2
///  t      square root of the residue field size (Satake normalization)
///  X(i)   Satake variables, i = 0, 1, ...
namespace sym {
inline constexpr int c = 0;
inline constexpr int c1 = 1;
inline constexpr int c2 = 2;
inline constexpr int t = 3;
constexpr int X(int i) { return 4 + i; }

inline std::string name(int i) {
    switch (i) {
        case c: return "c";
        case c1: return "c1";
        case c2: return "c2";
        case t: return "t";
        default: return "X" + std::to_string(i - 4 + 1);
    }
}
}  // namespace sym

/// Multivariate Laurent polynomial with rational coefficients.
///
/// Monomials are keyed by exponent vectors with trailing zeros trimmed, so
/// polynomials in different numbers of variables compare and combine freely.
class Laurent {
public:
    using Exps = std::vector<int>;

    Laurent() = default;
    Laurent(const Rational& r) {  // NOLINT(implicit)
        if (!r.is_zero()) terms_[{}] = r;
    }
    Laurent(long long r) : Laurent(Rational(r)) {}  // NOLINT(implicit)

    static Laurent monomial(Exps e, const Rational& coeff = Rational(1)) {
        Laurent l;
        trim(e);
        if (!coeff.is_zero()) l.terms_[e] = coeff;
        return l;
    }
    /// var^k
    static Laurent var(int index, int k = 1) {
        Exps e(static_cast<std::size_t>(index) + 1, 0);
        e[static_cast<std::size_t>(index)] = k;
        return monomial(e);
    }

    const std::map<Exps, Rational>& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }
    bool is_constant() const { return terms_.empty() || (terms_.size() == 1 && terms_.begin()->first.empty()); }
    Rational constant_term() const {
        auto it = terms_.find({});
        return it == terms_.end() ? Rational() : it->second;
    }
    Rational coeff(Exps e) const {
        trim(e);
        auto it = terms_.find(e);
        return it == terms_.end() ? Rational() : it->second;
    }

    friend Laurent operator+(Laurent a, const Laurent& b) {
        a += b;
        return a;
    }
    Laurent& operator+=(const Laurent& o) {
        for (const auto& [e, c] : o.terms_) add_term(e, c);
        return *this;
    }
    Laurent operator-() const {
        Laurent r = *this;
        for (auto& [e, c] : r.terms_) c = -c;
        return r;
    }
    friend Laurent operator-(Laurent a, const Laurent& b) {
        a += -b;
        return a;
    }
    Laurent& operator-=(const Laurent& o) { return *this += -o; }

    friend Laurent operator*(const Laurent& a, const Laurent& b) {
        Laurent r;
        for (const auto& [ea, ca] : a.terms_) {
            for (const auto& [eb, cb] : b.terms_) {
                Exps e(std::max(ea.size(), eb.size()), 0);
                for (std::size_t i = 0; i < ea.size(); ++i) e[i] += ea[i];
                for (std::size_t i = 0; i < eb.size(); ++i) e[i] += eb[i];
                trim(e);
                r.add_term(e, ca * cb);
            }
        }
        return r;
    }
    Laurent& operator*=(const Laurent& o) { return *this = *this * o; }

    friend bool operator==(const Laurent& a, const Laurent& b) { return a.terms_ == b.terms_; }

    /// Substitute var := value (value must be nonzero when negative powers occur).
    Laurent specialize(int index, const Rational& value) const {
        Laurent r;
        for (const auto& [e, c] : terms_) {
            Exps e2 = e;
            int k = 0;
            if (static_cast<std::size_t>(index) < e2.size()) {
                k = e2[static_cast<std::size_t>(index)];
                e2[static_cast<std::size_t>(index)] = 0;
            }
            trim(e2);
            r.add_term(e2, c * value.pow(k));
        }
        return r;
    }

    /// Substitute var := monomial * var' style map: every occurrence var^k becomes m^k.
    Laurent substitute(int index, const Laurent& m) const {
        Laurent r;
        for (const auto& [e, c] : terms_) {
            Exps e2 = e;
            int k = 0;
            if (static_cast<std::size_t>(index) < e2.size()) {
                k = e2[static_cast<std::size_t>(index)];
                e2[static_cast<std::size_t>(index)] = 0;
            }
            trim(e2);
            Laurent piece = monomial(e2, c);
            if (k != 0) {
                if (k < 0 && m.terms_.size() != 1) throw std::domain_error("negative power of non-monomial");
                Laurent mk = k > 0 ? m : m.monomial_inverse();
                for (int i = 0; i < std::abs(k); ++i) piece *= mk;
            }
            r += piece;
        }
        return r;
    }

    /// Inverse of a single monomial.
    Laurent monomial_inverse() const {
        if (terms_.size() != 1) throw std::domain_error("monomial_inverse of non-monomial");
        const auto& [e, c] = *terms_.begin();
        Exps ne = e;
        for (int& x : ne) x = -x;
        return monomial(ne, c.inverse());
    }

    Laurent pow(int k) const {
        if (k < 0) return monomial_inverse().pow(-k);
        Laurent r(1);
        for (int i = 0; i < k; ++i) r *= *this;
        return r;
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string s;
        bool first = true;
        for (const auto& [e, c] : terms_) {
            std::string mono;
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (e[i] == 0) continue;
                if (!mono.empty()) mono += "*";
                mono += sym::name(static_cast<int>(i));
                if (e[i] != 1) mono += "^" + std::to_string(e[i]);
            }
            std::string cs = c.str();
            std::string term;
            if (mono.empty()) {
                term = cs;
            } else if (c == Rational(1)) {
                term = mono;
            } else if (c == Rational(-1)) {
                term = "-" + mono;
            } else {
                term = (c.is_integer() ? cs : "(" + cs + ")") + "*" + mono;
            }
            if (!first) {
                if (term[0] == '-') {
                    s += " - " + term.substr(1);
                } else {
                    s += " + " + term;
                }
            } else {
                s = term;
            }
            first = false;
        }
        return s;
    }

private:
    static void trim(Exps& e) {
        while (!e.empty() && e.back() == 0) e.pop_back();
    }
    void add_term(const Exps& e, const Rational& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = terms_.try_emplace(e, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) terms_.erase(it);
        }
    }

    std::map<Exps, Rational> terms_;
};

/// Exact value of an orbital integral or character: a Laurent polynomial in c.
inline std::ostream& operator<<(std::ostream& os, const Laurent& l) { return os << l.str(); }

using CoeffValue = Laurent;

}  // namespace rtf
