#pragma once

#include <map>
#include <mutex>
#include <set>
#include <tuple>
#include <numeric>

#include "rtf/lattice.hpp"

namespace rtf {

using Weight = std::vector<int>;

inline int weight_sum(const Weight& w) { return std::accumulate(w.begin(), w.end(), 0); }

/// lambda* = (-lambda_m, ..., -lambda_1)
inline Weight dual_weight(const Weight& w) {
    Weight r(w.rbegin(), w.rend());
    for (int& x : r) x = -x;
    return r;
}

inline bool dominant(const Weight& w) { return std::is_sorted(w.rbegin(), w.rend()); }

/// Dominant weights of length m with entries in [lo, hi] and the given sum.
inline std::vector<Weight> dominant_weights(int m, int lo, int hi, int sum) {
    std::vector<Weight> out;
    Weight w(static_cast<std::size_t>(m));
    std::function<void(int, int, int)> rec = [&](int i, int cap, int s) {
        if (i == m) {
            if (s == sum) out.push_back(w);
            return;
        }
        for (int v = cap; v >= lo; --v) {
            w[static_cast<std::size_t>(i)] = v;
            rec(i + 1, v, s + v);
        }
    };
    rec(0, hi, 0);
    return out;
}

/// Spherical Hecke algebra element sum coeff(lambda) 1_{K p^lambda K} on GL_m(F) or GL_m(E).
struct HeckeElement {
    Ring ring = Ring::F;
    int m = 1;
    std::map<Weight, CoeffValue> coeffs;

    static HeckeElement unit(Ring ring, int m) { return T(ring, Weight(static_cast<std::size_t>(m), 0)); }
    static HeckeElement T(Ring ring, const Weight& lambda, const CoeffValue& c = CoeffValue(1)) {
        if (!dominant(lambda)) throw std::invalid_argument("HeckeElement: weight must be dominant");
        HeckeElement h{ring, static_cast<int>(lambda.size()), {}};
        if (!c.is_zero()) h.coeffs[lambda] = c;
        return h;
    }

    bool is_zero() const { return coeffs.empty(); }
    CoeffValue at(const Weight& w) const {
        auto it = coeffs.find(w);
        return it == coeffs.end() ? CoeffValue() : it->second;
    }
    void add(const Weight& w, const CoeffValue& c) {
        if (c.is_zero()) return;
        auto [it, inserted] = coeffs.try_emplace(w, c);
        if (!inserted) {
            it->second += c;
            if (it->second.is_zero()) coeffs.erase(it);
        }
    }
    /// Smallest and largest entry over the support.
    std::pair<int, int> range() const {
        int lo = 0, hi = 0;
        bool first = true;
        for (const auto& [w, c] : coeffs) {
            if (first) {
                lo = w.back();
                hi = w.front();
                first = false;
            }
            lo = std::min(lo, w.back());
            hi = std::max(hi, w.front());
        }
        return {lo, hi};
    }

    friend HeckeElement operator+(HeckeElement a, const HeckeElement& b) {
        a.check(b);
        for (const auto& [w, c] : b.coeffs) a.add(w, c);
        return a;
    }
    friend HeckeElement operator-(HeckeElement a, const HeckeElement& b) {
        a.check(b);
        for (const auto& [w, c] : b.coeffs) a.add(w, -c);
        return a;
    }
    friend HeckeElement operator*(const CoeffValue& s, const HeckeElement& a) {
        HeckeElement r{a.ring, a.m, {}};
        for (const auto& [w, c] : a.coeffs) r.add(w, s * c);
        return r;
    }
    friend bool operator==(const HeckeElement& a, const HeckeElement& b) {
        return a.ring == b.ring && a.m == b.m && a.coeffs == b.coeffs;
    }

    /// Apply a map to every coefficient (e.g. specialization of c).
    template <class Fn>
    HeckeElement map_coeffs(Fn fn) const {
        HeckeElement r{ring, m, {}};
        for (const auto& [w, c] : coeffs) r.add(w, fn(c));
        return r;
    }

    std::string str() const {
        if (coeffs.empty()) return "0";
        std::string s;
        for (const auto& [w, c] : coeffs) {
            if (!s.empty()) s += " + ";
            s += "(" + c.str() + ")*T(";
            for (std::size_t i = 0; i < w.size(); ++i) s += (i ? "," : "") + std::to_string(w[i]);
            s += ")";
        }
        return s;
    }

private:
    void check(const HeckeElement& b) const {
        if (ring != b.ring || m != b.m) throw std::invalid_argument("HeckeElement: mismatched algebras");
    }
};

inline std::ostream& operator<<(std::ostream& os, const HeckeElement& h) { return os << h.str(); }

inline Int residue_size(Ring ring, Int p) { return ring == Ring::F ? p : p * p; }

/// (f * g)(p^nu) = sum over x in G/K of f(x) g(x^{-1} p^nu), vol(K) = 1.
inline HeckeElement convolve(const HeckeElement& f, const HeckeElement& g, const FieldSpec& F) {
    if (f.ring != g.ring || f.m != g.m) throw std::invalid_argument("convolve: mismatched algebras");
    HeckeElement r{f.ring, f.m, {}};
    if (f.is_zero() || g.is_zero()) return r;
    int m = f.m;
    auto [flo, fhi] = f.range();
    auto [glo, ghi] = g.range();
    std::set<int> sums;
    for (const auto& [a, ca] : f.coeffs)
        for (const auto& [b, cb] : g.coeffs) sums.insert(weight_sum(a) + weight_sum(b));
    std::vector<std::pair<Weight, EMatrix>> targets;
    for (int s : sums)
        for (const auto& nu : dominant_weights(m, flo + glo, fhi + ghi, s)) {
            std::vector<EElement> d;
            for (int x : nu) d.emplace_back(ppow(F.p, x));
            targets.emplace_back(nu, EMatrix::diag(d));
        }
    for (const auto& [lambda, cf] : f.coeffs) {
        for_each_type_lattice(lambda, F.p, F.u, f.ring, [&](const EMatrix& x, const Weight&) {
            EMatrix xi = x.inverse();
            for (const auto& [nu, pnu] : targets) {
                Weight tp = lattice_type(xi * pnu, F.p);
                auto it = g.coeffs.find(tp);
                if (it != g.coeffs.end()) r.add(nu, cf * it->second);
            }
        });
    }
    return r;
}

/// Reduce powers of t using t^2 = q.
inline Laurent reduce_t(const Laurent& L, Int q) {
    Laurent r;
    for (const auto& [e, c] : L.terms()) {
        Laurent::Exps e2 = e;
        Rational coeff = c;
        if (e2.size() > static_cast<std::size_t>(sym::t)) {
            int k = e2[static_cast<std::size_t>(sym::t)];
            int half = k >= 0 ? k / 2 : -((-k + 1) / 2);
            e2[static_cast<std::size_t>(sym::t)] = k - 2 * half;
            coeff *= Rational::from_int(q).pow(half);
        }
        r += Laurent::monomial(e2, coeff);
    }
    return r;
}

/// HNF diagonal counts: number of lattices of type lambda in the Iwasawa cell N p^mu K.
inline const std::map<Weight, long long>& iwasawa_counts(const Weight& lambda, Ring ring, Int p, Int u) {
    static std::mutex mu;
    static std::map<std::tuple<Weight, int, long long>, std::map<Weight, long long>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_tuple(lambda, static_cast<int>(ring), static_cast<long long>(p));
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::map<Weight, long long> counts;
    for_each_type_lattice(lambda, p, u, ring, [&](const EMatrix&, const Weight& diag) { ++counts[diag]; });
    return cache.emplace(key, std::move(counts)).first->second;
}

/// Satake transform: sum_mu count(lambda, mu) t^{-<2 rho, mu>} X^mu, with t^2 = q.
inline Laurent satake(const HeckeElement& f, const FieldSpec& F, int xoffset = 0) {
    Int q = residue_size(f.ring, F.p);
    int m = f.m;
    Laurent r;
    for (const auto& [lambda, c] : f.coeffs) {
        Laurent s;
        for (const auto& [mu, n] : iwasawa_counts(lambda, f.ring, F.p, F.u)) {
            int rho2 = 0;
            for (int i = 0; i < m; ++i) rho2 += mu[static_cast<std::size_t>(i)] * (m - 1 - 2 * i);
            Laurent mono = Laurent::var(sym::t, -rho2) * Laurent(Rational(n));
            for (int i = 0; i < m; ++i) mono *= Laurent::var(sym::X(xoffset + i), mu[static_cast<std::size_t>(i)]);
            s += mono;
        }
        r += c * s;
    }
    return reduce_t(r, q);
}

/// T_lambda -> c^{-|lambda|} T_{lambda*}: the involution f -> f^vee chi1 chi2 with
/// c = (chi1 chi2)(uniformizer), reading the twist as (chi1 chi2)(det g).
inline HeckeElement dual_twist(const HeckeElement& f, const CoeffValue& c) {
    HeckeElement r{f.ring, f.m, {}};
    for (const auto& [w, coeff] : f.coeffs) r.add(dual_weight(w), coeff * c.pow(-weight_sum(w)));
    return r;
}

inline std::pair<HeckeElement, HeckeElement> pm_split(const HeckeElement& f, const CoeffValue& c) {
    HeckeElement d = dual_twist(f, c);
    CoeffValue half(Rational(1, 2));
    return {half * (f + d), half * (f - d)};
}

inline HeckeElement bc(const HeckeElement& f1, const HeckeElement& f2, const FieldSpec& F) { return convolve(f1, f2, F); }

/// f'^dagger(g) = f'(transpose(conj g)^{-1}) (chi chi^c)(g): T_lambda -> v^{-|lambda|} T_{lambda*}
/// with v = (chi chi^c)(uniformizer of E).
inline HeckeElement dagger(const HeckeElement& f, const CoeffValue& chi_chic_value) {
    if (f.ring != Ring::E) throw std::invalid_argument("dagger: needs a Hecke element over E");
    return dual_twist(f, chi_chic_value);
}

/// Element of the Hecke algebra of a Levi GL_{n1} x GL_{n2}.
struct LeviHecke {
    Ring ring = Ring::E;
    int n1 = 1, n2 = 1;
    std::map<std::pair<Weight, Weight>, CoeffValue> coeffs;

    CoeffValue at(const Weight& a, const Weight& b) const {
        auto it = coeffs.find({a, b});
        return it == coeffs.end() ? CoeffValue() : it->second;
    }
    static LeviHecke unit(Ring ring, int n1, int n2) {
        LeviHecke l{ring, n1, n2, {}};
        l.coeffs[{Weight(static_cast<std::size_t>(n1), 0), Weight(static_cast<std::size_t>(n2), 0)}] = CoeffValue(1);
        return l;
    }
    friend bool operator==(const LeviHecke& a, const LeviHecke& b) { return a.coeffs == b.coeffs && a.n1 == b.n1; }
    std::string str() const {
        std::string s;
        for (const auto& [k, c] : coeffs) {
            if (!s.empty()) s += " + ";
            s += "(" + c.str() + ")*T(";
            for (std::size_t i = 0; i < k.first.size(); ++i) s += (i ? "," : "") + std::to_string(k.first[i]);
            s += ")xT(";
            for (std::size_t i = 0; i < k.second.size(); ++i) s += (i ? "," : "") + std::to_string(k.second[i]);
            s += ")";
        }
        return s.empty() ? "0" : s;
    }
};

/// Split a polynomial into X-exponent vector -> coefficient in the remaining symbols.
inline std::map<Weight, Laurent> split_X(const Laurent& L, int m) {
    std::map<Weight, Laurent> out;
    for (const auto& [e, c] : L.terms()) {
        Weight w(static_cast<std::size_t>(m), 0);
        Laurent::Exps rest = e;
        for (int i = 0; i < m; ++i) {
            std::size_t k = static_cast<std::size_t>(sym::X(i));
            if (k < rest.size()) {
                w[static_cast<std::size_t>(i)] = rest[k];
                rest[k] = 0;
            }
        }
        for (std::size_t k = static_cast<std::size_t>(sym::X(m)); k < rest.size(); ++k)
            if (rest[k] != 0) throw std::logic_error("split_X: unexpected variable");
        out[w] += Laurent::monomial(rest, c);
    }
    for (auto it = out.begin(); it != out.end();) it = it->second.is_zero() ? out.erase(it) : std::next(it);
    return out;
}

/// Normalized constant term along the upper block parabolic with Levi
/// GL_{n1} x GL_{n2}, obtained from the Satake transform by peeling off Levi
/// Satake transforms from the lexicographically largest exponent downward.
inline LeviHecke constant_term(const HeckeElement& f, int n1, int n2, const FieldSpec& F) {
    if (n1 + n2 != f.m) throw std::invalid_argument("constant_term: partition does not match size");
    Int q = residue_size(f.ring, F.p);
    auto rem = split_X(satake(f, F), f.m);
    LeviHecke out{f.ring, n1, n2, {}};
    while (!rem.empty()) {
        auto top = std::prev(rem.end());
        Weight w = top->first;
        Weight a(w.begin(), w.begin() + n1), b(w.begin() + n1, w.end());
        if (!dominant(a) || !dominant(b)) throw std::logic_error("constant_term: leading exponent not Levi-dominant");
        Laurent sa = satake(HeckeElement::T(f.ring, a), F, 0);
        Laurent sb = satake(HeckeElement::T(f.ring, b), F, n1);
        auto piece = split_X(reduce_t(sa * sb, q), f.m);
        Laurent lead = piece.at(w);
        Laurent coeff = reduce_t(top->second * lead.monomial_inverse(), q);
        out.coeffs[{a, b}] = coeff;
        for (const auto& [k, v] : piece) {
            Laurent nv = reduce_t(rem[k] - coeff * v, q);
            if (nv.is_zero()) rem.erase(k);
            else rem[k] = nv;
        }
    }
    return out;
}

/// The same constant term evaluated directly: delta^{1/2}(m) times the number of
/// cosets m n K (n in the unipotent radical) of each type, at m = (p^a, p^b).
inline CoeffValue constant_term_direct(const HeckeElement& f, const Weight& a, const Weight& b, const FieldSpec& F) {
    int n1 = static_cast<int>(a.size()), n2 = static_cast<int>(b.size());
    int m = n1 + n2;
    if (m != f.m) throw std::invalid_argument("constant_term_direct: size mismatch");
    Int q = residue_size(f.ring, F.p);
    auto [lo, hi] = f.range();
    EMatrix g(m, m);
    for (int i = 0; i < n1; ++i) g(i, i) = EElement(ppow(F.p, a[static_cast<std::size_t>(i)]));
    for (int i = 0; i < n2; ++i) g(n1 + i, n1 + i) = EElement(ppow(F.p, b[static_cast<std::size_t>(i)]));
    // Y ranges over p^lo M(o) modulo m1 M(o); m1 diagonal so entry (i, j) is mod p^{a_i}
    std::vector<std::vector<EElement>> choices;
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) {
            slots.emplace_back(i, n1 + j);
            choices.push_back(residues(F.p, F.u, f.ring, lo, a[static_cast<std::size_t>(i)]));
        }
    CoeffValue total;
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == slots.size()) {
            total += f.at(lattice_type(g, F.p));
            return;
        }
        for (const auto& y : choices[k]) {
            g(slots[k].first, slots[k].second) = y;
            rec(k + 1);
        }
    };
    rec(0);
    int e = -(n2 * weight_sum(a) - n1 * weight_sum(b));
    return reduce_t(total * Laurent::var(sym::t, e), q);
}

inline nlohmann::json hecke_to_json(const HeckeElement& f) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [w, c] : f.coeffs) j.push_back({{"lambda", w}, {"coeff", c.str()}});
    return j;
}

/// Parses [{"lambda": [1, 0], "coeff": "1"}, ...]; coefficients are rationals.
inline HeckeElement hecke_from_json(const nlohmann::json& j, Ring ring) {
    HeckeElement h{ring, 0, {}};
    for (const auto& item : j) {
        Weight w = item.at("lambda").get<Weight>();
        Rational c = item.contains("coeff") ? item.at("coeff").get<Rational>() : Rational(1);
        if (h.m == 0) h.m = static_cast<int>(w.size());
        if (static_cast<int>(w.size()) != h.m) throw std::invalid_argument("hecke_from_json: mixed sizes");
        if (!dominant(w)) throw std::invalid_argument("hecke_from_json: weight must be dominant");
        h.add(w, CoeffValue(c));
    }
    return h;
}

/// "(1,0)" or "1,0" -> {1, 0}
inline Weight parse_weight(std::string s) {
    Weight w;
    std::string cur;
    for (char ch : s) {
        if (ch == '(' || ch == ')' || ch == ' ') continue;
        if (ch == ',') {
            w.push_back(std::stoi(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) w.push_back(std::stoi(cur));
    return w;
}

}  // namespace rtf
