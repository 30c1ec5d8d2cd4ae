#pragma once

#include <optional>
#include <random>

#include "rtf/grpspace.hpp"

namespace rtf {

enum class Tri { no, yes, undecided };

inline const char* to_string(Tri t) {
    switch (t) {
        case Tri::yes: return "true";
        case Tri::no: return "false";
        default: return "undecided";
    }
}

/// Square-class test in Q_p for a nonzero rational (p odd).
inline bool is_square_Qp(const Rational& y, const FieldSpec& f) {
    if (y.is_zero()) return true;
    int v = f.val(y).v;
    if (v % 2 != 0) return false;
    Rational w = y * ppow(f.p, -v);
    Int r = ((w.num() % f.p) + f.p) % f.p * inverse_mod(((w.den() % f.p) + f.p) % f.p, f.p) % f.p;
    return f.is_square_mod_p(r);
}

/// Exact square root in Q if it exists.
inline std::optional<Rational> rational_sqrt(const Rational& y) {
    if (y.sign() < 0) return std::nullopt;
    auto isqrt = [](Int n) -> std::optional<Int> {
        if (n < 0) return std::nullopt;
        Int lo = 0, hi = 1;
        while (hi * hi <= n) hi *= 2;
        while (lo + 1 < hi) {
            Int mid = (lo + hi) / 2;
            (mid * mid <= n ? lo : hi) = mid;
        }
        if (lo * lo == n) return lo;
        return std::nullopt;
    };
    auto a = isqrt(y.num());
    auto b = isqrt(y.den());
    if (!a || !b) return std::nullopt;
    return Rational(*a, *b);
}

/// Shape of the F-algebra F[x] for a regular semisimple x in M_n(F), n <= 2.
enum class TorusShape { scalar, split, unramified, ramified };

inline const char* to_string(TorusShape s) {
    switch (s) {
        case TorusShape::scalar: return "scalar";
        case TorusShape::split: return "split";
        case TorusShape::unramified: return "unramified";
        default: return "ramified";
    }
}

/// Classification of F[x] for x in M_n(F), n in {1, 2}, via the discriminant.
inline TorusShape torus_shape(const EMatrix& x, const FieldSpec& f) {
    if (x.rows() == 1) return TorusShape::scalar;
    if (x.rows() != 2 || !x.in_F()) throw std::invalid_argument("torus_shape: needs x in M_1(F) or M_2(F)");
    auto cp = x.char_poly();
    Rational disc = cp[1].a() * cp[1].a() - Rational(4) * cp[0].a();
    if (disc.is_zero()) throw std::domain_error("torus_shape: x is not regular");
    if (is_square_Qp(disc, f)) return TorusShape::split;
    return f.val(disc).v % 2 == 0 ? TorusShape::unramified : TorusShape::ramified;
}

/// Valuations of the two roots of t^2 + c1 t + c0 over an algebraic closure (Newton polygon).
inline std::pair<Rational, Rational> root_valuations(const Rational& c0, const Rational& c1, Int p) {
    int v0 = c0.val(p).v;
    Val v1 = c1.val(p);
    if (!v1.infinite() && Rational(2 * v1.v) < Rational(v0)) return {Rational(v0 - v1.v), Rational(v1.v)};
    return {Rational(v0, 2), Rational(v0, 2)};
}

/// Membership of a regular semisimple x in M_n(F) (n <= 2) in eps * N GL_n(E).
/// Per factor of the characteristic polynomial: an unramified quadratic factor
/// always lies in the norm image, a ramified one iff its determinant has even
/// valuation, a linear factor iff the eigenvalue has even valuation.
inline Tri in_eps_norm_class(const EMatrix& x, const FieldSpec& f) {
    int n = x.rows();
    if (n > 2 || !x.in_F()) return Tri::undecided;
    EMatrix y = EElement(f.eps.inverse()) * x;
    if (n == 1) return f.is_norm_class(y(0, 0).a()) ? Tri::yes : Tri::no;
    auto cp = y.char_poly();
    switch (torus_shape(y, f)) {
        case TorusShape::unramified: return Tri::yes;
        case TorusShape::ramified: return f.val(cp[0].a()).v % 2 == 0 ? Tri::yes : Tri::no;
        case TorusShape::split: {
            auto [r1, r2] = root_valuations(cp[0].a(), cp[1].a(), f.p);
            auto even = [](const Rational& r) { return r.is_integer() && r.num() % 2 == 0; };
            return even(r1) && even(r2) ? Tri::yes : Tri::no;
        }
        default: return Tri::undecided;
    }
}

inline bool separable(const std::vector<EElement>& cp) {
    if (cp.size() <= 2) return true;
    if (cp.size() == 3) {
        EElement disc = cp[1] * cp[1] - EElement(4) * cp[0];
        return !disc.is_zero();
    }
    throw std::invalid_argument("separable: degree > 2 not supported");
}

/// Regular semisimple orbit on S', represented by s'(alpha).
struct OrbitSPrime {
    FieldSpec field;
    EMatrix alpha;
    EMatrix aabar;
    std::vector<EElement> invariants;  // char poly of 2 alpha conj(alpha) - 1
    int x_exp = 0;                      // x_r = p^x_exp = |det aabar|^{-1}
    int y_exp = 0;                      // y_r = p^y_exp = |det(1 - aabar) det(aabar)^{-1}|
    bool regular = false;
    bool elliptic = false;
    Tri matchable = Tri::undecided;

    OrbitSPrime(const FieldSpec& f, EMatrix a) : field(f), alpha(std::move(a)) {
        int n = alpha.rows();
        aabar = alpha * alpha.conj();
        EMatrix one = EMatrix::identity(n);
        EElement d = aabar.det();
        EElement d1 = (one - aabar).det();
        if (d.is_zero()) throw std::invalid_argument("OrbitSPrime: alpha must be invertible");
        if (d1.is_zero()) throw std::invalid_argument("OrbitSPrime: det(alpha conj(alpha) - 1) must be nonzero");
        invariants = (EElement(2) * aabar - one).char_poly();
        x_exp = f.val(d).v;
        y_exp = f.val(d).v - f.val(d1).v;
        regular = separable(aabar.char_poly());
        if (!aabar.in_F()) throw std::invalid_argument("OrbitSPrime: alpha conj(alpha) must have entries in F");
        elliptic = regular && (n == 1 || torus_shape(aabar, f) != TorusShape::split);
        matchable = regular ? in_eps_norm_class(one - aabar.inverse(), f) : Tri::undecided;
    }

    int n() const { return alpha.rows(); }
    SPrimePoint point() const { return sprime_of_alpha(alpha); }
    /// r = -(1 - aabar) aabar^{-1}
    EMatrix r() const {
        EMatrix one = EMatrix::identity(n());
        return -((one - aabar) * aabar.inverse());
    }
};

/// Regular semisimple orbit on G, represented by g(beta).
struct OrbitG {
    FieldSpec field;
    EMatrix beta;
    EMatrix bbbar;
    std::vector<EElement> invariants;  // char poly of the upper-left block of g theta(g)^{-1}
    bool regular = false;
    bool elliptic = false;
    Tri matchable = Tri::undecided;

    OrbitG(const FieldSpec& f, EMatrix b) : field(f), beta(std::move(b)) {
        int n = beta.rows();
        bbbar = beta * beta.conj();
        EMatrix one = EMatrix::identity(n);
        EMatrix ebb = EElement(f.eps) * bbbar;
        if ((one - ebb).det().is_zero()) throw std::invalid_argument("OrbitG: det(1 - eps beta conj(beta)) must be nonzero");
        if (bbbar.det().is_zero()) throw std::invalid_argument("OrbitG: beta must be invertible");
        invariants = s_of_g(point()).A().char_poly();
        regular = separable(bbbar.char_poly());
        if (!bbbar.in_F()) throw std::invalid_argument("OrbitG: beta conj(beta) must have entries in F");
        elliptic = regular && (n == 1 || torus_shape(bbbar, f) != TorusShape::split);
        // 1/2 (A + 1) = (1 - eps beta conj(beta))^{-1} must be a norm
        if (regular) {
            EMatrix half = (one - ebb).inverse();
            FieldSpec untwisted = f;
            untwisted.eps = Rational(1);
            matchable = in_eps_norm_class(half, untwisted);
        }
    }

    int n() const { return beta.rows(); }
    GPoint point() const { return g_of_beta(beta, field.eps); }
};

inline std::vector<EElement> invariants_sprime(const SPrimePoint& s) {
    EMatrix A = s.A();
    return (EElement(2) * A * A.conj() - EMatrix::identity(s.n())).char_poly();
}

inline std::vector<EElement> invariants_g(const GPoint& g) { return s_of_g(g).A().char_poly(); }

/// Matching: -(1 - a abar)(a abar)^{-1} and eps b bbar have the same characteristic polynomial.
inline bool match(const OrbitSPrime& o1, const OrbitG& o2) {
    if (o1.n() != o2.n()) return false;
    return o1.r().char_poly() == (EElement(o2.field.eps) * o2.bbbar).char_poly();
}

inline Tri matchable_sprime(const OrbitSPrime& o) { return o.matchable; }
inline Tri matchable_g(const OrbitG& o) { return o.matchable; }

/// kappa^{S'}(s') = chi(det(tau D')) eta~(det B'), with tau = sqrt(u) a unit, chi symbolic in c.
inline CoeffValue kappa_sprime(const SPrimePoint& s, const FieldSpec& f, const UnramChar& chi = UnramChar::symbolic()) {
    EElement dB = s.B().det(), dD = s.D().det();
    if (dB.is_zero() || dD.is_zero()) throw std::domain_error("kappa_sprime: singular block");
    int n = s.n();
    EElement tau_n(1);
    for (int i = 0; i < n; ++i) tau_n *= f.sqrt_u();
    return f.eval_char(chi, tau_n * dD) * CoeffValue(f.eta_E(dB));
}

/// kappa^G(g) = chi(det y1) where g^{-1} = [[y1, eps y2], [conj y2, conj y1]].
inline CoeffValue kappa_g(const GPoint& g, const FieldSpec& f, const UnramChar& chi = UnramChar::symbolic()) {
    EMatrix inv = g.assemble().inverse();
    int n = g.n();
    EElement d1 = inv.block(0, 0, n, n).det();
    EElement d2 = inv.block(0, n, n, n).det();
    if (d1.is_zero() || d2.is_zero()) throw std::domain_error("kappa_g: singular block");
    return f.eval_char(chi, d1);
}

/// kappa^{G'}(x) = chi(det a4) eta~(det(tau a2)) on the blocks of x conj(x)^{-1}.
inline CoeffValue kappa_gprime(const EMatrix& x, const FieldSpec& f, const UnramChar& chi = UnramChar::symbolic()) {
    SPrimePoint s = sprime_of_x(x);
    int n = s.n();
    EElement tau_n(1);
    for (int i = 0; i < n; ++i) tau_n *= f.sqrt_u();
    EElement d2 = s.B().det(), d4 = s.D().det();
    if (d2.is_zero() || d4.is_zero()) throw std::domain_error("kappa_gprime: singular block");
    return f.eval_char(chi, d4) * CoeffValue(f.eta_E(tau_n * d2));
}

/// Partner beta for an n = 1 orbit when eps^{-1} r is the norm of a rational
/// point a + b sqrt(u) of bounded height (searched, p-power adjusted).
inline std::optional<EMatrix> find_partner_beta(const OrbitSPrime& o, int height = 40) {
    if (o.n() != 1 || o.matchable != Tri::yes) return std::nullopt;
    const FieldSpec& f = o.field;
    Rational target = o.r()(0, 0).a() / f.eps;
    for (int h = 1; h <= height; ++h)
        for (int a = -h; a <= h; ++a)
            for (int bsign : {1, -1}) {
                int b = bsign * (h - std::abs(a));
                for (int da = 1; da <= 6; ++da) {
                    EElement z = f.make(Rational(a, da), Rational(b, da));
                    if (z.is_zero()) continue;
                    Rational q = target / z.norm();
                    if (auto s = rational_sqrt(q)) {
                        EMatrix beta(1, 1);
                        beta(0, 0) = EElement(*s) * z;
                        return beta;
                    }
                }
            }
    return std::nullopt;
}

/// A matched pair s'(alpha) <-> g(beta) with a case-independent construction.
struct MatchedPair {
    EMatrix alpha;
    EMatrix beta;
    std::string kind;
};

/// n = 1 matched pairs from rational points of N(alpha) - N(gamma) = 1 (eps = 1):
/// lines through (1, 0, 0, 0) in direction d meet the quadric again at a
/// rational point; then beta = gamma / alpha.
inline std::optional<MatchedPair> matched_pair_n1(const FieldSpec& f, const std::array<Rational, 4>& d) {
    Rational U = Rational::from_int(f.u);
    Rational Q = d[0] * d[0] - U * d[1] * d[1] - d[2] * d[2] + U * d[3] * d[3];
    if (Q.is_zero()) return std::nullopt;
    Rational t = Rational(-2) * d[0] / Q;
    EElement alpha = f.make(Rational(1) + t * d[0], t * d[1]);
    EElement gamma = f.make(t * d[2], t * d[3]);
    if (alpha.is_zero() || gamma.is_zero()) return std::nullopt;
    if (alpha.norm() - gamma.norm() != Rational(1)) throw std::logic_error("matched_pair_n1: construction failed");
    EMatrix a(1, 1), b(1, 1);
    a(0, 0) = alpha;
    b(0, 0) = gamma / alpha;
    return MatchedPair{a, b, "n1"};
}

/// Seeded generator of orbits with known ground truth.
class OrbitGenerator {
public:
    OrbitGenerator(FieldSpec f, std::uint64_t seed) : f_(std::move(f)), rng_(seed) {}

    Rational small_rational(int span = 6, int maxpow = 2) {
        std::uniform_int_distribution<int> num(-span, span), den(1, span), pw(-maxpow, maxpow);
        Rational r(num(rng_), den(rng_));
        return r * ppow(f_.p, pw(rng_));
    }

    EElement small_element(int span = 6, int maxpow = 2) {
        return f_.make(small_rational(span, maxpow), small_rational(span, maxpow));
    }

    /// Random matched n = 1 pair (eps must be 1). Directions are small integers,
    /// each coordinate scaled by p^k with k in [0, maxpow].
    MatchedPair pair_n1(int maxpow = 1) {
        std::uniform_int_distribution<int> co(-5, 5), pw(0, maxpow);
        while (true) {
            std::array<Rational, 4> d;
            for (auto& x : d) x = Rational(co(rng_)) * ppow(f_.p, pw(rng_));
            auto mp = matched_pair_n1(f_, d);
            if (mp) return *mp;
        }
    }

    /// Random alpha in E^x with prescribed valuation (ground truth only through the closed forms).
    EElement element_with_val(int v) {
        while (true) {
            EElement z = small_element(8, 0);
            if (z.is_zero()) continue;
            int vz = f_.val(z).v;
            return EElement(ppow(f_.p, v - vz)) * z;
        }
    }

    /// n = 1 S'-orbit which is not matchable: val alpha = 0 and val(1 - alpha abar) odd.
    EMatrix nonmatchable_alpha_n1() {
        while (true) {
            // alpha = (1 + p^k w) with N alpha - 1 of odd valuation
            EElement a = f_.make(Rational(1) + small_rational(5, 0) * ppow(f_.p, 1 + static_cast<int>(rng_() % 3)),
                                 small_rational(5, 0) * ppow(f_.p, 1 + static_cast<int>(rng_() % 3)));
            if (a.is_zero()) continue;
            Rational n1 = Rational(1) - a.norm();
            if (n1.is_zero() || f_.val(a).v != 0) continue;
            if (f_.val(n1).v % 2 == 1) {
                EMatrix m(1, 1);
                m(0, 0) = a;
                return m;
            }
        }
    }

    /// n = 1 G-orbit which is not matchable: val(1 - beta bbar) odd.
    EMatrix nonmatchable_beta_n1() {
        while (true) {
            EElement b = f_.make(Rational(1) + small_rational(5, 0) * ppow(f_.p, 1 + static_cast<int>(rng_() % 3)),
                                 small_rational(5, 0) * ppow(f_.p, 1 + static_cast<int>(rng_() % 3)));
            Rational n1 = Rational(1) - f_.eps * b.norm();
            if (b.is_zero() || n1.is_zero()) continue;
            if (f_.val(n1).v % 2 == 1) {
                EMatrix m(1, 1);
                m(0, 0) = b;
                return m;
            }
        }
    }

    /// Random element of GL_n(F) with small entries.
    EMatrix gl_F(int n, int span = 3) {
        std::uniform_int_distribution<int> d(-span, span);
        while (true) {
            EMatrix h(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) h(i, j) = EElement(d(rng_));
            if (!h.det().is_zero()) return h;
        }
    }

    /// Random element of GL_n(E) with small entries.
    EMatrix gl_E(int n, int span = 2) {
        std::uniform_int_distribution<int> d(-span, span);
        while (true) {
            EMatrix h(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) h(i, j) = f_.make(d(rng_), d(rng_));
            if (!h.det().is_zero()) return h;
        }
    }

    /// n = 2 split pair: diagonal assembly of two n = 1 matched pairs with
    /// distinct alpha abar, conjugated by a random h in GL_2(F). `frame` returns h.
    MatchedPair pair_split(EMatrix* frame = nullptr, int maxpow = 1) {
        while (true) {
            MatchedPair a = pair_n1(maxpow), b = pair_n1(maxpow);
            if (a.alpha(0, 0).norm() == b.alpha(0, 0).norm()) continue;
            EMatrix h = gl_F(2, 1);
            EMatrix hi = h.inverse();
            EMatrix alpha = h * EMatrix::diag({a.alpha(0, 0), b.alpha(0, 0)}) * hi;
            EMatrix beta = h * EMatrix::diag({a.beta(0, 0), b.beta(0, 0)}) * hi;
            if (frame) *frame = h;
            return {alpha, beta, "split"};
        }
    }

    /// n = 2 elliptic pair inside L = F[gamma], gamma^2 = d: alpha = x0 w,
    /// beta = y0 x0^{-1}, with x0 = (s + s^{-1})/2, y0 = (s - s^{-1})/2 and w of norm one.
    std::optional<MatchedPair> pair_elliptic(const Rational& d, int maxpow = 1) {
        EMatrix gamma{{EElement(0), EElement(d)}, {EElement(1), EElement(0)}};
        EMatrix one = EMatrix::identity(2);
        EMatrix s = EElement(small_rational(4, maxpow)) * one + EElement(small_rational(4, maxpow)) * gamma;
        if (s.det().is_zero()) return std::nullopt;
        EMatrix si = s.inverse();
        EMatrix x0 = EElement(Rational(1, 2)) * (s + si);
        EMatrix y0 = EElement(Rational(1, 2)) * (s - si);
        if (x0.det().is_zero() || y0.det().is_zero()) return std::nullopt;
        EMatrix z = EMatrix::scalar(2, small_element(3, 0)) + small_element(3, 0) * gamma;
        if (z.det().is_zero()) return std::nullopt;
        EMatrix w = z * z.conj().inverse();
        EMatrix alpha = x0 * w;
        EMatrix beta = y0 * x0.inverse();
        EMatrix aabar = alpha * alpha.conj();
        if (!separable(aabar.char_poly())) return std::nullopt;
        if ((one - aabar).det().is_zero()) return std::nullopt;
        return MatchedPair{alpha, beta, "elliptic"};
    }

    std::mt19937_64& rng() { return rng_; }
    const FieldSpec& field() const { return f_; }

private:
    FieldSpec f_;
    std::mt19937_64 rng_;
};

inline nlohmann::json coeffs_to_json(const std::vector<EElement>& cp) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& c : cp) j.push_back(c.str());
    return j;
}

}  // namespace rtf
