#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <thread>

#include "rtf/hecke.hpp"
#include "rtf/orbits.hpp"

namespace rtf {

struct EnumerationWindow {
    int B = 3;       // outer lattices up to height B
    int margin = 2;  // certification recomputes with B + margin
};

class CertificationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OrbitalResult {
    CoeffValue value;
    EnumerationWindow window;
    bool certified = false;
    bool certify_ran = false;
    long long visited = 0;
    double wall_ms = 0;
    std::vector<CoeffValue> shells;  // contribution of each outer height, before the 1/e factor
    std::string diagnostic;

    nlohmann::json to_json() const {
        return {{"value", value.str()},
                {"window", window.B},
                {"certified", certified},
                {"visited_cosets", visited},
                {"wall_ms", wall_ms}};
    }
};

using TestFunction = HeckeElement;

struct OrbitalOptions {
    EnumerationWindow window;
    bool certify = true;
    int jobs = 1;
    UnramChar chi = UnramChar::symbolic();
    int max_B = -1;  // if above window.B, an uncertified run is repeated with B + margin up to this
};

namespace detail {

template <class Run>
OrbitalResult grow_window(const OrbitalOptions& opt, Run run) {
    OrbitalOptions o = opt;
    while (true) {
        OrbitalResult r = run(o);
        if (r.certified || !o.certify || o.window.B + o.window.margin > opt.max_B) return r;
        o.window.B += o.window.margin;
    }
}

}  // namespace detail

/// Stabilizer torus L^x of a regular x in M_n(F), n <= 2, as it acts on lattices
/// (after conjugation by `conj`). `omega` generates the maximal order of L over o_F.
struct TorusDesc {
    TorusShape shape = TorusShape::scalar;
    int n = 1;
    int e = 1;      // ramification index of L/F
    EMatrix frame;  // split case: eigenvector columns
    EMatrix omega;
};

inline TorusDesc torus_of(const EMatrix& x, const FieldSpec& f, const EMatrix& conj = EMatrix()) {
    TorusDesc T;
    T.n = x.rows();
    EMatrix k = conj.rows() == 0 ? EMatrix::identity(T.n) : conj;
    if (T.n == 1) {
        T.frame = EMatrix::identity(1);
        T.omega = EMatrix::identity(1);
        return T;
    }
    T.shape = torus_shape(x, f);
    Rational tr = x(0, 0).a() + x(1, 1).a();
    Rational det = x.det().a();
    Rational disc = tr * tr - Rational(4) * det;
    if (T.shape == TorusShape::split) {
        auto s = rational_sqrt(disc);
        if (!s) throw std::invalid_argument("torus_of: split torus without rational eigenvalues is unsupported");
        EMatrix frame(2, 2);
        for (int col = 0; col < 2; ++col) {
            Rational r = (tr + (col == 0 ? *s : -*s)) / Rational(2);
            EMatrix m = x - EMatrix::scalar(2, EElement(r));
            EElement v0, v1;
            if (!m(0, 0).is_zero() || !m(0, 1).is_zero()) {
                v0 = -m(0, 1);
                v1 = m(0, 0);
            } else {
                v0 = -m(1, 1);
                v1 = m(1, 0);
            }
            frame(0, col) = v0;
            frame(1, col) = v1;
        }
        T.frame = k * frame;
        T.omega = T.frame * EMatrix::diag({EElement(1), EElement(0)}) * T.frame.inverse();
    } else {
        int v = f.val(disc).v;
        int j = v >= 0 ? v / 2 : -((-v + 1) / 2);
        EMatrix gamma = x - EMatrix::scalar(2, EElement(tr / Rational(2)));
        T.frame = k;
        T.omega = k * (EElement(ppow(f.p, -j)) * gamma) * k.inverse();
        T.e = T.shape == TorusShape::ramified ? 2 : 1;
    }
    return T;
}

/// [T_c : T ∩ h K h^{-1}], the number of lattices in the T_c-orbit of h o^n.
/// Summing a T-invariant function over T-orbit representatives with this
/// weight equals the fundamental-domain sum used by the engines.
inline Rational quotient_weight(const TorusDesc& T, const EMatrix& h, const FieldSpec& f) {
    if (T.shape == TorusShape::scalar) return Rational(1);
    Val mv = (h.inverse() * T.omega * h).min_val(f.p);
    int k = std::max(0, -mv.v);
    if (k == 0) return Rational(1);
    Rational q = Rational::from_int(f.p);
    switch (T.shape) {
        case TorusShape::split: return q.pow(k - 1) * (q - Rational(1));
        case TorusShape::unramified: return q.pow(k - 1) * (q + Rational(1));
        case TorusShape::ramified: return q.pow(k);
        default: return Rational(1);
    }
}

/// Upper-triangular Hermite normal form of the lattice g o^m, matching the
/// representatives produced by for_each_hnf_with_diag.
inline EMatrix hnf(const EMatrix& g, Int p) {
    int m = g.rows();
    EMatrix h = g;
    auto swap_cols = [&](int a, int b) {
        for (int i = 0; i < m; ++i) std::swap(h(i, a), h(i, b));
    };
    for (int r = m - 1; r >= 0; --r) {
        int piv = -1;
        Val best;
        for (int j = 0; j <= r; ++j) {
            Val v = h(r, j).val(p);
            if (piv < 0 || v < best) {
                best = v;
                piv = j;
            }
        }
        if (best.infinite()) throw std::invalid_argument("hnf: singular matrix");
        swap_cols(piv, r);
        EElement unit = h(r, r) * EElement(ppow(p, -best.v));
        EElement ui = unit.inverse();
        for (int i = 0; i < m; ++i) h(i, r) = h(i, r) * ui;
        for (int j = 0; j < r; ++j) {
            EElement q = h(r, j) / h(r, r);
            if (q.is_zero()) continue;
            for (int i = 0; i < m; ++i) h(i, j) = h(i, j) - q * h(i, r);
        }
    }
    for (int j = 1; j < m; ++j)
        for (int i = j - 1; i >= 0; --i) {
            int mu = h(i, i).val(p).v;
            const EElement& x = h(i, j);
            EElement rep(reduce_mod_ppow(x.a(), p, mu), reduce_mod_ppow(x.b(), p, mu), x.u());
            EElement q = (x - rep) / h(i, i);
            if (q.is_zero()) continue;
            for (int k = 0; k <= i; ++k) h(k, j) = h(k, j) - q * h(k, i);
        }
    return h;
}

inline bool same_lattice(const EMatrix& a, const EMatrix& b, Int p) {
    EMatrix r = a.inverse() * b;
    return r.integral(p) && r.det().val(p).v == 0;
}

/// One representative per coset gK of GL_m with all elementary divisors in [lo, hi],
/// in a deterministic order (by determinant, then type, then HNF).
inline std::vector<EMatrix> enum_cosets(Ring ring, int m, int lo, int hi, const FieldSpec& f) {
    std::vector<EMatrix> out;
    for (int s = m * lo; s <= m * hi; ++s)
        for (const auto& lambda : dominant_weights(m, lo, hi, s))
            for_each_type_lattice(lambda, f.p, f.u, ring, [&](const EMatrix& h, const Weight&) { out.push_back(h); });
    return out;
}

/// Fundamental domain for the uniformizer part of T acting on GL_n(E)/K:
/// primitive lattices of height <= B, with equal frame coordinate minima for a
/// split torus. Each lattice is reported with its height. Ramified tori are
/// covered twice; callers divide by T.e.
inline void for_each_fd_lattice(const TorusDesc& T, int B, const FieldSpec& f,
                                const std::function<void(const EMatrix&, int)>& fn) {
    if (T.n == 1) {
        fn(EMatrix::identity(1), 0);
        return;
    }
    EMatrix fi = T.shape == TorusShape::split ? T.frame.inverse() : EMatrix();
    for_each_primitive(T.n, B, f.p, f.u, Ring::E, [&](const EMatrix& L) {
        if (T.shape == TorusShape::split) {
            EMatrix c = fi * L;
            if (coordinate_min(c, 0, f.p) != coordinate_min(c, 1, f.p)) return;
        }
        fn(L, lattice_type(L, f.p).front());
    });
}

/// Outer constraint Z sigma(L) ⊆ p^{-tol} L, sigma = conj when `twisted`.
struct OuterFilter {
    EMatrix Z;
    bool twisted = false;
    int tol = 0;

    bool holds(const EMatrix& L, int t, Int p) const {
        return (L.inverse() * Z * (twisted ? L.conj() : L)).min_val(p).v >= -t;
    }
};

/// The same fundamental domain restricted to lattices passing `flt`, found by a
/// depth-first walk of the tree of primitive lattices (children of a height-k
/// lattice are its index-q sublattices of height k + 1). If L passes with
/// tolerance t, its parent L + p^{k-1} o passes with max(t, -min_val Z), so the
/// walk prunes with that relaxed tolerance and never misses a lattice.
inline void for_each_fd_lattice(const TorusDesc& T, int B, const FieldSpec& f, const OuterFilter& flt,
                                const std::function<void(const EMatrix&, int)>& fn) {
    Int p = f.p;
    if (T.n == 1) {
        EMatrix one = EMatrix::identity(1);
        if (flt.holds(one, flt.tol, p)) fn(one, 0);
        return;
    }
    if (T.n != 2) throw std::invalid_argument("for_each_fd_lattice: n > 2 unsupported");
    int relaxed = std::max(flt.tol, -flt.Z.min_val(p).v);
    EMatrix fi = T.shape == TorusShape::split ? T.frame.inverse() : EMatrix();
    auto emit = [&](const EMatrix& L, int h) {
        if (!flt.holds(L, flt.tol, p)) return;
        if (T.shape == TorusShape::split) {
            EMatrix c = fi * L;
            if (coordinate_min(c, 0, p) != coordinate_min(c, 1, p)) return;
        }
        fn(L, h);
    };
    auto res = residues(p, f.u, Ring::E, 0, 1);
    EElement pe(Rational::from_int(p));
    std::function<void(const EMatrix&, int)> walk = [&](const EMatrix& L, int h) {
        emit(L, h);
        if (h == B) return;
        std::vector<EMatrix> kids;
        for (const auto& x : res) kids.push_back(L * EMatrix{{EElement(1), EElement(0)}, {x, pe}});
        kids.push_back(L * EMatrix{{pe, EElement(0)}, {EElement(0), EElement(1)}});
        for (const auto& M : kids) {
            auto ty = lattice_type(M, p);
            if (ty.front() != h + 1 || ty.back() != 0) continue;  // the step back toward the root
            if (!flt.holds(M, relaxed, p)) continue;
            walk(M, h + 1);
        }
    };
    EMatrix root = EMatrix::identity(2);
    if (flt.holds(root, relaxed, p)) walk(root, 0);
}

namespace detail {

struct OuterItem {
    EMatrix L;
    int height;
};

/// Runs `body` over the items on `jobs` threads, each with its own accumulator
/// vector of shell sums; results are summed exactly, so the schedule does not matter.
inline void parallel_shells(const std::vector<OuterItem>& items, int jobs, std::vector<CoeffValue>& shells,
                            long long& visited,
                            const std::function<void(const OuterItem&, std::vector<CoeffValue>&, long long&)>& body) {
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(items.size())));
    std::vector<std::vector<CoeffValue>> acc(static_cast<std::size_t>(jobs), std::vector<CoeffValue>(shells.size()));
    std::vector<long long> counts(static_cast<std::size_t>(jobs), 0);
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
    auto work = [&](int w) {
        try {
            for (std::size_t i = static_cast<std::size_t>(w); i < items.size(); i += static_cast<std::size_t>(jobs))
                body(items[i], acc[static_cast<std::size_t>(w)], counts[static_cast<std::size_t>(w)]);
        } catch (...) {
            errors[static_cast<std::size_t>(w)] = std::current_exception();
        }
    };
    if (jobs == 1) {
        work(0);
    } else {
        std::vector<std::thread> ts;
        for (int w = 0; w < jobs; ++w) ts.emplace_back(work, w);
        for (auto& t : ts) t.join();
    }
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (int w = 0; w < jobs; ++w) {
        visited += counts[static_cast<std::size_t>(w)];
        for (std::size_t k = 0; k < shells.size(); ++k) shells[k] += acc[static_cast<std::size_t>(w)][k];
    }
}

inline void finish(OrbitalResult& r, const TorusDesc& T, bool certify, std::chrono::steady_clock::time_point t0) {
    Rational inv_e(1, T.e);
    CoeffValue inside, all;
    for (std::size_t k = 0; k < r.shells.size(); ++k) {
        if (static_cast<int>(k) <= r.window.B) inside += r.shells[k];
        all += r.shells[k];
    }
    r.value = CoeffValue(inv_e) * inside;
    r.certify_ran = certify;
    if (certify) {
        r.certified = inside == all;
        if (!r.certified) {
            std::string d = "window B=" + std::to_string(r.window.B) + " differs from B+" +
                            std::to_string(r.window.margin) + "; nonzero shells:";
            for (std::size_t k = static_cast<std::size_t>(r.window.B) + 1; k < r.shells.size(); ++k)
                if (!r.shells[k].is_zero()) d += " h=" + std::to_string(k) + ":" + r.shells[k].str();
            r.diagnostic = d;
        }
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline bool is_unit_function(const HeckeElement& f) {
    return f.coeffs.size() == 1 && f.coeffs.begin()->first == Weight(static_cast<std::size_t>(f.m), 0) &&
           f.coeffs.begin()->second == CoeffValue(1);
}

inline int val_det(const EMatrix& m, Int p) { return m.det().val(p).v; }

inline CoeffValue char_pow(const UnramChar& chi, int k) { return chi.uniformizer_value.pow(k); }

}  // namespace detail

/// g with X = g conj(g)^{-1}, for X with X conj(X) = 1 (g = Y + X conj(Y)).
namespace detail {

inline EMatrix round_abs(const EMatrix& m, Int p, int prec) {
    EMatrix r(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
            const EElement& x = m(i, j);
            r(i, j) = EElement(reduce_mod_ppow(x.a(), p, prec), reduce_mod_ppow(x.b(), p, prec), x.u());
        }
    return r;
}

}  // namespace detail

inline EMatrix hilbert90(const EMatrix& X, const FieldSpec& f) {
    int m = X.rows();
    EMatrix one = EMatrix::identity(m);
    std::vector<EMatrix> tries = {one, EMatrix::scalar(m, f.sqrt_u())};
    for (int k = 1; k <= 3; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                EMatrix Y = one;
                Y(i, j) += f.make(k, 1);
                tries.push_back(Y);
            }
    for (const auto& Y : tries) {
        EMatrix g = Y + X * Y.conj();
        if (!g.det().is_zero()) return g;
    }
    throw std::domain_error("hilbert90: no invertible Y + X conj(Y) found");
}

/// The function f'~ on S'(F) obtained from a spherical f' on GL_2n(E): the sum of
/// f'(Λ) (-c)^{-val det Λ} over lattices Λ with X conj(Λ) = Λ.
class TwistedLatticeSum {
public:
    TwistedLatticeSum(const HeckeElement& fp, const FieldSpec& f, const UnramChar& chi)
        : unit_(detail::is_unit_function(fp)), p_(f.p), u_(f.u) {
        if (fp.ring != Ring::E) throw std::invalid_argument("S' test function must live on GL_2n(E)");
        std::tie(lo_, hi_) = fp.range();
        CoeffValue minus_c = CoeffValue(-1) * chi.uniformizer_value;
        for (const auto& [lambda, coeff] : fp.coeffs) weights_[lambda] = coeff * minus_c.pow(-weight_sum(lambda));
    }
    int spread() const { return hi_ - lo_; }
    bool unit() const { return unit_; }

    /// Value at X = g conj(g)^{-1}. The X-fixed lattices are exactly g M o_E for
    /// o_F-lattices M, so only F-lattices in a sandwich are visited.
    CoeffValue at_form(const EMatrix& g) const { return at_form(g, g.inverse()); }

    /// Same, with g^{-1} supplied. Both are first rounded p-adically: g only
    /// matters up to GL(o_E) on the left and g^{-1} up to GL(o_E) on the right.
    CoeffValue at_form(const EMatrix& g0, const EMatrix& gi0) const {
        EMatrix g = detail::round_abs(g0, p_, 1 - gi0.min_val(p_).v);
        EMatrix gi = detail::round_abs(gi0, p_, 1 - g0.min_val(p_).v);
        // g^{-1} o_E rational means X is twisted-conjugate to 1 under K
        if (unimodular(g * rational_part_inv(g, p_), p_)) return at_one();
        // outer = (W_out^t)^{-1} = (p^lo g^{-1} o_E) ∩ F^m, inner = W_in = hull of p^hi g^{-1} o_E
        EMatrix Wout = lattice_span(rational_generators(EElement(ppow(p_, -lo_)) * g), p_);
        EMatrix Win = lattice_span(rational_generators((EElement(ppow(p_, hi_)) * gi).transpose()), p_);
        EMatrix rel = Wout.transpose() * Win;
        if (!rel.integral(p_)) return {};
        SmithResult sm = smith_left(rel, p_);
        // M = outer U h, so g M = G h with G = g outer U
        EMatrix G = g * Wout.transpose().inverse() * sm.U;
        CoeffValue s;
        for_each_between_diag(sm.e, p_, u_, Ring::F, [&](const EMatrix& h) {
            auto it = weights_.find(lattice_type_bounded(G * h, p_, lo_, hi_));
            if (it != weights_.end()) s += it->second;
        });
        return s;
    }

    CoeffValue at_one() const {
        std::call_once(*one_flag_, [&] {
            for (const auto& [lambda, w] : weights_) {
                long long n = 0;
                for_each_type_lattice(lambda, p_, u_, Ring::F, [&](const EMatrix&, const Weight&) { ++n; });
                one_ += CoeffValue(Rational(n)) * w;
            }
        });
        return one_;
    }

    /// Direct evaluation over all lattices in the support; slow, kept as an oracle.
    CoeffValue brute(const EMatrix& X) const {
        CoeffValue s;
        for (const auto& [lambda, w] : weights_)
            for_each_type_lattice(lambda, p_, u_, Ring::E, [&](const EMatrix& L, const Weight&) {
                if ((L.inverse() * X * L.conj()).integral(p_)) s += w;
            });
        return s;
    }

private:
    bool unit_;
    Int p_, u_;
    int lo_ = 0, hi_ = 0;
    std::map<Weight, CoeffValue> weights_;
    std::shared_ptr<std::once_flag> one_flag_ = std::make_shared<std::once_flag>();
    mutable CoeffValue one_;
};

/// O^{S'}(s, f'~) for a representative s whose stabilizer acts on h2 through T.
inline OrbitalResult orbital_sprime_at(const SPrimePoint& s, const TorusDesc& T, const HeckeElement& fp, const FieldSpec& f,
                                       const OrbitalOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    int n = s.n();
    if (fp.m != 2 * n) throw std::invalid_argument("orbital_sprime: test function has the wrong size");
    TwistedLatticeSum ft(fp, f, opt.chi);
    int d = ft.spread();
    EMatrix A = s.A(), B = s.B(), C = s.C(), D = s.D();
    EMatrix Cbi = C.conj().inverse();
    EMatrix gs = ft.unit() ? EMatrix() : hilbert90(s.m, f);
    EMatrix gsi = ft.unit() ? EMatrix() : gs.inverse();
    EElement pd(ppow(f.p, d)), pmd(ppow(f.p, -d));
    OrbitalResult r;
    r.window = opt.window;
    int Bmax = opt.window.B + (opt.certify ? opt.window.margin : 0);
    r.shells.assign(static_cast<std::size_t>(Bmax) + 1, CoeffValue());
    std::vector<detail::OuterItem> items;
    for_each_fd_lattice(T, Bmax, f, OuterFilter{D, true, d},
                        [&](const EMatrix& h2, int height) { items.push_back({h2, height}); });
    detail::parallel_shells(items, opt.jobs, r.shells, r.visited,
                            [&](const detail::OuterItem& it, std::vector<CoeffValue>& acc, long long& cnt) {
        const EMatrix& h2 = it.L;
        EMatrix h2b = h2.conj(), h2i = h2.inverse();
        int v2 = detail::val_det(h2, f.p);
        int thr = ft.unit() ? 0 : -d;
        // whether l * m * r has valuation >= thr; m is rounded first since only
        // that test matters and the exact entries of a point overflow quickly
        auto bounded = [&](const EMatrix& l, const EMatrix& m, const EMatrix& rt) {
            if (l.is_zero() || m.is_zero() || rt.is_zero()) return true;
            auto v = [&](const EMatrix& x) { return x.min_val(f.p).v; };
            EMatrix l1 = detail::round_abs(l, f.p, thr - v(m) - v(rt));
            if (l1.is_zero()) return true;
            EMatrix m1 = detail::round_abs(m, f.p, thr - v(l1) - v(rt));
            if (m1.is_zero()) return true;
            EMatrix r1 = detail::round_abs(rt, f.p, thr - v(l1) - v(m1));
            return (l1 * m1 * r1).min_val(f.p).v >= thr;
        };
        if (!bounded(h2i, D, h2b)) return;
        for_each_sandwich(pd * (B * h2b), pmd * (Cbi * h2b), f.p, f.u, Ring::E, [&](const EMatrix& h1) {
            ++cnt;
            EMatrix h1i = h1.inverse(), h1b = h1.conj();
            if (!(bounded(h1i, A, h1b) && bounded(h1i, B, h2b) && bounded(h2i, C, h1b))) return;
            CoeffValue v;
            if (ft.unit()) {
                v = CoeffValue(1);
            } else {
                EMatrix z(n, n);
                EMatrix H = EMatrix::blocks(h1i, z, z, h2i), Hi = EMatrix::blocks(h1, z, z, h2);
                // H gs only matters up to GL(o_E) on the left, so gs can be cut
                // down before the product; exact entries overflow quickly
                int spread = -H.min_val(f.p).v - Hi.min_val(f.p).v;
                EMatrix g = H * detail::round_abs(gs, f.p, 1 - gsi.min_val(f.p).v + spread);
                EMatrix gi = detail::round_abs(gsi, f.p, 1 - gs.min_val(f.p).v + spread) * Hi;
                v = ft.at_form(g, gi);
                if (v.is_zero()) return;
            }
            int sign = (detail::val_det(h1, f.p) + v2) % 2 == 0 ? 1 : -1;
            acc[static_cast<std::size_t>(it.height)] += CoeffValue(sign) * v;
        });
    });
    detail::finish(r, T, opt.certify, t0);
    return r;
}

/// Twisted representative (k1, k2) . s'(alpha); identity when k is empty.
struct Twist {
    EMatrix k1, k2;
};

inline OrbitalResult orbital_sprime(const OrbitSPrime& o, const HeckeElement& fp, const OrbitalOptions& opt = {},
                                    const std::optional<Twist>& tw = std::nullopt) {
    SPrimePoint s = o.point();
    EMatrix k2;
    if (tw) {
        s = s.twist(tw->k1, tw->k2);
        k2 = tw->k2;
    }
    TorusDesc T = torus_of(o.aabar, o.field, k2);
    return detail::grow_window(opt, [&](const OrbitalOptions& op) { return orbital_sprime_at(s, T, fp, o.field, op); });
}

/// O^G(y, f) = sum f(h(a)^{-1} y h(b)) chi(det a^{-1} b)^{-1} over T\(H x H), with the
/// stabilizer acting on a through T.
inline OrbitalResult orbital_g_at(const GPoint& y, const TorusDesc& T, const HeckeElement& fn, const FieldSpec& f,
                                  const OrbitalOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    int n = y.n();
    if (fn.m != 2 * n) throw std::invalid_argument("orbital_g: test function has the wrong size");
    bool unit = detail::is_unit_function(fn);
    auto [lo, hi] = fn.range();
    EMatrix Y = y.assemble();
    EMatrix A = Y.block(0, 0, n, n), Ap = Y.inverse().block(0, 0, n, n);
    EMatrix Ai = A.inverse(), AAp = A * Ap;
    EElement phi(ppow(f.p, hi)), plo(ppow(f.p, lo));
    OrbitalResult r;
    r.window = opt.window;
    int Bmax = opt.window.B + (opt.certify ? opt.window.margin : 0);
    r.shells.assign(static_cast<std::size_t>(Bmax) + 1, CoeffValue());
    std::vector<detail::OuterItem> items;
    for_each_fd_lattice(T, Bmax, f, OuterFilter{AAp, false, hi - lo},
                        [&](const EMatrix& a, int height) { items.push_back({a, height}); });
    detail::parallel_shells(items, opt.jobs, r.shells, r.visited,
                            [&](const detail::OuterItem& it, std::vector<CoeffValue>& acc, long long& cnt) {
        const EMatrix& a = it.L;
        EMatrix hai = h_of(a).inverse();
        int va = detail::val_det(a, f.p);
        EMatrix left = hai * Y;
        for_each_sandwich(phi * (Ap * a), plo * (Ai * a), f.p, f.u, Ring::E, [&](const EMatrix& b) {
            ++cnt;
            EMatrix X = left * h_of(b);
            CoeffValue v;
            if (unit) {
                if (!X.integral(f.p) || detail::val_det(X, f.p) != 0) return;
                v = CoeffValue(1);
            } else {
                v = fn.at(lattice_type(X, f.p));
                if (v.is_zero()) return;
            }
            acc[static_cast<std::size_t>(it.height)] += v * detail::char_pow(opt.chi, va - detail::val_det(b, f.p));
        });
    });
    detail::finish(r, T, opt.certify, t0);
    return r;
}

/// Representative h(k1) g(beta) h(k2)^{-1} when a twist is given.
inline OrbitalResult orbital_g(const OrbitG& o, const HeckeElement& fn, const OrbitalOptions& opt = {},
                               const std::optional<Twist>& tw = std::nullopt) {
    GPoint y = o.point();
    EMatrix k1;
    if (tw) {
        y = GPoint::from_matrix(h_of(tw->k1) * y.assemble() * h_of(tw->k2).inverse(), y.eps);
        k1 = tw->k1;
    }
    TorusDesc T = torus_of(o.bbbar, o.field, k1);
    return detail::grow_window(opt, [&](const OrbitalOptions& op) { return orbital_g_at(y, T, fn, o.field, op); });
}

/// Throws with the shell listing if the result did not survive the B + margin recomputation.
inline nlohmann::json certify_window(const OrbitalResult& r) {
    if (!r.certify_ran) throw CertificationError("certify_window: computation ran without the certification margin");
    if (!r.certified) throw CertificationError("certify_window: " + r.diagnostic);
    return {{"window", r.window.B}, {"checked_to", r.window.B + r.window.margin}, {"value", r.value.str()}, {"ok", true}};
}

// ---------------------------------------------------------------------------
// Split place, n = 1: G = GL_2(F), G' = GL_2(F) x GL_2(F), chi = (chi1, chi2),
// eta~ = (eta0, eta0^{-1}) with eta0 trivial.

struct SplitChars {
    CoeffValue c1 = Laurent::var(sym::c1);
    CoeffValue c2 = Laurent::var(sym::c2);
    CoeffValue product() const { return c1 * c2; }
};

namespace detail {

inline void check_split_regular(const EMatrix& y) {
    if (y.rows() != 2 || !y.in_F()) throw std::invalid_argument("split orbital: expects 2x2 matrices over F");
    EMatrix z = y.inverse();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            if (y(i, j).is_zero() || z(i, j).is_zero())
                throw std::domain_error("split orbital: x1 x2^{-1} is not regular semisimple");
}

inline CoeffValue cpow(const CoeffValue& c, int k) { return c.pow(k); }

}  // namespace detail

/// f(g) = sum_h f1'(g h) f2'(h) (chi1 chi2)^{-1}(det h) = f1' * (f2'^vee chi1 chi2).
inline HeckeElement chi_convolution(const HeckeElement& f1, const HeckeElement& f2, const SplitChars& ch, const FieldSpec& f) {
    return convolve(f1, dual_twist(f2, ch.product()), f);
}

/// kappa^G(y) O^G(y, f) at the split place: chi1(A2) chi2(D2) times the torus
/// integral of f(diag(a1,b1)^{-1} y diag(a2,b2)) chi1(a1/a2) chi2(b1/b2), with a1 = 1
/// fixing the central stabilizer. The prefactor is taken in the unsimplified
/// form chi1(D1) chi2(D2) chi1(det y)^{-1} when `literal_prefactor` is set.
inline CoeffValue orbital_split(const EMatrix& y, const HeckeElement& fn, const SplitChars& ch, const FieldSpec& f,
                                bool literal_prefactor = false) {
    detail::check_split_regular(y);
    if (fn.ring != Ring::F || fn.m != 2) throw std::invalid_argument("orbital_split: needs a Hecke element on GL_2(F)");
    Int p = f.p;
    EMatrix z = y.inverse();
    auto v = [&](const EElement& x) { return x.val(p).v; };
    CoeffValue pre;
    if (literal_prefactor) {
        pre = detail::cpow(ch.c1, v(y(1, 1))) * detail::cpow(ch.c2, v(z(1, 1))) * detail::cpow(ch.c1, -v(y.det()));
    } else {
        pre = detail::cpow(ch.c1, v(z(0, 0))) * detail::cpow(ch.c2, v(z(1, 1)));
    }
    if (fn.is_zero()) return {};
    auto [lo, hi] = fn.range();
    CoeffValue sum;
    int a2lo = lo - v(y(0, 0)), a2hi = hi + v(z(0, 0));
    int b2lo = lo - v(y(0, 1)), b2hi = hi + v(z(1, 0));
    for (int a2 = a2lo; a2 <= a2hi; ++a2)
        for (int b2 = b2lo; b2 <= b2hi; ++b2) {
            int b1lo = a2 - hi - v(z(0, 1)), b1hi = a2 + v(y(1, 0)) - lo;
            for (int b1 = b1lo; b1 <= b1hi; ++b1) {
                EMatrix X = EMatrix::diag({EElement(1), EElement(ppow(p, -b1))}) * y *
                            EMatrix::diag({EElement(ppow(p, a2)), EElement(ppow(p, b2))});
                CoeffValue val = fn.at(lattice_type(X, p));
                if (val.is_zero()) continue;
                sum += val * detail::cpow(ch.c1, -a2) * detail::cpow(ch.c2, b1 - b2);
            }
        }
    return pre * sum;
}

/// kappa^{G'}((x1, x2)) O^{G'}((x1, x2), (f1', f2')) straight from the definition
/// of the orbital integral on G' = GL_2 x GL_2 with H'' = GL_2(F) diagonal.
inline CoeffValue orbital_gprime_split(const EMatrix& x1, const EMatrix& x2, const HeckeElement& f1, const HeckeElement& f2,
                                       const SplitChars& ch, const FieldSpec& f) {
    EMatrix y = x1 * x2.inverse();
    detail::check_split_regular(y);
    if (f1.is_zero() || f2.is_zero()) return {};
    Int p = f.p;
    EMatrix z = y.inverse();
    auto v = [&](const EElement& x) { return x.val(p).v; };
    // kappa: chi1(D1) chi2(D2) for (x1 x2^{-1}, x2 x1^{-1})
    CoeffValue kappa = detail::cpow(ch.c1, v(y(1, 1))) * detail::cpow(ch.c2, v(z(1, 1)));
    auto [lo1, hi1] = f1.range();
    auto [lo2, hi2] = f2.range();
    // P = x1^{-1} diag(1, p^b1), Q = x2^{-1} diag(p^a2, p^b2); the sandwich for L = h'' o^2 is
    // nonempty only if P^{-1} Q in p^{lo1 - hi2} and Q^{-1} P in p^{lo2 - hi1}.
    int L0 = lo1 - hi2, L1 = lo2 - hi1;
    int a2lo = L0 - v(y(0, 0)), a2hi = v(z(0, 0)) - L1;
    int b2lo = L0 - v(y(0, 1)), b2hi = v(z(1, 0)) - L1;
    EMatrix x1i = x1.inverse(), x2i = x2.inverse();
    CoeffValue sum;
    for (int a2 = a2lo; a2 <= a2hi; ++a2)
        for (int b2 = b2lo; b2 <= b2hi; ++b2) {
            int b1lo = L1 + a2 - v(z(0, 1)), b1hi = v(y(1, 0)) + a2 - L0;
            for (int b1 = b1lo; b1 <= b1hi; ++b1) {
                EMatrix d1 = EMatrix::diag({EElement(1), EElement(ppow(p, b1))});
                EMatrix d2 = EMatrix::diag({EElement(ppow(p, a2)), EElement(ppow(p, b2))});
                EMatrix P = x1i * d1, Q = x2i * d2;
                EMatrix d1i = d1.inverse(), d2i = d2.inverse();
                for_each_sandwich(EElement(ppow(p, hi1)) * P, EElement(ppow(p, lo1)) * P, p, f.u, Ring::F,
                                  [&](const EMatrix& h) {
                    EMatrix M1 = d1i * x1 * h, M2 = d2i * x2 * h;
                    CoeffValue w1 = f1.at(lattice_type(M1, p));
                    if (w1.is_zero()) return;
                    CoeffValue w2 = f2.at(lattice_type(M2, p));
                    if (w2.is_zero()) return;
                    // (chi_{H'} chi^{-1})(h) = chi1(b2 / b1) chi2(b1 / b2); (chi eta~)^{-1} of h^{-1} x h''
                    CoeffValue w = w1 * w2 * detail::cpow(ch.c1, b2 - b1) * detail::cpow(ch.c2, b1 - b2) *
                                   detail::cpow(ch.c1, -v(M1.det())) * detail::cpow(ch.c2, -v(M2.det()));
                    sum += w;
                });
            }
        }
    return kappa * sum;
}

/// Offen representative for GL_2: g^{-1} theta(g) = [[0, p^lambda], [-p^{-lambda}, 0]], det g = 1.
inline EMatrix offen_representative(int lambda, const FieldSpec& f) {
    Rational P = ppow(f.p, lambda);
    return EMatrix{{EElement(1), EElement(-P)}, {EElement(P.inverse() / Rational(2)), EElement(Rational(1, 2))}};
}

/// sum over a, b in F^x / o^x of f(diag(a, b) g_lambda) chi1(a)^{-1} chi2(b)^{-1}.
inline CoeffValue period_offen(const HeckeElement& fn, int lambda, const SplitChars& ch, const FieldSpec& f) {
    if (fn.ring != Ring::F || fn.m != 2) throw std::invalid_argument("period_offen: needs a Hecke element on GL_2(F)");
    if (fn.is_zero()) return {};
    EMatrix g = offen_representative(lambda, f);
    auto [lo, hi] = fn.range();
    int ilo = std::max(lo, lo - lambda), jlo = std::max(lo, lo + lambda);
    CoeffValue s;
    for (int i = ilo; i + jlo <= 2 * hi; ++i)
        for (int j = jlo; i + j <= 2 * hi; ++j) {
            EMatrix X = EMatrix::diag({EElement(ppow(f.p, i)), EElement(ppow(f.p, j))}) * g;
            CoeffValue v = fn.at(lattice_type(X, f.p));
            if (!v.is_zero()) s += v * detail::cpow(ch.c1, -i) * detail::cpow(ch.c2, -j);
        }
    return s;
}

}  // namespace rtf
