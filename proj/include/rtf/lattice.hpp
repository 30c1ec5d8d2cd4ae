#pragma once

#include <algorithm>
#include <functional>
#include <vector>

#include "rtf/matrix.hpp"

namespace rtf {

/// Which ring of integers a lattice lives over.
enum class Ring { F, E };

/// Coset representatives of p^lo o / p^hi o (o = o_F or o_E); {0} when hi <= lo.
inline std::vector<EElement> residues(Int p, Int u, Ring ring, int lo, int hi) {
    std::vector<EElement> out;
    if (hi <= lo) {
        out.emplace_back(0);
        return out;
    }
    Int m = 1;
    for (int i = 0; i < hi - lo; ++i) m = detail::mul(m, p);
    Rational scale = ppow(p, lo);
    if (ring == Ring::F) {
        out.reserve(static_cast<std::size_t>(m));
        for (Int a = 0; a < m; ++a) out.emplace_back(Rational::from_int(a) * scale);
    } else {
        out.reserve(static_cast<std::size_t>(m * m));
        for (Int a = 0; a < m; ++a)
            for (Int b = 0; b < m; ++b) out.emplace_back(Rational::from_int(a) * scale, Rational::from_int(b) * scale, u);
    }
    return out;
}

/// Type of the lattice (or coset gK) spanned by the columns of g: elementary
/// divisor exponents in non-increasing order.
inline std::vector<int> lattice_type(const EMatrix& g, Int p) {
    auto e = g.elementary_divisors(p);
    return {e.rbegin(), e.rend()};
}

/// Type of g o^m when every elementary divisor is known to lie in [lo, hi].
/// Works in o / p^{hi - lo + 1}, where the answer is already determined, so
/// entries stay small however large the rational inputs are.
inline std::vector<int> lattice_type_bounded(const EMatrix& g, Int p, int lo, int hi) {
    int m = g.rows();
    int N = hi - lo + 1;
    Int mod = 1;
    for (int i = 0; i < N; ++i) mod = detail::mul(mod, p);
    Int u = 0;
    Rational scale = ppow(p, -lo);
    auto red = [&](const Rational& x) -> Int {
        if (x.is_zero()) return 0;
        Rational y = x * scale;
        if (y.val(p).v < 0) throw std::domain_error("lattice_type_bounded: entry below the window");
        Int d = y.den() % mod;
        return detail::mul(((y.num() % mod) + mod) % mod, inverse_mod(d, mod)) % mod;
    };
    // entries a + b sqrt(u) as integer pairs modulo p^N
    std::vector<std::vector<std::pair<Int, Int>>> a(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            const EElement& x = g(i, j);
            if (x.u() != 0) u = x.u();
            a[static_cast<std::size_t>(i)].emplace_back(red(x.a()), red(x.b()));
        }
    auto mm = [&](Int x, Int y) { return detail::mul(x, y) % mod; };
    auto vp = [&](Int x) {
        if (x == 0) return N;
        int v = 0;
        while (x % p == 0) {
            x /= p;
            ++v;
        }
        return v;
    };
    auto val = [&](const std::pair<Int, Int>& x) { return std::min(vp(x.first), vp(x.second)); };
    auto mul = [&](const std::pair<Int, Int>& x, const std::pair<Int, Int>& y) -> std::pair<Int, Int> {
        Int uu = ((u % mod) + mod) % mod;
        return {(mm(x.first, y.first) + mm(uu, mm(x.second, y.second))) % mod,
                (mm(x.first, y.second) + mm(x.second, y.first)) % mod};
    };
    std::vector<int> e;
    std::vector<bool> row_used(static_cast<std::size_t>(m)), col_used(static_cast<std::size_t>(m));
    for (int k = 0; k < m; ++k) {
        int pi = -1, pj = -1, best = N + 1;
        for (int i = 0; i < m; ++i)
            if (!row_used[static_cast<std::size_t>(i)])
                for (int j = 0; j < m; ++j)
                    if (!col_used[static_cast<std::size_t>(j)]) {
                        int v = val(a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                        if (v < best) {
                            best = v;
                            pi = i;
                            pj = j;
                        }
                    }
        if (best >= N) throw std::domain_error("lattice_type_bounded: elementary divisor above the window");
        e.push_back(best + lo);
        row_used[static_cast<std::size_t>(pi)] = col_used[static_cast<std::size_t>(pj)] = true;
        // pivot = p^best w; eliminate the pivot column from the other rows with f = (x / p^best) w^{-1}
        Int pb = 1;
        for (int i = 0; i < best; ++i) pb *= p;
        auto piv = a[static_cast<std::size_t>(pi)][static_cast<std::size_t>(pj)];
        std::pair<Int, Int> w{piv.first / pb, piv.second / pb};
        Int nrm = ((mm(w.first, w.first) - mm(((u % mod) + mod) % mod, mm(w.second, w.second))) % mod + mod) % mod;
        Int ninv = inverse_mod(nrm, mod);
        std::pair<Int, Int> winv{mm(w.first, ninv), (mod - mm(w.second, ninv)) % mod};
        for (int i = 0; i < m; ++i) {
            if (row_used[static_cast<std::size_t>(i)]) continue;
            auto x = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(pj)];
            if (x.first == 0 && x.second == 0) continue;
            auto f = mul({x.first / pb, x.second / pb}, winv);
            for (int j = 0; j < m; ++j) {
                auto t = mul(f, a[static_cast<std::size_t>(pi)][static_cast<std::size_t>(j)]);
                auto& y = a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                y = {(y.first - t.first + mod) % mod, (y.second - t.second + mod) % mod};
            }
        }
    }
    std::sort(e.rbegin(), e.rend());
    return e;
}

/// L U D = M with L invertible over o and D diagonal; returns U = L^{-1} and the
/// exponents of D, so that M o^m = U diag(p^e) o^m.
struct SmithResult {
    EMatrix U;
    std::vector<int> e;
};

inline SmithResult smith_left(const EMatrix& M, Int p) {
    int n = M.rows();
    EMatrix m = M;
    EMatrix L = EMatrix::identity(n);
    std::vector<int> e(static_cast<std::size_t>(n));
    // column permutation/ops are right multiplications by GL(o) and do not move the lattice
    for (int k = 0; k < n; ++k) {
        int pi = -1, pj = -1;
        Val best;
        for (int i = k; i < n; ++i)
            for (int j = k; j < n; ++j) {
                Val v = m(i, j).val(p);
                if (v < best) {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        if (best.infinite()) throw std::domain_error("smith_left: singular matrix");
        e[static_cast<std::size_t>(k)] = best.v;
        if (pi != k)
            for (int j = 0; j < n; ++j) {
                std::swap(m(pi, j), m(k, j));
                std::swap(L(pi, j), L(k, j));
            }
        if (pj != k)
            for (int i = 0; i < n; ++i) std::swap(m(i, pj), m(i, k));
        EElement inv = m(k, k).inverse();
        for (int i = k + 1; i < n; ++i) {
            if (m(i, k).is_zero()) continue;
            EElement f = m(i, k) * inv;
            for (int j = 0; j < n; ++j) {
                m(i, j) -= f * m(k, j);
                L(i, j) -= f * L(k, j);
            }
        }
        for (int j = k + 1; j < n; ++j) {
            if (m(k, j).is_zero()) continue;
            EElement f = m(k, j) * inv;
            for (int i = 0; i < n; ++i) m(i, j) -= f * m(i, k);
        }
    }
    return {L.inverse(), e};
}

using LatticeFn = std::function<void(const EMatrix&)>;

inline void for_each_hnf_with_diag(const std::vector<int>& mu, int lo, Int p, Int u, Ring ring, const LatticeFn& fn);

/// All h (canonical upper-triangular) with diag(p^e) o^m ⊆ h o^m ⊆ o^m.
inline void for_each_between_diag(const std::vector<int>& e, Int p, Int u, Ring ring, const LatticeFn& fn) {
    int m = static_cast<int>(e.size());
    if (m == 1) {
        for (int mu = 0; mu <= e[0]; ++mu) {
            EMatrix b(1, 1);
            b(0, 0) = EElement(ppow(p, mu));
            fn(b);
        }
        return;
    }
    if (m == 2) {
        int e1 = e[0], e2 = e[1];
        for (int mu1 = 0; mu1 <= e1; ++mu1)
            for (int mu2 = 0; mu2 <= e2; ++mu2) {
                int xlo = std::max(0, mu1 - e2 + mu2);
                for (const auto& x : residues(p, u, ring, xlo, mu1)) {
                    EMatrix h(2, 2);
                    h(0, 0) = EElement(ppow(p, mu1));
                    h(0, 1) = x;
                    h(1, 1) = EElement(ppow(p, mu2));
                    fn(h);
                }
            }
        return;
    }
    EMatrix D(m, m);
    for (int i = 0; i < m; ++i) D(i, i) = EElement(ppow(p, e[static_cast<std::size_t>(i)]));
    std::vector<int> mu(static_cast<std::size_t>(m));
    std::function<void(int)> rec = [&](int i) {
        if (i == m) {
            for_each_hnf_with_diag(mu, 0, p, u, ring, [&](const EMatrix& h) {
                if ((h.inverse() * D).integral(p)) fn(h);
            });
            return;
        }
        for (int v = 0; v <= e[static_cast<std::size_t>(i)]; ++v) {
            mu[static_cast<std::size_t>(i)] = v;
            rec(i + 1);
        }
    };
    rec(0);
}

/// All lattices N (as basis matrices) with inner ⊆ N ⊆ outer, each given by a
/// canonical basis.
inline void for_each_sandwich(const EMatrix& inner, const EMatrix& outer, Int p, Int u, Ring ring, const LatticeFn& fn) {
    EMatrix rel = outer.inverse() * inner;
    if (!rel.integral(p)) return;
    SmithResult s = smith_left(rel, p);
    EMatrix P = outer * s.U;
    for_each_between_diag(s.e, p, u, ring, [&](const EMatrix& h) { fn(P * h); });
}

/// Number of lattices strictly handled by for_each_sandwich (for diagnostics).
inline long long count_sandwich(const EMatrix& inner, const EMatrix& outer, Int p, Int u, Ring ring) {
    long long n = 0;
    for_each_sandwich(inner, outer, p, u, ring, [&](const EMatrix&) { ++n; });
    return n;
}

/// o-span of the columns of `gens` (full row rank), as a square lower-triangular basis.
inline EMatrix lattice_span(const EMatrix& gens, Int p) {
    int m = gens.rows(), k = gens.cols();
    EMatrix g = gens;
    for (int r = 0; r < m; ++r) {
        int best = -1;
        Val bv;
        for (int j = r; j < k; ++j) {
            Val v = g(r, j).val(p);
            if (v < bv) {
                bv = v;
                best = j;
            }
        }
        if (best < 0) throw std::domain_error("lattice_span: generators do not span");
        if (best != r)
            for (int i = 0; i < m; ++i) std::swap(g(i, r), g(i, best));
        EElement inv = g(r, r).inverse();
        for (int j = r + 1; j < k; ++j) {
            if (g(r, j).is_zero()) continue;
            EElement t = g(r, j) * inv;
            for (int i = r; i < m; ++i) g(i, j) -= t * g(i, r);
        }
    }
    // normalise: pivot p^v, entries below a pivot reduced by the later columns
    EMatrix b = g.block(0, 0, m, m);
    for (int r = 0; r < m; ++r) {
        int v = b(r, r).val(p).v;
        EElement ui = (b(r, r) * EElement(ppow(p, -v))).inverse();
        for (int i = r; i < m; ++i) b(i, r) = b(i, r) * ui;
    }
    for (int r = m - 2; r >= 0; --r)
        for (int i = r + 1; i < m; ++i) {
            int mu = b(i, i).val(p).v;
            const EElement& x = b(i, r);
            EElement rep(reduce_mod_ppow(x.a(), p, mu), reduce_mod_ppow(x.b(), p, mu), x.u());
            EElement q = (x - rep) / b(i, i);
            if (q.is_zero()) continue;
            for (int k = i; k < m; ++k) b(k, r) = b(k, r) - q * b(k, i);
        }
    return b;
}

/// Columns are the rows of the F- and sqrt(u)-parts of Bi.
inline EMatrix rational_generators(const EMatrix& Bi) {
    int m = Bi.rows();
    EMatrix gens(m, 2 * m);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            gens(j, i) = EElement(Bi(i, j).a());
            gens(j, m + i) = EElement(Bi(i, j).b());
        }
    return gens;
}

/// Basis of the o_F-lattice (B o_E^m) ∩ F^m, given Bi = B^{-1}: x lies in it iff
/// every row of the two parts of Bi pairs integrally with x.
inline EMatrix rational_part_inv(const EMatrix& Bi, Int p) {
    return lattice_span(rational_generators(Bi), p).transpose().inverse();
}

inline EMatrix rational_part(const EMatrix& B, Int p) { return rational_part_inv(B.inverse(), p); }

/// Basis of the smallest o_F-lattice M with M o_E ⊇ B o_E^m.
inline EMatrix rational_hull(const EMatrix& B, Int p) {
    return rational_part_inv(B.transpose(), p).transpose().inverse();
}

/// g o^m = o^m.
inline bool unimodular(const EMatrix& g, Int p) {
    if (!g.integral(p)) return false;
    try {
        lattice_type_bounded(g, p, 0, 0);
        return true;
    } catch (const std::domain_error&) {
        return false;
    }
}

/// Upper-triangular Hermite normal forms with diagonal p^mu (mu given) and
/// entry (i, j) reduced modulo p^{mu_i}, drawn from p^{lo} o.
inline void for_each_hnf_with_diag(const std::vector<int>& mu, int lo, Int p, Int u, Ring ring, const LatticeFn& fn) {
    int m = static_cast<int>(mu.size());
    EMatrix h(m, m);
    for (int i = 0; i < m; ++i) h(i, i) = EElement(ppow(p, mu[static_cast<std::size_t>(i)]));
    std::vector<std::pair<int, int>> slots;
    for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j) slots.emplace_back(i, j);
    std::vector<std::vector<EElement>> choices;
    for (auto [i, j] : slots) choices.push_back(residues(p, u, ring, lo, mu[static_cast<std::size_t>(i)]));
    std::function<void(std::size_t)> rec = [&](std::size_t k) {
        if (k == slots.size()) {
            fn(h);
            return;
        }
        auto [i, j] = slots[k];
        for (const auto& x : choices[k]) {
            h(i, j) = x;
            rec(k + 1);
        }
    };
    rec(0);
}

/// All lattices of type lambda (dominant, non-increasing) in F^m or E^m, each
/// once, via Hermite normal forms; `diag_fn` receives the HNF diagonal too.
inline void for_each_type_lattice(const std::vector<int>& lambda, Int p, Int u, Ring ring,
                                  const std::function<void(const EMatrix&, const std::vector<int>&)>& fn) {
    int m = static_cast<int>(lambda.size());
    if (m == 0) return;
    int lmax = lambda.front(), lmin = lambda.back();
    int total = 0;
    for (int x : lambda) total += x;
    std::vector<int> mu(static_cast<std::size_t>(m));
    std::function<void(int, int)> rec = [&](int i, int sum) {
        if (i == m) {
            if (sum != total) return;
            for_each_hnf_with_diag(mu, lmin, p, u, ring, [&](const EMatrix& h) {
                if (lattice_type(h, p) == lambda) fn(h, mu);
            });
            return;
        }
        for (int v = lmin; v <= lmax; ++v) {
            mu[static_cast<std::size_t>(i)] = v;
            rec(i + 1, sum + v);
        }
    };
    rec(0, 0);
}

/// Lattices L with p^B o^m ⊆ L ⊆ o^m and L not inside p o^m: representatives
/// of all lattices up to scaling by p^Z whose "height" is at most B.
inline void for_each_primitive(int m, int B, Int p, Int u, Ring ring, const LatticeFn& fn) {
    EMatrix outer = EMatrix::identity(m);
    EMatrix inner = EMatrix::scalar(m, EElement(ppow(p, B)));
    for_each_sandwich(inner, outer, p, u, ring, [&](const EMatrix& b) {
        if (b.min_val(p).v == 0) fn(b);
    });
}

/// Minimal valuation of the i-th coordinate over the lattice spanned by b.
inline int coordinate_min(const EMatrix& b, int row, Int p) {
    Val v;
    for (int j = 0; j < b.cols(); ++j) v = std::min(v, b(row, j).val(p));
    return v.v;
}

}  // namespace rtf
