#include <gtest/gtest.h>

#include <random>
#include <set>

#include "rtf/integrate.hpp"

using namespace rtf;

namespace {

const FieldSpec F3(3, -1);
const CoeffValue C = Laurent::var(sym::c);

EMatrix m1(const EElement& x) {
    EMatrix m(1, 1);
    m(0, 0) = x;
    return m;
}

// random element of GL_m(o_E)
EMatrix random_k(std::mt19937_64& rng, const FieldSpec& f, int m) {
    std::uniform_int_distribution<int> d(-4, 4);
    while (true) {
        EMatrix k(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) k(i, j) = f.make(d(rng), d(rng));
        if (!k.det().is_zero() && k.det().val(f.p).v == 0) return k;
    }
}

OrbitalOptions opts(int B = 3, int max_B = 7) {
    OrbitalOptions o;
    o.window.B = B;
    o.max_B = max_B;
    o.jobs = 4;
    return o;
}

// value of the unit orbital integral on S' for n = 1, from the lattice count by hand
CoeffValue sprime_unit_n1(const EElement& alpha, const FieldSpec& f) {
    int v = alpha.val(f.p).v;
    if (v < 0) return {};
    if (v > 0) return CoeffValue(1);
    int w = f.val(Rational(1) - alpha.norm()).v;
    return CoeffValue(w % 2 == 0 ? 1 : 0);
}

}  // namespace

TEST(EnumCosets, Examples) {
    auto r1 = enum_cosets(Ring::F, 1, -1, 1, F3);
    ASSERT_EQ(r1.size(), 3u);
    std::set<int> vals;
    for (const auto& g : r1) vals.insert(g(0, 0).val(3).v);
    EXPECT_EQ(vals, (std::set<int>{-1, 0, 1}));
    auto r2 = enum_cosets(Ring::F, 2, 0, 1, F3);
    EXPECT_EQ(r2.size(), 6u);
    EXPECT_EQ(static_cast<long long>(r2.size()),
              count_sandwich(EMatrix::scalar(2, EElement(3)), EMatrix::identity(2), 3, -1, Ring::F));
    for (std::size_t i = 0; i < r2.size(); ++i)
        for (std::size_t j = i + 1; j < r2.size(); ++j) EXPECT_FALSE(same_lattice(r2[i], r2[j], 3));
    // over E the middle layer has q + 1 = 10 lattices
    EXPECT_EQ(enum_cosets(Ring::E, 2, 0, 1, F3).size(), 12u);
}

TEST(Hnf, CanonicalUnderRightK) {
    std::mt19937_64 rng(1);
    OrbitGenerator gen(F3, 2);
    for (int i = 0; i < 30; ++i) {
        EMatrix g = gen.gl_E(2, 3);
        EMatrix h = hnf(g, 3);
        EXPECT_EQ(hnf(h, 3), h);
        EXPECT_EQ(hnf(g * random_k(rng, F3, 2), 3), h);
        EXPECT_TRUE(same_lattice(g, h, 3));
    }
}

TEST(LatticeTypeBounded, AgreesWithExactSmith) {
    OrbitGenerator gen(F3, 3);
    for (int i = 0; i < 120; ++i) {
        int m = 2 + i % 3;
        EMatrix g = gen.gl_E(m, 4);
        auto t = lattice_type(g, 3);
        EXPECT_EQ(lattice_type_bounded(g, 3, t.back(), t.front() + i % 2), t);
    }
}

TEST(RationalPart, IntersectionAndHull) {
    OrbitGenerator gen(F3, 4);
    for (int i = 0; i < 20; ++i) {
        EMatrix B = gen.gl_E(2, 3);
        EMatrix r = rational_part(B, 3), h = rational_hull(B, 3);
        EXPECT_TRUE(r.in_F());
        EXPECT_TRUE(h.in_F());
        // r o_E ⊆ B o_E ⊆ h o_E
        EXPECT_TRUE((B.inverse() * r).integral(3));
        EXPECT_TRUE((h.inverse() * B).integral(3));
        // maximality: every F-lattice strictly between r and p^{-1} r leaves B o_E
        for_each_sandwich(r, EElement(Rational(1, 3)) * r, 3, -1, Ring::F, [&](const EMatrix& M) {
            if (same_lattice(M, r, 3)) return;
            EXPECT_FALSE((B.inverse() * M).integral(3));
        });
    }
}

TEST(TwistedLatticeSum, DescentEvaluationMatchesBruteForce) {
    OrbitGenerator gen(F3, 5);
    std::vector<HeckeElement> fs = {HeckeElement::T(Ring::E, {1, 0}),
                                    HeckeElement::T(Ring::E, {1, -1}) + HeckeElement::T(Ring::E, {0, 0}, CoeffValue(5)),
                                    HeckeElement::unit(Ring::E, 2)};
    int nonzero = 0;
    for (const auto& fp : fs) {
        TwistedLatticeSum ts(fp, F3, UnramChar::symbolic());
        for (int i = 0; i < 20; ++i) {
            EMatrix g = gen.gl_E(2, 2);
            if (i % 3 == 0) g = EMatrix::diag({EElement(3), EElement(1)}) * g;
            EMatrix X = g * g.conj().inverse();
            CoeffValue v = ts.brute(X);
            EXPECT_EQ(ts.at_form(g), v);
            EXPECT_EQ(ts.at_form(hilbert90(X, F3)), v);
            if (!v.is_zero()) ++nonzero;
        }
    }
    EXPECT_GT(nonzero, 20);
    TwistedLatticeSum t4(HeckeElement::T(Ring::E, {1, 0, 0, 0}), F3, UnramChar::symbolic());
    for (int i = 0; i < 3; ++i) {
        EMatrix g = gen.gl_E(4, 1);
        EXPECT_EQ(t4.at_form(g), t4.brute(g * g.conj().inverse()));
    }
}

TEST(QuotientWeight, EqualsTorusOrbitSize) {
    // elliptic tori of both kinds and a split torus with rational eigenvalues
    std::vector<EMatrix> xs = {EMatrix{{EElement(0), EElement(-1)}, {EElement(1), EElement(0)}},
                               EMatrix{{EElement(0), EElement(3)}, {EElement(1), EElement(0)}},
                               EMatrix{{EElement(1), EElement(1)}, {EElement(0), EElement(2)}}};
    OrbitGenerator gen(F3, 6);
    int nontrivial = 0;
    for (const auto& x : xs) {
        TorusDesc T = torus_of(x, F3);
        EXPECT_EQ(quotient_weight(T, EMatrix::identity(2), F3), Rational(1));
        for (int i = 0; i < 8; ++i) {
            EMatrix h = EMatrix{{EElement(1), F3.make(i % 3, i / 3 % 2)}, {EElement(0), EElement(ppow(3, 1 + i % 2))}};
            Val mv = (h.inverse() * T.omega * h).min_val(3);
            int k = std::max(0, -mv.v);
            if (k > 2) continue;
            // T_c = {a + b omega} mod p^k acting on h o
            std::vector<EMatrix> orbit;
            for (const auto& a : residues(3, -1, Ring::F, 0, k + 1))
                for (const auto& b : residues(3, -1, Ring::F, 0, k + 1)) {
                    EMatrix t = EMatrix::scalar(2, a) + b * T.omega;
                    if (t.det().is_zero() || t.det().val(3).v != 0) continue;
                    EMatrix L = t * h;
                    bool seen = false;
                    for (const auto& o : orbit) seen = seen || same_lattice(o, L, 3);
                    if (!seen) orbit.push_back(L);
                }
            EXPECT_EQ(Rational(static_cast<long long>(orbit.size())), quotient_weight(T, h, F3));
            if (orbit.size() > 1) ++nontrivial;
            // constant along the orbit
            for (const auto& o : orbit) EXPECT_EQ(quotient_weight(T, o, F3), quotient_weight(T, h, F3));
        }
    }
    EXPECT_GE(nontrivial, 5);
}

TEST(FdLattices, PruningLosesNothing) {
    OrbitGenerator gen(F3, 7);
    for (int i = 0; i < 3; ++i) {
        auto mp = gen.pair_elliptic(Rational(-1));
        if (!mp) continue;
        OrbitSPrime o(F3, mp->alpha);
        TorusDesc T = torus_of(o.aabar, F3);
        OuterFilter flt{o.point().D(), true, 0};
        std::vector<EMatrix> a, b;
        for_each_fd_lattice(T, 3, F3, flt, [&](const EMatrix& L, int) { a.push_back(L); });
        for_each_fd_lattice(T, 3, F3, [&](const EMatrix& L, int) {
            if (flt.holds(L, 0, 3)) b.push_back(L);
        });
        ASSERT_EQ(a.size(), b.size());
        for (const auto& L : a) {
            bool found = false;
            for (const auto& M : b) found = found || same_lattice(L, M, 3);
            EXPECT_TRUE(found);
        }
    }
}

TEST(OrbitalSPrime, NOneClosedForm) {
    for (Int p : {3, 5}) {
        FieldSpec f(p, default_nonresidue(p));
        OrbitGenerator gen(f, 8);
        for (int i = 0; i < 30; ++i) {
            EElement a = gen.element_with_val(i % 4 - 1);
            if ((Rational(1) - a.norm()).is_zero()) continue;
            OrbitSPrime o(f, m1(a));
            auto r = orbital_sprime(o, HeckeElement::unit(Ring::E, 2), opts());
            EXPECT_TRUE(r.certified);
            EXPECT_EQ(r.value, sprime_unit_n1(a, f)) << a;
        }
    }
    // alpha = 1/3 vanishes
    OrbitSPrime o(F3, m1(EElement(Rational(1, 3))));
    EXPECT_TRUE(orbital_sprime(o, HeckeElement::unit(Ring::E, 2)).value.is_zero());
}

TEST(FundamentalLemma, NOneMatchedPairs) {
    for (Int p : {3, 5}) {
        FieldSpec f(p, default_nonresidue(p));
        OrbitGenerator gen(f, 9);
        for (int i = 0; i < 12; ++i) {
            MatchedPair mp = gen.pair_n1(2);
            OrbitSPrime a(f, mp.alpha);
            OrbitG b(f, mp.beta);
            auto L = orbital_sprime(a, HeckeElement::unit(Ring::E, 2), opts());
            auto R = orbital_g(b, HeckeElement::unit(Ring::F, 2), opts());
            ASSERT_TRUE(L.certified && R.certified);
            EXPECT_EQ(kappa_sprime(a.point(), f) * L.value, kappa_g(b.point(), f) * R.value);
        }
    }
    // alpha = 1 + sqrt(u), beta = (1 + sqrt(u)) / 2
    OrbitSPrime a(F3, m1(F3.parse("1+r")));
    OrbitG b(F3, m1(F3.parse("1/2+1/2r")));
    auto L = orbital_sprime(a, HeckeElement::unit(Ring::E, 2));
    auto R = orbital_g(b, HeckeElement::unit(Ring::F, 2));
    EXPECT_EQ(kappa_sprime(a.point(), F3) * L.value, kappa_g(b.point(), F3) * R.value);
    EXPECT_EQ(L.value, CoeffValue(1));
}

TEST(FundamentalLemma, NTwoSmall) {
    OrbitGenerator gen(F3, 10);
    int done = 0;
    for (const Rational& d : {Rational(-1), Rational(3)}) {
        for (int tries = 0; tries < 50; ++tries) {
            auto mp = gen.pair_elliptic(d);
            if (!mp) continue;
            OrbitSPrime a(F3, mp->alpha);
            if (a.x_exp < 0 || a.y_exp < -2) continue;
            OrbitG b(F3, mp->beta);
            auto L = orbital_sprime(a, HeckeElement::unit(Ring::E, 4), opts());
            auto R = orbital_g(b, HeckeElement::unit(Ring::F, 4), opts());
            ASSERT_TRUE(L.certified && R.certified);
            EXPECT_EQ(kappa_sprime(a.point(), F3) * L.value, kappa_g(b.point(), F3) * R.value);
            ++done;
            break;
        }
    }
    MatchedPair sp = gen.pair_split();
    OrbitSPrime a(F3, sp.alpha);
    OrbitG b(F3, sp.beta);
    auto L = orbital_sprime(a, HeckeElement::unit(Ring::E, 4), opts());
    auto R = orbital_g(b, HeckeElement::unit(Ring::F, 4), opts());
    EXPECT_EQ(kappa_sprime(a.point(), F3) * L.value, kappa_g(b.point(), F3) * R.value);
    EXPECT_EQ(done, 2);
}

TEST(Vanishing, NonMatchableNOne) {
    for (Int p : {3, 5}) {
        FieldSpec f(p, default_nonresidue(p));
        OrbitGenerator gen(f, 11);
        for (int i = 0; i < 8; ++i) {
            OrbitSPrime a(f, gen.nonmatchable_alpha_n1());
            EXPECT_EQ(a.matchable, Tri::no);
            EXPECT_TRUE(orbital_sprime(a, HeckeElement::unit(Ring::E, 2)).value.is_zero());
            OrbitG b(f, gen.nonmatchable_beta_n1());
            EXPECT_EQ(b.matchable, Tri::no);
            EXPECT_TRUE(orbital_g(b, HeckeElement::unit(Ring::F, 2)).value.is_zero());
        }
    }
}

TEST(Twist, KappaTimesOrbitalIsInvariant) {
    std::mt19937_64 rng(12);
    OrbitGenerator gen(F3, 12);
    for (int i = 0; i < 8; ++i) {
        MatchedPair mp = gen.pair_n1(1);
        OrbitSPrime a(F3, mp.alpha);
        OrbitG b(F3, mp.beta);
        Twist tw{gen.gl_E(1, 3), gen.gl_E(1, 3)};
        if (i % 2) tw.k1 = EElement(3) * tw.k1;
        SPrimePoint st = a.point().twist(tw.k1, tw.k2);
        HeckeElement fe = HeckeElement::T(Ring::E, {1, 0});
        for (const HeckeElement& fp : {HeckeElement::unit(Ring::E, 2), fe}) {
            auto base = orbital_sprime(a, fp, opts());
            auto twisted = orbital_sprime(a, fp, opts(), tw);
            EXPECT_EQ(kappa_sprime(st, F3) * twisted.value, kappa_sprime(a.point(), F3) * base.value);
            int sgn = detail::val_det(tw.k1 * tw.k2, 3) % 2 == 0 ? 1 : -1;
            EXPECT_EQ(twisted.value, CoeffValue(sgn) * base.value);
        }
        GPoint y = b.point();
        GPoint yt = GPoint::from_matrix(h_of(tw.k1) * y.assemble() * h_of(tw.k2).inverse(), y.eps);
        auto gb = orbital_g(b, HeckeElement::unit(Ring::F, 2), opts());
        auto gt = orbital_g(b, HeckeElement::unit(Ring::F, 2), opts(), tw);
        EXPECT_EQ(kappa_g(yt, F3) * gt.value, kappa_g(y, F3) * gb.value);
    }
    // n = 2 elliptic
    for (int tries = 0; tries < 30; ++tries) {
        auto mp = gen.pair_elliptic(Rational(-1));
        if (!mp) continue;
        OrbitSPrime a(F3, mp->alpha);
        if (a.x_exp < 0 || a.y_exp < -2) continue;
        Twist tw{random_k(rng, F3, 2), gen.gl_E(2, 1)};
        auto base = orbital_sprime(a, HeckeElement::unit(Ring::E, 4), opts());
        auto twisted = orbital_sprime(a, HeckeElement::unit(Ring::E, 4), opts(), tw);
        EXPECT_EQ(kappa_sprime(a.point().twist(tw.k1, tw.k2), F3) * twisted.value, kappa_sprime(a.point(), F3) * base.value);
        OrbitG b(F3, mp->beta);
        Twist tg{gen.gl_E(2, 1), random_k(rng, F3, 2)};
        auto gb = orbital_g(b, HeckeElement::unit(Ring::F, 4), opts());
        auto gt = orbital_g(b, HeckeElement::unit(Ring::F, 4), opts(), tg);
        GPoint yt = GPoint::from_matrix(h_of(tg.k1) * b.point().assemble() * h_of(tg.k2).inverse(), F3.eps);
        EXPECT_EQ(kappa_g(yt, F3) * gt.value, kappa_g(b.point(), F3) * gb.value);
        break;
    }
}

TEST(Orbital, LinearInTheTestFunction) {
    OrbitGenerator gen(F3, 13);
    HeckeElement f1 = HeckeElement::T(Ring::E, {1, 0}), f2 = HeckeElement::T(Ring::E, {1, -1});
    HeckeElement g1 = HeckeElement::T(Ring::F, {1, 0}), g2 = HeckeElement::T(Ring::F, {0, -1});
    for (int i = 0; i < 5; ++i) {
        MatchedPair mp = gen.pair_n1(1);
        OrbitSPrime a(F3, mp.alpha);
        OrbitG b(F3, mp.beta);
        CoeffValue three(3);
        EXPECT_EQ(orbital_sprime(a, three * f1 + f2).value,
                  three * orbital_sprime(a, f1).value + orbital_sprime(a, f2).value);
        EXPECT_EQ(orbital_g(b, three * g1 + g2).value, three * orbital_g(b, g1).value + orbital_g(b, g2).value);
    }
}

TEST(Involution, TransposeIdentityNOne) {
    for (Int p : {3, 5}) {
        FieldSpec f(p, default_nonresidue(p));
        OrbitGenerator gen(f, 14);
        std::vector<HeckeElement> fs = {HeckeElement::unit(Ring::E, 2), HeckeElement::T(Ring::E, {1, 0}),
                                        HeckeElement::T(Ring::E, {1, -1})};
        for (int i = 0; i < 8; ++i) {
            EElement a = gen.element_with_val(i % 3);
            if ((Rational(1) - a.norm()).is_zero()) continue;
            OrbitSPrime o(f, m1(a));
            TorusDesc T = torus_of(o.aabar, f);
            int eta = f.eta(Rational(1) - a.norm());
            for (const auto& fp : fs) {
                CoeffValue v = orbital_sprime_at(o.point(), T, fp, f).value;
                CoeffValue vt = orbital_sprime_at(o.point().transpose(), T, fp, f).value;
                EXPECT_EQ(vt, CoeffValue(eta) * v);
            }
        }
    }
}

TEST(Split, ChiConvolutionMatches) {
    SplitChars ch;
    OrbitGenerator gen(F3, 15);
    std::vector<std::pair<HeckeElement, HeckeElement>> fs = {
        {HeckeElement::unit(Ring::F, 2), HeckeElement::unit(Ring::F, 2)},
        {HeckeElement::T(Ring::F, {1, 0}), HeckeElement::T(Ring::F, {0, -1})}};
    int checked = 0;
    for (const auto& [f1, f2] : fs)
        for (int i = 0; i < 10; ++i) {
            EMatrix x1 = gen.gl_F(2, 4), x2 = gen.gl_F(2, 4);
            if (i % 2) x1 = EMatrix::diag({EElement(3), EElement(1)}) * x1;
            try {
                HeckeElement fn = chi_convolution(f1, f2, ch, F3);
                CoeffValue lhs = orbital_gprime_split(x1, x2, f1, f2, ch, F3);
                EXPECT_EQ(lhs, orbital_split(x1 * x2.inverse(), fn, ch, F3));
                EXPECT_EQ(orbital_split(x1 * x2.inverse(), fn, ch, F3, true), orbital_split(x1 * x2.inverse(), fn, ch, F3));
                ++checked;
            } catch (const std::domain_error&) {
            }
        }
    EXPECT_GE(checked, 10);
    EXPECT_THROW(orbital_split(EMatrix::identity(2), HeckeElement::unit(Ring::F, 2), ch, F3), std::domain_error);
}

TEST(Split, MinusPartsVanishAndPlusPartsAgree) {
    SplitChars ch;
    OrbitGenerator gen(F3, 16);
    HeckeElement g = HeckeElement::T(Ring::F, {1, 0}) + HeckeElement::T(Ring::F, {2, -1}, CoeffValue(3));
    auto [gp, gm] = pm_split(g, ch.product());
    HeckeElement u = HeckeElement::unit(Ring::F, 2);
    auto [hp, hm] = pm_split(HeckeElement::T(Ring::F, {0, -1}), ch.product());
    int checked = 0;
    for (int i = 0; i < 10; ++i) {
        EMatrix x1 = gen.gl_F(2, 4), x2 = gen.gl_F(2, 4);
        try {
            EXPECT_TRUE(orbital_gprime_split(x1, x2, gm, u, ch, F3).is_zero());
            EXPECT_TRUE(orbital_split(x1 * x2.inverse(), chi_convolution(gm, u, ch, F3), ch, F3).is_zero());
            EXPECT_EQ(orbital_split(x1 * x2.inverse(), bc(gp, hp, F3), ch, F3),
                      orbital_gprime_split(x1, x2, gp, hp, ch, F3));
            ++checked;
        } catch (const std::domain_error&) {
        }
    }
    EXPECT_GE(checked, 5);
}

TEST(Offen, PeriodVanishesOnMinusPart) {
    SplitChars ch;
    HeckeElement g = HeckeElement::T(Ring::F, {1, 0}) + HeckeElement::T(Ring::F, {2, -1}, CoeffValue(3));
    auto [gp, gm] = pm_split(g, ch.product());
    auto [gp1, gm1] = pm_split(HeckeElement::T(Ring::F, {1, 0}), CoeffValue(1));
    for (int lam = 0; lam <= 2; ++lam) {
        EXPECT_TRUE(period_offen(gm, lam, ch, F3).is_zero());
        SplitChars triv{CoeffValue(1), CoeffValue(1)};
        EXPECT_TRUE(period_offen(gm1, lam, triv, F3).is_zero());
        EXPECT_EQ(period_offen(CoeffValue(2) * gp + gm, lam, ch, F3),
                  CoeffValue(2) * period_offen(gp, lam, ch, F3) + period_offen(gm, lam, ch, F3));
    }
    EXPECT_EQ(period_offen(HeckeElement::unit(Ring::F, 2), 0, ch, F3), CoeffValue(1));
    // g^{-1} theta(g) is antidiagonal with the prescribed entries
    EMatrix r = offen_representative(2, F3);
    EXPECT_EQ(r.det(), EElement(1));
}

TEST(Certification, UndersizedWindowFailsLoudly) {
    OrbitGenerator gen(F3, 17);
    std::optional<OrbitSPrime> a;
    while (!a) {
        auto mp = gen.pair_elliptic(Rational(-1), 1);
        if (!mp) continue;
        OrbitSPrime o(F3, mp->alpha);
        if (o.x_exp == 0 && o.y_exp <= -4 && o.y_exp >= -6) a = o;
    }
    OrbitalOptions o;
    o.window.margin = 2;
    o.jobs = 4;
    long long prev = -1;
    int failed = 0;
    for (int B = 0; B <= 2; ++B) {
        o.window.B = B;
        OrbitalResult rb = orbital_sprime(*a, HeckeElement::unit(Ring::E, 4), o);
        EXPECT_GE(rb.visited, prev);
        prev = rb.visited;
        if (!rb.certified) {
            ++failed;
            EXPECT_THROW(certify_window(rb), CertificationError);
            EXPECT_FALSE(rb.diagnostic.empty());
        } else {
            EXPECT_EQ(certify_window(rb)["ok"], true);
        }
    }
    EXPECT_GE(failed, 1);
    o.window.B = 0;
    o.max_B = 8;
    OrbitalResult grown = orbital_sprime(*a, HeckeElement::unit(Ring::E, 4), o);
    EXPECT_TRUE(grown.certified);
    EXPECT_GT(grown.window.B, 0);
    o.certify = false;
    EXPECT_THROW(certify_window(orbital_sprime(*a, HeckeElement::unit(Ring::E, 4), o)), CertificationError);
    auto j = grown.to_json();
    for (const char* k : {"value", "window", "certified", "visited_cosets", "wall_ms"}) EXPECT_TRUE(j.contains(k));
}
