#include <gtest/gtest.h>

#include <set>

#include "rtf/lattice.hpp"

using namespace rtf;

namespace {

long long count_type(std::vector<int> lambda, Int p, Ring ring) {
    long long n = 0;
    for_each_type_lattice(lambda, p, -1, ring, [&](const EMatrix&, const std::vector<int>&) { ++n; });
    return n;
}

// Gaussian binomial [m choose k]_q
long long gauss_binom(int m, int k, long long q) {
    long long num = 1, den = 1;
    for (int i = 0; i < k; ++i) {
        long long a = 1, b = 1;
        for (int j = 0; j < m - i; ++j) a *= q;
        for (int j = 0; j < i + 1; ++j) b *= q;
        num *= a - 1;
        den *= b - 1;
    }
    return num / den;
}

}  // namespace

TEST(Residues, Counts) {
    EXPECT_EQ(residues(3, -1, Ring::F, 0, 2).size(), 9u);
    EXPECT_EQ(residues(3, -1, Ring::E, 0, 1).size(), 9u);
    EXPECT_EQ(residues(3, -1, Ring::E, 1, 1).size(), 1u);
}

TEST(TypeLattices, CountsMatchGaussianBinomials) {
    // lattices of type (1,0,...,0) in rank m: points of P^{m-1}(k)
    EXPECT_EQ(count_type({1, 0}, 3, Ring::F), 4);
    EXPECT_EQ(count_type({1, 0}, 3, Ring::E), 10);
    EXPECT_EQ(count_type({1, 0, 0, 0}, 3, Ring::E), gauss_binom(4, 1, 9));
    EXPECT_EQ(count_type({1, 1, 0, 0}, 3, Ring::F), gauss_binom(4, 2, 3));
    // type (1,-1): q^2 + q over the residue field of size q
    EXPECT_EQ(count_type({1, -1}, 3, Ring::E), 90);
    EXPECT_EQ(count_type({1, -1}, 5, Ring::F), 30);
    EXPECT_EQ(count_type({2, 0}, 3, Ring::F), 12);
}

TEST(TypeLattices, RepresentativesAreDistinctLattices) {
    std::vector<EMatrix> reps;
    for_each_type_lattice({1, -1}, 3, -1, Ring::F, [&](const EMatrix& h, const std::vector<int>&) { reps.push_back(h); });
    for (std::size_t i = 0; i < reps.size(); ++i)
        for (std::size_t j = i + 1; j < reps.size(); ++j) {
            // same lattice iff reps[i]^{-1} reps[j] in GL(o)
            EMatrix r = reps[i].inverse() * reps[j];
            bool same = r.integral(3) && r.det().val(3).v == 0;
            EXPECT_FALSE(same);
        }
}

TEST(Sandwich, EnumeratesIntermediateLattices) {
    // lattices between p^2 o^2 and o^2 over F_3: all lattices of type (a,b) with 0<=b<=a<=2
    EMatrix inner = EMatrix::scalar(2, EElement(9));
    long long n = count_sandwich(inner, EMatrix::identity(2), 3, -1, Ring::F);
    long long expected = count_type({0, 0}, 3, Ring::F) + count_type({1, 0}, 3, Ring::F) + count_type({1, 1}, 3, Ring::F) +
                         count_type({2, 0}, 3, Ring::F) + count_type({2, 1}, 3, Ring::F) + count_type({2, 2}, 3, Ring::F);
    EXPECT_EQ(n, expected);
}

TEST(Sandwich, SkewedBoundsAgreeWithFilter) {
    // random-ish inner lattice, compare with brute force over all lattices in the outer one
    Int p = 3;
    EMatrix inner{{EElement(3), EElement(1)}, {EElement(0), EElement(9)}};
    EMatrix outer{{EElement(1), EElement(0)}, {EElement(Rational(1, 3)), EElement(1)}};
    std::set<std::string> seen;
    long long n = 0;
    for_each_sandwich(inner, outer, p, -1, Ring::F, [&](const EMatrix& b) {
        ++n;
        EXPECT_TRUE((b.inverse() * inner).integral(p));
        EXPECT_TRUE((outer.inverse() * b).integral(p));
    });
    // brute force: lattices N = outer * H with H an HNF inside o^2 containing outer^{-1} inner
    EMatrix rel = outer.inverse() * inner;
    long long brute = 0;
    for (int a = 0; a <= 4; ++a)
        for (int b = 0; b <= 4; ++b)
            for_each_hnf_with_diag({a, b}, 0, p, -1, Ring::F, [&](const EMatrix& h) {
                if ((h.inverse() * rel).integral(p)) ++brute;
            });
    EXPECT_EQ(n, brute);
}

TEST(Smith, LeftFactorReproducesLattice) {
    EMatrix m{{EElement(6), EElement(2)}, {EElement(3), EElement(Rational(1, 3))}};
    auto s = smith_left(m, 3);
    EMatrix d = EMatrix::diag({EElement(ppow(3, s.e[0])), EElement(ppow(3, s.e[1]))});
    EMatrix r = (s.U * d).inverse() * m;
    EXPECT_TRUE(r.integral(3));
    EXPECT_EQ(r.det().val(3).v, 0);
}

TEST(Primitive, WindowGrowthIsMonotone) {
    long long prev = 0;
    for (int B = 0; B <= 3; ++B) {
        long long n = 0;
        for_each_primitive(2, B, 3, -1, Ring::E, [&](const EMatrix&) { ++n; });
        EXPECT_GE(n, prev);
        prev = n;
    }
    EXPECT_EQ(prev, 1 + 10 + 90 + 810);
}
