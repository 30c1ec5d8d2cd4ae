#pragma once

#include <atomic>
#include <sstream>

#include "rtf/integrate.hpp"

namespace rtf {

enum class CaseTag { vanish_xr_lt_1, kottwitz_case, big_valuation_case, split_torus };

inline const char* to_string(CaseTag t) {
    switch (t) {
        case CaseTag::vanish_xr_lt_1: return "vanish_xr_lt_1";
        case CaseTag::kottwitz_case: return "kottwitz_case";
        case CaseTag::big_valuation_case: return "big_valuation_case";
        case CaseTag::split_torus: return "split_torus";
    }
    return "?";
}

/// x_r = p^x_exp, y_r = p^y_exp. Either x_r < 1, or y_r <= x_r = 1, or x_r = y_r > 1;
/// anything else is a hard error.
inline CaseTag classify_case(const OrbitSPrime& o) {
    if (!o.regular) throw std::invalid_argument("classify_case: orbit is not regular semisimple");
    if (!o.elliptic) throw std::invalid_argument("classify_case: orbit is not elliptic");
    if (o.x_exp < 0) return CaseTag::vanish_xr_lt_1;
    if (o.x_exp == 0 && o.y_exp <= 0) return CaseTag::kottwitz_case;
    if (o.x_exp > 0 && o.x_exp == o.y_exp) return CaseTag::big_valuation_case;
    throw std::logic_error("classify_case: x_r = p^" + std::to_string(o.x_exp) + ", y_r = p^" + std::to_string(o.y_exp) +
                           " violates the case dichotomy");
}

namespace detail {

inline bool congruent(const EMatrix& a, const EMatrix& b, Int p, int prec) {
    return (a - b).min_val(p).v >= prec;
}

/// Runs fn(i) for i in [0, n) on `jobs` threads; results are placed by index.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, int jobs, Fn fn) {
    std::vector<T> out(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_m;
    auto worker = [&] {
        while (true) {
            std::size_t i = next++;
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(err_m);
                if (!err) err = std::current_exception();
            }
        }
    };
    int k = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
    std::vector<std::thread> ts;
    for (int i = 1; i < k; ++i) ts.emplace_back(worker);
    worker();
    for (auto& t : ts) t.join();
    if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace detail

/// (1 - X)^{-1/2} = sum_k binom(2k, k) 4^{-k} X^k for X over F whose eigenvalues all
/// have positive valuation, correct modulo p^prec. Each run uses `order` terms with
/// intermediate rounding; a run is accepted when it agrees with the run of twice the
/// order and S^2 (1 - X) = 1 holds to precision prec.
inline EMatrix gamma_series(const EMatrix& X, const FieldSpec& f, int prec, int max_order = 4096) {
    if (!X.square() || !X.in_F()) throw std::invalid_argument("gamma_series: needs a square matrix over F");
    int n = X.rows();
    EMatrix one = EMatrix::identity(n);
    if (X.is_zero()) return one;
    auto cp = X.char_poly();
    for (int i = 0; i < n; ++i)
        if (!cp[static_cast<std::size_t>(i)].is_zero() && f.val(cp[static_cast<std::size_t>(i)].a()).v <= 0)
            throw std::domain_error("gamma_series: an eigenvalue has non-positive valuation");
    Int p = f.p;
    int neg = std::max(0, -X.min_val(p).v);
    auto run = [&](int order, int guard) {
        int wp = prec + guard;
        EMatrix term = one, sum = one;
        for (int k = 1; k <= order; ++k) {
            term = detail::round_abs(term * X, p, wp + neg);
            term = EElement(Rational(2 * k - 1, 2 * k)) * term;
            sum = sum + term;
            if (term.is_zero()) break;
        }
        return detail::round_abs(sum, p, prec);
    };
    int order = 2 * (prec + neg) + 4, guard = neg + 4;
    EMatrix prev = run(order, guard);
    while (order <= max_order) {
        EMatrix next = run(2 * order, 2 * guard);
        if (detail::congruent(prev, next, p, prec) && detail::congruent(next * next * (one - X), one, p, prec - neg))
            return next;
        prev = next;
        order *= 2;
        guard *= 2;
    }
    throw std::runtime_error("gamma_series: truncation did not stabilize below the order cap");
}

/// delta in o_E^x with delta conj(delta) = -1 modulo p^prec.
inline EElement norm_minus_one(const FieldSpec& f, int prec) {
    Int p = f.p, mod = 1;
    for (int i = 0; i < prec; ++i) mod = detail::mul(mod, p);
    Int u = ((f.u % mod) + mod) % mod;
    auto F = [&](Int a, Int b) { return ((a * a - u * b % mod * b + 1) % mod + mod) % mod; };
    for (Int a = 0; a < p; ++a)
        for (Int b = 0; b < p; ++b) {
            if (F(a, b) % p != 0) continue;
            bool lift_a = a % p != 0;
            for (int it = 0; it < prec + 1; ++it) {
                Int v = F(a, b);
                if (v == 0) break;
                if (lift_a) {
                    a = ((a - v * inverse_mod(2 * a % mod, mod)) % mod + mod) % mod;
                } else {
                    Int d = ((-2 * u % mod * b) % mod + mod) % mod;
                    b = ((b - v * inverse_mod(d, mod)) % mod + mod) % mod;
                }
            }
            return EElement(Rational(a), Rational(b), f.u);
        }
    throw std::logic_error("norm_minus_one: no residue solution");
}

/// Number of lattices L (modulo the twisted stabilizer torus of Z) with Z conj(L) ⊆ L,
/// i.e. the integral of 1[h^{-1} Z conj(h) ∈ M_n(o_E)] over the twisted-centralizer
/// quotient, with the normalization of the orbital engines.
struct TwistedCount {
    Rational value;
    bool certified = false;
    long long visited = 0;
};

inline TwistedCount twisted_integral_count(const EMatrix& Z, const EMatrix& torus_x, const FieldSpec& f, int B,
                                           int margin = 2) {
    TorusDesc T = torus_of(torus_x, f);
    std::vector<long long> sh(static_cast<std::size_t>(B + margin) + 1, 0);
    TwistedCount r;
    for_each_fd_lattice(T, B + margin, f, OuterFilter{Z, true, 0}, [&](const EMatrix&, int h) {
        ++sh[static_cast<std::size_t>(h)];
        ++r.visited;
    });
    long long low = 0, all = 0;
    for (int h = 0; h <= B + margin; ++h) {
        all += sh[static_cast<std::size_t>(h)];
        if (h <= B) low += sh[static_cast<std::size_t>(h)];
    }
    r.value = Rational(static_cast<long long>(all)) / Rational(T.e);
    r.certified = low == all;
    return r;
}

struct CrossCheck {
    std::string name;
    CoeffValue value;
    bool ok = false;
};

struct FLReport {
    std::string id;
    int n = 1;
    Int p = 0;
    CaseTag tag = CaseTag::kottwitz_case;
    std::string alpha, beta;
    CoeffValue lhs, rhs;  // kappa-adjusted
    std::vector<CrossCheck> cross;
    std::vector<nlohmann::json> certificates;
    bool pass = false;
    double wall_ms = 0;
    std::string error;

    nlohmann::json to_json() const {
        nlohmann::json cj = nlohmann::json::array();
        for (const auto& c : cross) cj.push_back({{"name", c.name}, {"value", c.value.str()}, {"ok", c.ok}});
        return {{"id", id},       {"n", n},         {"p", detail::to_string(p)},        {"case", to_string(tag)},
                {"alpha", alpha}, {"beta", beta},   {"lhs", lhs.str()},         {"rhs", rhs.str()},
                {"cross_checks", cj}, {"certificates", certificates}, {"pass", pass}, {"error", error}};
    }
};

struct LambdaFactors {
    int lambda_prime_exp = 0;  // lambda' = p^lambda_prime_exp
    int lambda_exp = 0;
    Rational raw;  // prod (rt_i - st_j)^{-1}
};

/// lambda' = |prod (rt_i - st_j)|^{-1} from the S' eigenvalues, and
/// lambda = |prod (1 - r_i)|^{n2} |prod (1 - s_j)|^{n1} / |prod (r_i - s_j)| from
/// r = -(1 - rt) / rt. Both are returned as exponents of p and must agree.
inline LambdaFactors lambda_factors(const std::vector<Rational>& rt, const std::vector<Rational>& st, const FieldSpec& f) {
    LambdaFactors out;
    out.raw = Rational(1);
    auto to_r = [](const Rational& x) {
        if (x.is_zero()) throw std::domain_error("lambda_factors: zero eigenvalue");
        return -(Rational(1) - x) / x;
    };
    int n1 = static_cast<int>(rt.size()), n2 = static_cast<int>(st.size());
    int lam = 0;
    for (const auto& a : rt) lam -= n2 * f.val(Rational(1) - to_r(a)).v;
    for (const auto& b : st) lam -= n1 * f.val(Rational(1) - to_r(b)).v;
    for (const auto& a : rt)
        for (const auto& b : st) {
            if (a == b) throw std::domain_error("lambda_factors: eigenvalue collision");
            out.raw = out.raw / (a - b);
            out.lambda_prime_exp += f.val(a - b).v;
            lam += f.val(to_r(a) - to_r(b)).v;
        }
    out.lambda_exp = lam;
    if (out.lambda_exp != out.lambda_prime_exp) throw std::logic_error("lambda_factors: lambda' != lambda");
    return out;
}

namespace detail {

/// Diagonal entries of frame^{-1} m frame, checking that it is diagonal.
inline std::vector<EElement> diagonalize(const EMatrix& m, const EMatrix& frame) {
    EMatrix d = frame.inverse() * m * frame;
    std::vector<EElement> out;
    for (int i = 0; i < d.rows(); ++i)
        for (int j = 0; j < d.cols(); ++j) {
            if (i == j) out.push_back(d(i, i));
            else if (!d(i, j).is_zero()) throw std::invalid_argument("descent: frame does not diagonalize the orbit");
        }
    return out;
}

inline EMatrix one_by_one(const EElement& x) {
    EMatrix m(1, 1);
    m(0, 0) = x;
    return m;
}

}  // namespace detail

struct DescentReport {
    std::string id;
    std::vector<Rational> rt, st;
    LambdaFactors lambda;
    std::string f;
    CoeffValue full, levi;
    bool g_side = false;
    CoeffValue g_full, g_levi;
    std::vector<nlohmann::json> certificates;
    bool pass = false;
    std::string error;

    nlohmann::json to_json() const {
        nlohmann::json j = {{"id", id},
                            {"partition", {1, 1}},
                            {"rt", rt},
                            {"st", st},
                            {"lambda_prime", {{"exp", lambda.lambda_prime_exp}, {"raw", lambda.raw.str()}}},
                            {"lambda", {{"exp", lambda.lambda_exp}}},
                            {"f", f},
                            {"full", full.str()},
                            {"levi", levi.str()},
                            {"certificates", certificates},
                            {"pass", pass},
                            {"error", error}};
        if (g_side) {
            j["g_full"] = g_full.str();
            j["g_levi"] = g_levi.str();
        }
        return j;
    }
};

/// n = 2 = 1 + 1. The S' orbit of alpha = frame diag(a1, a2) frame^{-1} is compared with
/// lambda' sum_{a,b} c_{a,b} O(a1, T_a) O(a2, T_b), where c is the constant term of fp along
/// the Levi GL_2 x GL_2 at t = p. For the unit the G side is mirrored through beta.
inline DescentReport descent_verify(const MatchedPair& mp, const EMatrix& frame, const HeckeElement& fp, const FieldSpec& f,
                                    const OrbitalOptions& opt = {}) {
    if (mp.alpha.rows() != 2) throw std::invalid_argument("descent_verify: expects n = 2");
    DescentReport r;
    r.f = fp.str();
    auto a = detail::diagonalize(mp.alpha, frame);
    OrbitSPrime full(f, mp.alpha), o1(f, detail::one_by_one(a[0])), o2(f, detail::one_by_one(a[1]));
    r.rt = {o1.aabar(0, 0).a()};
    r.st = {o2.aabar(0, 0).a()};
    r.lambda = lambda_factors(r.rt, r.st, f);
    CoeffValue lam(ppow(f.p, r.lambda.lambda_prime_exp));
    auto cert = [&](const OrbitalResult& x) {
        if (opt.certify) r.certificates.push_back(certify_window(x));
        return x.value;
    };
    r.full = cert(orbital_sprime(full, fp, opt));
    LeviHecke ct = constant_term(fp, 2, 2, f);
    Laurent tp(Rational::from_int(f.p));
    CoeffValue lev;
    for (const auto& [ab, co] : ct.coeffs) {
        CoeffValue x = cert(orbital_sprime(o1, HeckeElement::T(Ring::E, ab.first), opt));
        if (x.is_zero()) continue;
        CoeffValue y = cert(orbital_sprime(o2, HeckeElement::T(Ring::E, ab.second), opt));
        lev += co.substitute(sym::t, tp) * x * y;
    }
    r.levi = lam * lev;
    r.pass = r.full == r.levi;
    if (detail::is_unit_function(fp)) {
        r.g_side = true;
        auto b = detail::diagonalize(mp.beta, frame);
        OrbitG g(f, mp.beta), g1(f, detail::one_by_one(b[0])), g2(f, detail::one_by_one(b[1]));
        r.g_full = cert(orbital_g(g, HeckeElement::unit(Ring::F, 4), opt));
        r.g_levi = lam * cert(orbital_g(g1, HeckeElement::unit(Ring::F, 2), opt)) *
                   cert(orbital_g(g2, HeckeElement::unit(Ring::F, 2), opt));
        r.pass = r.pass && r.g_full == r.g_levi;
    }
    return r;
}

/// kappa-adjusted fundamental lemma for the unit functions on a matched pair, with the
/// reduced forms of the big-valuation case and the descent route for split n = 2 tori.
inline FLReport fl_verify(const MatchedPair& mp, const FieldSpec& f, const OrbitalOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    FLReport r;
    OrbitSPrime a(f, mp.alpha);
    OrbitG b(f, mp.beta);
    r.n = a.n();
    r.p = f.p;
    r.alpha = a.alpha.str();
    r.beta = b.beta.str();
    if (a.matchable == Tri::undecided) throw std::invalid_argument("fl_verify: matchability undecided");
    if (!match(a, b)) throw std::invalid_argument("fl_verify: alpha and beta do not match");
    r.tag = a.elliptic ? classify_case(a) : CaseTag::split_torus;
    int n = a.n();
    OrbitalResult L = orbital_sprime(a, HeckeElement::unit(Ring::E, 2 * n), opt);
    OrbitalResult R = orbital_g(b, HeckeElement::unit(Ring::F, 2 * n), opt);
    if (opt.certify) {
        r.certificates.push_back(certify_window(L));
        r.certificates.push_back(certify_window(R));
    }
    r.lhs = kappa_sprime(a.point(), f, opt.chi) * L.value;
    r.rhs = kappa_g(b.point(), f, opt.chi) * R.value;
    auto check = [&](const std::string& name, const CoeffValue& v, const CoeffValue& expect) {
        r.cross.push_back({name, v, v == expect});
    };
    if (r.tag == CaseTag::vanish_xr_lt_1) {
        check("lhs_vanishes", r.lhs, CoeffValue());
    } else if (r.tag == CaseTag::big_valuation_case) {
        int B = std::max(opt.window.B, 2), margin = opt.window.margin;
        EMatrix aabar = a.aabar;
        auto count = [&](const std::string& name, const EMatrix& Z) {
            TwistedCount c = twisted_integral_count(Z, aabar, f, B, margin);
            if (!c.certified) throw CertificationError("fl_verify: " + name + " count not stable at B + margin");
            check(name, CoeffValue(c.value), L.value);
        };
        count("easy_case_simplified", a.alpha);
        count("LHS_FL_case2", b.beta.conj().inverse());
        // gamma alpha with gamma = delta (1 - alpha conj(alpha))^{-1/2}, delta conj(delta) = -1
        int prec = B + margin + 2 + std::max(0, -a.alpha.min_val(f.p).v);
        EMatrix S = gamma_series(aabar, f, prec);
        EElement delta = norm_minus_one(f, prec);
        EMatrix ga = detail::round_abs(EElement(delta) * S * a.alpha, f.p, prec - std::max(0, -a.alpha.min_val(f.p).v));
        count("simple_case_final", ga);
    } else if (r.tag == CaseTag::split_torus) {
        TorusDesc T = torus_of(a.aabar, f);
        OrbitalOptions o = opt;
        DescentReport d = descent_verify(mp, T.frame, HeckeElement::unit(Ring::E, 4), f, o);
        check("descent_sprime", d.levi, L.value);
        check("descent_g", d.g_levi, R.value);
        for (auto& c : d.certificates) r.certificates.push_back(c);
    }
    r.pass = r.lhs == r.rhs && (!opt.certify || (L.certified && R.certified));
    for (const auto& c : r.cross) r.pass = r.pass && c.ok;
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

struct InvolutionReport {
    std::string alpha;
    std::string f;
    CoeffValue value, transposed;
    int sign = 1;           // eta(det(1 - alpha conj(alpha)))
    int expected_sign = 1;  // eta(-1)^n eta(eps)^n, negated off the matchable locus
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"alpha", alpha},  {"f", f},          {"value", value.str()},          {"transposed", transposed.str()},
                {"sign", sign},    {"expected_sign", expected_sign}, {"pass", pass}};
    }
};

/// O(ts', f) = eta(det(1 - alpha conj(alpha))) O(s', f), the transposed point being
/// integrated against the transposed torus.
inline InvolutionReport involution_sign_check(const OrbitSPrime& o, const HeckeElement& fp, const OrbitalOptions& opt = {}) {
    const FieldSpec& f = o.field;
    InvolutionReport r;
    r.alpha = o.alpha.str();
    r.f = fp.str();
    int n = o.n();
    r.sign = f.eta((EMatrix::identity(n) - o.aabar).det().a());
    r.expected_sign = 1;
    for (int i = 0; i < n; ++i) r.expected_sign *= f.eta(Rational(-1)) * f.eta(f.eps);
    if (o.matchable == Tri::no) r.expected_sign = -r.expected_sign;
    auto v = [&](const OrbitalResult& x) {
        if (opt.certify) certify_window(x);
        return x.value;
    };
    TorusDesc T = torus_of(o.aabar, f), Tt = torus_of(o.aabar.transpose(), f);
    r.value = v(detail::grow_window(opt, [&](const OrbitalOptions& op) { return orbital_sprime_at(o.point(), T, fp, f, op); }));
    r.transposed = v(detail::grow_window(
        opt, [&](const OrbitalOptions& op) { return orbital_sprime_at(o.point().transpose(), Tt, fp, f, op); }));
    r.pass = r.transposed == CoeffValue(r.sign) * r.value && (o.matchable == Tri::undecided || r.sign == r.expected_sign);
    return r;
}

struct SplitReport {
    int points = 0;
    int skipped = 0;
    int failures = 0;
    std::vector<nlohmann::json> rows;
    bool pass = false;

    nlohmann::json to_json() const {
        return {{"points", points}, {"skipped", skipped}, {"failures", failures}, {"rows", rows}, {"pass", pass}};
    }
};

/// Split-place battery on `count` regular points (x1, x2): matching through the
/// chi-twisted convolution, vanishing of the minus part of f1, and agreement of the
/// bc and convolution routes on the plus parts.
inline SplitReport split_match_verify(const HeckeElement& f1, const HeckeElement& f2, const FieldSpec& f, int count,
                                      std::uint64_t seed, const SplitChars& ch = {}) {
    SplitReport r;
    OrbitGenerator gen(f, seed);
    auto [p1, m1] = pm_split(f1, ch.product());
    auto [p2, m2] = pm_split(f2, ch.product());
    (void)m2;
    HeckeElement conv = chi_convolution(f1, f2, ch, f);
    HeckeElement conv_minus = chi_convolution(m1, f2, ch, f);
    HeckeElement bc_plus = bc(p1, p2, f), conv_plus = chi_convolution(p1, p2, ch, f);
    int attempts = 0;
    while (r.points < count && attempts < 50 * count) {
        ++attempts;
        EMatrix x1 = gen.gl_F(2, 4), x2 = gen.gl_F(2, 4);
        if (attempts % 3 == 0) x1 = EMatrix::diag({EElement(Rational::from_int(f.p)), EElement(1)}) * x1;
        EMatrix y = x1 * x2.inverse();
        try {
            detail::check_split_regular(y);
        } catch (const std::domain_error&) {
            ++r.skipped;
            continue;
        }
        CoeffValue lhs = orbital_gprime_split(x1, x2, f1, f2, ch, f);
        CoeffValue rhs = orbital_split(y, conv, ch, f);
        CoeffValue lit = orbital_split(y, conv, ch, f, true);
        CoeffValue mg = orbital_gprime_split(x1, x2, m1, f2, ch, f);
        CoeffValue mG = orbital_split(y, conv_minus, ch, f);
        CoeffValue bcv = orbital_split(y, bc_plus, ch, f), cvv = orbital_split(y, conv_plus, ch, f);
        bool ok = lhs == rhs && lit == rhs && mg.is_zero() && mG.is_zero() && bcv == cvv;
        if (!ok) ++r.failures;
        ++r.points;
        r.rows.push_back({{"x1", x1.str()},
                          {"x2", x2.str()},
                          {"gprime", lhs.str()},
                          {"g", rhs.str()},
                          {"minus_gprime", mg.str()},
                          {"minus_g", mG.str()},
                          {"bc_route", bcv.str()},
                          {"conv_route", cvv.str()},
                          {"ok", ok}});
    }
    r.pass = r.failures == 0 && r.points >= count;
    return r;
}

// ---------------------------------------------------------------------------
// Batteries

struct FLBatteryOptions {
    int count = 50;
    std::uint64_t seed = 1;
    int jobs = 1;
    OrbitalOptions orbital;
};

/// Seeded n = 1 matched pairs with roughly equal numbers of each case tag.
inline std::vector<MatchedPair> fl_orbits_n1(const FieldSpec& f, int count, std::uint64_t seed) {
    OrbitGenerator gen(f, seed);
    std::vector<MatchedPair> out;
    std::array<int, 3> have{0, 0, 0};
    int quota = (count + 2) / 3;
    for (int attempts = 0; static_cast<int>(out.size()) < count && attempts < 10000 * count; ++attempts) {
        try {
            MatchedPair mp = gen.pair_n1(2);
            OrbitSPrime a(f, mp.alpha);
            int t = static_cast<int>(classify_case(a));
            if (have[static_cast<std::size_t>(t)] >= quota) continue;
            ++have[static_cast<std::size_t>(t)];
            out.push_back(mp);
        } catch (const ArithmeticOverflow&) {
        } catch (const std::invalid_argument&) {
        }
    }
    return out;
}

inline std::vector<FLReport> fl_battery(const std::vector<MatchedPair>& pairs, const FieldSpec& f, int jobs,
                                        const OrbitalOptions& opt) {
    return detail::parallel_map<FLReport>(pairs.size(), jobs, [&](std::size_t i) {
        FLReport r;
        try {
            r = fl_verify(pairs[i], f, opt);
        } catch (const std::exception& e) {
            r.alpha = pairs[i].alpha.str();
            r.beta = pairs[i].beta.str();
            r.p = f.p;
            r.n = pairs[i].alpha.rows();
            r.error = e.what();
            r.pass = false;
        }
        r.id = "fl-" + std::to_string(i);
        return r;
    });
}

struct VanishReport {
    std::string side;
    std::string point;
    CoeffValue value;
    bool pass = false;
    nlohmann::json to_json() const { return {{"side", side}, {"point", point}, {"value", value.str()}, {"pass", pass}}; }
};

/// Unit orbital integrals at non-matchable n = 1 orbits on both sides.
inline std::vector<VanishReport> nonmatchable_battery(const FieldSpec& f, int count, std::uint64_t seed,
                                                      const OrbitalOptions& opt = {}) {
    OrbitGenerator gen(f, seed);
    std::vector<VanishReport> out;
    for (int i = 0; i < count; ++i) {
        OrbitSPrime a(f, gen.nonmatchable_alpha_n1());
        OrbitalResult L = orbital_sprime(a, HeckeElement::unit(Ring::E, 2), opt);
        if (opt.certify) certify_window(L);
        out.push_back({"sprime", a.alpha.str(), L.value, a.matchable == Tri::no && L.value.is_zero()});
        OrbitG b(f, gen.nonmatchable_beta_n1());
        OrbitalResult R = orbital_g(b, HeckeElement::unit(Ring::F, 2), opt);
        if (opt.certify) certify_window(R);
        out.push_back({"g", b.beta.str(), R.value, b.matchable == Tri::no && R.value.is_zero()});
    }
    return out;
}

inline std::string fl_csv(const std::vector<FLReport>& rs) {
    std::ostringstream os;
    os << "orbit_id,case,lhs,rhs,pass,wall_ms\n";
    for (const auto& r : rs)
        os << r.id << ',' << to_string(r.tag) << ",\"" << r.lhs.str() << "\",\"" << r.rhs.str() << "\","
           << (r.pass ? "true" : "false") << ',' << static_cast<long long>(r.wall_ms) << '\n';
    return os.str();
}

}  // namespace rtf
