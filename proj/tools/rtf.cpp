#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rtf/flharness.hpp"

using namespace rtf;
using nlohmann::json;

namespace {

struct Common {
    long long p = 3;
    std::string u;  // empty: first non-residue
    std::string eps = "1";
    int count = 10;
    std::uint64_t seed = 1;
    int window = 3;
    int margin = 2;
    int max_window = 9;
    bool certify = true;
    int jobs = 1;
    std::string out = ".";
    json extra = json::object();  // mode-specific options, recorded in the report

    json to_json() const {
        FieldSpec f = field();
        json j = {{"field", f},   {"count", count},   {"seed", seed},           {"window", window},
                  {"margin", margin}, {"max_window", max_window}, {"certify", certify}, {"jobs", jobs}};
        j.update(extra);
        return j;
    }

    FieldSpec field() const {
        Int uu = u.empty() ? default_nonresidue(p) : detail::parse_int(u);
        return FieldSpec(p, uu, Rational::parse(eps));
    }
    OrbitalOptions orbital() const {
        OrbitalOptions o;
        o.window.B = window;
        o.window.margin = margin;
        o.max_B = max_window;
        o.certify = certify;
        o.jobs = jobs;
        return o;
    }
};

struct Row {
    std::string id, kind, lhs, rhs;
    bool pass = false;
    double wall_ms = 0;
};

struct Output {
    json results = json::array();
    std::vector<Row> rows;
    bool pass = true;

    void add(const json& j, Row r) {
        results.push_back(j);
        pass = pass && r.pass;
        rows.push_back(std::move(r));
    }
};

EMatrix parse_matrix(const std::string& s, const FieldSpec& f) {
    if (s.empty() || s.front() != '[') {
        EMatrix m(1, 1);
        m(0, 0) = f.parse(s);
        return m;
    }
    json j = json::parse(s);
    int n = static_cast<int>(j.size());
    EMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(j[i].size()) != n) throw std::invalid_argument("matrix must be square");
        for (int k = 0; k < n; ++k) {
            const json& e = j[i][k];
            m(i, k) = e.is_string() ? f.parse(e.get<std::string>()) : EElement(Rational(e.get<long long>()));
        }
    }
    return m;
}

/// "(1,0)" or "3*(1,0)" or "1/2*(1,0)"; "unit" means the unit of the given size.
HeckeElement parse_hecke(const std::vector<std::string>& terms, Ring ring, int m) {
    if (terms.empty()) return HeckeElement::unit(ring, m);
    HeckeElement h{ring, m, {}};
    for (const auto& t : terms) {
        if (t == "unit") {
            h = h + HeckeElement::unit(ring, m);
            continue;
        }
        auto star = t.find('*');
        CoeffValue c(1);
        std::string w = t;
        if (star != std::string::npos) {
            c = CoeffValue(Rational::parse(t.substr(0, star)));
            w = t.substr(star + 1);
        }
        Weight lam = parse_weight(w);
        if (static_cast<int>(lam.size()) != m) throw std::invalid_argument("weight " + w + " has the wrong length");
        h = h + HeckeElement::T(ring, lam, c);
    }
    return h;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string o = "\"";
    for (char ch : s) {
        if (ch == '"') o += '"';
        o += ch;
    }
    return o + "\"";
}

int finish(const std::string& mode, const Common& c, const Output& out, std::chrono::steady_clock::time_point t0) {
    std::filesystem::create_directories(c.out);
    json report = {{"mode", mode},
                   {"config", c.to_json()},
                   {"results", out.results},
                   {"pass", out.pass}};
    double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    report["timestamps"] = {{"finished", buf}, {"wall_ms", static_cast<long long>(ms)}};
    std::ofstream(std::filesystem::path(c.out) / "report.json") << report.dump(2) << '\n';
    std::ofstream csv(std::filesystem::path(c.out) / "summary.csv");
    csv << "orbit_id,case,lhs,rhs,pass,wall_ms\n";
    int failed = 0;
    for (const auto& r : out.rows) {
        csv << csv_escape(r.id) << ',' << csv_escape(r.kind) << ',' << csv_escape(r.lhs) << ',' << csv_escape(r.rhs) << ','
            << (r.pass ? "true" : "false") << ',' << static_cast<long long>(r.wall_ms) << '\n';
        if (!r.pass) ++failed;
    }
    std::cout << mode << ": " << out.rows.size() - failed << "/" << out.rows.size() << " pass, report in "
              << (std::filesystem::path(c.out) / "report.json").string() << '\n';
    return out.pass ? 0 : 1;
}

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--p", c.p, "odd prime")->capture_default_str();
    sub->add_option("--u", c.u, "non-residue defining E = F(sqrt u); default: the smallest one");
    sub->add_option("--eps", c.eps, "eps datum")->capture_default_str();
    sub->add_option("--count", c.count, "number of generated items")->capture_default_str();
    sub->add_option("--seed", c.seed, "generator seed")->capture_default_str();
    sub->add_option("--window", c.window, "initial outer height bound B")->capture_default_str();
    sub->add_option("--margin", c.margin, "certification margin")->capture_default_str();
    sub->add_option("--max-window", c.max_window, "largest B tried before giving up")->capture_default_str();
    sub->add_flag("--certify,!--no-certify", c.certify, "recompute at B + margin (default on)");
    sub->add_option("--jobs", c.jobs, "worker threads")->capture_default_str();
    sub->add_option("--out", c.out, "output directory")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orbital integrals and the local identities of the relative trace formula"};
    app.set_config("--config", "", "TOML file with option values");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.require_subcommand(1);
    auto t0 = std::chrono::steady_clock::now();

    Common c;
    int rc = 0;

    // match
    std::string alpha_s, beta_s;
    auto* match = app.add_subcommand("match", "invariants, matchability and a partner witness");
    add_common(match, c);
    match->add_option("--alpha", alpha_s, "alpha: E element or JSON matrix");
    match->add_option("--beta", beta_s, "beta: E element or JSON matrix");
    match->callback([&] {
        c.extra = {{"alpha", alpha_s}, {"beta", beta_s}};
        FieldSpec f = c.field();
        Output out;
        if (!alpha_s.empty()) {
            OrbitSPrime o(f, parse_matrix(alpha_s, f));
            json j = {{"alpha", o.alpha.str()},
                      {"invariants", coeffs_to_json(o.invariants)},
                      {"regular", o.regular},
                      {"elliptic", o.elliptic},
                      {"matchable", to_string(o.matchable)},
                      {"x_exp", o.x_exp},
                      {"y_exp", o.y_exp}};
            if (o.elliptic) j["case"] = to_string(classify_case(o));
            if (o.matchable == Tri::yes) {
                if (auto b = find_partner_beta(o)) j["partner_beta"] = b->str();
            }
            std::cout << j.dump(2) << '\n';
            out.add(j, {"alpha", "match", to_string(o.matchable), "", o.matchable != Tri::undecided, 0});
        }
        if (!beta_s.empty()) {
            OrbitG o(f, parse_matrix(beta_s, f));
            json j = {{"beta", o.beta.str()},
                      {"invariants", coeffs_to_json(o.invariants)},
                      {"regular", o.regular},
                      {"elliptic", o.elliptic},
                      {"matchable", to_string(o.matchable)}};
            std::cout << j.dump(2) << '\n';
            out.add(j, {"beta", "match", to_string(o.matchable), "", o.matchable != Tri::undecided, 0});
        }
        if (alpha_s.empty() && beta_s.empty()) throw CLI::ValidationError("match", "give --alpha or --beta");
        rc = finish("match", c, out, t0);
    });

    // orbital
    std::vector<std::string> fterms;
    auto* orbital = app.add_subcommand("orbital", "one orbital integral with its certificate");
    add_common(orbital, c);
    orbital->add_option("--alpha", alpha_s, "S' side: alpha");
    orbital->add_option("--beta", beta_s, "G side: beta");
    orbital->add_option("--f", fterms, "Hecke terms like 2*(1,0,0,0); default the unit");
    orbital->callback([&] {
        c.extra = {{"alpha", alpha_s}, {"beta", beta_s}, {"f", fterms}};
        FieldSpec f = c.field();
        OrbitalOptions opt = c.orbital();
        Output out;
        auto emit = [&](const std::string& side, const std::string& pt, const OrbitalResult& r, const CoeffValue& kappa) {
            json j = {{"side", side},
                      {"point", pt},
                      {"value", r.value.str()},
                      {"kappa", kappa.str()},
                      {"kappa_value", (kappa * r.value).str()},
                      {"window", r.window.B},
                      {"certified", r.certified},
                      {"visited_cosets", r.visited}};
            if (opt.certify && r.certified) j["certificate"] = certify_window(r);
            if (!r.certified) j["diagnostic"] = r.diagnostic;
            std::cout << j.dump(2) << '\n';
            out.add(j, {side, "orbital", r.value.str(), "", r.certified || !opt.certify, r.wall_ms});
        };
        if (!alpha_s.empty()) {
            OrbitSPrime o(f, parse_matrix(alpha_s, f));
            HeckeElement fp = parse_hecke(fterms, Ring::E, 2 * o.n());
            emit("sprime", o.alpha.str(), orbital_sprime(o, fp, opt), kappa_sprime(o.point(), f));
        }
        if (!beta_s.empty()) {
            OrbitG o(f, parse_matrix(beta_s, f));
            HeckeElement fn = parse_hecke(fterms, Ring::F, 2 * o.n());
            emit("g", o.beta.str(), orbital_g(o, fn, opt), kappa_g(o.point(), f));
        }
        if (alpha_s.empty() && beta_s.empty()) throw CLI::ValidationError("orbital", "give --alpha or --beta");
        rc = finish("orbital", c, out, t0);
    });

    // fl
    int n = 1;
    int elliptic = 3;
    auto* fl = app.add_subcommand("fl", "fundamental lemma battery for the unit functions");
    add_common(fl, c);
    fl->add_option("--n", n, "1, or 2 for split tori (count) plus elliptic tori (--elliptic)")->check(CLI::Range(1, 2));
    fl->add_option("--elliptic", elliptic, "number of n = 2 elliptic orbits")->capture_default_str();
    fl->callback([&] {
        c.extra = {{"n", n}, {"elliptic", elliptic}};
        FieldSpec f = c.field();
        std::vector<MatchedPair> pairs;
        if (n == 1) {
            pairs = fl_orbits_n1(f, c.count, c.seed);
        } else {
            OrbitGenerator gen(f, c.seed);
            for (int i = 0; i < c.count; ++i) pairs.push_back(gen.pair_split());
            for (int got = 0, tries = 0; got < elliptic && tries < 2000; ++tries) {
                try {
                    auto mp = gen.pair_elliptic(tries % 2 ? Rational(-1) : Rational::from_int(f.p), 1);
                    if (!mp) continue;
                    OrbitSPrime a(f, mp->alpha);
                    if (a.x_exp < 0 || a.y_exp < -4) continue;
                    pairs.push_back(*mp);
                    ++got;
                } catch (const ArithmeticOverflow&) {
                }
            }
        }
        OrbitalOptions opt = c.orbital();
        int outer_jobs = n == 1 ? c.jobs : 1;
        if (n == 1) opt.jobs = 1;
        auto rs = fl_battery(pairs, f, outer_jobs, opt);
        Output out;
        for (const auto& r : rs) out.add(r.to_json(), {r.id, to_string(r.tag), r.lhs.str(), r.rhs.str(), r.pass, r.wall_ms});
        rc = finish("fl", c, out, t0);
    });

    // descent
    auto* descent = app.add_subcommand("descent", "parabolic descent n = 2 = 1 + 1");
    add_common(descent, c);
    descent->add_option("--f", fterms, "Hecke terms on GL_4(E); default: unit, (1,0,0,0), (0,0,0,-1)");
    descent->callback([&] {
        c.extra = {{"f", fterms}};
        FieldSpec f = c.field();
        OrbitalOptions opt = c.orbital();
        std::vector<HeckeElement> fs;
        if (fterms.empty()) {
            fs = {HeckeElement::unit(Ring::E, 4), HeckeElement::T(Ring::E, {1, 0, 0, 0}),
                  HeckeElement::T(Ring::E, {0, 0, 0, -1})};
        } else {
            fs = {parse_hecke(fterms, Ring::E, 4)};
        }
        OrbitGenerator gen(f, c.seed);
        Output out;
        for (int i = 0; i < c.count; ++i) {
            EMatrix h;
            MatchedPair mp = gen.pair_split(&h);
            for (std::size_t k = 0; k < fs.size(); ++k) {
                auto s = std::chrono::steady_clock::now();
                DescentReport d;
                try {
                    d = descent_verify(mp, h, fs[k], f, opt);
                } catch (const std::exception& e) {
                    d.error = e.what();
                }
                d.id = "descent-" + std::to_string(i) + "-" + std::to_string(k);
                double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - s).count();
                out.add(d.to_json(), {d.id, fs[k].str(), d.full.str(), d.levi.str(), d.pass, ms});
            }
        }
        rc = finish("descent", c, out, t0);
    });

    // split
    std::vector<std::string> f1terms, f2terms;
    auto* split = app.add_subcommand("split", "split-place matching on a grid of regular points");
    add_common(split, c);
    split->add_option("--f1", f1terms, "Hecke terms on GL_2(F); default the unit");
    split->add_option("--f2", f2terms, "Hecke terms on GL_2(F); default the unit");
    split->callback([&] {
        c.extra = {{"f1", f1terms}, {"f2", f2terms}};
        FieldSpec f = c.field();
        HeckeElement f1 = parse_hecke(f1terms, Ring::F, 2), f2 = parse_hecke(f2terms, Ring::F, 2);
        SplitReport s = split_match_verify(f1, f2, f, c.count, c.seed);
        Output out;
        for (std::size_t i = 0; i < s.rows.size(); ++i) {
            const json& r = s.rows[i];
            out.add(r, {"split-" + std::to_string(i), "split", r["gprime"], r["g"], r["ok"], 0});
        }
        if (!s.pass) out.pass = false;
        rc = finish("split", c, out, t0);
    });

    // hecke
    std::string action = "conv", lhs_s, rhs_s, ring_s = "F";
    int m = 2;
    auto* hecke = app.add_subcommand("hecke", "Hecke algebra computations");
    add_common(hecke, c);
    hecke->add_option("action", action, "conv | satake | dual")->check(CLI::IsMember({"conv", "satake", "dual"}));
    hecke->add_option("--m", m, "rank")->capture_default_str();
    hecke->add_option("--ring", ring_s, "F or E")->check(CLI::IsMember({"F", "E"}));
    hecke->add_option("--lhs", lhs_s, "dominant weight, e.g. (1,0)")->required();
    hecke->add_option("--rhs", rhs_s, "dominant weight for conv");
    hecke->callback([&] {
        c.extra = {{"action", action}, {"m", m}, {"ring", ring_s}, {"lhs", lhs_s}, {"rhs", rhs_s}};
        FieldSpec f = c.field();
        Ring ring = ring_s == "E" ? Ring::E : Ring::F;
        HeckeElement a = parse_hecke({lhs_s}, ring, m);
        Output out;
        json j;
        if (action == "conv") {
            if (rhs_s.empty()) throw CLI::ValidationError("hecke conv", "--rhs is required");
            HeckeElement b = parse_hecke({rhs_s}, ring, m);
            HeckeElement ab = convolve(a, b, f);
            Int q = residue_size(ring, f.p);
            bool sat = satake(ab, f) == reduce_t(satake(a, f) * satake(b, f), q);
            json table = json::array();
            for (const auto& [w, co] : ab.coeffs) table.push_back({{"weight", w}, {"coeff", co.str()}});
            j = {{"lhs", a.str()}, {"rhs", b.str()}, {"product", table}, {"satake_check", sat}};
            std::cout << "weight\tcoeff\n";
            for (const auto& [w, co] : ab.coeffs) {
                std::cout << '(';
                for (std::size_t i = 0; i < w.size(); ++i) std::cout << (i ? "," : "") << w[i];
                std::cout << ")\t" << co.str() << '\n';
            }
            std::cout << "satake cross-check: " << (sat ? "ok" : "FAILED") << '\n';
            out.add(j, {"conv", "hecke", a.str(), b.str(), sat, 0});
        } else if (action == "satake") {
            j = {{"f", a.str()}, {"satake", satake(a, f).str()}};
            std::cout << j["satake"].get<std::string>() << '\n';
            out.add(j, {"satake", "hecke", a.str(), j["satake"], true, 0});
        } else {
            HeckeElement d = dual_twist(a, Laurent::var(sym::c));
            bool inv = dual_twist(d, Laurent::var(sym::c)) == a;
            j = {{"f", a.str()}, {"dual_twist", d.str()}, {"involutive", inv}};
            std::cout << d.str() << '\n';
            out.add(j, {"dual", "hecke", a.str(), d.str(), inv, 0});
        }
        rc = finish("hecke", c, out, t0);
    });

    // involution
    auto* invol = app.add_subcommand("involution", "transpose identity and its sign, n = 1");
    add_common(invol, c);
    invol->add_option("--f", fterms, "Hecke terms on GL_2(E); default: unit, (1,0), (1,-1)");
    invol->callback([&] {
        c.extra = {{"f", fterms}};
        FieldSpec f = c.field();
        OrbitalOptions opt = c.orbital();
        std::vector<HeckeElement> fs;
        if (fterms.empty()) {
            fs = {HeckeElement::unit(Ring::E, 2), HeckeElement::T(Ring::E, {1, 0}), HeckeElement::T(Ring::E, {1, -1})};
        } else {
            fs = {parse_hecke(fterms, Ring::E, 2)};
        }
        OrbitGenerator gen(f, c.seed);
        Output out;
        for (int i = 0; i < c.count; ++i) {
            EMatrix alpha = i % 2 == 0 && f.eps == Rational(1) ? gen.pair_n1(1).alpha : gen.nonmatchable_alpha_n1();
            OrbitSPrime o(f, alpha);
            for (std::size_t k = 0; k < fs.size(); ++k) {
                InvolutionReport r = involution_sign_check(o, fs[k], opt);
                out.add(r.to_json(), {"inv-" + std::to_string(i) + "-" + std::to_string(k), to_string(o.matchable),
                                      r.value.str(), r.transposed.str(), r.pass, 0});
            }
        }
        rc = finish("involution", c, out, t0);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return rc;
}
