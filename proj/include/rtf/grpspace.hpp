#pragma once

#include "rtf/matrix.hpp"

namespace rtf {

/// theta(m) = diag(1_n, -1_n) m diag(1_n, -1_n).
inline EMatrix theta(const EMatrix& m) {
    if (!m.square() || m.rows() % 2 != 0) throw std::invalid_argument("theta: needs a square matrix of even size");
    int n = m.rows() / 2;
    EMatrix r = m;
    for (int i = 0; i < 2 * n; ++i)
        for (int j = 0; j < 2 * n; ++j)
            if ((i < n) != (j < n)) r(i, j) = -r(i, j);
    return r;
}

/// g * conj(g)
inline EMatrix twisted_norm(const EMatrix& g) { return g * g.conj(); }

/// Characteristic polynomial coefficients, constant term first.
inline std::vector<EElement> char_poly(const EMatrix& m) { return m.char_poly(); }

/// Element [[a, eps b], [conj b, conj a]] of G(F) inside GL_2n(E).
struct GPoint {
    EMatrix a;
    EMatrix b;
    Rational eps = Rational(1);

    EMatrix assemble() const { return EMatrix::blocks(a, EElement(eps) * b, b.conj(), a.conj()); }
    int n() const { return a.rows(); }

    /// Recover (a, b) from an assembled matrix; throws if the shape is wrong.
    static GPoint from_matrix(const EMatrix& m, const Rational& eps) {
        int n = m.rows() / 2;
        GPoint g{m.block(0, 0, n, n), EElement(eps.inverse()) * m.block(0, n, n, n), eps};
        if (!(g.assemble() == m)) throw std::invalid_argument("GPoint: matrix is not in the D-realization shape");
        return g;
    }
};

/// Canonical G-side representative g(beta) = [[1, eps beta], [conj beta, 1]].
inline GPoint g_of_beta(const EMatrix& beta, const Rational& eps) {
    int n = beta.rows();
    return GPoint{EMatrix::identity(n), beta, eps};
}

/// Point of S' = {s : s conj(s) = 1} inside GL_2n(E).
struct SPrimePoint {
    EMatrix m;

    int n() const { return m.rows() / 2; }
    EMatrix A() const { return m.block(0, 0, n(), n()); }
    EMatrix B() const { return m.block(0, n(), n(), n()); }
    EMatrix C() const { return m.block(n(), 0, n(), n()); }
    EMatrix D() const { return m.block(n(), n(), n(), n()); }
    bool valid() const { return twisted_norm(m) == EMatrix::identity(m.rows()); }

    /// Twisted conjugation h s conj(h)^{-1} by h = diag(h1, h2).
    SPrimePoint twist(const EMatrix& h1, const EMatrix& h2) const {
        int k = n();
        EMatrix z(k, k);
        EMatrix h = EMatrix::blocks(h1, z, z, h2);
        return {h * m * h.conj().inverse()};
    }
    SPrimePoint transpose() const { return {m.transpose()}; }
};

/// Canonical representative s'(alpha) = [[alpha, 1], [1 - alpha conj(alpha), -conj(alpha)]].
inline SPrimePoint sprime_of_alpha(const EMatrix& alpha) {
    int n = alpha.rows();
    EMatrix one = EMatrix::identity(n);
    return {EMatrix::blocks(alpha, one, one - alpha * alpha.conj(), -alpha.conj())};
}

/// Point of S = {g theta(g)^{-1}}.
struct SPoint {
    EMatrix m;
    int n() const { return m.rows() / 2; }
    EMatrix A() const { return m.block(0, 0, n(), n()); }
};

inline SPoint s_of_g(const GPoint& g) {
    EMatrix m = g.assemble();
    return {m * theta(m).inverse()};
}

inline SPrimePoint sprime_of_x(const EMatrix& x) { return {x * x.conj().inverse()}; }

/// diag(a, conj a) in H.
inline EMatrix h_of(const EMatrix& a) {
    int n = a.rows();
    EMatrix z(n, n);
    return EMatrix::blocks(a, z, z, a.conj());
}

/// Matrices as row-major arrays of element strings.
inline nlohmann::json matrix_to_json(const EMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j).str());
        rows.push_back(row);
    }
    return rows;
}

inline EMatrix matrix_from_json(const nlohmann::json& j, const FieldSpec& f) {
    int r = static_cast<int>(j.size());
    int c = r == 0 ? 0 : static_cast<int>(j.at(0).size());
    EMatrix m(r, c);
    for (int i = 0; i < r; ++i) {
        if (static_cast<int>(j.at(static_cast<std::size_t>(i)).size()) != c) throw std::invalid_argument("ragged matrix");
        for (int k = 0; k < c; ++k) {
            const auto& e = j.at(static_cast<std::size_t>(i)).at(static_cast<std::size_t>(k));
            m(i, k) = e.is_number_integer() ? EElement(e.get<long long>()) : f.parse(e.get<std::string>());
        }
    }
    return m;
}

}  // namespace rtf
