#pragma once

#include <algorithm>
#include <vector>

#include "rtf/qfield.hpp"

namespace rtf {

/// Dense matrix over E with exact entries.
class EMatrix {
public:
    EMatrix() = default;
    EMatrix(int rows, int cols) : r_(rows), c_(cols), d_(static_cast<std::size_t>(rows * cols)) {}
    EMatrix(std::initializer_list<std::initializer_list<EElement>> rows) {
        r_ = static_cast<int>(rows.size());
        c_ = r_ == 0 ? 0 : static_cast<int>(rows.begin()->size());
        for (const auto& row : rows) {
            if (static_cast<int>(row.size()) != c_) throw std::invalid_argument("EMatrix: ragged rows");
            d_.insert(d_.end(), row.begin(), row.end());
        }
    }

    static EMatrix identity(int n) {
        EMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = EElement(1);
        return m;
    }
    static EMatrix scalar(int n, const EElement& x) {
        EMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = x;
        return m;
    }
    static EMatrix diag(const std::vector<EElement>& xs) {
        int n = static_cast<int>(xs.size());
        EMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = xs[static_cast<std::size_t>(i)];
        return m;
    }
    /// [[A, B], [C, D]]
    static EMatrix blocks(const EMatrix& A, const EMatrix& B, const EMatrix& C, const EMatrix& D) {
        int n = A.rows(), m = A.cols();
        if (B.rows() != n || C.cols() != m || D.rows() != C.rows() || D.cols() != B.cols())
            throw std::invalid_argument("EMatrix::blocks: shape mismatch");
        EMatrix r(n + C.rows(), m + B.cols());
        for (int i = 0; i < r.rows(); ++i)
            for (int j = 0; j < r.cols(); ++j) {
                if (i < n) r(i, j) = j < m ? A(i, j) : B(i, j - m);
                else r(i, j) = j < m ? C(i - n, j) : D(i - n, j - m);
            }
        return r;
    }

    int rows() const { return r_; }
    int cols() const { return c_; }
    bool square() const { return r_ == c_; }

    EElement& operator()(int i, int j) { return d_[static_cast<std::size_t>(i * c_ + j)]; }
    const EElement& operator()(int i, int j) const { return d_[static_cast<std::size_t>(i * c_ + j)]; }

    EMatrix block(int i0, int j0, int nr, int nc) const {
        EMatrix m(nr, nc);
        for (int i = 0; i < nr; ++i)
            for (int j = 0; j < nc; ++j) m(i, j) = (*this)(i0 + i, j0 + j);
        return m;
    }

    EMatrix conj() const {
        EMatrix m = *this;
        for (auto& x : m.d_) x = x.conj();
        return m;
    }
    EMatrix transpose() const {
        EMatrix m(c_, r_);
        for (int i = 0; i < r_; ++i)
            for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
        return m;
    }

    friend EMatrix operator*(const EMatrix& a, const EMatrix& b) {
        if (a.c_ != b.r_) throw std::invalid_argument("EMatrix multiply: shape mismatch");
        EMatrix m(a.r_, b.c_);
        for (int i = 0; i < a.r_; ++i)
            for (int k = 0; k < a.c_; ++k) {
                const EElement& x = a(i, k);
                if (x.is_zero()) continue;
                for (int j = 0; j < b.c_; ++j)
                    if (!b(k, j).is_zero()) m(i, j) += x * b(k, j);
            }
        return m;
    }
    friend EMatrix operator*(const EElement& s, EMatrix m) {
        for (auto& x : m.d_) x = s * x;
        return m;
    }
    friend EMatrix operator+(EMatrix a, const EMatrix& b) {
        a.check_same(b);
        for (std::size_t i = 0; i < a.d_.size(); ++i) a.d_[i] += b.d_[i];
        return a;
    }
    friend EMatrix operator-(EMatrix a, const EMatrix& b) {
        a.check_same(b);
        for (std::size_t i = 0; i < a.d_.size(); ++i) a.d_[i] -= b.d_[i];
        return a;
    }
    EMatrix operator-() const { return EElement(-1) * *this; }
    friend bool operator==(const EMatrix& a, const EMatrix& b) {
        return a.r_ == b.r_ && a.c_ == b.c_ && a.d_ == b.d_;
    }

    EElement det() const {
        if (!square()) throw std::invalid_argument("det of non-square matrix");
        EMatrix m = *this;
        EElement d(1);
        for (int col = 0; col < r_; ++col) {
            int piv = -1;
            for (int i = col; i < r_; ++i)
                if (!m(i, col).is_zero()) {
                    piv = i;
                    break;
                }
            if (piv < 0) return EElement(0);
            if (piv != col) {
                m.swap_rows(piv, col);
                d = -d;
            }
            d *= m(col, col);
            EElement inv = m(col, col).inverse();
            for (int i = col + 1; i < r_; ++i) {
                if (m(i, col).is_zero()) continue;
                EElement f = m(i, col) * inv;
                for (int j = col; j < c_; ++j) m(i, j) -= f * m(col, j);
            }
        }
        return d;
    }

    EMatrix inverse() const {
        if (!square()) throw std::invalid_argument("inverse of non-square matrix");
        int n = r_;
        EMatrix m = *this;
        EMatrix inv = identity(n);
        for (int col = 0; col < n; ++col) {
            int piv = -1;
            for (int i = col; i < n; ++i)
                if (!m(i, col).is_zero()) {
                    piv = i;
                    break;
                }
            if (piv < 0) throw std::domain_error("EMatrix: singular matrix");
            m.swap_rows(piv, col);
            inv.swap_rows(piv, col);
            EElement s = m(col, col).inverse();
            for (int j = 0; j < n; ++j) {
                m(col, j) = s * m(col, j);
                inv(col, j) = s * inv(col, j);
            }
            for (int i = 0; i < n; ++i) {
                if (i == col || m(i, col).is_zero()) continue;
                EElement f = m(i, col);
                for (int j = 0; j < n; ++j) {
                    m(i, j) -= f * m(col, j);
                    inv(i, j) -= f * inv(col, j);
                }
            }
        }
        return inv;
    }

    EElement trace() const {
        EElement t;
        for (int i = 0; i < std::min(r_, c_); ++i) t += (*this)(i, i);
        return t;
    }

    /// Characteristic polynomial det(t - M), coefficients from constant term up;
    /// the leading coefficient 1 is included. Faddeev-LeVerrier recursion.
    std::vector<EElement> char_poly() const {
        if (!square()) throw std::invalid_argument("char_poly of non-square matrix");
        int n = r_;
        std::vector<EElement> c(static_cast<std::size_t>(n) + 1);
        c[static_cast<std::size_t>(n)] = EElement(1);
        EMatrix Mk(n, n);
        EMatrix AM(n, n);
        for (int k = 1; k <= n; ++k) {
            // M_k = A M_{k-1} + c_{n-k+1} I
            Mk = AM + scalar(n, c[static_cast<std::size_t>(n - k + 1)]);
            AM = *this * Mk;
            c[static_cast<std::size_t>(n - k)] = EElement(Rational(-1, k)) * AM.trace();
        }
        return c;
    }

    /// Minimal valuation over entries; +inf for the zero matrix.
    Val min_val(Int p) const {
        Val v;
        for (const auto& x : d_) v = std::min(v, x.val(p));
        return v;
    }
    bool integral(Int p) const { return min_val(p).v >= 0; }
    bool is_zero() const {
        return std::all_of(d_.begin(), d_.end(), [](const EElement& x) { return x.is_zero(); });
    }
    bool in_F() const {
        return std::all_of(d_.begin(), d_.end(), [](const EElement& x) { return x.in_F(); });
    }

    /// Elementary divisor exponents (ascending) of a nonsingular matrix via
    /// minimal valuations of k x k minors.
    std::vector<int> elementary_divisors(Int p) const;

    std::string str() const {
        std::string s = "[";
        for (int i = 0; i < r_; ++i) {
            s += i ? ", [" : "[";
            for (int j = 0; j < c_; ++j) s += (j ? ", " : "") + (*this)(i, j).str();
            s += "]";
        }
        return s + "]";
    }

private:
    void check_same(const EMatrix& b) const {
        if (r_ != b.r_ || c_ != b.c_) throw std::invalid_argument("EMatrix: shape mismatch");
    }
    void swap_rows(int a, int b) {
        if (a == b) return;
        for (int j = 0; j < c_; ++j) std::swap((*this)(a, j), (*this)(b, j));
    }

    int r_ = 0, c_ = 0;
    std::vector<EElement> d_;
};

inline std::vector<int> EMatrix::elementary_divisors(Int p) const {
    // Smith form over o_E: pivot on an entry of minimal valuation, clear its
    // row and column with o_E-multiples, recurse on the complement.
    if (!square()) throw std::invalid_argument("elementary_divisors of non-square matrix");
    int n = r_;
    EMatrix m = *this;
    std::vector<int> e;
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
        if (best.infinite()) throw std::domain_error("elementary_divisors: singular matrix");
        e.push_back(best.v);
        m.swap_rows(k, pi);
        for (int i = 0; i < n; ++i) std::swap(m(i, k), m(i, pj));
        EElement inv = m(k, k).inverse();
        for (int i = k + 1; i < n; ++i) {
            if (m(i, k).is_zero()) continue;
            EElement f = m(i, k) * inv;
            for (int j = k; j < n; ++j) m(i, j) -= f * m(k, j);
        }
    }
    std::sort(e.begin(), e.end());
    return e;
}

/// Value of a polynomial (coefficients low to high) at a matrix.
inline EMatrix poly_eval(const std::vector<EElement>& coeffs, const EMatrix& m) {
    int n = m.rows();
    EMatrix r(n, n);
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) r = r * m + EMatrix::scalar(n, *it);
    return r;
}

}  // namespace rtf
