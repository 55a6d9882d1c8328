#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmp {

/// Thrown when a factorization or solve cannot proceed (singular pivot,
/// non-convergence, degenerate geometry).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Dense row-major matrix. All certification math in this project is
/// desk-scale (N up to a few thousand), so dense storage everywhere.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}

    static Matrix identity(int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<size_t>(i) * cols + j]; }

    bool empty() const { return rows == 0 || cols == 0; }
};

inline Matrix operator*(const Matrix& x, const Matrix& y) {
    if (x.cols != y.rows) throw std::invalid_argument("matrix product: shape mismatch");
    Matrix z(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
        for (int k = 0; k < x.cols; ++k) {
            const double xik = x(i, k);
            if (xik == 0.0) continue;
            for (int j = 0; j < y.cols; ++j) z(i, j) += xik * y(k, j);
        }
    return z;
}

inline Matrix operator+(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("matrix sum: shape mismatch");
    Matrix z = x;
    for (size_t i = 0; i < z.a.size(); ++i) z.a[i] += y.a[i];
    return z;
}

inline Matrix operator-(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("matrix diff: shape mismatch");
    Matrix z = x;
    for (size_t i = 0; i < z.a.size(); ++i) z.a[i] -= y.a[i];
    return z;
}

inline Matrix operator*(double s, const Matrix& x) {
    Matrix z = x;
    for (double& v : z.a) v *= s;
    return z;
}

inline Matrix transpose(const Matrix& x) {
    Matrix z(x.cols, x.rows);
    for (int i = 0; i < x.rows; ++i)
        for (int j = 0; j < x.cols; ++j) z(j, i) = x(i, j);
    return z;
}

inline std::vector<double> matvec(const Matrix& x, std::span<const double> v) {
    if (x.cols != static_cast<int>(v.size())) throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> r(x.rows, 0.0);
    for (int i = 0; i < x.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < x.cols; ++j) s += x(i, j) * v[j];
        r[i] = s;
    }
    return r;
}

inline double max_abs(const Matrix& x) {
    double m = 0.0;
    for (double v : x.a) m = std::max(m, std::abs(v));
    return m;
}

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

inline double max_abs_diff(const Matrix& x, const Matrix& y) {
    if (x.rows != y.rows || x.cols != y.cols) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (size_t i = 0; i < x.a.size(); ++i) m = std::max(m, std::abs(x.a[i] - y.a[i]));
    return m;
}

/// Extract B_{rows,cols} preserving the given index order.
inline Matrix submatrix(const Matrix& b, std::span<const int> rows, std::span<const int> cols) {
    Matrix z(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
    for (size_t i = 0; i < rows.size(); ++i) {
        const int r = rows[i];
        if (r < 0 || r >= b.rows) throw std::out_of_range("submatrix: row index out of range");
        for (size_t j = 0; j < cols.size(); ++j) {
            const int c = cols[j];
            if (c < 0 || c >= b.cols) throw std::out_of_range("submatrix: col index out of range");
            z(static_cast<int>(i), static_cast<int>(j)) = b(r, c);
        }
    }
    return z;
}

/// LU with partial pivoting, the single factorization used everywhere.
struct LuFactors {
    Matrix lu;              // packed L (unit lower) and U
    std::vector<int> perm;  // row permutation applied to the input
};

inline LuFactors lu_factor(Matrix b, double pivot_tol_rel = 1e-13) {
    if (b.rows != b.cols) throw std::invalid_argument("lu_factor: matrix not square");
    const int n = b.rows;
    const double scale = max_abs(b);
    const double pivot_floor = pivot_tol_rel * (scale > 0.0 ? scale : 1.0);
    LuFactors f;
    f.perm.resize(n);
    for (int i = 0; i < n; ++i) f.perm[i] = i;
    for (int k = 0; k < n; ++k) {
        int piv = k;
        double best = std::abs(b(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(b(i, k));
            if (v > best) { best = v; piv = i; }
        }
        if (best < pivot_floor)
            throw NumericalError("lu_factor: matrix singular to working precision (pivot " +
                                 std::to_string(best) + ")");
        if (piv != k) {
            for (int j = 0; j < n; ++j) std::swap(b(k, j), b(piv, j));
            std::swap(f.perm[k], f.perm[piv]);
        }
        const double inv = 1.0 / b(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = b(i, k) * inv;
            b(i, k) = l;
            if (l == 0.0) continue;
            for (int j = k + 1; j < n; ++j) b(i, j) -= l * b(k, j);
        }
    }
    f.lu = std::move(b);
    return f;
}

inline std::vector<double> lu_solve(const LuFactors& f, std::span<const double> rhs) {
    const int n = f.lu.rows;
    if (static_cast<int>(rhs.size()) != n) throw std::invalid_argument("lu_solve: rhs size mismatch");
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i) x[i] = rhs[f.perm[i]];
    for (int i = 1; i < n; ++i) {
        double s = x[i];
        for (int j = 0; j < i; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j < n; ++j) s -= f.lu(i, j) * x[j];
        x[i] = s / f.lu(i, i);
    }
    return x;
}

struct InverseResult {
    Matrix inverse;
    double residual_max = 0.0;  // ||B * B^{-1} - I||_max
};

/// Explicit inverse via columnwise LU solves. The DMP criteria need the
/// full inverse entrywise, not just solves.
inline InverseResult invert(const Matrix& b) {
    if (b.rows != b.cols) throw std::invalid_argument("invert: matrix not square");
    const int n = b.rows;
    InverseResult r;
    r.inverse = Matrix(n, n);
    if (n == 0) return r;
    const LuFactors f = lu_factor(b);
    std::vector<double> e(n, 0.0);
    for (int j = 0; j < n; ++j) {
        e[j] = 1.0;
        const std::vector<double> col = lu_solve(f, e);
        for (int i = 0; i < n; ++i) r.inverse(i, j) = col[i];
        e[j] = 0.0;
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int k = 0; k < n; ++k) s += b(i, k) * r.inverse(k, j);
            r.residual_max = std::max(r.residual_max, std::abs(s - (i == j ? 1.0 : 0.0)));
        }
    return r;
}

/// Cholesky factor (lower). Throws NumericalError if the matrix is not
/// numerically SPD. Used as the eigenvalue-free positive-definiteness check.
inline Matrix cholesky_factor(const Matrix& b) {
    if (b.rows != b.cols) throw std::invalid_argument("cholesky_factor: matrix not square");
    const int n = b.rows;
    Matrix l(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = b(i, j);
            for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
            if (i == j) {
                if (s <= 0.0) throw NumericalError("cholesky_factor: matrix not positive definite");
                l(i, i) = std::sqrt(s);
            } else {
                l(i, j) = s / l(j, j);
            }
        }
    }
    return l;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
/// Small matrices only (used for the 6x6 singular-value ratio checks).
inline std::vector<double> symmetric_eigenvalues(Matrix b, int max_sweeps = 64) {
    if (b.rows != b.cols) throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
    const int n = b.rows;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off = std::max(off, std::abs(b(i, j)));
        if (off <= 1e-300 || off <= 1e-16 * (max_abs(b) + 1e-300)) break;
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double apq = b(p, q);
                if (apq == 0.0) continue;
                const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double bkp = b(k, p), bkq = b(k, q);
                    b(k, p) = c * bkp - s * bkq;
                    b(k, q) = s * bkp + c * bkq;
                }
                for (int k = 0; k < n; ++k) {
                    const double bpk = b(p, k), bqk = b(q, k);
                    b(p, k) = c * bpk - s * bqk;
                    b(q, k) = s * bpk + c * bqk;
                }
            }
    }
    std::vector<double> ev(n);
    for (int i = 0; i < n; ++i) ev[i] = b(i, i);
    std::sort(ev.begin(), ev.end());
    return ev;
}

enum class SignMode { Positive, Nonnegative, Negative, Nonpositive };

enum class SignVerdict { StrictlyPositive, Nonnegative, Indefinite, StrictlyNegative, Nonpositive };

inline const char* to_string(SignVerdict v) {
    switch (v) {
        case SignVerdict::StrictlyPositive: return "strictly-positive";
        case SignVerdict::Nonnegative: return "nonnegative";
        case SignVerdict::Indefinite: return "indefinite";
        case SignVerdict::StrictlyNegative: return "strictly-negative";
        case SignVerdict::Nonpositive: return "nonpositive";
    }
    return "?";
}

/// Result of a toleranced entrywise sign test. min_entry/max_entry and the
/// argmin location give the margin, which matters more than the boolean for
/// borderline meshes (sweeps pass through sign changes).
struct SignReport {
    SignVerdict verdict = SignVerdict::Indefinite;
    double min_entry = 0.0;
    double max_entry = 0.0;
    int argmin_row = -1;
    int argmin_col = -1;
    int argmax_row = -1;
    int argmax_col = -1;
    double tolerance = 0.0;

    bool passed(SignMode mode) const {
        switch (mode) {
            case SignMode::Positive: return verdict == SignVerdict::StrictlyPositive;
            case SignMode::Nonnegative:
                return verdict == SignVerdict::StrictlyPositive || verdict == SignVerdict::Nonnegative;
            case SignMode::Negative: return verdict == SignVerdict::StrictlyNegative;
            case SignMode::Nonpositive:
                return verdict == SignVerdict::StrictlyNegative || verdict == SignVerdict::Nonpositive;
        }
        return false;
    }
};

/// Strict tests use threshold +tau (pos) / -tau (neg), non-strict allow
/// |entry| <= tau, with tau = tol_rel * ||B||_max. Verdicts are scoped to
/// the requested mode: a strict test that fails reports Indefinite.
inline SignReport sign_test(const Matrix& b, SignMode mode, double tol_rel = 1e-12) {
    SignReport r;
    const double scale = max_abs(b);
    r.tolerance = tol_rel * scale;
    r.min_entry = std::numeric_limits<double>::infinity();
    r.max_entry = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < b.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            const double v = b(i, j);
            if (v < r.min_entry) { r.min_entry = v; r.argmin_row = i; r.argmin_col = j; }
            if (v > r.max_entry) { r.max_entry = v; r.argmax_row = i; r.argmax_col = j; }
        }
    if (b.empty()) { r.min_entry = r.max_entry = 0.0; }
    switch (mode) {
        case SignMode::Positive:
            r.verdict = (r.min_entry > r.tolerance) ? SignVerdict::StrictlyPositive : SignVerdict::Indefinite;
            break;
        case SignMode::Nonnegative:
            r.verdict = (r.min_entry >= -r.tolerance) ? SignVerdict::Nonnegative : SignVerdict::Indefinite;
            break;
        case SignMode::Negative:
            r.verdict = (r.max_entry < -r.tolerance) ? SignVerdict::StrictlyNegative : SignVerdict::Indefinite;
            break;
        case SignMode::Nonpositive:
            r.verdict = (r.max_entry <= r.tolerance) ? SignVerdict::Nonpositive : SignVerdict::Indefinite;
            break;
    }
    return r;
}

}  // namespace dmp
