#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

/// Solves A X = B for symmetric positive definite A via Cholesky.
/// Throws SingularMatrixError when a pivot collapses (rank-deficient A).
inline Matrix cholesky_solve(const Matrix& a, const Matrix& b) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("cholesky_solve: A must be square");
    if (b.rows() != n) throw DimensionError("cholesky_solve: B row count must match A");

    // Pivots that collapse to rounding noise relative to the diagonal scale
    // mean numerical rank deficiency, not just an unlucky tiny value.
    double diag_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(a.at(i, i)));
    const double pivot_floor = diag_scale * 1e-13;

    // Lower-triangular factor, L L^T = A.
    Matrix l(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = a.at(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l.at(i, k) * l.at(j, k);
            if (i == j) {
                if (!(s > pivot_floor) || !std::isfinite(s))
                    throw SingularMatrixError(
                        "normal-equations matrix is not positive definite "
                        "(rank-deficient input; retry with ridge > 0)");
                l.at(i, i) = std::sqrt(s);
            } else {
                l.at(i, j) = s / l.at(j, j);
            }
        }
    }

    // Forward then back substitution, one B column at a time.
    Matrix x(n, b.cols());
    for (std::size_t c = 0; c < b.cols(); ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = b.at(i, c);
            for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * x.at(k, c);
            x.at(i, c) = s / l.at(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double s = x.at(ii, c);
            for (std::size_t k = ii + 1; k < n; ++k) s -= l.at(k, ii) * x.at(k, c);
            x.at(ii, c) = s / l.at(ii, ii);
        }
    }
    return x;
}

struct SvdResult {
    Matrix u;  // n x n, orthonormal columns
    std::vector<double> sigma;
    Matrix v;  // n x n, orthogonal
};

namespace detail {

// Replaces near-zero columns of U (sigma below `tiny`) with deterministic
// orthonormal completions. The canonical basis vector with the largest
// residual after projecting out the filled columns always has residual
// norm >= 1/sqrt(n), so taking the best candidate (plus one
// re-orthogonalization pass) succeeds at any rank deficiency.
inline void complete_orthonormal(Matrix& u, const std::vector<double>& sigma, double tiny) {
    const std::size_t n = u.rows();
    const auto project_out_filled = [&](std::vector<double>& e, std::size_t j) {
        for (std::size_t k = 0; k < u.cols(); ++k) {
            if (k == j) continue;
            const bool filled = sigma[k] > tiny || k < j;
            if (!filled) continue;
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += e[i] * u.at(i, k);
            for (std::size_t i = 0; i < n; ++i) e[i] -= dot * u.at(i, k);
        }
    };
    for (std::size_t j = 0; j < u.cols(); ++j) {
        if (sigma[j] > tiny) continue;
        std::vector<double> best;
        double best_norm = -1.0;
        for (std::size_t cand = 0; cand < n; ++cand) {
            std::vector<double> e(n, 0.0);
            e[cand] = 1.0;
            project_out_filled(e, j);
            double norm = 0.0;
            for (double v : e) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > best_norm) {
                best_norm = norm;
                best = std::move(e);
            }
        }
        project_out_filled(best, j);
        double norm = 0.0;
        for (double v : best) norm += v * v;
        norm = std::sqrt(norm);
        for (std::size_t i = 0; i < n; ++i) u.at(i, j) = best[i] / norm;
    }
}

}  // namespace detail

/// One-sided Jacobi SVD of a square matrix: A = U diag(sigma) V^T.
/// Right rotations orthogonalize the columns of a working copy of A while
/// accumulating V; converged when every column pair's normalized off-diagonal
/// mass is <= tol. Singular values are not sorted. Rank-deficient columns of
/// U are completed deterministically so U is always orthonormal.
inline SvdResult jacobi_svd(const Matrix& a, double tol = 1e-12, int max_sweeps = 64) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("jacobi_svd: matrix must be square");

    Matrix w = a;  // columns converge to U * diag(sigma)
    Matrix v(n, n);
    for (std::size_t i = 0; i < n; ++i) v.at(i, i) = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    app += w.at(i, p) * w.at(i, p);
                    aqq += w.at(i, q) * w.at(i, q);
                    apq += w.at(i, p) * w.at(i, q);
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < n; ++i) {
                    const double wp = w.at(i, p), wq = w.at(i, q);
                    w.at(i, p) = c * wp - s * wq;
                    w.at(i, q) = s * wp + c * wq;
                    const double vp = v.at(i, p), vq = v.at(i, q);
                    v.at(i, p) = c * vp - s * vq;
                    v.at(i, q) = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    SvdResult out;
    out.sigma.assign(n, 0.0);
    out.u = Matrix(n, n);
    double max_sigma = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += w.at(i, j) * w.at(i, j);
        out.sigma[j] = std::sqrt(norm);
        if (out.sigma[j] > max_sigma) max_sigma = out.sigma[j];
    }
    const double tiny = (max_sigma > 0.0 ? max_sigma : 1.0) * 1e-13;
    for (std::size_t j = 0; j < n; ++j) {
        if (out.sigma[j] > tiny) {
            for (std::size_t i = 0; i < n; ++i) out.u.at(i, j) = w.at(i, j) / out.sigma[j];
        }
    }
    detail::complete_orthonormal(out.u, out.sigma, tiny);
    out.v = v;
    return out;
}

/// Modified Gram-Schmidt orthonormalization of A's columns (A square,
/// full rank). Used to make test rotations from random matrices.
inline Matrix orthonormalize_columns(const Matrix& a) {
    const std::size_t n = a.rows();
    if (a.cols() != n) throw DimensionError("orthonormalize_columns: matrix must be square");
    Matrix q = a;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < j; ++k) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += q.at(i, k) * q.at(i, j);
            for (std::size_t i = 0; i < n; ++i) q.at(i, j) -= dot * q.at(i, k);
        }
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) norm += q.at(i, j) * q.at(i, j);
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw SingularMatrixError("orthonormalize_columns: rank-deficient input");
        for (std::size_t i = 0; i < n; ++i) q.at(i, j) /= norm;
    }
    return q;
}

/// max |W^T W - I|.
inline double orthogonality_defect(const Matrix& w) {
    const Matrix g = matmul_tn(w, w);
    double m = 0.0;
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) {
            const double target = i == j ? 1.0 : 0.0;
            m = std::max(m, std::abs(g.at(i, j) - target));
        }
    return m;
}

}  // namespace kgalign
