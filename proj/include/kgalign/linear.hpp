#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/linalg.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/targets.hpp"

namespace kgalign {

/// Least-squares alignment map, row-vector convention: z ~= x W with
/// W of shape d_src x d_tgt, so unequal dimensions (e.g. 50 -> 768) work.
struct LinearMap {
    Matrix w;

    std::size_t d_src() const { return w.rows(); }
    std::size_t d_tgt() const { return w.cols(); }
    std::size_t parameter_count() const { return w.rows() * w.cols(); }
};

/// Minimizes sum_i ||x_i W - z_i||^2 + ridge * ||W||_F^2 in closed form via
/// the normal equations (X^T X + ridge I) W = X^T Z. With ridge = 0 a
/// rank-deficient X^T X raises SingularMatrixError (retry with ridge > 0).
inline LinearMap fit_linear(const PairedDataset& pairs, double ridge = 0.0) {
    if (pairs.size() == 0) throw ValidationError("fit_linear: need at least one pair");
    if (ridge < 0.0) throw ValidationError("fit_linear: ridge must be non-negative");
    Matrix gram = matmul_tn(pairs.x, pairs.x);
    for (std::size_t i = 0; i < gram.rows(); ++i) gram.at(i, i) += ridge;
    const Matrix xtz = matmul_tn(pairs.x, pairs.z);
    return LinearMap{cholesky_solve(gram, xtz)};
}

/// x W (row-vector convention).
inline std::vector<double> apply_linear(const LinearMap& map, std::span<const double> x) {
    if (x.size() != map.d_src())
        throw DimensionError("apply_linear: input has dimension " + std::to_string(x.size()) +
                             ", map expects " + std::to_string(map.d_src()));
    std::vector<double> y(map.d_tgt(), 0.0);
    for (std::size_t k = 0; k < map.d_src(); ++k) {
        const double xk = x[k];
        const auto wk = map.w.row(k);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += xk * wk[j];
    }
    return y;
}

/// Sum over pairs of ||x_i W - z_i||^2; shared by the fit oracles and the
/// constrained-vs-unconstrained objective comparison.
inline double residual_sum_squares(const Matrix& w, const PairedDataset& pairs) {
    if (w.rows() != pairs.d_src() || w.cols() != pairs.d_tgt())
        throw DimensionError("residual_sum_squares: map shape does not match pairs");
    const Matrix pred = matmul(pairs.x, w);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.rows(); ++i) {
        const auto pr = pred.row(i);
        const auto zr = pairs.z.row(i);
        for (std::size_t j = 0; j < pr.size(); ++j) {
            const double d = pr[j] - zr[j];
            total += d * d;
        }
    }
    return total;
}

}  // namespace kgalign
