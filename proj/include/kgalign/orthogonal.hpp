#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/linalg.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/targets.hpp"

namespace kgalign {

/// Orthogonally constrained alignment map (W^T W = I), square by
/// construction: source and target spaces must share a dimension.
struct OrthogonalMap {
    Matrix w;

    std::size_t dim() const { return w.rows(); }
    std::size_t parameter_count() const { return w.rows() * w.cols(); }
};

/// Procrustes solution: with X^T Z = U S V^T, W = U V^T minimizes
/// ||X W - Z||_F over orthogonal W. Requires d_src == d_tgt.
inline OrthogonalMap fit_orthogonal(const PairedDataset& pairs) {
    if (pairs.size() == 0) throw ValidationError("fit_orthogonal: need at least one pair");
    if (pairs.d_src() != pairs.d_tgt())
        throw DimensionError("fit_orthogonal: source dimension " + std::to_string(pairs.d_src()) +
                             " differs from target dimension " + std::to_string(pairs.d_tgt()) +
                             "; the orthogonality constraint needs a common dimensionality");
    const SvdResult svd = jacobi_svd(matmul_tn(pairs.x, pairs.z));
    OrthogonalMap map{matmul_nt(svd.u, svd.v)};
    if (orthogonality_defect(map.w) > 1e-8)
        throw Error("fit_orthogonal: SVD failed to produce an orthogonal map");
    return map;
}

inline std::vector<double> apply_orthogonal(const OrthogonalMap& map, std::span<const double> x) {
    if (x.size() != map.dim())
        throw DimensionError("apply_orthogonal: input has dimension " + std::to_string(x.size()) +
                             ", map expects " + std::to_string(map.dim()));
    std::vector<double> y(map.dim(), 0.0);
    for (std::size_t k = 0; k < map.dim(); ++k) {
        const double xk = x[k];
        const auto wk = map.w.row(k);
        for (std::size_t j = 0; j < y.size(); ++j) y[j] += xk * wk[j];
    }
    return y;
}

}  // namespace kgalign
