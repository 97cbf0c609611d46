#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "kgalign/matrix.hpp"
#include "kgalign/mlp.hpp"

namespace kgalign {

// Central-finite-difference gradient oracle for the homogenizer. Touches
// only the forward pass, so it stays independent of backward(); backward's
// correctness is judged against it.

namespace detail {

// Scalar probe loss L = sum over outputs of r_j * y_j; its exact dL/dy is r.
inline double probe_loss(const MlpHomogenizer& m, const Matrix& x, Mode mode, double p,
                         const Matrix* mask, std::span<const double> r) {
    const MlpForward f = forward_batch(m, x, mode, p, mask);
    double loss = 0.0;
    const auto y = f.y.flat();
    for (std::size_t i = 0; i < y.size(); ++i) loss += r[i] * y[i];
    return loss;
}

}  // namespace detail

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
};

/// Relative error with a small absolute floor: |a-b| / max(|a|, |b|, 1e-8).
inline double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

/// Compares backward() against central finite differences (step h) on one
/// model and input batch, across all six parameter groups and the input.
/// `r` supplies dL/dy entry per output (row-major over the batch).
inline GradCheckReport gradient_check(MlpHomogenizer model, Matrix x, Mode mode, double dropout_p,
                                      const Matrix* mask, std::span<const double> r,
                                      double h = 1e-4) {
    const MlpForward fwd = forward_batch(model, x, mode, dropout_p, mask);
    Matrix grad_y(fwd.y.rows(), fwd.y.cols());
    {
        auto g = grad_y.flat();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = r[i];
    }
    const MlpGradients analytic = backward_batch(model, fwd.cache, grad_y);

    GradCheckReport report;
    auto fd_at = [&](double* param) {
        const double saved = *param;
        *param = saved + h;
        const double up = detail::probe_loss(model, x, mode, dropout_p, mask, r);
        *param = saved - h;
        const double down = detail::probe_loss(model, x, mode, dropout_p, mask, r);
        *param = saved;
        return (up - down) / (2.0 * h);
    };
    auto check_span = [&](std::span<double> params, std::span<const double> grads) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double fd = fd_at(&params[i]);
            report.max_rel_error = std::max(report.max_rel_error, relative_error(grads[i], fd));
            ++report.checked;
        }
    };

    check_span(model.w1.flat(), analytic.w1.flat());
    check_span(model.b1, analytic.b1);
    check_span(model.ln_gain, analytic.ln_gain);
    check_span(model.ln_bias, analytic.ln_bias);
    check_span(model.w2.flat(), analytic.w2.flat());
    check_span(model.b2, analytic.b2);
    check_span(x.flat(), analytic.input.flat());
    return report;
}

}  // namespace kgalign
