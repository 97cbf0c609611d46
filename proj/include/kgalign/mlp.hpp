#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/rng.hpp"

namespace kgalign {

/// One-hidden-layer homogenizer mapping d_src -> d_tgt:
///
///   x -> inverted-dropout(x)            (train mode only, on the input)
///     -> h  = x W1 + b1
///     -> n  = layernorm(h; gain, bias)  (normalized over the hidden dim)
///     -> a  = tanh(n)
///     -> y  = a W2 + b2
struct MlpHomogenizer {
    Matrix w1;                     // d_src x d_hidden
    std::vector<double> b1;        // d_hidden
    std::vector<double> ln_gain;   // d_hidden
    std::vector<double> ln_bias;   // d_hidden
    Matrix w2;                     // d_hidden x d_tgt
    std::vector<double> b2;        // d_tgt
    double ln_eps = 1e-5;

    std::size_t d_src() const { return w1.rows(); }
    std::size_t d_hidden() const { return w1.cols(); }
    std::size_t d_tgt() const { return w2.cols(); }

    std::size_t parameter_count() const {
        return w1.rows() * w1.cols() + b1.size() + ln_gain.size() + ln_bias.size() +
               w2.rows() * w2.cols() + b2.size();
    }

    void validate() const {
        if (d_src() == 0 || d_hidden() == 0 || d_tgt() == 0)
            throw DimensionError("MlpHomogenizer: dimensions must be positive");
        if (b1.size() != d_hidden() || ln_gain.size() != d_hidden() ||
            ln_bias.size() != d_hidden() || w2.rows() != d_hidden() || b2.size() != d_tgt())
            throw DimensionError("MlpHomogenizer: inconsistent parameter shapes");
        if (!(ln_eps > 0.0)) throw ValidationError("MlpHomogenizer: ln_eps must be positive");
        for (const auto* m : {&w1, &w2})
            for (double v : m->flat())
                if (!std::isfinite(v)) throw ValidationError("MlpHomogenizer: non-finite weight");
        for (const auto* v : {&b1, &ln_gain, &ln_bias, &b2})
            for (double x : *v)
                if (!std::isfinite(x)) throw ValidationError("MlpHomogenizer: non-finite parameter");
    }

    /// Glorot-uniform weights drawn from `rng` (W1 entries row-major, then
    /// W2 entries row-major), zero biases, unit gain.
    static MlpHomogenizer init(std::size_t d_src, std::size_t d_hidden, std::size_t d_tgt,
                               SplitRng& rng, double ln_eps = 1e-5) {
        if (d_src == 0 || d_hidden == 0 || d_tgt == 0)
            throw DimensionError("MlpHomogenizer::init: dimensions must be positive");
        MlpHomogenizer m;
        m.ln_eps = ln_eps;
        m.w1 = Matrix(d_src, d_hidden);
        m.w2 = Matrix(d_hidden, d_tgt);
        const double lim1 = std::sqrt(6.0 / static_cast<double>(d_src + d_hidden));
        for (double& v : m.w1.flat()) v = rng.next_uniform(-lim1, lim1);
        const double lim2 = std::sqrt(6.0 / static_cast<double>(d_hidden + d_tgt));
        for (double& v : m.w2.flat()) v = rng.next_uniform(-lim2, lim2);
        m.b1.assign(d_hidden, 0.0);
        m.ln_gain.assign(d_hidden, 1.0);
        m.ln_bias.assign(d_hidden, 0.0);
        m.b2.assign(d_tgt, 0.0);
        return m;
    }
};

enum class Mode { kTrain, kEval };

/// Everything backward() needs from the matching forward() call.
struct MlpCache {
    Mode mode = Mode::kEval;
    Matrix input;                 // rows fed to W1, dropout already applied
    Matrix norm;                  // layer-normalized activations n
    std::vector<double> inv_std;  // per-row 1/sqrt(var + eps)
    Matrix act;                   // a = tanh(gain * n + bias)
    Matrix mask;                  // 0/1 keep mask; empty when no dropout ran
    double keep_scale = 1.0;      // 1/(1-p) applied to kept inputs
};

struct MlpForward {
    Matrix y;
    MlpCache cache;
};

struct MlpGradients {
    Matrix w1;
    std::vector<double> b1, ln_gain, ln_bias;
    Matrix w2;
    std::vector<double> b2;
    Matrix input;  // dL/dx, same shape as the raw input batch
};

/// 0/1 keep mask with keep probability 1-p, drawn row-major.
inline Matrix draw_dropout_mask(std::size_t rows, std::size_t cols, double p, SplitRng& rng) {
    Matrix mask(rows, cols);
    const double keep = 1.0 - p;
    for (double& v : mask.flat()) v = rng.next_double() < keep ? 1.0 : 0.0;
    return mask;
}

/// Batched forward pass; row i of `x` is one sample. In train mode with
/// p > 0 a mask of matching shape must be supplied; eval mode ignores both
/// `mask` and `dropout_p` entirely.
inline MlpForward forward_batch(const MlpHomogenizer& m, const Matrix& x, Mode mode,
                                double dropout_p = 0.0, const Matrix* mask = nullptr) {
    if (x.cols() != m.d_src())
        throw DimensionError("forward: input dimension " + std::to_string(x.cols()) +
                             " != model d_src " + std::to_string(m.d_src()));
    if (!(dropout_p >= 0.0 && dropout_p < 1.0))
        throw ValidationError("forward: dropout_p must lie in [0, 1)");

    MlpForward out;
    MlpCache& c = out.cache;
    c.mode = mode;

    const bool dropping = mode == Mode::kTrain && dropout_p > 0.0;
    if (dropping) {
        if (mask == nullptr)
            throw ValidationError("forward: train mode with dropout_p > 0 requires a mask");
        if (mask->rows() != x.rows() || mask->cols() != x.cols())
            throw DimensionError("forward: dropout mask shape does not match input");
        c.keep_scale = 1.0 / (1.0 - dropout_p);
        c.mask = *mask;
        c.input = x;
        auto xi = c.input.flat();
        const auto mi = c.mask.flat();
        for (std::size_t i = 0; i < xi.size(); ++i) xi[i] *= mi[i] * c.keep_scale;
    } else {
        c.input = x;
    }

    const std::size_t rows = x.rows();
    const std::size_t hidden = m.d_hidden();

    Matrix h = matmul(c.input, m.w1);
    for (std::size_t i = 0; i < rows; ++i) {
        auto hr = h.row(i);
        for (std::size_t j = 0; j < hidden; ++j) hr[j] += m.b1[j];
    }

    c.norm = Matrix(rows, hidden);
    c.inv_std.assign(rows, 0.0);
    c.act = Matrix(rows, hidden);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto hr = h.row(i);
        double mean = 0.0;
        for (double v : hr) mean += v;
        mean /= static_cast<double>(hidden);
        double var = 0.0;
        for (double v : hr) var += (v - mean) * (v - mean);
        var /= static_cast<double>(hidden);
        const double inv_std = 1.0 / std::sqrt(var + m.ln_eps);
        c.inv_std[i] = inv_std;
        auto nr = c.norm.row(i);
        auto ar = c.act.row(i);
        for (std::size_t j = 0; j < hidden; ++j) {
            nr[j] = (hr[j] - mean) * inv_std;
            ar[j] = std::tanh(m.ln_gain[j] * nr[j] + m.ln_bias[j]);
        }
    }

    out.y = matmul(c.act, m.w2);
    for (std::size_t i = 0; i < rows; ++i) {
        auto yr = out.y.row(i);
        for (std::size_t j = 0; j < m.d_tgt(); ++j) yr[j] += m.b2[j];
    }
    return out;
}

/// Exact gradients of the forward computation graph (including the dropout
/// mask that ran) for every parameter group and the raw input, given
/// dL/dy for each row. Parameter gradients are summed over the batch.
inline MlpGradients backward_batch(const MlpHomogenizer& m, const MlpCache& c,
                                   const Matrix& grad_y) {
    const std::size_t rows = c.input.rows();
    const std::size_t hidden = m.d_hidden();
    if (c.input.cols() != m.d_src() || c.act.cols() != hidden)
        throw DimensionError("backward: cache does not match model shapes");
    if (grad_y.rows() != rows || grad_y.cols() != m.d_tgt())
        throw DimensionError("backward: grad_y shape does not match forward output");

    MlpGradients g;
    g.w2 = matmul_tn(c.act, grad_y);
    g.b2.assign(m.d_tgt(), 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto gr = grad_y.row(i);
        for (std::size_t j = 0; j < g.b2.size(); ++j) g.b2[j] += gr[j];
    }

    Matrix grad_act = matmul_nt(grad_y, m.w2);

    // tanh, then the affine layer-norm parameters.
    g.ln_gain.assign(hidden, 0.0);
    g.ln_bias.assign(hidden, 0.0);
    Matrix grad_h(rows, hidden);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto ar = c.act.row(i);
        const auto nr = c.norm.row(i);
        auto gar = grad_act.row(i);
        for (std::size_t j = 0; j < hidden; ++j) {
            const double dln = gar[j] * (1.0 - ar[j] * ar[j]);
            g.ln_gain[j] += dln * nr[j];
            g.ln_bias[j] += dln;
            gar[j] = dln * m.ln_gain[j];  // now dL/dn
        }
        // Normalization backward: dh = inv_std * (dn - mean(dn) - n * mean(dn o n)).
        const auto dn = grad_act.row(i);
        double mean_dn = 0.0, mean_dn_n = 0.0;
        for (std::size_t j = 0; j < hidden; ++j) {
            mean_dn += dn[j];
            mean_dn_n += dn[j] * nr[j];
        }
        mean_dn /= static_cast<double>(hidden);
        mean_dn_n /= static_cast<double>(hidden);
        auto ghr = grad_h.row(i);
        for (std::size_t j = 0; j < hidden; ++j)
            ghr[j] = c.inv_std[i] * (dn[j] - mean_dn - nr[j] * mean_dn_n);
    }

    g.w1 = matmul_tn(c.input, grad_h);
    g.b1.assign(hidden, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        const auto ghr = grad_h.row(i);
        for (std::size_t j = 0; j < hidden; ++j) g.b1[j] += ghr[j];
    }

    g.input = matmul_nt(grad_h, m.w1);
    if (!c.mask.empty()) {
        auto gi = g.input.flat();
        const auto mi = c.mask.flat();
        for (std::size_t i = 0; i < gi.size(); ++i) gi[i] *= mi[i] * c.keep_scale;
    }
    return g;
}

/// Single-vector forward; bitwise identical to a 1-row batch.
inline MlpForward forward(const MlpHomogenizer& m, std::span<const double> x, Mode mode,
                          double dropout_p = 0.0, const std::vector<double>* mask = nullptr) {
    Matrix xm(1, x.size());
    for (std::size_t j = 0; j < x.size(); ++j) xm.at(0, j) = x[j];
    if (mask != nullptr) {
        Matrix mm(1, mask->size());
        for (std::size_t j = 0; j < mask->size(); ++j) mm.at(0, j) = (*mask)[j];
        return forward_batch(m, xm, mode, dropout_p, &mm);
    }
    return forward_batch(m, xm, mode, dropout_p, nullptr);
}

inline MlpGradients backward(const MlpHomogenizer& m, const MlpCache& cache,
                             std::span<const double> grad_y) {
    Matrix gm(1, grad_y.size());
    for (std::size_t j = 0; j < grad_y.size(); ++j) gm.at(0, j) = grad_y[j];
    return backward_batch(m, cache, gm);
}

}  // namespace kgalign
