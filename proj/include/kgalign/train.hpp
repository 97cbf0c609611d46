#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/mlp.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/targets.hpp"

namespace kgalign {

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 256;
    double dropout_p = 0.25;
    double weight_decay = 0.001;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double holdout_fraction = 0.1;
    std::size_t hidden_dim = 300;
    double ln_eps = 1e-5;

    void validate() const {
        if (batch_size == 0) throw ValidationError("TrainConfig: batch_size must be positive");
        if (!(dropout_p >= 0.0 && dropout_p < 1.0))
            throw ValidationError("TrainConfig: dropout_p must lie in [0, 1)");
        if (weight_decay < 0.0) throw ValidationError("TrainConfig: weight_decay must be non-negative");
        if (!(learning_rate > 0.0)) throw ValidationError("TrainConfig: learning_rate must be positive");
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
            throw ValidationError("TrainConfig: adam betas must lie in [0, 1)");
        if (!(adam_eps > 0.0)) throw ValidationError("TrainConfig: adam_eps must be positive");
        if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
            throw ValidationError("TrainConfig: holdout_fraction must lie in (0, 1)");
        if (hidden_dim == 0) throw ValidationError("TrainConfig: hidden_dim must be positive");
        if (!(ln_eps > 0.0)) throw ValidationError("TrainConfig: ln_eps must be positive");
    }
};

struct EpochStats {
    double train_mse = 0.0;    // sample-weighted mean of minibatch losses (dropout active)
    double holdout_mse = 0.0;  // eval-mode loss on the holdout split after the epoch
};

struct TrainResult {
    MlpHomogenizer model;  // snapshot with the best holdout loss
    std::vector<EpochStats> history;
    std::optional<std::size_t> best_epoch;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> holdout_indices;
};

namespace detail {

// Adam first/second moments for one parameter group.
struct AdamSlot {
    std::vector<double> m, v;

    explicit AdamSlot(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::span<double> param, std::span<const double> grad, const TrainConfig& cfg,
              double bias1, double bias2, double weight_decay) {
        for (std::size_t i = 0; i < param.size(); ++i) {
            const double g = grad[i] + weight_decay * param[i];
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
        }
    }
};

inline Matrix gather_rows(const Matrix& src, std::span<const std::size_t> indices) {
    Matrix out(indices.size(), src.cols());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto s = src.row(indices[i]);
        auto d = out.row(i);
        for (std::size_t j = 0; j < s.size(); ++j) d[j] = s[j];
    }
    return out;
}

// Mean over rows of the per-coordinate mean squared error; also fills
// grad_y with dL/dy when non-null.
inline double mse_and_grad(const Matrix& y, const Matrix& z, Matrix* grad_y) {
    const double inv_dim = 1.0 / static_cast<double>(y.cols());
    const double inv_rows = 1.0 / static_cast<double>(y.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < y.rows(); ++i) {
        const auto yr = y.row(i);
        const auto zr = z.row(i);
        double row = 0.0;
        for (std::size_t j = 0; j < yr.size(); ++j) {
            const double d = yr[j] - zr[j];
            row += d * d;
            if (grad_y) grad_y->at(i, j) = 2.0 * d * inv_dim * inv_rows;
        }
        total += row * inv_dim;
    }
    return total * inv_rows;
}

}  // namespace detail

/// Trains the homogenizer on `pairs` with minibatch Adam, MSE loss and
/// coupled L2 on the weight matrices only (not biases, not the layer-norm
/// parameters). Deterministic given the seed; every random draw comes from
/// one splittable stream rooted at config.seed, consumed in this order:
///
///   1. split("holdout")      one shuffle choosing the train/holdout split
///   2. split("init")         Glorot draws, W1 then W2, row-major
///   3. split("shuffle").split(e)   per-epoch shuffle of the train indices
///   4. split("dropout").split(e)   per-epoch masks, drawn per batch in
///                                  batch order, rows then columns
///
/// The returned model is the parameter snapshot with the best holdout loss.
/// A non-finite loss aborts with the failing epoch/batch in the message.
inline TrainResult train(const PairedDataset& pairs, const TrainConfig& config) {
    config.validate();
    const std::size_t n = pairs.size();
    if (n < 2) throw ValidationError("train: need at least two pairs");

    const std::size_t n_holdout = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n))),
        1, n - 1);
    const std::size_t n_train = n - n_holdout;

    SplitRng root(config.seed);

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    {
        SplitRng split_rng = root.split("holdout");
        shuffle(perm, split_rng);
    }

    TrainResult result;
    result.train_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    result.holdout_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());

    SplitRng init_rng = root.split("init");
    MlpHomogenizer model = MlpHomogenizer::init(pairs.d_src(), config.hidden_dim, pairs.d_tgt(),
                                                init_rng, config.ln_eps);

    const Matrix holdout_x = detail::gather_rows(pairs.x, result.holdout_indices);
    const Matrix holdout_z = detail::gather_rows(pairs.z, result.holdout_indices);

    detail::AdamSlot adam_w1(model.w1.flat().size());
    detail::AdamSlot adam_b1(model.b1.size());
    detail::AdamSlot adam_gain(model.ln_gain.size());
    detail::AdamSlot adam_bias(model.ln_bias.size());
    detail::AdamSlot adam_w2(model.w2.flat().size());
    detail::AdamSlot adam_b2(model.b2.size());

    MlpHomogenizer best = model;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t adam_t = 0;
    std::vector<std::size_t> order = result.train_indices;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        {
            SplitRng shuffle_rng = root.split("shuffle").split(epoch);
            shuffle(order, shuffle_rng);
        }
        SplitRng mask_rng = root.split("dropout").split(epoch);

        double epoch_loss = 0.0;
        const std::size_t n_batches = (n_train + config.batch_size - 1) / config.batch_size;
        for (std::size_t b = 0; b < n_batches; ++b) {
            const std::size_t lo = b * config.batch_size;
            const std::size_t hi = std::min(lo + config.batch_size, n_train);
            const std::span<const std::size_t> batch_idx(order.data() + lo, hi - lo);
            const Matrix bx = detail::gather_rows(pairs.x, batch_idx);
            const Matrix bz = detail::gather_rows(pairs.z, batch_idx);

            MlpForward fwd = [&] {
                if (config.dropout_p > 0.0) {
                    const Matrix mask =
                        draw_dropout_mask(bx.rows(), bx.cols(), config.dropout_p, mask_rng);
                    return forward_batch(model, bx, Mode::kTrain, config.dropout_p, &mask);
                }
                return forward_batch(model, bx, Mode::kTrain, 0.0, nullptr);
            }();

            Matrix grad_y(bx.rows(), pairs.d_tgt());
            const double loss = detail::mse_and_grad(fwd.y, bz, &grad_y);
            if (!std::isfinite(loss))
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                    ", batch " + std::to_string(b));
            epoch_loss += loss * static_cast<double>(hi - lo);

            const MlpGradients g = backward_batch(model, fwd.cache, grad_y);

            ++adam_t;
            const double bias1 = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_t));
            const double bias2 = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_t));
            adam_w1.step(model.w1.flat(), g.w1.flat(), config, bias1, bias2, config.weight_decay);
            adam_b1.step(model.b1, g.b1, config, bias1, bias2, 0.0);
            adam_gain.step(model.ln_gain, g.ln_gain, config, bias1, bias2, 0.0);
            adam_bias.step(model.ln_bias, g.ln_bias, config, bias1, bias2, 0.0);
            adam_w2.step(model.w2.flat(), g.w2.flat(), config, bias1, bias2, config.weight_decay);
            adam_b2.step(model.b2, g.b2, config, bias1, bias2, 0.0);
        }

        const MlpForward hold = forward_batch(model, holdout_x, Mode::kEval);
        const double holdout_loss = detail::mse_and_grad(hold.y, holdout_z, nullptr);
        if (!std::isfinite(holdout_loss))
            throw TrainingError("train: non-finite holdout loss at epoch " + std::to_string(epoch));

        result.history.push_back({epoch_loss / static_cast<double>(n_train), holdout_loss});
        if (holdout_loss < best_loss) {
            best_loss = holdout_loss;
            best = model;
            result.best_epoch = epoch;
        }
    }

    result.model = config.epochs == 0 ? model : best;
    return result;
}

/// Eval-mode forward of every `keys` entry of `kge_table`; the output table
/// is keyed identically and has dimension d_tgt. Deterministic.
inline EmbeddingTable export_homogenized(const MlpHomogenizer& model,
                                         const EmbeddingTable& kge_table,
                                         const std::vector<std::string>& keys) {
    Matrix x(keys.size(), model.d_src());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        const auto v = kge_table.vector_for(keys[i]);  // throws on missing key
        if (v.size() != model.d_src())
            throw DimensionError("export_homogenized: table dimension does not match model");
        auto r = x.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) r[j] = v[j];
    }
    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(keys.size());
    if (!keys.empty()) {
        const MlpForward fwd = forward_batch(model, x, Mode::kEval);
        for (std::size_t i = 0; i < keys.size(); ++i) {
            const auto r = fwd.y.row(i);
            entries.emplace_back(keys[i], std::vector<double>(r.begin(), r.end()));
        }
    }
    return EmbeddingTable::from_entries(std::move(entries), model.d_tgt());
}

}  // namespace kgalign
