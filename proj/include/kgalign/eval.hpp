#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"

namespace kgalign {

enum class RetrievalMetric { kCosine, kEuclidean };

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a), nb = norm(b);
    if (!(na > 0.0) || !(nb > 0.0)) throw ValidationError("cosine: zero vector");
    return dot(a, b) / (na * nb);
}

inline void check_tables(const EmbeddingTable& predicted, const EmbeddingTable& targets,
                         const std::vector<std::string>& keys, const char* what) {
    if (predicted.dim() != targets.dim())
        throw DimensionError(std::string(what) + ": table dimensions differ");
    if (keys.empty()) throw ValidationError(std::string(what) + ": empty key set");
}

}  // namespace detail

/// Mean over keys of the per-coordinate mean squared error; the exact
/// training-loss definition, with the same summation order, so values are
/// comparable bit for bit with a recorded holdout loss.
inline double mse(const EmbeddingTable& predicted, const EmbeddingTable& targets,
                  const std::vector<std::string>& keys) {
    detail::check_tables(predicted, targets, keys, "mse");
    const double inv_dim = 1.0 / static_cast<double>(predicted.dim());
    const double inv_n = 1.0 / static_cast<double>(keys.size());
    double total = 0.0;
    for (const auto& key : keys) {
        const auto p = predicted.vector_for(key);
        const auto t = targets.vector_for(key);
        double row = 0.0;
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double d = p[j] - t[j];
            row += d * d;
        }
        total += row * inv_dim;
    }
    return total * inv_n;
}

/// Mean cosine similarity between predictions and targets.
inline double mean_cosine(const EmbeddingTable& predicted, const EmbeddingTable& targets,
                          const std::vector<std::string>& keys) {
    detail::check_tables(predicted, targets, keys, "mean_cosine");
    double total = 0.0;
    for (const auto& key : keys)
        total += detail::cosine(predicted.vector_for(key), targets.vector_for(key));
    return total / static_cast<double>(keys.size());
}

/// Fraction of keys whose own target is among the k nearest targets to the
/// key's prediction. Brute force; ties break toward the earlier key in
/// `keys`, so results are deterministic.
inline double retrieval_precision_at_k(const EmbeddingTable& predicted,
                                       const EmbeddingTable& targets,
                                       const std::vector<std::string>& keys, std::size_t k,
                                       RetrievalMetric metric = RetrievalMetric::kCosine) {
    detail::check_tables(predicted, targets, keys, "retrieval_precision_at_k");
    if (keys.size() < 2)
        throw ValidationError("retrieval_precision_at_k: need at least two keys");
    if (k == 0) throw ValidationError("retrieval_precision_at_k: k must be positive");
    k = std::min(k, keys.size());

    std::vector<std::span<const double>> preds, tgts;
    preds.reserve(keys.size());
    tgts.reserve(keys.size());
    for (const auto& key : keys) {
        preds.push_back(predicted.vector_for(key));
        tgts.push_back(targets.vector_for(key));
    }

    std::size_t hits = 0;
    std::vector<std::size_t> order(keys.size());
    std::vector<double> score(keys.size());
    for (std::size_t i = 0; i < keys.size(); ++i) {
        for (std::size_t j = 0; j < keys.size(); ++j) {
            if (metric == RetrievalMetric::kCosine) {
                score[j] = detail::cosine(preds[i], tgts[j]);
            } else {
                double s = 0.0;
                for (std::size_t c = 0; c < preds[i].size(); ++c) {
                    const double d = preds[i][c] - tgts[j][c];
                    s += d * d;
                }
                score[j] = -s;
            }
        }
        std::iota(order.begin(), order.end(), 0);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                          order.end(), [&](std::size_t a, std::size_t b) {
                              if (score[a] != score[b]) return score[a] > score[b];
                              return a < b;
                          });
        for (std::size_t r = 0; r < k; ++r)
            if (order[r] == i) {
                ++hits;
                break;
            }
    }
    return static_cast<double>(hits) / static_cast<double>(keys.size());
}

}  // namespace kgalign
