#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"

namespace kgalign {

struct NormalizeResult {
    EmbeddingTable table;
    bool converged = false;  // false means max_iter hit first (warning, not failure)
    std::size_t iterations = 0;
};

/// Alternates unit-length normalization and mean-centering until every
/// vector norm is within `tol` of 1 and the mean vector norm is <= `tol`,
/// or `max_iter` passes run out. The input table is left untouched.
/// A vector annihilated mid-iteration (e.g. a colinear pair collapsing onto
/// its mean) raises ValidationError.
inline NormalizeResult iterative_normalize(const EmbeddingTable& table, double tol = 1e-6,
                                           std::size_t max_iter = 100) {
    if (table.size() < 2)
        throw ValidationError("iterative_normalize: need at least two vectors");
    if (!(tol > 0.0)) throw ValidationError("iterative_normalize: tol must be positive");
    if (max_iter == 0) throw ValidationError("iterative_normalize: max_iter must be positive");

    const std::size_t n = table.size();
    const std::size_t d = table.dim();
    std::vector<std::vector<double>> vecs;
    vecs.reserve(n);
    for (const auto& [name, vec] : table.entries()) vecs.push_back(vec);

    NormalizeResult result;
    for (std::size_t iter = 1; iter <= max_iter; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            double norm = 0.0;
            for (double v : vecs[i]) norm += v * v;
            norm = std::sqrt(norm);
            if (!(norm > 0.0))
                throw ValidationError("iterative_normalize: zero vector for '" +
                                      table.entries()[i].first + "' at iteration " +
                                      std::to_string(iter));
            for (double& v : vecs[i]) v /= norm;
        }
        std::vector<double> mean(d, 0.0);
        for (const auto& vec : vecs)
            for (std::size_t j = 0; j < d; ++j) mean[j] += vec[j];
        for (double& m : mean) m /= static_cast<double>(n);
        for (auto& vec : vecs)
            for (std::size_t j = 0; j < d; ++j) vec[j] -= mean[j];

        double max_norm_dev = 0.0;
        for (const auto& vec : vecs) {
            double norm = 0.0;
            for (double v : vec) norm += v * v;
            max_norm_dev = std::max(max_norm_dev, std::abs(std::sqrt(norm) - 1.0));
        }
        std::vector<double> new_mean(d, 0.0);
        for (const auto& vec : vecs)
            for (std::size_t j = 0; j < d; ++j) new_mean[j] += vec[j];
        double mean_norm = 0.0;
        for (double m : new_mean) mean_norm += (m / static_cast<double>(n)) * (m / static_cast<double>(n));
        mean_norm = std::sqrt(mean_norm);

        result.iterations = iter;
        if (max_norm_dev <= tol && mean_norm <= tol) {
            result.converged = true;
            break;
        }
    }

    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        entries.emplace_back(table.entries()[i].first, std::move(vecs[i]));
    result.table = EmbeddingTable::from_entries(std::move(entries), d);
    return result;
}

}  // namespace kgalign
