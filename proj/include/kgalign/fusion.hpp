#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"
#include "kgalign/rng.hpp"
#include "kgalign/targets.hpp"
#include "kgalign/vocab.hpp"

namespace kgalign {

enum class FuseSource { kBoth, kHomogenizedOnly, kDefinitionOnly };

struct FuseResult {
    EmbeddingTable table;
    std::vector<FuseSource> sources;  // aligned with the requested keys
};

/// Final external-knowledge vector per key: the elementwise mean of the
/// homogenized KGE vector and the definition embedding when both exist,
/// otherwise whichever one does (definition coverage is expected to be the
/// smaller set). A key present in neither table is an error.
inline FuseResult fuse(const EmbeddingTable& homogenized, const EmbeddingTable& definitions,
                       const std::vector<std::string>& keys) {
    if (homogenized.dim() != definitions.dim())
        throw DimensionError("fuse: table dimensions differ (" +
                             std::to_string(homogenized.dim()) + " vs " +
                             std::to_string(definitions.dim()) + ")");
    FuseResult result;
    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(keys.size());
    for (const auto& key : keys) {
        const bool in_h = homogenized.contains(key);
        const bool in_d = definitions.contains(key);
        if (!in_h && !in_d) throw ValidationError("fuse: key '" + key + "' in neither table");
        std::vector<double> v;
        if (in_h && in_d) {
            const auto a = homogenized.vector_for(key);
            const auto b = definitions.vector_for(key);
            v.resize(a.size());
            for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (a[i] + b[i]);
            result.sources.push_back(FuseSource::kBoth);
        } else if (in_h) {
            const auto a = homogenized.vector_for(key);
            v.assign(a.begin(), a.end());
            result.sources.push_back(FuseSource::kHomogenizedOnly);
        } else {
            const auto b = definitions.vector_for(key);
            v.assign(b.begin(), b.end());
            result.sources.push_back(FuseSource::kDefinitionOnly);
        }
        entries.emplace_back(key, std::move(v));
    }
    result.table = EmbeddingTable::from_entries(std::move(entries), homogenized.dim());
    return result;
}

/// Random baseline: each key's vector is uniform in [-1, 1]^dim, drawn from
/// a stream keyed by (seed, key), so a key's vector does not depend on the
/// key list's order or contents.
inline EmbeddingTable random_table(const std::vector<std::string>& keys, std::size_t dim,
                                   std::uint64_t seed) {
    if (keys.empty()) throw ValidationError("random_table: keys must be non-empty");
    if (dim == 0) throw ValidationError("random_table: dim must be positive");
    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(keys.size());
    const SplitRng root(seed);
    for (const auto& key : keys) {
        SplitRng stream = root.split(key);
        std::vector<double> v(dim);
        for (double& x : v) x = stream.next_uniform(-1.0, 1.0);
        entries.emplace_back(key, std::move(v));
    }
    return EmbeddingTable::from_entries(std::move(entries), dim);
}

/// Static stand-in for a transformer pooler output: the mean of the static
/// token embeddings of the definition text. This is pipeline plumbing so
/// that definition vectors can be produced without a live transformer; it
/// is NOT a pooler output and is labeled as such wherever it is exposed.
inline std::vector<double> pooler_proxy(const std::string& definition_text,
                                        const EmbeddingTable& lm_table, const Vocab& vocab,
                                        bool lowercase = true) {
    return build_target(definition_text, lm_table, vocab, lowercase);
}

}  // namespace kgalign
