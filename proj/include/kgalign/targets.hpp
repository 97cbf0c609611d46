#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"
#include "kgalign/matrix.hpp"
#include "kgalign/tokenizer.hpp"
#include "kgalign/vocab.hpp"

namespace kgalign {

/// Aligned source/target pairs: row i of `x` (d_src) maps to row i of `z`
/// (d_tgt) under the key keys[i].
struct PairedDataset {
    std::vector<std::string> keys;
    Matrix x;
    Matrix z;

    std::size_t size() const { return keys.size(); }
    std::size_t d_src() const { return x.cols(); }
    std::size_t d_tgt() const { return z.cols(); }
};

/// Alignment target for one entity: the elementwise mean of the LM token
/// embeddings of the preferred name's subwords. Errors when any subword is
/// missing from `lm_table` (vocab/table mismatch) or no subword is produced.
inline std::vector<double> build_target(const std::string& preferred_name,
                                        const EmbeddingTable& lm_table, const Vocab& vocab,
                                        bool lowercase = true) {
    const auto tokens = tokenize(preferred_name, vocab, lowercase);
    if (tokens.empty())
        throw ValidationError("preferred name '" + preferred_name + "' yields no tokens");
    std::vector<double> mean(lm_table.dim(), 0.0);
    for (const auto& t : tokens) {
        if (!lm_table.contains(t))
            throw ValidationError("subword '" + t + "' of '" + preferred_name +
                                  "' missing from the LM embedding table");
        const auto v = lm_table.vector_for(t);
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += v[i];
    }
    const double inv = 1.0 / static_cast<double>(tokens.size());
    for (double& m : mean) m *= inv;
    return mean;
}

struct SkippedEntity {
    std::string key;
    std::string reason;
};

struct TargetSetResult {
    PairedDataset pairs;
    std::vector<SkippedEntity> skipped;
};

/// Pairs each (key, preferred_name) entity's KGE vector with its subword-mean
/// target. Entities whose key is absent from `kge_table` or whose target
/// cannot be built are skipped and reported; output order follows input
/// order. Errors when nothing survives.
inline TargetSetResult build_target_set(
    const std::vector<std::pair<std::string, std::string>>& entities,
    const EmbeddingTable& kge_table, const EmbeddingTable& lm_table, const Vocab& vocab,
    bool lowercase = true) {
    std::vector<std::string> keys;
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> zs;
    std::vector<SkippedEntity> skipped;

    for (const auto& [key, name] : entities) {
        if (!kge_table.contains(key)) {
            skipped.push_back({key, "key missing from the KGE table"});
            continue;
        }
        std::vector<double> target;
        try {
            target = build_target(name, lm_table, vocab, lowercase);
        } catch (const ValidationError& e) {
            skipped.push_back({key, e.what()});
            continue;
        }
        const auto src = kge_table.vector_for(key);
        keys.push_back(key);
        xs.emplace_back(src.begin(), src.end());
        zs.push_back(std::move(target));
    }

    if (keys.empty()) throw ValidationError("build_target_set: no entity produced a pair");

    TargetSetResult result;
    result.pairs.keys = std::move(keys);
    result.pairs.x = Matrix(xs.size(), kge_table.dim());
    result.pairs.z = Matrix(zs.size(), lm_table.dim());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        auto xr = result.pairs.x.row(i);
        auto zr = result.pairs.z.row(i);
        for (std::size_t j = 0; j < xr.size(); ++j) xr[j] = xs[i][j];
        for (std::size_t j = 0; j < zr.size(); ++j) zr[j] = zs[i][j];
    }
    result.skipped = std::move(skipped);
    return result;
}

/// Rebuilds a paired dataset from two aligned embedding tables (the
/// `build-targets` CLI output format). Keys must match pairwise in order.
inline PairedDataset pairs_from_tables(const EmbeddingTable& sources,
                                       const EmbeddingTable& targets) {
    if (sources.size() != targets.size())
        throw ValidationError("paired tables differ in entry count");
    PairedDataset p;
    p.x = Matrix(sources.size(), sources.dim());
    p.z = Matrix(targets.size(), targets.dim());
    for (std::size_t i = 0; i < sources.size(); ++i) {
        const auto& [name, vec] = sources.entries()[i];
        const auto& [tname, tvec] = targets.entries()[i];
        if (name != tname)
            throw ValidationError("paired tables disagree at entry " + std::to_string(i) + ": '" +
                                  name + "' vs '" + tname + "'");
        p.keys.push_back(name);
        for (std::size_t j = 0; j < vec.size(); ++j) p.x.at(i, j) = vec[j];
        for (std::size_t j = 0; j < tvec.size(); ++j) p.z.at(i, j) = tvec[j];
    }
    return p;
}

/// The two tables a paired dataset round-trips through on disk.
inline std::pair<EmbeddingTable, EmbeddingTable> tables_from_pairs(const PairedDataset& p) {
    std::vector<EmbeddingTable::Entry> src, tgt;
    src.reserve(p.size());
    tgt.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto xr = p.x.row(i);
        const auto zr = p.z.row(i);
        src.emplace_back(p.keys[i], std::vector<double>(xr.begin(), xr.end()));
        tgt.emplace_back(p.keys[i], std::vector<double>(zr.begin(), zr.end()));
    }
    return {EmbeddingTable::from_entries(std::move(src), p.d_src()),
            EmbeddingTable::from_entries(std::move(tgt), p.d_tgt())};
}

}  // namespace kgalign
