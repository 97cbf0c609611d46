#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

/// Immutable ordered map from name to a fixed-dimension vector.
/// Names are unique, non-empty and contain no ASCII whitespace (multi-word
/// entity names are keyed by CUI or use underscores); every vector has
/// exactly `dim` finite entries. Safe to share across threads once built.
class EmbeddingTable {
public:
    using Entry = std::pair<std::string, std::vector<double>>;

    EmbeddingTable() = default;

    /// Validates and freezes the given entries. `dim` must be supplied for an
    /// empty table; otherwise it defaults to the first vector's length.
    static EmbeddingTable from_entries(std::vector<Entry> entries, std::size_t dim = 0) {
        EmbeddingTable t;
        t.dim_ = dim != 0 ? dim : (entries.empty() ? 0 : entries.front().second.size());
        if (t.dim_ == 0) throw ValidationError("EmbeddingTable: dimension must be positive");
        t.entries_ = std::move(entries);
        t.index_.reserve(t.entries_.size());
        for (std::size_t i = 0; i < t.entries_.size(); ++i) {
            const auto& [name, vec] = t.entries_[i];
            validate_name(name);
            if (vec.size() != t.dim_)
                throw ValidationError("EmbeddingTable: vector for '" + name + "' has length " +
                                      std::to_string(vec.size()) + ", expected " +
                                      std::to_string(t.dim_));
            for (double v : vec)
                if (!std::isfinite(v))
                    throw ValidationError("EmbeddingTable: non-finite value in vector for '" +
                                          name + "'");
            if (!t.index_.emplace(name, i).second)
                throw ValidationError("EmbeddingTable: duplicate name '" + name + "'");
        }
        return t;
    }

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    bool contains(std::string_view name) const {
        return index_.find(std::string(name)) != index_.end();
    }

    /// Vector for `name`; throws ValidationError when absent.
    std::span<const double> vector_for(std::string_view name) const {
        auto it = index_.find(std::string(name));
        if (it == index_.end())
            throw ValidationError("EmbeddingTable: no entry named '" + std::string(name) + "'");
        return entries_[it->second].second;
    }

    const std::vector<Entry>& entries() const { return entries_; }

    bool operator==(const EmbeddingTable& o) const {
        return dim_ == o.dim_ && entries_ == o.entries_;
    }

private:
    static void validate_name(const std::string& name) {
        if (name.empty()) throw ValidationError("EmbeddingTable: empty name");
        for (unsigned char c : name)
            if (c < 0x80 && std::isspace(c))
                throw ValidationError("EmbeddingTable: name '" + name + "' contains whitespace");
    }

    std::size_t dim_ = 0;
    std::vector<Entry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace kgalign
