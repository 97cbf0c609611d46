#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

/// Subword vocabulary: ordered unique tokens, position = id.
/// The unknown token and all special tokens must be members.
class Vocab {
public:
    Vocab(std::vector<std::string> tokens,
          std::string continuation_prefix = "##",
          std::string unknown_token = "[UNK]",
          std::set<std::string> special_tokens = {"[CLS]", "[SEP]"})
        : tokens_(std::move(tokens)),
          continuation_prefix_(std::move(continuation_prefix)),
          unknown_token_(std::move(unknown_token)),
          special_tokens_(std::move(special_tokens)) {
        index_.reserve(tokens_.size());
        for (std::size_t i = 0; i < tokens_.size(); ++i) {
            if (tokens_[i].empty()) throw ValidationError("Vocab: empty token at position " + std::to_string(i));
            if (!index_.emplace(tokens_[i], i).second)
                throw ValidationError("Vocab: duplicate token '" + tokens_[i] + "'");
        }
        if (!contains(unknown_token_))
            throw ValidationError("Vocab: unknown token '" + unknown_token_ + "' not in vocabulary");
        for (const auto& s : special_tokens_)
            if (!contains(s))
                throw ValidationError("Vocab: special token '" + s + "' not in vocabulary");
    }

    std::size_t size() const { return tokens_.size(); }

    bool contains(std::string_view token) const {
        return index_.find(std::string(token)) != index_.end();
    }

    /// Id of `token`; throws ValidationError when absent.
    std::size_t id_of(std::string_view token) const {
        auto it = index_.find(std::string(token));
        if (it == index_.end())
            throw ValidationError("Vocab: token '" + std::string(token) + "' not in vocabulary");
        return it->second;
    }

    const std::string& token_at(std::size_t id) const { return tokens_.at(id); }
    const std::vector<std::string>& tokens() const { return tokens_; }
    const std::string& continuation_prefix() const { return continuation_prefix_; }
    const std::string& unknown_token() const { return unknown_token_; }
    const std::set<std::string>& special_tokens() const { return special_tokens_; }

private:
    std::vector<std::string> tokens_;
    std::string continuation_prefix_;
    std::string unknown_token_;
    std::set<std::string> special_tokens_;
    std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace kgalign
