#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/vocab.hpp"

namespace kgalign {

namespace detail {

inline bool is_ascii_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80;
}

inline bool is_ascii_punct(char c) {
    return std::ispunct(static_cast<unsigned char>(c)) && static_cast<unsigned char>(c) < 0x80;
}

// Splits a whitespace-free word into runs of non-punctuation and standalone
// ASCII punctuation characters: "hiv-1" -> {"hiv", "-", "1"}.
inline std::vector<std::string_view> split_punct(std::string_view word) {
    std::vector<std::string_view> pieces;
    std::size_t i = 0;
    while (i < word.size()) {
        if (is_ascii_punct(word[i])) {
            pieces.push_back(word.substr(i, 1));
            ++i;
        } else {
            std::size_t j = i;
            while (j < word.size() && !is_ascii_punct(word[j])) ++j;
            pieces.push_back(word.substr(i, j - i));
            i = j;
        }
    }
    return pieces;
}

}  // namespace detail

/// Words longer than this (in bytes, after punctuation splitting) map to the
/// unknown token without attempting a decomposition.
inline constexpr std::size_t kMaxWordpieceInputLength = 100;

/// Greedy longest-match-first WordPiece tokenization.
///
/// The text is optionally ASCII-lowercased, split on whitespace, each word is
/// split into standalone ASCII punctuation characters plus the runs between
/// them, and each resulting piece is matched greedily against the vocabulary
/// (continuations carry the vocab's "##" prefix). A piece with no valid
/// decomposition becomes exactly one unknown token. Non-ASCII bytes pass
/// through as ordinary word characters.
inline std::vector<std::string> tokenize(std::string_view text, const Vocab& vocab,
                                         bool lowercase = true) {
    std::string lowered;
    if (lowercase) {
        lowered.reserve(text.size());
        for (char c : text)
            lowered.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        text = lowered;
    }

    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !detail::is_ascii_space(text[j])) ++j;
        if (j == i) break;

        for (std::string_view piece : detail::split_punct(text.substr(i, j - i))) {
            if (piece.size() > kMaxWordpieceInputLength) {
                out.push_back(vocab.unknown_token());
                continue;
            }
            std::vector<std::string> sub;
            std::size_t start = 0;
            bool bad = false;
            while (start < piece.size()) {
                std::size_t end = piece.size();
                std::string match;
                while (start < end) {
                    std::string candidate = start > 0 ? vocab.continuation_prefix() : std::string();
                    candidate.append(piece.substr(start, end - start));
                    if (vocab.contains(candidate)) {
                        match = std::move(candidate);
                        break;
                    }
                    --end;
                }
                if (match.empty()) {
                    bad = true;
                    break;
                }
                sub.push_back(std::move(match));
                start = end;
            }
            if (bad) {
                out.push_back(vocab.unknown_token());
            } else {
                for (auto& s : sub) out.push_back(std::move(s));
            }
        }
        i = j;
    }
    return out;
}

/// Vocabulary positions of `tokens`; errors on any token outside the vocab.
inline std::vector<std::size_t> token_ids(const std::vector<std::string>& tokens,
                                          const Vocab& vocab) {
    std::vector<std::size_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(vocab.id_of(t));
    return ids;
}

/// Inverse of token_ids.
inline std::vector<std::string> tokens_from_ids(const std::vector<std::size_t>& ids,
                                                const Vocab& vocab) {
    std::vector<std::string> tokens;
    tokens.reserve(ids.size());
    for (std::size_t id : ids) {
        if (id >= vocab.size())
            throw ValidationError("token id " + std::to_string(id) + " out of range");
        tokens.push_back(vocab.token_at(id));
    }
    return tokens;
}

}  // namespace kgalign
