#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "kgalign/embedding_table.hpp"
#include "kgalign/entities.hpp"
#include "kgalign/error.hpp"
#include "kgalign/tokenizer.hpp"
#include "kgalign/vocab.hpp"

namespace kgalign {

struct TokenUnit {
    std::string text;
    std::size_t id = 0;

    bool operator==(const TokenUnit&) const = default;
};

struct VectorUnit {
    std::string entity_key;

    bool operator==(const VectorUnit&) const = default;
};

using SequenceUnit = std::variant<TokenUnit, VectorUnit>;

enum class Layout { kBertram, kDekcor };

inline const char* layout_name(Layout l) { return l == Layout::kBertram ? "bertram" : "dekcor"; }

/// Knowledge-augmented input sequence. Unit 0 is always [CLS]; the question
/// section spans units [1, 1 + question_unit_count); total unit count never
/// exceeds max_len (context is the only part that gets truncated).
struct AugmentedSequence {
    std::string id;
    Layout layout = Layout::kBertram;
    std::size_t max_len = 512;
    std::vector<SequenceUnit> units;
    std::size_t question_unit_count = 0;

    bool operator==(const AugmentedSequence&) const = default;
};

namespace detail {

inline TokenUnit make_token(const std::string& text, const Vocab& vocab) {
    return TokenUnit{text, vocab.id_of(text)};
}

inline void append_tokens(std::vector<SequenceUnit>& units, const std::vector<std::string>& tokens,
                          const Vocab& vocab) {
    for (const auto& t : tokens) units.push_back(make_token(t, vocab));
}

inline void check_entity_keys(const std::vector<EntityRecord>& entities,
                              const EmbeddingTable& fused) {
    for (const auto& e : entities)
        if (!fused.contains(e.key))
            throw ValidationError("entity key '" + e.key + "' missing from the fused table");
}

// Appends [SEP], as much context as fits, then the final [SEP]. The
// non-context portion must already fit with both separators.
inline void finish_with_context(AugmentedSequence& seq, const std::vector<std::string>& context,
                                const Vocab& vocab, const std::string& what) {
    const std::size_t fixed = seq.units.size() + 2;  // + [SEP] ... [SEP]
    if (fixed > seq.max_len)
        throw ValidationError(what + ": question plus entity insertions and separators need " +
                              std::to_string(fixed) + " units, max_len is " +
                              std::to_string(seq.max_len) + " (the question is never truncated)");
    seq.units.push_back(make_token("[SEP]", vocab));
    const std::size_t budget = seq.max_len - seq.units.size() - 1;
    for (std::size_t i = 0; i < context.size() && i < budget; ++i)
        seq.units.push_back(make_token(context[i], vocab));
    seq.units.push_back(make_token("[SEP]", vocab));
}

}  // namespace detail

/// BERTRAM-style in-place augmentation:
///   [CLS] ...question tokens with every entity span replaced by
///   <entity vector> / <original span tokens>... [SEP] context [SEP]
/// Non-entity tokens are untouched; the question is never truncated.
inline AugmentedSequence build_bertram(const std::string& question,
                                       const std::vector<EntityRecord>& entities,
                                       const std::vector<std::string>& context_tokens,
                                       const EmbeddingTable& fused, const Vocab& vocab,
                                       std::size_t max_len = 512, bool lowercase = true) {
    const auto sorted = validate_entity_spans(entities, question.size(), "build_bertram");
    detail::check_entity_keys(sorted, fused);
    if (!vocab.contains("/"))
        throw ValidationError("build_bertram: separator '/' missing from the vocabulary");

    AugmentedSequence seq;
    seq.layout = Layout::kBertram;
    seq.max_len = max_len;
    seq.units.push_back(detail::make_token("[CLS]", vocab));

    std::size_t cursor = 0;
    for (const auto& e : sorted) {
        detail::append_tokens(seq.units, tokenize(question.substr(cursor, e.start - cursor), vocab, lowercase), vocab);
        seq.units.push_back(VectorUnit{e.key});
        seq.units.push_back(detail::make_token("/", vocab));
        detail::append_tokens(seq.units, tokenize(question.substr(e.start, e.end - e.start), vocab, lowercase), vocab);
        cursor = e.end;
    }
    detail::append_tokens(seq.units, tokenize(question.substr(cursor), vocab, lowercase), vocab);
    seq.question_unit_count = seq.units.size() - 1;

    detail::finish_with_context(seq, context_tokens, vocab, "build_bertram");
    return seq;
}

/// DEKCOR-style out-of-place augmentation:
///   [CLS] question tokens (verbatim) [SEP] one entity vector per entity in
///   span order [SEP] context [SEP]
/// With zero entities the empty entity block is elided, leaving
///   [CLS] question [SEP] context [SEP].
inline AugmentedSequence build_dekcor(const std::string& question,
                                      const std::vector<EntityRecord>& entities,
                                      const std::vector<std::string>& context_tokens,
                                      const EmbeddingTable& fused, const Vocab& vocab,
                                      std::size_t max_len = 512, bool lowercase = true) {
    const auto sorted = validate_entity_spans(entities, question.size(), "build_dekcor");
    detail::check_entity_keys(sorted, fused);

    AugmentedSequence seq;
    seq.layout = Layout::kDekcor;
    seq.max_len = max_len;
    seq.units.push_back(detail::make_token("[CLS]", vocab));
    detail::append_tokens(seq.units, tokenize(question, vocab, lowercase), vocab);
    seq.question_unit_count = seq.units.size() - 1;

    if (!sorted.empty()) {
        seq.units.push_back(detail::make_token("[SEP]", vocab));
        for (const auto& e : sorted) seq.units.push_back(VectorUnit{e.key});
    }
    detail::finish_with_context(seq, context_tokens, vocab, "build_dekcor");
    return seq;
}

/// Number of external-vector units in a sequence.
inline std::size_t vector_unit_count(const AugmentedSequence& seq) {
    std::size_t n = 0;
    for (const auto& u : seq.units) n += std::holds_alternative<VectorUnit>(u) ? 1 : 0;
    return n;
}

}  // namespace kgalign
