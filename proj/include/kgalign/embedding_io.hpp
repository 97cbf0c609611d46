#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "kgalign/embedding_table.hpp"
#include "kgalign/entities.hpp"
#include "kgalign/error.hpp"
#include "kgalign/numfmt.hpp"
#include "kgalign/vocab.hpp"

namespace kgalign {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

inline bool blank(std::string_view line) {
    for (unsigned char c : line)
        if (!std::isspace(c)) return false;
    return true;
}

[[noreturn]] inline void parse_fail(const std::string& path, std::size_t line_no,
                                    const std::string& msg) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": " + msg);
}

}  // namespace detail

/// Loads a word2vec-text embedding file: header "count dim", then one line
/// per entry "name v1 ... v_dim". Rejects dimension mismatches, duplicate
/// names, non-finite values and truncated files, each with a line number.
inline EmbeddingTable load_embeddings(const std::string& path,
                                      std::optional<std::size_t> expected_dim = std::nullopt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open embedding file '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) detail::parse_fail(path, 1, "missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_ws(line);
    std::size_t count = 0, dim = 0;
    if (header.size() != 2 || !parse_size(header[0], count) || !parse_size(header[1], dim))
        detail::parse_fail(path, 1, "header must be 'count dim'");
    if (dim == 0) detail::parse_fail(path, 1, "dimension must be positive");
    if (expected_dim && dim != *expected_dim)
        detail::parse_fail(path, 1, "header dimension " + std::to_string(dim) +
                                        " does not match expected " +
                                        std::to_string(*expected_dim));

    std::vector<EmbeddingTable::Entry> entries;
    entries.reserve(count);
    std::size_t line_no = 1;
    while (entries.size() < count) {
        if (!std::getline(in, line))
            detail::parse_fail(path, line_no, "truncated file: " + std::to_string(entries.size()) +
                                                  " of " + std::to_string(count) +
                                                  " entries present");
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto fields = detail::split_ws(line);
        if (fields.empty()) detail::parse_fail(path, line_no, "blank entry line");
        std::vector<double> vec;
        vec.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            double v = 0.0;
            if (!parse_double(fields[i], v))
                detail::parse_fail(path, line_no, "cannot parse value '" + std::string(fields[i]) + "'");
            if (!std::isfinite(v))
                detail::parse_fail(path, line_no, "non-finite value '" + std::string(fields[i]) + "'");
            vec.push_back(v);
        }
        if (vec.size() != dim)
            detail::parse_fail(path, line_no, "vector length " + std::to_string(vec.size()) +
                                                  " != dim " + std::to_string(dim));
        entries.emplace_back(std::string(fields[0]), std::move(vec));
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::blank(line))
            detail::parse_fail(path, line_no, "unexpected content after " + std::to_string(count) +
                                                  " entries");
    }

    try {
        return EmbeddingTable::from_entries(std::move(entries), dim);
    } catch (const ValidationError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Writes `table` in word2vec text format, values at 17 significant digits
/// so load(save(t)) == t exactly.
inline void save_embeddings(const EmbeddingTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << table.size() << ' ' << table.dim() << '\n';
    for (const auto& [name, vec] : table.entries()) {
        out << name;
        for (double v : vec) out << ' ' << format_double17(v);
        out << '\n';
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

/// Loads a vocabulary file: one token per line, position = id.
inline Vocab load_vocab(const std::string& path,
                        std::string continuation_prefix = "##",
                        std::string unknown_token = "[UNK]",
                        std::set<std::string> special_tokens = {"[CLS]", "[SEP]"}) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open vocab file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        tokens.push_back(line);
    }
    // A single trailing blank line is the usual text-file terminator.
    if (!tokens.empty() && tokens.back().empty()) tokens.pop_back();
    try {
        return Vocab(std::move(tokens), std::move(continuation_prefix), std::move(unknown_token),
                     std::move(special_tokens));
    } catch (const ValidationError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Loads entity annotations: JSON-lines, one object per question:
///   {"id": ..., "question": ..., "entities":
///     [{"key", "preferred_name", "start", "end", "definition_key"?}, ...]}
/// Entities come back sorted by start offset; span violations are reported
/// with the offending question id.
inline std::vector<QuestionEntities> load_entities(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open entity file '" + path + "'");

    std::vector<QuestionEntities> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::blank(line)) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            detail::parse_fail(path, line_no, std::string("invalid JSON: ") + e.what());
        }

        QuestionEntities q;
        try {
            q.id = j.at("id").get<std::string>();
            q.question = j.at("question").get<std::string>();
            for (const auto& je : j.value("entities", nlohmann::json::array())) {
                EntityRecord e;
                e.key = je.at("key").get<std::string>();
                e.preferred_name = je.at("preferred_name").get<std::string>();
                const auto start = je.at("start").get<long long>();
                const auto end = je.at("end").get<long long>();
                if (start < 0 || end < 0)
                    throw ValidationError("entity '" + e.key + "' has a negative span offset");
                e.start = static_cast<std::size_t>(start);
                e.end = static_cast<std::size_t>(end);
                if (je.contains("definition_key"))
                    e.definition_key = je.at("definition_key").get<std::string>();
                q.entities.push_back(std::move(e));
            }
        } catch (const nlohmann::json::exception& e) {
            detail::parse_fail(path, line_no, "malformed record" +
                                                  (j.contains("id") && j["id"].is_string()
                                                       ? " for question '" + j["id"].get<std::string>() + "'"
                                                       : std::string()) +
                                                  ": " + e.what());
        } catch (const ValidationError& e) {
            detail::parse_fail(path, line_no, "in question '" + q.id + "': " + e.what());
        }

        try {
            q.entities = validate_entity_spans(std::move(q.entities), q.question.size(),
                                               "question '" + q.id + "'");
        } catch (const ValidationError& e) {
            detail::parse_fail(path, line_no, e.what());
        }
        out.push_back(std::move(q));
    }
    return out;
}

}  // namespace kgalign
