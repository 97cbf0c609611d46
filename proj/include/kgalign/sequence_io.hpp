#pragma once

#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "kgalign/embedding_table.hpp"
#include "kgalign/error.hpp"
#include "kgalign/json_out.hpp"
#include "kgalign/sequence.hpp"

namespace kgalign {

struct SequenceFile {
    std::vector<AugmentedSequence> sequences;
    std::map<std::string, std::vector<double>> vectors;  // merged across records
};

/// Writes sequences as JSON-lines. Each record is
///   {"id", "layout", "max_len", "question_unit_count", "units": [...]}
/// where a unit is {"t":"tok","s":...,"id":...} or {"t":"vec","k":...}.
/// External vectors either ride inline on their unit ("v": [...]) or in a
/// per-record "vectors_by_key" side table, flag-controlled.
inline void write_sequences(const std::vector<AugmentedSequence>& sequences,
                            const EmbeddingTable& fused, const std::string& path,
                            bool inline_vectors = false) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (const auto& seq : sequences) {
        std::ostringstream os;
        os << "{\"id\":" << json_str(seq.id) << ",\"layout\":\"" << layout_name(seq.layout)
           << "\",\"max_len\":" << seq.max_len
           << ",\"question_unit_count\":" << seq.question_unit_count << ",\"units\":[";
        std::vector<std::string> key_order;  // first appearance, for the side table
        for (std::size_t i = 0; i < seq.units.size(); ++i) {
            if (i) os << ',';
            if (const auto* tok = std::get_if<TokenUnit>(&seq.units[i])) {
                os << "{\"t\":\"tok\",\"s\":" << json_str(tok->text) << ",\"id\":" << tok->id
                   << "}";
            } else {
                const auto& vec = std::get<VectorUnit>(seq.units[i]);
                os << "{\"t\":\"vec\",\"k\":" << json_str(vec.entity_key);
                if (inline_vectors)
                    os << ",\"v\":" << json_array(fused.vector_for(vec.entity_key));
                os << "}";
                bool seen = false;
                for (const auto& k : key_order) seen = seen || k == vec.entity_key;
                if (!seen) key_order.push_back(vec.entity_key);
            }
        }
        os << "]";
        if (!inline_vectors && !key_order.empty()) {
            os << ",\"vectors_by_key\":{";
            for (std::size_t i = 0; i < key_order.size(); ++i) {
                if (i) os << ',';
                os << json_str(key_order[i]) << ":" << json_array(fused.vector_for(key_order[i]));
            }
            os << "}";
        }
        os << "}\n";
        out << os.str();
    }
    out.flush();
    if (!out) throw IoError("write failed for '" + path + "'");
}

inline SequenceFile read_sequences(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open sequence file '" + path + "'");
    SequenceFile file;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool only_space = true;
        for (unsigned char c : line) only_space = only_space && std::isspace(c);
        if (only_space) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            AugmentedSequence seq;
            seq.id = j.at("id").get<std::string>();
            const std::string layout = j.at("layout").get<std::string>();
            if (layout == "bertram")
                seq.layout = Layout::kBertram;
            else if (layout == "dekcor")
                seq.layout = Layout::kDekcor;
            else
                throw ParseError("unknown layout '" + layout + "'");
            seq.max_len = j.at("max_len").get<std::size_t>();
            seq.question_unit_count = j.at("question_unit_count").get<std::size_t>();
            for (const auto& ju : j.at("units")) {
                const std::string t = ju.at("t").get<std::string>();
                if (t == "tok") {
                    seq.units.push_back(
                        TokenUnit{ju.at("s").get<std::string>(), ju.at("id").get<std::size_t>()});
                } else if (t == "vec") {
                    const std::string key = ju.at("k").get<std::string>();
                    seq.units.push_back(VectorUnit{key});
                    if (ju.contains("v")) file.vectors[key] = ju.at("v").get<std::vector<double>>();
                } else {
                    throw ParseError("unknown unit type '" + t + "'");
                }
            }
            const nlohmann::json side = j.value("vectors_by_key", nlohmann::json::object());
            for (const auto& [key, vec] : side.items())
                file.vectors[key] = vec.get<std::vector<double>>();
            file.sequences.push_back(std::move(seq));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return file;
}

}  // namespace kgalign
