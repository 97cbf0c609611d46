#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "kgalign/error.hpp"

namespace kgalign {

/// One linked entity inside a question. Offsets are UTF-8 byte positions
/// into the question string, end exclusive.
struct EntityRecord {
    std::string key;             // e.g. a UMLS CUI
    std::string preferred_name;  // canonical concept string
    std::size_t start = 0;
    std::size_t end = 0;
    std::optional<std::string> definition_key;

    bool operator==(const EntityRecord&) const = default;
};

struct QuestionEntities {
    std::string id;
    std::string question;
    std::vector<EntityRecord> entities;  // ascending span order
};

/// Validates span bounds and pairwise non-overlap, then returns the records
/// sorted by start offset. `context` is used in error messages.
inline std::vector<EntityRecord> validate_entity_spans(std::vector<EntityRecord> entities,
                                                       std::size_t question_length,
                                                       const std::string& context) {
    for (const auto& e : entities) {
        if (e.start >= e.end || e.end > question_length)
            throw ValidationError("entity '" + e.key + "' in " + context + " has span [" +
                                  std::to_string(e.start) + ", " + std::to_string(e.end) +
                                  ") outside question of length " +
                                  std::to_string(question_length));
    }
    std::stable_sort(entities.begin(), entities.end(),
                     [](const EntityRecord& a, const EntityRecord& b) { return a.start < b.start; });
    for (std::size_t i = 0; i + 1 < entities.size(); ++i) {
        if (entities[i].end > entities[i + 1].start)
            throw ValidationError("entities '" + entities[i].key + "' and '" +
                                  entities[i + 1].key + "' in " + context + " have overlapping spans");
    }
    return entities;
}

}  // namespace kgalign
