#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dualfill/decode.hpp"
#include "dualfill/lexer.hpp"

namespace dualfill {

enum class NameKind : uint8_t { ATTRIBUTE_ACCESS, VARIABLE_NAME, FUNCTION_NAME };
enum class ScopeLevel : uint8_t { FUNCTION, CLASS, FILE };

std::string_view name_kind_label(NameKind kind);
std::string_view scope_level_label(ScopeLevel level);

struct ScopeEntry {
    std::string name;
    NameKind kind;
    ScopeLevel scope;
};

// Significant names visible at the completion point, innermost scope per
// name, built from the left context only.
struct ScopeIndex {
    std::vector<ScopeEntry> entries;

    const ScopeEntry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;  // first match, as the re-ranker walks it
        return nullptr;
    }
};

// 3x3 re-ranking weights: rows by predicted-name kind, columns by the scope
// the matched declaration lives in. All weights are at least 1.
struct WeightTable {
    double weight[3][3];

    double at(NameKind kind, ScopeLevel scope) const {
        return weight[static_cast<int>(kind)][static_cast<int>(scope)];
    }
    void validate() const;  // throws when any weight is below 1

    static WeightTable defaults();
    static WeightTable identity();
};

WeightTable load_weight_table(const std::filesystem::path& path);
void save_weight_table(const WeightTable& table, const std::filesystem::path& path);

// Declared and assigned names visible at the end of `left_context`
// (role-refined tokens): function definitions, assigned variables and
// parameters, attribute accesses.
ScopeIndex build_scope_index(const std::vector<LexedToken>& left_context);

// Weight-table row for a predicted type tag; false when the tag bypasses
// re-ranking entirely.
bool type_category(TypeTag tag, NameKind& out);

// Multiplies each matching prediction by its weight and re-sorts descending.
// Non-matching predictions pass through untouched. Scores are ranking
// scores, not renormalized probabilities.
std::vector<Prediction> rerank(std::vector<Prediction> predictions,
                               const ScopeIndex& index, const WeightTable& table);

}  // namespace dualfill
