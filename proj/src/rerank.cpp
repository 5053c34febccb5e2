#include "dualfill/rerank.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

#include <json.hpp>

namespace dualfill {

std::string_view name_kind_label(NameKind kind) {
    switch (kind) {
        case NameKind::ATTRIBUTE_ACCESS: return "attribute_access";
        case NameKind::VARIABLE_NAME: return "variable_names";
        case NameKind::FUNCTION_NAME: return "function_names";
    }
    return "variable_names";
}

std::string_view scope_level_label(ScopeLevel level) {
    switch (level) {
        case ScopeLevel::FUNCTION: return "function";
        case ScopeLevel::CLASS: return "class";
        case ScopeLevel::FILE: return "file";
    }
    return "file";
}

void WeightTable::validate() const {
    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s)
            if (weight[k][s] < 1.0)
                throw std::invalid_argument("weight table entries must be >= 1");
}

WeightTable WeightTable::defaults() {
    WeightTable t;
    // rows: attribute access, variable names, function names
    // columns: function, class, file
    t.weight[0][0] = 1.625; t.weight[0][1] = 1.250; t.weight[0][2] = 1.125;
    t.weight[1][0] = 1.625; t.weight[1][1] = 1.125; t.weight[1][2] = 1.500;
    t.weight[2][0] = 1.125; t.weight[2][1] = 1.625; t.weight[2][2] = 1.500;
    return t;
}

WeightTable WeightTable::identity() {
    WeightTable t;
    for (int k = 0; k < 3; ++k)
        for (int s = 0; s < 3; ++s) t.weight[k][s] = 1.0;
    return t;
}

WeightTable load_weight_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format") != "dualfill-weights")
        throw std::runtime_error("not a weight table: " + path.string());
    WeightTable t;
    const NameKind kinds[] = {NameKind::ATTRIBUTE_ACCESS, NameKind::VARIABLE_NAME,
                              NameKind::FUNCTION_NAME};
    const ScopeLevel scopes[] = {ScopeLevel::FUNCTION, ScopeLevel::CLASS,
                                 ScopeLevel::FILE};
    for (auto kind : kinds)
        for (auto scope : scopes)
            t.weight[static_cast<int>(kind)][static_cast<int>(scope)] =
                doc.at("weights")
                    .at(std::string(name_kind_label(kind)))
                    .at(std::string(scope_level_label(scope)))
                    .get<double>();
    t.validate();
    return t;
}

void save_weight_table(const WeightTable& table, const std::filesystem::path& path) {
    nlohmann::json weights;
    const NameKind kinds[] = {NameKind::ATTRIBUTE_ACCESS, NameKind::VARIABLE_NAME,
                              NameKind::FUNCTION_NAME};
    const ScopeLevel scopes[] = {ScopeLevel::FUNCTION, ScopeLevel::CLASS,
                                 ScopeLevel::FILE};
    for (auto kind : kinds)
        for (auto scope : scopes)
            weights[std::string(name_kind_label(kind))]
                   [std::string(scope_level_label(scope))] = table.at(kind, scope);
    nlohmann::json doc;
    doc["format"] = "dualfill-weights";
    doc["version"] = 1;
    doc["weights"] = std::move(weights);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

namespace {

struct OpenScope {
    ScopeLevel level;  // FUNCTION or CLASS
    int header_indent;
    int id;
};

bool is_assignment_op(TypeTag t) {
    switch (t) {
        case TypeTag::EQUAL:
        case TypeTag::PLUSEQUAL:
        case TypeTag::MINEQUAL:
        case TypeTag::STAREQUAL:
        case TypeTag::SLASHEQUAL:
        case TypeTag::DOUBLESLASHEQUAL:
        case TypeTag::PERCENTEQUAL:
        case TypeTag::ATEQUAL:
        case TypeTag::AMPEREQUAL:
        case TypeTag::VBAREQUAL:
        case TypeTag::CIRCUMFLEXEQUAL:
        case TypeTag::RSHIFTEQUAL:
        case TypeTag::LSHIFTEQUAL:
        case TypeTag::DOUBLESTAREQUAL:
        case TypeTag::COLONEQUAL:
            return true;
        default:
            return false;
    }
}

bool is_variable_tag(TypeTag t) {
    return t == TypeTag::LOCAL_VARIABLE || t == TypeTag::GLOBAL_VARIABLE;
}

int scope_rank(ScopeLevel level) {
    switch (level) {
        case ScopeLevel::FUNCTION: return 2;
        case ScopeLevel::CLASS: return 1;
        case ScopeLevel::FILE: return 0;
    }
    return 0;
}

}  // namespace

ScopeIndex build_scope_index(const std::vector<LexedToken>& left_context) {
    struct Candidate {
        std::string name;
        NameKind kind;
        ScopeLevel level;
        int scope_id;  // declaring scope instance; 0 is the module
    };
    std::vector<Candidate> candidates;
    std::vector<OpenScope> stack;
    int next_scope_id = 1;
    bool in_def_header = false;  // between 'def name(' and the closing ':'
    bool at_line_start = true;   // pending until the line's first code token

    auto current_level = [&] {
        return stack.empty() ? ScopeLevel::FILE : stack.back().level;
    };
    auto current_id = [&] { return stack.empty() ? 0 : stack.back().id; };

    for (size_t i = 0; i < left_context.size(); ++i) {
        const auto& rec = left_context[i].record;
        if (is_structural(rec.type)) continue;  // markers never start a line
        bool starts_line = at_line_start;
        at_line_start = false;
        if (left_context[i].last_in_statement) at_line_start = true;
        if (starts_line) {
            in_def_header = false;
            while (!stack.empty() && stack.back().header_indent >= rec.column)
                stack.pop_back();
            TypeTag head = rec.type;
            TypeTag second =
                i + 1 < left_context.size() ? left_context[i + 1].record.type : TypeTag::COUNT_;
            if (head == TypeTag::DEF || (head == TypeTag::ASYNC && second == TypeTag::DEF)) {
                in_def_header = true;
                stack.push_back({ScopeLevel::FUNCTION, rec.column, next_scope_id++});
            } else if (head == TypeTag::CLASS) {
                stack.push_back({ScopeLevel::CLASS, rec.column, next_scope_id++});
            }
        }
        if (left_context[i].last_in_statement) in_def_header = false;

        TypeTag prev = i > 0 ? left_context[i - 1].record.type : TypeTag::COUNT_;
        TypeTag next =
            i + 1 < left_context.size() ? left_context[i + 1].record.type : TypeTag::COUNT_;

        if (rec.type == TypeTag::FUNCTION_NAME && prev == TypeTag::DEF) {
            // the definition lives in the scope enclosing the new function
            ScopeLevel declared = stack.size() >= 2 ? stack[stack.size() - 2].level
                                                    : ScopeLevel::FILE;
            int id = stack.size() >= 2 ? stack[stack.size() - 2].id : 0;
            candidates.push_back({rec.value, NameKind::FUNCTION_NAME, declared, id});
            continue;
        }
        if (prev == TypeTag::DOT &&
            (rec.type == TypeTag::ATTRIBUTE || rec.type == TypeTag::MODULE ||
             rec.type == TypeTag::FUNCTION_NAME)) {
            candidates.push_back(
                {rec.value, NameKind::ATTRIBUTE_ACCESS, current_level(), current_id()});
            continue;
        }
        if (is_variable_tag(rec.type)) {
            bool assigned = is_assignment_op(next) || prev == TypeTag::FOR ||
                            prev == TypeTag::AS || prev == TypeTag::GLOBAL ||
                            in_def_header;
            if (assigned)
                candidates.push_back(
                    {rec.value, NameKind::VARIABLE_NAME, current_level(), current_id()});
        }
    }

    // visibility: module plus the scopes still open at the cursor
    std::vector<int> open_ids{0};
    for (const auto& s : stack) open_ids.push_back(s.id);

    ScopeIndex index;
    std::map<std::string, size_t> by_name;
    for (const auto& c : candidates) {
        if (std::find(open_ids.begin(), open_ids.end(), c.scope_id) == open_ids.end())
            continue;
        auto it = by_name.find(c.name);
        if (it == by_name.end()) {
            by_name.emplace(c.name, index.entries.size());
            index.entries.push_back({c.name, c.kind, c.level});
        } else {
            auto& existing = index.entries[it->second];
            if (scope_rank(c.level) > scope_rank(existing.scope)) {
                existing.kind = c.kind;
                existing.scope = c.level;
            }
        }
    }
    return index;
}

bool type_category(TypeTag tag, NameKind& out) {
    switch (tag) {
        case TypeTag::ATTRIBUTE:
            out = NameKind::ATTRIBUTE_ACCESS;
            return true;
        case TypeTag::LOCAL_VARIABLE:
        case TypeTag::GLOBAL_VARIABLE:
            out = NameKind::VARIABLE_NAME;
            return true;
        case TypeTag::FUNCTION_NAME:
            out = NameKind::FUNCTION_NAME;
            return true;
        default:
            return false;
    }
}

std::vector<Prediction> rerank(std::vector<Prediction> predictions,
                               const ScopeIndex& index, const WeightTable& table) {
    table.validate();
    for (auto& pred : predictions) {
        NameKind kind;
        if (!type_category(pred.type, kind)) continue;
        const ScopeEntry* entry = index.find(pred.token);
        if (entry == nullptr) continue;
        pred.probability *= table.at(kind, entry->scope);
    }
    std::stable_sort(predictions.begin(), predictions.end(),
                     [](const Prediction& a, const Prediction& b) {
                         return a.probability > b.probability;
                     });
    return predictions;
}

}  // namespace dualfill
