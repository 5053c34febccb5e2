#include "dualfill/token.hpp"

#include <array>
#include <unordered_map>

namespace dualfill {

namespace {

struct TagInfo {
    std::string_view name;
    std::string_view render;
    TagGroup group;
};

constexpr int idx(TypeTag t) { return static_cast<int>(t); }

const std::array<TagInfo, kTypeTagCount>& tag_table() {
    static const std::array<TagInfo, kTypeTagCount> table = [] {
        std::array<TagInfo, kTypeTagCount> t{};
        auto kw = [&](TypeTag tag, std::string_view name) {
            t[idx(tag)] = {name, name, TagGroup::Keywords};
        };
        kw(TypeTag::FALSE, "FALSE");
        kw(TypeTag::NONE, "NONE");
        kw(TypeTag::TRUE, "TRUE");
        kw(TypeTag::AND, "AND");
        kw(TypeTag::AS, "AS");
        kw(TypeTag::ASSERT, "ASSERT");
        kw(TypeTag::ASYNC, "ASYNC");
        kw(TypeTag::AWAIT, "AWAIT");
        kw(TypeTag::BREAK, "BREAK");
        kw(TypeTag::CLASS, "CLASS");
        kw(TypeTag::CONTINUE, "CONTINUE");
        kw(TypeTag::DEF, "DEF");
        kw(TypeTag::DEL, "DEL");
        kw(TypeTag::ELIF, "ELIF");
        kw(TypeTag::ELSE, "ELSE");
        kw(TypeTag::EXCEPT, "EXCEPT");
        kw(TypeTag::FINALLY, "FINALLY");
        kw(TypeTag::FOR, "FOR");
        kw(TypeTag::FROM, "FROM");
        kw(TypeTag::GLOBAL, "GLOBAL");
        kw(TypeTag::IF, "IF");
        kw(TypeTag::IMPORT, "IMPORT");
        kw(TypeTag::IN, "IN");
        kw(TypeTag::IS, "IS");
        kw(TypeTag::LAMBDA, "LAMBDA");
        kw(TypeTag::NONLOCAL, "NONLOCAL");
        kw(TypeTag::NOT, "NOT");
        kw(TypeTag::OR, "OR");
        kw(TypeTag::PASS, "PASS");
        kw(TypeTag::RAISE, "RAISE");
        kw(TypeTag::RETURN, "RETURN");
        kw(TypeTag::TRY, "TRY");
        kw(TypeTag::WHILE, "WHILE");
        kw(TypeTag::WITH, "WITH");
        kw(TypeTag::YIELD, "YIELD");

        auto id = [&](TypeTag tag, std::string_view name) {
            t[idx(tag)] = {name, name, TagGroup::Identifiers};
        };
        id(TypeTag::NAME, "NAME");
        id(TypeTag::FUNCTION_NAME, "FUNCTION_NAME");
        id(TypeTag::CLASS_NAME, "CLASS_NAME");
        id(TypeTag::LOCAL_VARIABLE, "LOCAL_VARIABLE");
        id(TypeTag::GLOBAL_VARIABLE, "GLOBAL_VARIABLE");
        id(TypeTag::MODULE, "MODULE");
        id(TypeTag::LIB, "LIB");
        id(TypeTag::ALIAS, "ALIAS");
        id(TypeTag::ERRORTOKEN, "ERRORTOKEN");
        id(TypeTag::ATTRIBUTE, "ATTRIBUTE");
        id(TypeTag::DECORATOR, "DECORATOR");

        t[idx(TypeTag::STRING)] = {"STRING", "\"STRING\"", TagGroup::Literals};
        t[idx(TypeTag::NUMBER)] = {"NUMBER", "NUMBER", TagGroup::Literals};

        auto op = [&](TypeTag tag, std::string_view name, std::string_view spell) {
            t[idx(tag)] = {name, spell, TagGroup::Operators};
        };
        op(TypeTag::PLUS, "PLUS", "+");
        op(TypeTag::MINUS, "MINUS", "-");
        op(TypeTag::STAR, "STAR", "*");
        op(TypeTag::DOUBLESTAR, "DOUBLESTAR", "**");
        op(TypeTag::SLASH, "SLASH", "/");
        op(TypeTag::DOUBLESLASH, "DOUBLESLASH", "//");
        op(TypeTag::PERCENT, "PERCENT", "%");
        op(TypeTag::AT, "AT", "@");
        op(TypeTag::LSHIFT, "LSHIFT", "<<");
        op(TypeTag::RSHIFT, "RSHIFT", ">>");
        op(TypeTag::AMPER, "AMPER", "&");
        op(TypeTag::VBAR, "VBAR", "|");
        op(TypeTag::CIRCUMFLEX, "CIRCUMFLEX", "^");
        op(TypeTag::TILDE, "TILDE", "~");
        op(TypeTag::COLONEQUAL, "COLONEQUAL", ":=");
        op(TypeTag::LESS, "LESS", "<");
        op(TypeTag::GREATER, "GREATER", ">");
        op(TypeTag::LESSEQUAL, "LESSEQUAL", "<=");
        op(TypeTag::GREATEREQUAL, "GREATEREQUAL", ">=");
        op(TypeTag::EQEQUAL, "EQEQUAL", "==");
        op(TypeTag::NOTEQUAL, "NOTEQUAL", "!=");
        op(TypeTag::EQUAL, "EQUAL", "=");
        op(TypeTag::PLUSEQUAL, "PLUSEQUAL", "+=");
        op(TypeTag::MINEQUAL, "MINEQUAL", "-=");
        op(TypeTag::STAREQUAL, "STAREQUAL", "*=");
        op(TypeTag::SLASHEQUAL, "SLASHEQUAL", "/=");
        op(TypeTag::DOUBLESLASHEQUAL, "DOUBLESLASHEQUAL", "//=");
        op(TypeTag::PERCENTEQUAL, "PERCENTEQUAL", "%=");
        op(TypeTag::ATEQUAL, "ATEQUAL", "@=");
        op(TypeTag::AMPEREQUAL, "AMPEREQUAL", "&=");
        op(TypeTag::VBAREQUAL, "VBAREQUAL", "|=");
        op(TypeTag::CIRCUMFLEXEQUAL, "CIRCUMFLEXEQUAL", "^=");
        op(TypeTag::RSHIFTEQUAL, "RSHIFTEQUAL", ">>=");
        op(TypeTag::LSHIFTEQUAL, "LSHIFTEQUAL", "<<=");
        op(TypeTag::DOUBLESTAREQUAL, "DOUBLESTAREQUAL", "**=");
        op(TypeTag::RARROW, "RARROW", "->");

        auto delim = [&](TypeTag tag, std::string_view name, std::string_view spell) {
            t[idx(tag)] = {name, spell, TagGroup::Punctuation};
        };
        delim(TypeTag::LPAR, "LPAR", "(");
        delim(TypeTag::RPAR, "RPAR", ")");
        delim(TypeTag::LSQB, "LSQB", "[");
        delim(TypeTag::RSQB, "RSQB", "]");
        delim(TypeTag::LBRACE, "LBRACE", "{");
        delim(TypeTag::RBRACE, "RBRACE", "}");
        delim(TypeTag::COMMA, "COMMA", ",");
        delim(TypeTag::COLON, "COLON", ":");
        delim(TypeTag::DOT, "DOT", ".");
        delim(TypeTag::SEMI, "SEMI", ";");
        delim(TypeTag::ELLIPSIS, "ELLIPSIS", "...");

        auto structural = [&](TypeTag tag, std::string_view name) {
            t[idx(tag)] = {name, name, TagGroup::Punctuation};
        };
        structural(TypeTag::INDENT, "INDENT");
        structural(TypeTag::DEDENT, "DEDENT");
        structural(TypeTag::EOS, "EOS");
        return t;
    }();
    return table;
}

}  // namespace

std::string_view tag_name(TypeTag tag) { return tag_table()[idx(tag)].name; }
std::string_view tag_render(TypeTag tag) { return tag_table()[idx(tag)].render; }
TagGroup tag_group(TypeTag tag) { return tag_table()[idx(tag)].group; }

bool tag_from_name(std::string_view name, TypeTag& out) {
    static const auto lookup = [] {
        std::unordered_map<std::string_view, TypeTag> m;
        for (int i = 0; i < kTypeTagCount; ++i)
            m.emplace(tag_table()[i].name, static_cast<TypeTag>(i));
        return m;
    }();
    auto it = lookup.find(name);
    if (it == lookup.end()) return false;
    out = it->second;
    return true;
}

bool keyword_tag(std::string_view word, TypeTag& out) {
    static const auto lookup = [] {
        std::unordered_map<std::string_view, TypeTag> m;
        const std::pair<std::string_view, TypeTag> kws[] = {
            {"False", TypeTag::FALSE},     {"None", TypeTag::NONE},
            {"True", TypeTag::TRUE},       {"and", TypeTag::AND},
            {"as", TypeTag::AS},           {"assert", TypeTag::ASSERT},
            {"async", TypeTag::ASYNC},     {"await", TypeTag::AWAIT},
            {"break", TypeTag::BREAK},     {"class", TypeTag::CLASS},
            {"continue", TypeTag::CONTINUE}, {"def", TypeTag::DEF},
            {"del", TypeTag::DEL},         {"elif", TypeTag::ELIF},
            {"else", TypeTag::ELSE},       {"except", TypeTag::EXCEPT},
            {"finally", TypeTag::FINALLY}, {"for", TypeTag::FOR},
            {"from", TypeTag::FROM},       {"global", TypeTag::GLOBAL},
            {"if", TypeTag::IF},           {"import", TypeTag::IMPORT},
            {"in", TypeTag::IN},           {"is", TypeTag::IS},
            {"lambda", TypeTag::LAMBDA},   {"nonlocal", TypeTag::NONLOCAL},
            {"not", TypeTag::NOT},         {"or", TypeTag::OR},
            {"pass", TypeTag::PASS},       {"raise", TypeTag::RAISE},
            {"return", TypeTag::RETURN},   {"try", TypeTag::TRY},
            {"while", TypeTag::WHILE},     {"with", TypeTag::WITH},
            {"yield", TypeTag::YIELD},
        };
        for (auto& [w, t] : kws) m.emplace(w, t);
        return m;
    }();
    auto it = lookup.find(word);
    if (it == lookup.end()) return false;
    out = it->second;
    return true;
}

bool operator_tag(std::string_view spelling, TypeTag& out) {
    static const auto lookup = [] {
        std::unordered_map<std::string_view, TypeTag> m;
        for (int i = 0; i < kTypeTagCount; ++i) {
            auto tag = static_cast<TypeTag>(i);
            if (is_operator_or_delim(tag)) m.emplace(tag_render(tag), tag);
        }
        return m;
    }();
    auto it = lookup.find(spelling);
    if (it == lookup.end()) return false;
    out = it->second;
    return true;
}

bool is_keyword(TypeTag tag) {
    return idx(tag) >= idx(TypeTag::FALSE) && idx(tag) <= idx(TypeTag::YIELD);
}

bool is_name_role(TypeTag tag) {
    return idx(tag) >= idx(TypeTag::NAME) && idx(tag) <= idx(TypeTag::DECORATOR);
}

bool is_operator_or_delim(TypeTag tag) {
    return idx(tag) >= idx(TypeTag::PLUS) && idx(tag) <= idx(TypeTag::ELLIPSIS);
}

bool is_structural(TypeTag tag) {
    return tag == TypeTag::INDENT || tag == TypeTag::DEDENT || tag == TypeTag::EOS;
}

bool is_binary_operator(TypeTag tag) {
    switch (tag) {
        case TypeTag::PLUS:
        case TypeTag::MINUS:
        case TypeTag::STAR:
        case TypeTag::DOUBLESTAR:
        case TypeTag::SLASH:
        case TypeTag::DOUBLESLASH:
        case TypeTag::PERCENT:
        case TypeTag::AT:
        case TypeTag::LSHIFT:
        case TypeTag::RSHIFT:
        case TypeTag::AMPER:
        case TypeTag::VBAR:
        case TypeTag::CIRCUMFLEX:
        case TypeTag::LESS:
        case TypeTag::GREATER:
        case TypeTag::LESSEQUAL:
        case TypeTag::GREATEREQUAL:
        case TypeTag::EQEQUAL:
        case TypeTag::NOTEQUAL:
            return true;
        default:
            return false;
    }
}

std::string_view scope_name(ScopeTag scope) {
    switch (scope) {
        case ScopeTag::GLOBAL: return "GLOBAL";
        case ScopeTag::LOCAL: return "LOCAL";
        case ScopeTag::FUNCTION: return "FUNCTION";
        case ScopeTag::CLASS: return "CLASS";
        case ScopeTag::FILE: return "FILE";
    }
    return "FILE";
}

std::string_view alias_kind_name(AliasKind kind) {
    switch (kind) {
        case AliasKind::MODULE: return "MODULE";
        case AliasKind::LIBRARY: return "LIBRARY";
        case AliasKind::ALIAS: return "ALIAS";
    }
    return "MODULE";
}

}  // namespace dualfill
