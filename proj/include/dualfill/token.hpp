#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dualfill {

// Closed token-type vocabulary. The set is frozen at build time; every
// preprocessed corpus draws from it and the sidecar tag file enumerates it
// with stable integer ids. See docs/type_tags.md for the full table.
enum class TypeTag : uint8_t {
    // keywords
    FALSE, NONE, TRUE, AND, AS, ASSERT, ASYNC, AWAIT, BREAK, CLASS, CONTINUE,
    DEF, DEL, ELIF, ELSE, EXCEPT, FINALLY, FOR, FROM, GLOBAL, IF, IMPORT, IN,
    IS, LAMBDA, NONLOCAL, NOT, OR, PASS, RAISE, RETURN, TRY, WHILE, WITH,
    YIELD,
    // name roles
    NAME, FUNCTION_NAME, CLASS_NAME, LOCAL_VARIABLE, GLOBAL_VARIABLE, MODULE,
    LIB, ALIAS, ERRORTOKEN, ATTRIBUTE, DECORATOR,
    // literals
    STRING, NUMBER,
    // operators
    PLUS, MINUS, STAR, DOUBLESTAR, SLASH, DOUBLESLASH, PERCENT, AT, LSHIFT,
    RSHIFT, AMPER, VBAR, CIRCUMFLEX, TILDE, COLONEQUAL, LESS, GREATER,
    LESSEQUAL, GREATEREQUAL, EQEQUAL, NOTEQUAL, EQUAL, PLUSEQUAL, MINEQUAL,
    STAREQUAL, SLASHEQUAL, DOUBLESLASHEQUAL, PERCENTEQUAL, ATEQUAL,
    AMPEREQUAL, VBAREQUAL, CIRCUMFLEXEQUAL, RSHIFTEQUAL, LSHIFTEQUAL,
    DOUBLESTAREQUAL, RARROW,
    // delimiters
    LPAR, RPAR, LSQB, RSQB, LBRACE, RBRACE, COMMA, COLON, DOT, SEMI, ELLIPSIS,
    // structural markers
    INDENT, DEDENT, EOS,

    COUNT_
};

constexpr int kTypeTagCount = static_cast<int>(TypeTag::COUNT_);
static_assert(kTypeTagCount <= 128);

// Coarse grouping used by the type-prediction evaluation task.
enum class TagGroup : uint8_t { Identifiers, Keywords, Punctuation, Literals, Operators };

// Stable enum name, e.g. "FUNCTION_NAME", "LPAR".
std::string_view tag_name(TypeTag tag);

// Text the tag assumes in a rendered type panel: keywords and name roles
// print their name, operators and delimiters print their literal spelling
// ("(", "+="), STRING prints quoted.
std::string_view tag_render(TypeTag tag);

TagGroup tag_group(TypeTag tag);

// Lookups; return false when the name/spelling is not part of the vocabulary.
bool tag_from_name(std::string_view name, TypeTag& out);
bool keyword_tag(std::string_view word, TypeTag& out);
bool operator_tag(std::string_view spelling, TypeTag& out);

bool is_keyword(TypeTag tag);
bool is_name_role(TypeTag tag);
bool is_operator_or_delim(TypeTag tag);
bool is_structural(TypeTag tag);
// Binary operators; the cardinal-point list abbreviates them as BINOP.
bool is_binary_operator(TypeTag tag);

enum class ScopeTag : uint8_t { GLOBAL, LOCAL, FUNCTION, CLASS, FILE };

std::string_view scope_name(ScopeTag scope);

// One lexed token. `position` is the 1-based token ordinal within its
// physical line; `column`/`end_column` are 0-based source columns kept for
// rendering (end_column spans the original text even after normalization).
struct TokenRecord {
    std::string value;
    TypeTag type = TypeTag::NAME;
    int line = 1;
    int position = 1;
    int column = 0;
    int end_column = 0;
    ScopeTag scope = ScopeTag::FILE;

    bool operator==(const TokenRecord&) const = default;
};

// Aligned value/type channels for one source file.
struct DualSequence {
    std::vector<std::string> values;
    std::vector<TypeTag> types;
    std::string source_path;

    size_t size() const { return values.size(); }
    bool empty() const { return values.empty(); }
};

enum class AliasKind : uint8_t { MODULE, LIBRARY, ALIAS };

std::string_view alias_kind_name(AliasKind kind);

// Imported modules, libraries and their aliases, keyed by identifier.
struct AliasTable {
    std::map<std::string, AliasKind> entries;

    bool lookup(const std::string& name, AliasKind& out) const {
        auto it = entries.find(name);
        if (it == entries.end()) return false;
        out = it->second;
        return true;
    }
};

}  // namespace dualfill
