#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dualfill/token.hpp"

namespace dualfill {

// Lexical failure with the 1-based source line it was detected on.
class LexicalError : public std::runtime_error {
public:
    LexicalError(const std::string& what, int line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// A lexed token plus the statement-boundary flag the later passes need.
// `last_in_statement` is set on the final token of each logical line
// (a newline outside brackets that is not backslash-escaped, or EOF).
struct LexedToken {
    TokenRecord record;
    bool last_in_statement = false;

    bool operator==(const LexedToken&) const = default;
};

// Raw scan: keywords, names, literals, operators. No role refinement, no
// INDENT/DEDENT, no EOS. In lenient mode lexical errors become ERRORTOKEN
// records and scanning continues; in strict mode they throw LexicalError.
std::vector<LexedToken> lex(std::string_view source, bool strict = false);

// Drops comments, blank lines and trailing whitespace. Code layout is
// otherwise preserved. Throws LexicalError on an unterminated string.
std::string strip_noise(std::string_view source);

// Collects imported libraries, modules and aliases from import statements.
AliasTable build_alias_table(std::string_view source);

// Names treated as libraries even without an import in the current file.
bool is_known_library(std::string_view name);

// lex + role refinement: alias-table tags, FUNCTION_NAME/CLASS_NAME,
// attribute chains, variable visibility, decorator names, scope tags.
std::vector<LexedToken> tokenize(std::string_view source, const AliasTable& aliases,
                                 bool strict = false);

// Replaces string/number literal values with the STRING/NUMBER sentinels.
std::vector<LexedToken> normalize_literals(std::vector<LexedToken> tokens);

// Inserts INDENT/DEDENT records at indentation changes, one per level,
// including the implicit dedents at end of file. Positions are renumbered
// per line so they stay 1-based and strictly increasing.
// Throws LexicalError when a line dedents to a never-seen level.
std::vector<LexedToken> mark_indentation(const std::vector<LexedToken>& tokens);

// Builds the aligned channels, appending an EOS element to both at every
// statement boundary. Structural elements carry their marker name in the
// value channel.
DualSequence to_dual_sequence(const std::vector<LexedToken>& tokens,
                              std::string source_path = "");

// Human-readable panels. The value panel keeps the line layout of the
// stripped source (literals shown normalized); the type panel replaces
// indentation with INDENT/DEDENT markers and appends EOS per statement.
// Dedents implied by end of file belong to no line and are not printed.
std::string render_value_panel(const std::vector<LexedToken>& tokens);
std::string render_type_panel(const std::vector<LexedToken>& tokens);

}  // namespace dualfill
