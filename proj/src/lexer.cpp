#include "dualfill/lexer.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

namespace dualfill {

namespace {

constexpr int kTabWidth = 8;

bool is_ident_start(char c) {
    return std::isalpha(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
           static_cast<unsigned char>(c) >= 0x80;
}

bool is_dec_digit(char c) { return c >= '0' && c <= '9'; }

// Legal prefixes of string literals: r, b, u, f and two-letter rb/fr combos.
bool is_string_prefix(std::string_view s) {
    if (s.empty() || s.size() > 2) return false;
    bool r = false, b = false, u = false, f = false;
    for (char c : s) {
        switch (std::tolower(static_cast<unsigned char>(c))) {
            case 'r': if (r) return false; r = true; break;
            case 'b': if (b) return false; b = true; break;
            case 'u': if (u) return false; u = true; break;
            case 'f': if (f) return false; f = true; break;
            default: return false;
        }
    }
    if (u && s.size() > 1) return false;
    if (b && f) return false;
    return true;
}

struct Scanner {
    std::string_view src;
    size_t i = 0;
    int line = 1;
    int col = 0;  // tab-expanded column
    int next_position = 1;

    bool done() const { return i >= src.size(); }
    char peek(size_t ahead = 0) const {
        return i + ahead < src.size() ? src[i + ahead] : '\0';
    }
    void advance() {
        char c = src[i++];
        if (c == '\n') {
            ++line;
            col = 0;
            next_position = 1;
        } else if (c == '\t') {
            col = (col / kTabWidth + 1) * kTabWidth;
        } else {
            ++col;
        }
    }
};

}  // namespace

std::vector<LexedToken> lex(std::string_view source, bool strict) {
    std::vector<LexedToken> out;
    Scanner s{source};
    int bracket_depth = 0;
    bool pending_statement = false;  // tokens emitted since last boundary

    auto emit = [&](std::string value, TypeTag type, int line, int col, int position) {
        LexedToken t;
        t.record.value = std::move(value);
        t.record.type = type;
        t.record.line = line;
        t.record.column = col;
        t.record.end_column = s.col;
        t.record.position = position;
        out.push_back(std::move(t));
        pending_statement = true;
    };

    auto end_statement = [&] {
        if (pending_statement && !out.empty()) {
            out.back().last_in_statement = true;
            pending_statement = false;
        }
    };

    auto lex_error = [&](const std::string& what, int line, std::string consumed,
                         int col, int position) {
        if (strict) throw LexicalError(what, line);
        emit(std::move(consumed), TypeTag::ERRORTOKEN, line, col, position);
    };

    // Consumes a string literal starting at the opening quote. Returns false
    // when the literal is unterminated (error already reported).
    auto scan_string = [&](std::string& text, int start_line) -> bool {
        char quote = s.peek();
        bool triple = s.peek(1) == quote && s.peek(2) == quote;
        int quotes = triple ? 3 : 1;
        for (int q = 0; q < quotes; ++q) {
            text += s.peek();
            s.advance();
        }
        while (!s.done()) {
            char c = s.peek();
            if (c == '\\') {
                text += c;
                s.advance();
                if (!s.done()) {
                    text += s.peek();
                    s.advance();
                }
                continue;
            }
            if (c == '\n' && !triple) return false;
            if (c == quote) {
                if (!triple) {
                    text += c;
                    s.advance();
                    return true;
                }
                if (s.peek(1) == quote && s.peek(2) == quote) {
                    for (int q = 0; q < 3; ++q) {
                        text += s.peek();
                        s.advance();
                    }
                    return true;
                }
            }
            text += c;
            s.advance();
        }
        (void)start_line;
        return false;
    };

    while (!s.done()) {
        char c = s.peek();

        if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
            s.advance();
            continue;
        }
        if (c == '\n') {
            if (bracket_depth == 0) end_statement();
            s.advance();
            continue;
        }
        if (c == '\\' && (s.peek(1) == '\n' || (s.peek(1) == '\r' && s.peek(2) == '\n'))) {
            // explicit line join: no statement boundary
            s.advance();
            while (!s.done() && s.peek() != '\n') s.advance();
            if (!s.done()) s.advance();
            continue;
        }
        if (c == '#') {
            while (!s.done() && s.peek() != '\n') s.advance();
            continue;
        }

        int tok_line = s.line;
        int tok_col = s.col;
        int tok_pos = s.next_position++;

        if (is_ident_start(c)) {
            std::string word;
            while (!s.done() && is_ident_char(s.peek())) {
                word += s.peek();
                s.advance();
            }
            char q = s.peek();
            if ((q == '"' || q == '\'') && is_string_prefix(word)) {
                std::string text = word;
                if (!scan_string(text, tok_line)) {
                    lex_error("unterminated string literal", tok_line, std::move(text),
                              tok_col, tok_pos);
                    continue;
                }
                emit(std::move(text), TypeTag::STRING, tok_line, tok_col, tok_pos);
                continue;
            }
            TypeTag kw;
            if (keyword_tag(word, kw)) {
                emit(std::move(word), kw, tok_line, tok_col, tok_pos);
            } else {
                emit(std::move(word), TypeTag::NAME, tok_line, tok_col, tok_pos);
            }
            continue;
        }

        if (c == '"' || c == '\'') {
            std::string text;
            if (!scan_string(text, tok_line)) {
                lex_error("unterminated string literal", tok_line, std::move(text),
                          tok_col, tok_pos);
                continue;
            }
            emit(std::move(text), TypeTag::STRING, tok_line, tok_col, tok_pos);
            continue;
        }

        if (is_dec_digit(c) || (c == '.' && is_dec_digit(s.peek(1)))) {
            std::string text;
            auto take = [&] { text += s.peek(); s.advance(); };
            if (c == '0' && (s.peek(1) == 'x' || s.peek(1) == 'X' || s.peek(1) == 'o' ||
                             s.peek(1) == 'O' || s.peek(1) == 'b' || s.peek(1) == 'B')) {
                take();
                take();
                while (!s.done() && (std::isalnum(static_cast<unsigned char>(s.peek())) ||
                                     s.peek() == '_'))
                    take();
            } else {
                while (!s.done() && (is_dec_digit(s.peek()) || s.peek() == '_')) take();
                if (s.peek() == '.' && is_dec_digit(s.peek(1))) {
                    take();
                    while (!s.done() && (is_dec_digit(s.peek()) || s.peek() == '_')) take();
                } else if (s.peek() == '.' && !is_ident_start(s.peek(1)) && s.peek(1) != '.') {
                    take();
                }
                if (s.peek() == 'e' || s.peek() == 'E') {
                    size_t save = 1;
                    if (s.peek(1) == '+' || s.peek(1) == '-') save = 2;
                    if (is_dec_digit(s.peek(save))) {
                        for (size_t k = 0; k <= save; ++k) take();
                        while (!s.done() && is_dec_digit(s.peek())) take();
                    }
                }
                if (s.peek() == 'j' || s.peek() == 'J') take();
            }
            emit(std::move(text), TypeTag::NUMBER, tok_line, tok_col, tok_pos);
            continue;
        }

        // operators and delimiters, longest match first
        TypeTag op;
        bool matched = false;
        for (int len = 3; len >= 1 && !matched; --len) {
            if (s.i + static_cast<size_t>(len) > s.src.size()) continue;
            std::string_view spelling = s.src.substr(s.i, static_cast<size_t>(len));
            if (operator_tag(spelling, op)) {
                for (int k = 0; k < len; ++k) s.advance();
                emit(std::string(spelling), op, tok_line, tok_col, tok_pos);
                matched = true;
            }
        }
        if (matched) {
            TypeTag t = out.back().record.type;
            if (t == TypeTag::LPAR || t == TypeTag::LSQB || t == TypeTag::LBRACE)
                ++bracket_depth;
            else if (t == TypeTag::RPAR || t == TypeTag::RSQB || t == TypeTag::RBRACE)
                bracket_depth = std::max(0, bracket_depth - 1);
            continue;
        }

        s.advance();
        lex_error("unexpected character", tok_line, std::string(1, c), tok_col, tok_pos);
    }
    end_statement();
    return out;
}

std::string strip_noise(std::string_view source) {
    std::string out;
    out.reserve(source.size());
    std::string chunk;  // current physical line, or whole span of an open string
    int line = 1;
    int string_start_line = 0;
    char quote = '\0';
    bool in_string = false;
    bool triple = false;

    auto flush = [&](bool with_newline) {
        while (!chunk.empty() &&
               (chunk.back() == ' ' || chunk.back() == '\t' || chunk.back() == '\r'))
            chunk.pop_back();
        if (!chunk.empty()) {
            out += chunk;
            if (with_newline) out += '\n';
        }
        chunk.clear();
    };

    for (size_t i = 0; i < source.size(); ++i) {
        char c = source[i];
        if (in_string) {
            if (c == '\\' && i + 1 < source.size()) {
                chunk += c;
                chunk += source[i + 1];
                if (source[i + 1] == '\n') ++line;
                ++i;
                continue;
            }
            if (c == '\n') {
                if (!triple) throw LexicalError("unterminated string literal", line);
                chunk += c;
                ++line;
                continue;
            }
            if (c == quote) {
                if (!triple) {
                    in_string = false;
                } else if (i + 2 < source.size() && source[i + 1] == quote &&
                           source[i + 2] == quote) {
                    chunk += quote;
                    chunk += quote;
                    i += 2;
                    in_string = false;
                }
            }
            chunk += c;
            continue;
        }
        if (c == '#') {
            while (i + 1 < source.size() && source[i + 1] != '\n') ++i;
            continue;
        }
        if (c == '\n') {
            flush(true);
            ++line;
            continue;
        }
        if (c == '"' || c == '\'') {
            quote = c;
            string_start_line = line;
            triple = i + 2 < source.size() && source[i + 1] == c && source[i + 2] == c;
            if (triple) {
                chunk += c;
                chunk += c;
                i += 2;
            }
            in_string = true;
            chunk += c;
            continue;
        }
        chunk += c;
    }
    if (in_string) throw LexicalError("unterminated string literal", string_start_line);
    flush(false);
    return out;
}

namespace {

void add_alias(AliasTable& table, const std::string& name, AliasKind kind) {
    table.entries.emplace(name, kind);
}

// Parses one `import ...` or `from ... import ...` statement given as a
// token span; non-import statements are left untouched.
void scan_import(AliasTable& table, const std::vector<LexedToken>& toks, size_t begin,
                 size_t end) {
    size_t i = begin;
    auto type_at = [&](size_t k) {
        return k < end ? toks[k].record.type : TypeTag::COUNT_;
    };
    auto value_at = [&](size_t k) -> const std::string& { return toks[k].record.value; };

    auto scan_dotted = [&](size_t& k, bool root_is_library) {
        bool first = true;
        while (type_at(k) == TypeTag::NAME) {
            add_alias(table, value_at(k),
                      first && root_is_library ? AliasKind::LIBRARY : AliasKind::MODULE);
            first = false;
            ++k;
            if (type_at(k) == TypeTag::DOT && type_at(k + 1) == TypeTag::NAME)
                ++k;
            else
                break;
        }
    };

    if (type_at(i) == TypeTag::IMPORT) {
        ++i;
        while (i < end) {
            scan_dotted(i, /*root_is_library=*/true);
            if (type_at(i) == TypeTag::AS && type_at(i + 1) == TypeTag::NAME) {
                add_alias(table, value_at(i + 1), AliasKind::ALIAS);
                i += 2;
            }
            if (type_at(i) == TypeTag::COMMA) {
                ++i;
                continue;
            }
            break;
        }
        return;
    }
    if (type_at(i) == TypeTag::FROM) {
        ++i;
        bool relative = false;
        while (type_at(i) == TypeTag::DOT || type_at(i) == TypeTag::ELLIPSIS) {
            relative = true;
            ++i;
        }
        scan_dotted(i, /*root_is_library=*/!relative);
        if (type_at(i) != TypeTag::IMPORT) return;
        ++i;
        if (type_at(i) == TypeTag::LPAR) ++i;
        while (i < end) {
            if (type_at(i) == TypeTag::STAR) break;
            if (type_at(i) != TypeTag::NAME) break;
            std::string imported = value_at(i);
            ++i;
            if (type_at(i) == TypeTag::AS && type_at(i + 1) == TypeTag::NAME) {
                add_alias(table, imported, AliasKind::MODULE);
                add_alias(table, value_at(i + 1), AliasKind::ALIAS);
                i += 2;
            } else {
                add_alias(table, imported, AliasKind::MODULE);
            }
            if (type_at(i) == TypeTag::COMMA) {
                ++i;
                continue;
            }
            break;
        }
    }
}

}  // namespace

AliasTable build_alias_table(std::string_view source) {
    AliasTable table;
    auto toks = lex(source, /*strict=*/false);
    size_t start = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (toks[i].record.type == TypeTag::SEMI) {
            if (i > start) scan_import(table, toks, start, i);
            start = i + 1;
        } else if (toks[i].last_in_statement) {
            scan_import(table, toks, start, i + 1);
            start = i + 1;
        }
    }
    if (start < toks.size()) scan_import(table, toks, start, toks.size());
    return table;
}

bool is_known_library(std::string_view name) {
    static const std::unordered_set<std::string_view> libs = {
        "os",        "sys",     "re",         "json",    "math",
        "time",      "random",  "logging",    "socket",  "collections",
        "itertools", "functools", "typing",   "numpy",   "np",
        "pandas",    "pd",      "torch",      "tensorflow", "requests",
        "subprocess", "pathlib", "shutil",    "io",      "abc",
    };
    return libs.count(name) > 0;
}

namespace {

bool is_errorish_name(std::string_view name) {
    static const std::unordered_set<std::string_view> builtins = {
        "BaseException", "Exception", "KeyboardInterrupt", "GeneratorExit",
        "StopIteration", "StopAsyncIteration", "SystemExit", "Warning",
    };
    if (builtins.count(name)) return true;
    auto ends_with = [&](std::string_view suffix) {
        return name.size() > suffix.size() &&
               name.substr(name.size() - suffix.size()) == suffix;
    };
    return ends_with("Error") || ends_with("Exception") || ends_with("Warning");
}

struct Scope {
    ScopeTag kind;  // FUNCTION or CLASS
    int header_indent;
    std::unordered_set<std::string> declared_globals;  // FUNCTION scopes only
};

bool library_like(TypeTag t) {
    return t == TypeTag::LIB || t == TypeTag::MODULE || t == TypeTag::ALIAS;
}

// Refines raw NAME tokens in place: alias tags, name roles, variable
// visibility, scope annotation.
void refine_roles(std::vector<LexedToken>& toks, const AliasTable& aliases) {
    std::vector<Scope> scopes;

    auto innermost_function = [&]() -> Scope* {
        for (auto it = scopes.rbegin(); it != scopes.rend(); ++it)
            if (it->kind == ScopeTag::FUNCTION) return &*it;
        return nullptr;
    };

    auto region_scope = [&]() {
        if (scopes.empty()) return ScopeTag::FILE;
        return scopes.back().kind;
    };

    size_t line_start = 0;
    for (size_t i = 0; i < toks.size(); ++i) {
        auto& rec = toks[i].record;
        bool starts_line = i == 0 || toks[i - 1].last_in_statement;
        if (starts_line) {
            line_start = i;
            while (!scopes.empty() && scopes.back().header_indent >= rec.column)
                scopes.pop_back();
            TypeTag head = rec.type;
            TypeTag second = i + 1 < toks.size() ? toks[i + 1].record.type : TypeTag::COUNT_;
            if (head == TypeTag::DEF || (head == TypeTag::ASYNC && second == TypeTag::DEF))
                scopes.push_back({ScopeTag::FUNCTION, rec.column, {}});
            else if (head == TypeTag::CLASS)
                scopes.push_back({ScopeTag::CLASS, rec.column, {}});
            else if (head == TypeTag::GLOBAL) {
                if (Scope* fn = innermost_function()) {
                    for (size_t k = i + 1; k < toks.size(); ++k) {
                        if (toks[k].record.type == TypeTag::NAME)
                            fn->declared_globals.insert(toks[k].record.value);
                        else if (toks[k].record.type != TypeTag::COMMA)
                            break;
                        if (toks[k].last_in_statement) break;
                    }
                }
            }
        }

        rec.scope = region_scope();
        if (rec.type != TypeTag::NAME) continue;

        TypeTag prev = i > 0 ? toks[i - 1].record.type : TypeTag::COUNT_;
        TypeTag next = i + 1 < toks.size() ? toks[i + 1].record.type : TypeTag::COUNT_;

        if (prev == TypeTag::DEF) {
            rec.type = TypeTag::FUNCTION_NAME;
            continue;
        }
        if (prev == TypeTag::CLASS) {
            rec.type = TypeTag::CLASS_NAME;
            continue;
        }
        if (prev == TypeTag::AT && line_start + 1 == i) {
            rec.type = TypeTag::DECORATOR;
            continue;
        }
        if (prev == TypeTag::DOT) {
            // walk to the root of the attribute chain
            size_t root = i;
            while (root >= 2 && toks[root - 1].record.type == TypeTag::DOT &&
                   is_name_role(toks[root - 2].record.type))
                root -= 2;
            bool lib_chain = root != i && library_like(toks[root].record.type);
            if (next == TypeTag::LPAR)
                rec.type = TypeTag::FUNCTION_NAME;
            else
                rec.type = lib_chain ? TypeTag::MODULE : TypeTag::ATTRIBUTE;
            continue;
        }

        AliasKind kind;
        if (aliases.lookup(rec.value, kind)) {
            rec.type = kind == AliasKind::LIBRARY ? TypeTag::LIB
                       : kind == AliasKind::MODULE ? TypeTag::MODULE
                                                   : TypeTag::ALIAS;
            continue;
        }
        if (is_known_library(rec.value)) {
            rec.type = TypeTag::LIB;
            continue;
        }
        if (is_errorish_name(rec.value)) {
            rec.type = TypeTag::ERRORTOKEN;
            continue;
        }
        if (next == TypeTag::LPAR) {
            rec.type = TypeTag::FUNCTION_NAME;
            continue;
        }

        Scope* fn = innermost_function();
        if (fn != nullptr && !fn->declared_globals.count(rec.value)) {
            rec.type = TypeTag::LOCAL_VARIABLE;
            rec.scope = ScopeTag::LOCAL;
        } else {
            rec.type = TypeTag::GLOBAL_VARIABLE;
            rec.scope = fn != nullptr || scopes.empty() ? ScopeTag::GLOBAL : rec.scope;
        }
    }
}

}  // namespace

std::vector<LexedToken> tokenize(std::string_view source, const AliasTable& aliases,
                                 bool strict) {
    auto toks = lex(source, strict);
    refine_roles(toks, aliases);
    return toks;
}

std::vector<LexedToken> normalize_literals(std::vector<LexedToken> tokens) {
    for (auto& t : tokens) {
        if (t.record.type == TypeTag::STRING)
            t.record.value = "STRING";
        else if (t.record.type == TypeTag::NUMBER)
            t.record.value = "NUMBER";
    }
    return tokens;
}

std::vector<LexedToken> mark_indentation(const std::vector<LexedToken>& tokens) {
    std::vector<LexedToken> out;
    out.reserve(tokens.size() + 8);
    std::vector<int> levels{0};

    auto marker = [](TypeTag type, const TokenRecord& like) {
        LexedToken t;
        t.record.type = type;
        t.record.line = like.line;
        t.record.column = like.column;
        t.record.scope = like.scope;
        return t;
    };

    for (size_t i = 0; i < tokens.size(); ++i) {
        bool starts_line = i == 0 || tokens[i - 1].last_in_statement;
        if (starts_line) {
            int indent = tokens[i].record.column;
            if (indent > levels.back()) {
                levels.push_back(indent);
                out.push_back(marker(TypeTag::INDENT, tokens[i].record));
            } else {
                while (indent < levels.back()) {
                    levels.pop_back();
                    out.push_back(marker(TypeTag::DEDENT, tokens[i].record));
                }
                if (indent != levels.back())
                    throw LexicalError("inconsistent dedent", tokens[i].record.line);
            }
        }
        out.push_back(tokens[i]);
    }
    while (levels.size() > 1) {
        levels.pop_back();
        LexedToken t;
        t.record.type = TypeTag::DEDENT;
        t.record.line = out.empty() ? 1 : out.back().record.line;
        out.push_back(std::move(t));
    }

    // keep per-line positions 1-based and strictly increasing
    int cur_line = -1, next_pos = 1;
    for (auto& t : out) {
        if (t.record.line != cur_line) {
            cur_line = t.record.line;
            next_pos = 1;
        }
        t.record.position = next_pos++;
    }
    return out;
}

DualSequence to_dual_sequence(const std::vector<LexedToken>& tokens,
                              std::string source_path) {
    DualSequence seq;
    seq.source_path = std::move(source_path);
    seq.values.reserve(tokens.size() + tokens.size() / 4);
    seq.types.reserve(seq.values.capacity());
    for (const auto& t : tokens) {
        if (is_structural(t.record.type)) {
            seq.values.emplace_back(tag_name(t.record.type));
            seq.types.push_back(t.record.type);
        } else {
            seq.values.push_back(t.record.value);
            seq.types.push_back(t.record.type);
        }
        if (t.last_in_statement) {
            seq.values.emplace_back(tag_name(TypeTag::EOS));
            seq.types.push_back(TypeTag::EOS);
        }
    }
    return seq;
}

namespace {

std::string display_value(const TokenRecord& rec) {
    if (rec.type == TypeTag::STRING && rec.value == "STRING") return "\"STRING\"";
    return rec.value;
}

std::string display_type(const TokenRecord& rec) {
    return std::string(tag_render(rec.type));
}

}  // namespace

std::string render_value_panel(const std::vector<LexedToken>& tokens) {
    std::string out;
    int cur_line = -1;
    int prev_end = 0;
    for (const auto& t : tokens) {
        if (is_structural(t.record.type)) continue;
        if (t.record.line != cur_line) {
            if (cur_line != -1) out += '\n';
            cur_line = t.record.line;
            out.append(static_cast<size_t>(t.record.column), ' ');
        } else if (t.record.column > prev_end) {
            out += ' ';
        }
        out += display_value(t.record);
        prev_end = t.record.end_column;
    }
    if (cur_line != -1) out += '\n';
    return out;
}

std::string render_type_panel(const std::vector<LexedToken>& tokens) {
    std::string out;
    std::vector<TypeTag> pending_markers;
    bool line_open = false;
    int prev_end = 0;
    int prev_line = -1;

    for (const auto& t : tokens) {
        if (t.record.type == TypeTag::INDENT || t.record.type == TypeTag::DEDENT) {
            pending_markers.push_back(t.record.type);
            continue;
        }
        if (!line_open) {
            for (auto m : pending_markers) {
                out += tag_render(m);
                out += ' ';
            }
            pending_markers.clear();
            line_open = true;
        } else if (t.record.line != prev_line || t.record.column > prev_end) {
            out += ' ';
        }
        out += display_type(t.record);
        prev_end = t.record.end_column;
        prev_line = t.record.line;
        if (t.last_in_statement) {
            out += ' ';
            out += tag_render(TypeTag::EOS);
            out += '\n';
            line_open = false;
        }
    }
    return out;
}

}  // namespace dualfill
