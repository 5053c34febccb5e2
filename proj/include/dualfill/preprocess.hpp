#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dualfill/lexer.hpp"

namespace dualfill {

// strip_noise -> alias table -> tokenize -> normalize_literals ->
// mark_indentation, returning the marked token stream.
std::vector<LexedToken> preprocess_tokens(std::string_view source);

// Full per-file pipeline ending in the aligned dual channels.
DualSequence preprocess_text(std::string_view source, std::string source_path = "");

struct PreprocessStats {
    int files_ok = 0;
    int files_skipped = 0;
};

// Runs the pipeline over every .py file under `dir` (sorted paths, so output
// order is deterministic) and writes one corpus record per line. Files that
// fail to lex are skipped with a warning unless keep_errors is set, in which
// case recoverable errors stay in the stream as ERRORTOKEN elements.
PreprocessStats preprocess_directory(const std::filesystem::path& dir,
                                     const std::filesystem::path& out_file,
                                     bool keep_errors = false,
                                     std::ostream* log = nullptr);

// Line-delimited corpus records {source_path, values, types}.
void write_corpus_record(std::ostream& os, const DualSequence& seq);
std::vector<DualSequence> read_corpus(const std::filesystem::path& path);
DualSequence corpus_record_from_json_line(const std::string& line);

// Sidecar enumeration of the closed tag set with integer ids.
void write_tag_sidecar(const std::filesystem::path& path);

}  // namespace dualfill
