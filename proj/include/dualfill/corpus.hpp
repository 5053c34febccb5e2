#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dualfill/token.hpp"

namespace dualfill {

enum class Split : uint8_t { PRETRAIN, FINETUNE, EVAL };

std::string_view split_name(Split split);
bool split_from_name(std::string_view name, Split& out);

struct StatementLengthSummary {
    double mean = 0.0;
    double median = 0.0;
    int max = 0;
};

struct CorpusStats {
    long file_count = 0;
    long loc = 0;  // logical lines (statements)
    long unique_tokens = 0;
    long unique_types = 0;
    StatementLengthSummary statement_length;
};

struct ManifestEntry {
    std::string path;
    std::string content_hash;
    Split split = Split::PRETRAIN;
};

struct CorpusManifest {
    std::vector<ManifestEntry> files;
    CorpusStats stats;
};

std::string sha256_hex(std::string_view data);

// Hash used for deduplication: over noise-stripped text, so comment-only
// variants collide; falls back to raw bytes when stripping fails.
std::string content_hash(std::string_view raw_source);

// Keeps the first occurrence of each content hash, in input order.
CorpusManifest deduplicate(
    const std::vector<std::pair<std::string, std::string>>& path_and_source);
CorpusManifest deduplicate_files(const std::vector<std::filesystem::path>& files);

struct SplitFractions {
    double finetune_train = 0.9;
    double eval = 0.1;
};

// Reassigns every entry to FINETUNE/EVAL, deterministically under `seed`.
// Throws std::invalid_argument when fractions leave [0,1] or do not sum to 1.
CorpusManifest split(CorpusManifest manifest, SplitFractions fractions, uint64_t seed);

// Statement lengths count code tokens between EOS markers; INDENT/DEDENT
// markers are not part of any statement.
CorpusStats compute_stats(const CorpusManifest& manifest,
                          const std::vector<DualSequence>& sequences);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

}  // namespace dualfill
