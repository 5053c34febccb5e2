#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace dualfill {

struct SymbolPairHash {
    size_t operator()(const std::pair<std::string, std::string>& p) const {
        return std::hash<std::string>()(p.first) * 1315423911u ^
               std::hash<std::string>()(p.second);
    }
};

// Subword vocabulary trained by iterative pair merging over the value
// channel. Reserved symbols are atomic: never split, never merged into.
struct BpeVocab {
    std::vector<std::pair<std::string, std::string>> merges;  // training order
    std::map<std::string, int> token_to_id;
    std::vector<std::string> id_to_token;
    // derived: (first, second) -> position in `merges`
    std::unordered_map<std::pair<std::string, std::string>, size_t, SymbolPairHash>
        merge_rank;

    void rebuild_merge_rank();

    static const std::vector<std::string>& specials();
    static bool is_special(std::string_view symbol);

    int size() const { return static_cast<int>(id_to_token.size()); }
    int id_of(const std::string& symbol) const;  // -1 when absent
    int unk_id() const;
    int pad_id() const;
    int eos_id() const;
};

// Trains until `vocab_size` entries exist or no pair occurs twice. The most
// frequent pair merges first; ties break toward the lexicographically
// smaller pair. Throws on an empty corpus.
BpeVocab train_bpe(const std::vector<std::vector<std::string>>& corpus,
                   int vocab_size);

// Splits one token value into subword ids. Characters outside the base
// alphabet map to UNK.
std::vector<int> encode(const BpeVocab& vocab, const std::string& value);

// Inverse of encode on its image; throws std::out_of_range on unknown ids.
std::string decode(const BpeVocab& vocab, const std::vector<int>& ids);

// Splits an id stream into whole token values at end-of-word boundaries.
std::vector<std::string> decode_stream(const BpeVocab& vocab,
                                       const std::vector<int>& ids);

// True when the id completes a token value (special or end-of-word symbol).
bool completes_token(const BpeVocab& vocab, int id);

void save_vocab(const BpeVocab& vocab, const std::filesystem::path& path);
BpeVocab load_vocab(const std::filesystem::path& path);

}  // namespace dualfill
