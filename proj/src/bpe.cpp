#include "dualfill/bpe.hpp"

#include <fstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace dualfill {

namespace {

constexpr std::string_view kEow = "</w>";

bool ends_word(std::string_view symbol) {
    return symbol.size() >= kEow.size() &&
           symbol.substr(symbol.size() - kEow.size()) == kEow;
}

// Characters of `word` as symbols, the final one carrying the marker.
std::vector<std::string> base_symbols(const std::string& word) {
    std::vector<std::string> symbols;
    symbols.reserve(word.size());
    for (size_t i = 0; i < word.size(); ++i) symbols.emplace_back(1, word[i]);
    if (!symbols.empty()) symbols.back() += kEow;
    return symbols;
}

}  // namespace

const std::vector<std::string>& BpeVocab::specials() {
    static const std::vector<std::string> s = {"STRING", "NUMBER", "EOS",
                                               "INDENT", "DEDENT", "UNK", "PAD"};
    return s;
}

bool BpeVocab::is_special(std::string_view symbol) {
    for (const auto& s : specials())
        if (symbol == s) return true;
    return false;
}

int BpeVocab::id_of(const std::string& symbol) const {
    auto it = token_to_id.find(symbol);
    return it == token_to_id.end() ? -1 : it->second;
}

void BpeVocab::rebuild_merge_rank() {
    merge_rank.clear();
    for (size_t r = 0; r < merges.size(); ++r) merge_rank.emplace(merges[r], r);
}

int BpeVocab::unk_id() const { return id_of("UNK"); }
int BpeVocab::pad_id() const { return id_of("PAD"); }
int BpeVocab::eos_id() const { return id_of("EOS"); }

BpeVocab train_bpe(const std::vector<std::vector<std::string>>& corpus,
                   int vocab_size) {
    if (corpus.empty()) throw std::invalid_argument("train_bpe: empty corpus");

    std::map<std::string, long> word_freq;
    for (const auto& seq : corpus)
        for (const auto& value : seq) {
            if (value.empty() || BpeVocab::is_special(value)) continue;
            ++word_freq[value];
        }

    BpeVocab vocab;
    auto add_symbol = [&vocab](const std::string& symbol) {
        if (vocab.token_to_id.emplace(symbol, vocab.size()).second)
            vocab.id_to_token.push_back(symbol);
    };
    for (const auto& s : BpeVocab::specials()) add_symbol(s);

    std::vector<std::pair<std::vector<std::string>, long>> words;
    words.reserve(word_freq.size());
    // both variants of every seen character, so any string over the base
    // character set stays encodable
    std::map<std::string, long> base_seen;  // ordered so ids are stable
    for (const auto& [word, freq] : word_freq) {
        for (char c : word) {
            ++base_seen[std::string(1, c)];
            ++base_seen[std::string(1, c) + std::string(kEow)];
        }
        words.push_back({base_symbols(word), freq});
    }
    for (const auto& [symbol, n] : base_seen) add_symbol(symbol);

    if (vocab.size() > vocab_size)
        throw std::invalid_argument("train_bpe: vocab_size below specials plus base");

    while (vocab.size() < vocab_size) {
        std::unordered_map<std::pair<std::string, std::string>, long, SymbolPairHash> counts;
        for (const auto& [symbols, freq] : words)
            for (size_t i = 0; i + 1 < symbols.size(); ++i)
                counts[{symbols[i], symbols[i + 1]}] += freq;

        std::pair<std::string, std::string> best;
        long best_count = 0;
        for (const auto& [pair, count] : counts) {
            if (count > best_count || (count == best_count && count > 0 && pair < best)) {
                best = pair;
                best_count = count;
            }
        }
        if (best_count < 2) break;  // nothing left worth merging

        vocab.merges.push_back(best);
        add_symbol(best.first + best.second);
        for (auto& [symbols, freq] : words) {
            for (size_t i = 0; i + 1 < symbols.size();) {
                if (symbols[i] == best.first && symbols[i + 1] == best.second) {
                    symbols[i] += symbols[i + 1];
                    symbols.erase(symbols.begin() + static_cast<long>(i) + 1);
                } else {
                    ++i;
                }
            }
        }
    }
    vocab.rebuild_merge_rank();
    return vocab;
}

std::vector<int> encode(const BpeVocab& vocab, const std::string& value) {
    if (value.empty()) return {};
    if (BpeVocab::is_special(value)) return {vocab.id_of(value)};

    auto symbols = base_symbols(value);
    // repeatedly apply the earliest-trained merge present in the word
    while (symbols.size() > 1) {
        size_t best_rank = vocab.merges.size();
        size_t best_at = 0;
        for (size_t i = 0; i + 1 < symbols.size(); ++i) {
            auto it = vocab.merge_rank.find({symbols[i], symbols[i + 1]});
            if (it != vocab.merge_rank.end() && it->second < best_rank) {
                best_rank = it->second;
                best_at = i;
            }
        }
        if (best_rank == vocab.merges.size()) break;
        symbols[best_at] += symbols[best_at + 1];
        symbols.erase(symbols.begin() + static_cast<long>(best_at) + 1);
    }

    std::vector<int> ids;
    ids.reserve(symbols.size());
    for (const auto& s : symbols) {
        int id = vocab.id_of(s);
        ids.push_back(id >= 0 ? id : vocab.unk_id());
    }
    return ids;
}

std::string decode(const BpeVocab& vocab, const std::vector<int>& ids) {
    std::string out;
    for (int id : ids) {
        if (id < 0 || id >= vocab.size())
            throw std::out_of_range("decode: unknown id " + std::to_string(id));
        const std::string& symbol = vocab.id_to_token[static_cast<size_t>(id)];
        if (BpeVocab::is_special(symbol)) {
            out += symbol;
        } else if (ends_word(symbol)) {
            out += symbol.substr(0, symbol.size() - kEow.size());
        } else {
            out += symbol;
        }
    }
    return out;
}

std::vector<std::string> decode_stream(const BpeVocab& vocab,
                                       const std::vector<int>& ids) {
    std::vector<std::string> tokens;
    std::string current;
    for (int id : ids) {
        if (id < 0 || id >= vocab.size())
            throw std::out_of_range("decode_stream: unknown id " + std::to_string(id));
        const std::string& symbol = vocab.id_to_token[static_cast<size_t>(id)];
        if (BpeVocab::is_special(symbol)) {
            if (!current.empty()) {
                tokens.push_back(current);
                current.clear();
            }
            tokens.push_back(symbol);
        } else if (ends_word(symbol)) {
            current += symbol.substr(0, symbol.size() - kEow.size());
            tokens.push_back(current);
            current.clear();
        } else {
            current += symbol;
        }
    }
    if (!current.empty()) tokens.push_back(current);
    return tokens;
}

bool completes_token(const BpeVocab& vocab, int id) {
    if (id < 0 || id >= vocab.size()) return false;
    const std::string& symbol = vocab.id_to_token[static_cast<size_t>(id)];
    return BpeVocab::is_special(symbol) || ends_word(symbol);
}

void save_vocab(const BpeVocab& vocab, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "dualfill-bpe";
    doc["version"] = 1;
    doc["vocab_size"] = vocab.size();
    doc["specials"] = BpeVocab::specials();
    doc["merges"] = vocab.merges;
    doc["tokens"] = vocab.id_to_token;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump() << '\n';
}

BpeVocab load_vocab(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format") != "dualfill-bpe")
        throw std::runtime_error("not a vocabulary file: " + path.string());
    BpeVocab vocab;
    vocab.merges =
        doc.at("merges").get<std::vector<std::pair<std::string, std::string>>>();
    vocab.id_to_token = doc.at("tokens").get<std::vector<std::string>>();
    for (size_t i = 0; i < vocab.id_to_token.size(); ++i)
        vocab.token_to_id.emplace(vocab.id_to_token[i], static_cast<int>(i));
    vocab.rebuild_merge_rank();
    return vocab;
}

}  // namespace dualfill
