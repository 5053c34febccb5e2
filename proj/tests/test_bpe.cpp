#include <doctest.h>

#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dualfill/bpe.hpp"

using namespace dualfill;

namespace {

// Reference pair-count oracle: exhaustive counting over the corpus with its
// own word segmentation, independent of the trainer.
using Symbols = std::vector<std::string>;

Symbols oracle_segment(const std::string& word) {
    Symbols s;
    for (char c : word) s.emplace_back(1, c);
    if (!s.empty()) s.back() += "</w>";
    return s;
}

std::pair<std::string, std::string> oracle_best_pair(
    const std::vector<std::vector<std::string>>& corpus) {
    std::map<std::pair<std::string, std::string>, long> counts;
    for (const auto& seq : corpus)
        for (const auto& value : seq) {
            if (BpeVocab::is_special(value) || value.empty()) continue;
            auto symbols = oracle_segment(value);
            for (size_t i = 0; i + 1 < symbols.size(); ++i)
                ++counts[{symbols[i], symbols[i + 1]}];
        }
    std::pair<std::string, std::string> best;
    long best_count = 0;
    for (const auto& [pair, count] : counts)
        if (count > best_count) {  // std::map order breaks ties lexicographically
            best = pair;
            best_count = count;
        }
    return best;
}

// Applies the merge list literally in training order, one scan per merge.
Symbols oracle_apply_merges(const BpeVocab& vocab, const std::string& word) {
    Symbols symbols = oracle_segment(word);
    for (const auto& [a, b] : vocab.merges) {
        for (size_t i = 0; i + 1 < symbols.size();) {
            if (symbols[i] == a && symbols[i + 1] == b) {
                symbols[i] += symbols[i + 1];
                symbols.erase(symbols.begin() + static_cast<long>(i) + 1);
            } else {
                ++i;
            }
        }
    }
    return symbols;
}

int base_symbol_count(const std::vector<std::vector<std::string>>& corpus) {
    std::set<std::string> base;
    for (const auto& seq : corpus)
        for (const auto& value : seq) {
            if (BpeVocab::is_special(value) || value.empty()) continue;
            for (char c : value) {
                base.insert(std::string(1, c));
                base.insert(std::string(1, c) + "</w>");
            }
        }
    return static_cast<int>(base.size());
}

const int kSpecials = static_cast<int>(BpeVocab::specials().size());

}  // namespace

TEST_CASE("first merge matches the exhaustive pair-count oracle") {
    std::vector<std::vector<std::string>> corpus = {{"aaab"}, {"aaac"}};
    int base = base_symbol_count(corpus);
    auto vocab = train_bpe(corpus, kSpecials + base + 1);
    REQUIRE(vocab.merges.size() == 1);
    CHECK(vocab.merges[0] == std::make_pair(std::string("a"), std::string("a")));
    CHECK(vocab.merges[0] == oracle_best_pair(corpus));
}

TEST_CASE("encode follows the ordered-merge oracle") {
    std::vector<std::vector<std::string>> corpus = {{"aaab"}, {"aaac"}};
    auto vocab = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 1);
    auto expected = oracle_apply_merges(vocab, "aaab");
    REQUIRE(expected == Symbols{"aa", "a", "b</w>"});
    std::vector<int> want;
    for (const auto& s : expected) want.push_back(vocab.id_of(s));
    CHECK(encode(vocab, "aaab") == want);

    // richer corpus: implementation and oracle agree on every trained word
    std::vector<std::vector<std::string>> rich = {
        {"self", "self", "value", "values", "value"},
        {"result", "resolve", "resolve", "return_value", "selection"},
    };
    auto v2 = train_bpe(rich, kSpecials + base_symbol_count(rich) + 12);
    for (const auto& seq : rich)
        for (const auto& w : seq) {
            auto oracle = oracle_apply_merges(v2, w);
            std::vector<int> ids;
            for (const auto& s : oracle) ids.push_back(v2.id_of(s));
            CAPTURE(w);
            CHECK(encode(v2, w) == ids);
        }
}

TEST_CASE("vocab floor yields character-level tokens") {
    std::vector<std::vector<std::string>> corpus = {{"abc", "abd"}};
    int base = base_symbol_count(corpus);
    auto vocab = train_bpe(corpus, kSpecials + base);
    CHECK(vocab.merges.empty());
    CHECK(vocab.size() == kSpecials + base);
    CHECK(encode(vocab, "abc").size() == 3);
}

TEST_CASE("special-only corpus trains no merges") {
    std::vector<std::vector<std::string>> corpus = {{"EOS", "INDENT", "DEDENT", "EOS"}};
    auto vocab = train_bpe(corpus, 64);
    CHECK(vocab.merges.empty());
    CHECK(vocab.size() == kSpecials);
}

TEST_CASE("empty corpus is an error") {
    CHECK_THROWS_AS(train_bpe({}, 64), std::invalid_argument);
}

TEST_CASE("specials encode to single ids and round-trip") {
    std::vector<std::vector<std::string>> corpus = {{"x", "EOS"}};
    auto vocab = train_bpe(corpus, 64);
    CHECK(encode(vocab, "EOS") == std::vector<int>{vocab.eos_id()});
    CHECK(decode(vocab, {vocab.eos_id()}) == "EOS");
}

TEST_CASE("round-trip and compression properties") {
    std::vector<std::vector<std::string>> corpus = {
        {"def", "main", "value", "return", "printer", "value", "def", "definition"},
        {"main", "remainder", "turn", "print", "aligned", "def"},
    };
    auto vocab = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 20);

    // alphabet observed by training
    std::set<char> alphabet;
    for (const auto& seq : corpus)
        for (const auto& w : seq) alphabet.insert(w.begin(), w.end());
    std::vector<char> chars(alphabet.begin(), alphabet.end());

    std::mt19937 rng(7);
    std::uniform_int_distribution<size_t> pick(0, chars.size() - 1);
    std::uniform_int_distribution<int> len(1, 14);
    for (int trial = 0; trial < 500; ++trial) {
        std::string word;
        int n = len(rng);
        for (int k = 0; k < n; ++k) word += chars[pick(rng)];
        auto ids = encode(vocab, word);
        CHECK(decode(vocab, ids) == word);
        CHECK(ids.size() <= word.size());
    }

    // unknown characters map to UNK and never fail
    auto ids = encode(vocab, "zq#");
    for (size_t i = 0; i + 1 < ids.size(); ++i) CHECK(ids[i] == vocab.unk_id());

    // decoding an unknown id is an error
    CHECK_THROWS_AS(decode(vocab, {vocab.size() + 3}), std::out_of_range);
}

TEST_CASE("training is deterministic") {
    std::vector<std::vector<std::string>> corpus = {
        {"alpha", "beta", "alphabet", "bet", "all"},
        {"beta", "alpha", "tablet", "able"},
    };
    auto a = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 10);
    auto b = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 10);
    CHECK(a.merges == b.merges);
    CHECK(a.id_to_token == b.id_to_token);
}

TEST_CASE("vocabulary file round-trips") {
    std::vector<std::vector<std::string>> corpus = {{"hello", "help", "held", "hello"}};
    auto vocab = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 6);
    auto path = std::filesystem::temp_directory_path() / "dualfill_bpe_test.json";
    save_vocab(vocab, path);
    auto loaded = load_vocab(path);
    CHECK(loaded.merges == vocab.merges);
    CHECK(loaded.id_to_token == vocab.id_to_token);
    CHECK(encode(loaded, "hello") == encode(vocab, "hello"));
    std::filesystem::remove(path);
}

TEST_CASE("decode_stream splits ids at token boundaries") {
    std::vector<std::vector<std::string>> corpus = {{"ab", "cd", "ab"}};
    auto vocab = train_bpe(corpus, kSpecials + base_symbol_count(corpus) + 4);
    std::vector<int> ids = encode(vocab, "ab");
    auto eos = vocab.eos_id();
    std::vector<int> stream = ids;
    stream.push_back(eos);
    auto cd = encode(vocab, "cd");
    stream.insert(stream.end(), cd.begin(), cd.end());
    auto tokens = decode_stream(vocab, stream);
    CHECK(tokens == std::vector<std::string>{"ab", "EOS", "cd"});
    for (int id : ids) CHECK(completes_token(vocab, id) == (id == ids.back()));
}
