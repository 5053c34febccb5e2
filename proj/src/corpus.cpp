#include "dualfill/corpus.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dualfill/lexer.hpp"

namespace dualfill {

namespace {

// SHA-256 (FIPS 180-4), compact single-shot implementation.
class Sha256 {
public:
    std::array<uint8_t, 32> digest(std::string_view data) {
        state_ = {0x6a09e667u, 0xbb67ae85u, 0x3c6ef372u, 0xa54ff53au,
                  0x510e527fu, 0x9b05688cu, 0x1f83d9abu, 0x5be0cd19u};
        uint64_t total_bits = static_cast<uint64_t>(data.size()) * 8;
        size_t i = 0;
        while (data.size() - i >= 64) {
            process(reinterpret_cast<const uint8_t*>(data.data()) + i);
            i += 64;
        }
        std::array<uint8_t, 128> tail{};
        size_t rem = data.size() - i;
        std::memcpy(tail.data(), data.data() + i, rem);
        tail[rem] = 0x80;
        size_t tail_len = rem + 1 <= 56 ? 64 : 128;
        for (int b = 0; b < 8; ++b)
            tail[tail_len - 1 - static_cast<size_t>(b)] =
                static_cast<uint8_t>(total_bits >> (8 * b));
        process(tail.data());
        if (tail_len == 128) process(tail.data() + 64);

        std::array<uint8_t, 32> out{};
        for (int w = 0; w < 8; ++w)
            for (int b = 0; b < 4; ++b)
                out[static_cast<size_t>(w * 4 + b)] =
                    static_cast<uint8_t>(state_[static_cast<size_t>(w)] >> (24 - 8 * b));
        return out;
    }

private:
    static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

    void process(const uint8_t* block) {
        static constexpr std::array<uint32_t, 64> k = {
            0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
            0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
            0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
            0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
            0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
            0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
            0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
            0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
            0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
            0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
            0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
        std::array<uint32_t, 64> w{};
        for (int t = 0; t < 16; ++t)
            w[static_cast<size_t>(t)] =
                (static_cast<uint32_t>(block[t * 4]) << 24) |
                (static_cast<uint32_t>(block[t * 4 + 1]) << 16) |
                (static_cast<uint32_t>(block[t * 4 + 2]) << 8) |
                static_cast<uint32_t>(block[t * 4 + 3]);
        for (int t = 16; t < 64; ++t) {
            uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[static_cast<size_t>(t)] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        auto [a, b, c, d, e, f, g, h] = std::tuple{state_[0], state_[1], state_[2],
                                                   state_[3], state_[4], state_[5],
                                                   state_[6], state_[7]};
        for (int t = 0; t < 64; ++t) {
            uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            uint32_t ch = (e & f) ^ (~e & g);
            uint32_t t1 = h + s1 + ch + k[static_cast<size_t>(t)] + w[static_cast<size_t>(t)];
            uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            uint32_t t2 = s0 + maj;
            h = g; g = f; f = e; e = d + t1;
            d = c; c = b; b = a; a = t1 + t2;
        }
        state_[0] += a; state_[1] += b; state_[2] += c; state_[3] += d;
        state_[4] += e; state_[5] += f; state_[6] += g; state_[7] += h;
    }

    std::array<uint32_t, 8> state_{};
};

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// 64-bit seeded Fisher-Yates; fully specified, unlike std::shuffle.
void deterministic_shuffle(std::vector<size_t>& v, uint64_t seed) {
    uint64_t state = seed ^ 0x9e3779b97f4a7c15ull;
    auto next = [&state] {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    };
    for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[next() % i]);
}

}  // namespace

std::string_view split_name(Split split) {
    switch (split) {
        case Split::PRETRAIN: return "PRETRAIN";
        case Split::FINETUNE: return "FINETUNE";
        case Split::EVAL: return "EVAL";
    }
    return "PRETRAIN";
}

bool split_from_name(std::string_view name, Split& out) {
    if (name == "PRETRAIN") out = Split::PRETRAIN;
    else if (name == "FINETUNE") out = Split::FINETUNE;
    else if (name == "EVAL") out = Split::EVAL;
    else return false;
    return true;
}

std::string sha256_hex(std::string_view data) {
    auto digest = Sha256().digest(data);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (uint8_t byte : digest) {
        out += hex[byte >> 4];
        out += hex[byte & 0xf];
    }
    return out;
}

std::string content_hash(std::string_view raw_source) {
    try {
        return sha256_hex(strip_noise(raw_source));
    } catch (const LexicalError&) {
        return sha256_hex(raw_source);
    }
}

CorpusManifest deduplicate(
    const std::vector<std::pair<std::string, std::string>>& path_and_source) {
    CorpusManifest manifest;
    std::set<std::string> seen;
    for (const auto& [path, source] : path_and_source) {
        std::string hash = content_hash(source);
        if (!seen.insert(hash).second) continue;
        manifest.files.push_back({path, std::move(hash), Split::PRETRAIN});
    }
    return manifest;
}

CorpusManifest deduplicate_files(const std::vector<std::filesystem::path>& files) {
    std::vector<std::pair<std::string, std::string>> loaded;
    loaded.reserve(files.size());
    for (const auto& f : files) loaded.push_back({f.generic_string(), read_file(f)});
    return deduplicate(loaded);
}

CorpusManifest split(CorpusManifest manifest, SplitFractions fractions, uint64_t seed) {
    auto valid = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (!valid(fractions.finetune_train) || !valid(fractions.eval) ||
        std::abs(fractions.finetune_train + fractions.eval - 1.0) > 1e-9)
        throw std::invalid_argument("split fractions must lie in [0,1] and sum to 1");

    std::vector<size_t> order(manifest.files.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    deterministic_shuffle(order, seed);

    auto n_train = static_cast<size_t>(
        std::llround(fractions.finetune_train * static_cast<double>(order.size())));
    for (size_t rank = 0; rank < order.size(); ++rank)
        manifest.files[order[rank]].split = rank < n_train ? Split::FINETUNE : Split::EVAL;
    return manifest;
}

CorpusStats compute_stats(const CorpusManifest& manifest,
                          const std::vector<DualSequence>& sequences) {
    (void)manifest;
    CorpusStats stats;
    stats.file_count = static_cast<long>(sequences.size());

    std::set<std::string> values;
    std::set<TypeTag> types;
    std::vector<int> lengths;
    for (const auto& seq : sequences) {
        int current = 0;
        for (size_t i = 0; i < seq.size(); ++i) {
            types.insert(seq.types[i]);
            if (seq.types[i] == TypeTag::EOS) {
                lengths.push_back(current);
                current = 0;
                continue;
            }
            if (is_structural(seq.types[i])) continue;
            values.insert(seq.values[i]);
            ++current;
        }
    }
    stats.loc = static_cast<long>(lengths.size());
    stats.unique_tokens = static_cast<long>(values.size());
    stats.unique_types = static_cast<long>(types.size());
    if (!lengths.empty()) {
        long sum = 0;
        for (int n : lengths) sum += n;
        stats.statement_length.mean =
            static_cast<double>(sum) / static_cast<double>(lengths.size());
        std::sort(lengths.begin(), lengths.end());
        size_t mid = lengths.size() / 2;
        stats.statement_length.median =
            lengths.size() % 2 == 1
                ? lengths[mid]
                : (lengths[mid - 1] + lengths[mid]) / 2.0;
        stats.statement_length.max = lengths.back();
    }
    return stats;
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "dualfill-manifest";
    doc["version"] = 1;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& e : manifest.files)
        files.push_back({{"path", e.path},
                         {"content_hash", e.content_hash},
                         {"split", std::string(split_name(e.split))}});
    doc["files"] = std::move(files);
    doc["stats"] = {{"file_count", manifest.stats.file_count},
                    {"loc", manifest.stats.loc},
                    {"unique_tokens", manifest.stats.unique_tokens},
                    {"unique_types", manifest.stats.unique_types},
                    {"statement_length",
                     {{"mean", manifest.stats.statement_length.mean},
                      {"median", manifest.stats.statement_length.median},
                      {"max", manifest.stats.statement_length.max}}}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format") != "dualfill-manifest")
        throw std::runtime_error("not a manifest file: " + path.string());
    CorpusManifest manifest;
    for (const auto& e : doc.at("files")) {
        ManifestEntry entry;
        entry.path = e.at("path").get<std::string>();
        entry.content_hash = e.at("content_hash").get<std::string>();
        Split s;
        if (!split_from_name(e.at("split").get<std::string>(), s))
            throw std::runtime_error("unknown split in manifest");
        entry.split = s;
        manifest.files.push_back(std::move(entry));
    }
    if (doc.contains("stats")) {
        const auto& s = doc["stats"];
        manifest.stats.file_count = s.value("file_count", 0L);
        manifest.stats.loc = s.value("loc", 0L);
        manifest.stats.unique_tokens = s.value("unique_tokens", 0L);
        manifest.stats.unique_types = s.value("unique_types", 0L);
        if (s.contains("statement_length")) {
            manifest.stats.statement_length.mean = s["statement_length"].value("mean", 0.0);
            manifest.stats.statement_length.median =
                s["statement_length"].value("median", 0.0);
            manifest.stats.statement_length.max = s["statement_length"].value("max", 0);
        }
    }
    return manifest;
}

}  // namespace dualfill
