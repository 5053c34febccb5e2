#include "dualfill/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dualfill {

namespace {

constexpr char kMagic[8] = {'D', 'F', 'I', 'L', 'C', 'K', 'P', 'T'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& value) {
    os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T value{};
    is.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return value;
}

void put_string(std::ostream& os, const std::string& s) {
    put<uint32_t>(os, static_cast<uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    auto n = get<uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return s;
}

void write_stack(std::ostream& os, const StackParams& stack) {
    auto refs = tensor_refs(stack);
    put<uint32_t>(os, static_cast<uint32_t>(refs.size()));
    for (const auto& r : refs) {
        put_string(os, r.name);
        put<int64_t>(os, r.rows);
        put<int64_t>(os, r.cols);
        os.write(reinterpret_cast<const char*>(r.data),
                 static_cast<std::streamsize>(r.size() * static_cast<long>(sizeof(double))));
    }
}

void read_stack(std::istream& is, StackParams& stack) {
    auto refs = tensor_refs(stack);
    auto count = get<uint32_t>(is);
    if (count != refs.size()) throw std::runtime_error("checkpoint: tensor count mismatch");
    for (auto& r : refs) {
        std::string name = get_string(is);
        auto rows = get<int64_t>(is);
        auto cols = get<int64_t>(is);
        if (name != r.name || rows != r.rows || cols != r.cols)
            throw std::runtime_error("checkpoint: tensor layout mismatch at " + name);
        is.read(reinterpret_cast<char*>(r.data),
                static_cast<std::streamsize>(r.size() * static_cast<long>(sizeof(double))));
        if (!is) throw std::runtime_error("checkpoint: truncated tensor " + name);
    }
}

void write_params(std::ostream& os, const ModelParams& params) {
    write_stack(os, params.tvp);
    write_stack(os, params.ttp);
    write_stack(os, params.sc);
}

void read_params(std::istream& is, ModelParams& params) {
    read_stack(is, params.tvp);
    read_stack(is, params.ttp);
    read_stack(is, params.sc);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os.write(kMagic, sizeof(kMagic));
    put(os, kVersion);

    const auto& c = ckpt.config;
    put<int32_t>(os, c.layers);
    put<int32_t>(os, c.model_dim);
    put<int32_t>(os, c.heads);
    put<int32_t>(os, c.ff_dim);
    put<int32_t>(os, c.max_seq_len);
    put<int32_t>(os, c.value_vocab);
    put<int32_t>(os, c.type_vocab);
    put<double>(os, c.share_strength);

    put<int32_t>(os, ckpt.meta.epoch);
    put<uint8_t>(os, static_cast<uint8_t>(ckpt.meta.phase));
    put<uint64_t>(os, ckpt.meta.seed);
    put<uint8_t>(os, ckpt.meta.adaptive ? 1 : 0);
    put<int64_t>(os, ckpt.meta.step);

    bool moments = ckpt.moment1.has_value() && ckpt.moment2.has_value();
    put<uint8_t>(os, moments ? 1 : 0);
    write_params(os, ckpt.params);
    if (moments) {
        write_params(os, *ckpt.moment1);
        write_params(os, *ckpt.moment2);
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("not a checkpoint file: " + path.string());
    if (get<uint32_t>(is) != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path.string());

    Checkpoint ckpt;
    auto& c = ckpt.config;
    c.layers = get<int32_t>(is);
    c.model_dim = get<int32_t>(is);
    c.heads = get<int32_t>(is);
    c.ff_dim = get<int32_t>(is);
    c.max_seq_len = get<int32_t>(is);
    c.value_vocab = get<int32_t>(is);
    c.type_vocab = get<int32_t>(is);
    c.share_strength = get<double>(is);
    c.validate();

    ckpt.meta.epoch = get<int32_t>(is);
    ckpt.meta.phase = static_cast<Phase>(get<uint8_t>(is));
    ckpt.meta.seed = get<uint64_t>(is);
    ckpt.meta.adaptive = get<uint8_t>(is) != 0;
    ckpt.meta.step = get<int64_t>(is);

    bool moments = get<uint8_t>(is) != 0;
    ckpt.params = make_params(c);
    read_params(is, ckpt.params);
    if (moments) {
        ckpt.moment1 = make_params(c);
        ckpt.moment2 = make_params(c);
        read_params(is, *ckpt.moment1);
        read_params(is, *ckpt.moment2);
    }
    return ckpt;
}

}  // namespace dualfill
