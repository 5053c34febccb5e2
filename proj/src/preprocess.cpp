#include "dualfill/preprocess.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

namespace dualfill {

using nlohmann::json;

std::vector<LexedToken> preprocess_tokens(std::string_view source) {
    std::string stripped = strip_noise(source);
    AliasTable aliases = build_alias_table(stripped);
    auto tokens = tokenize(stripped, aliases);
    tokens = normalize_literals(std::move(tokens));
    return mark_indentation(tokens);
}

DualSequence preprocess_text(std::string_view source, std::string source_path) {
    return to_dual_sequence(preprocess_tokens(source), std::move(source_path));
}

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_error_tokens(const DualSequence& seq) {
    return std::find(seq.types.begin(), seq.types.end(), TypeTag::ERRORTOKEN) !=
           seq.types.end();
}

}  // namespace

PreprocessStats preprocess_directory(const std::filesystem::path& dir,
                                     const std::filesystem::path& out_file,
                                     bool keep_errors, std::ostream* log) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".py")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());

    std::ofstream out(out_file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_file.string());

    PreprocessStats stats;
    for (const auto& file : files) {
        try {
            DualSequence seq = preprocess_text(read_file(file), file.generic_string());
            if (!keep_errors && has_error_tokens(seq)) {
                ++stats.files_skipped;
                if (log) *log << "warning: skipping " << file.generic_string()
                              << " (lexical errors)\n";
                continue;
            }
            write_corpus_record(out, seq);
            ++stats.files_ok;
        } catch (const LexicalError& e) {
            ++stats.files_skipped;
            if (log) *log << "warning: skipping " << file.generic_string() << " ("
                          << e.what() << ")\n";
        }
    }
    return stats;
}

void write_corpus_record(std::ostream& os, const DualSequence& seq) {
    json rec;
    rec["source_path"] = seq.source_path;
    rec["values"] = seq.values;
    json types = json::array();
    for (auto t : seq.types) types.push_back(std::string(tag_name(t)));
    rec["types"] = std::move(types);
    os << rec.dump() << '\n';
}

DualSequence corpus_record_from_json_line(const std::string& line) {
    json rec = json::parse(line);
    DualSequence seq;
    seq.source_path = rec.at("source_path").get<std::string>();
    seq.values = rec.at("values").get<std::vector<std::string>>();
    for (const auto& name : rec.at("types")) {
        TypeTag tag;
        if (!tag_from_name(name.get<std::string>(), tag))
            throw std::runtime_error("unknown type tag in corpus: " +
                                     name.get<std::string>());
        seq.types.push_back(tag);
    }
    if (seq.values.size() != seq.types.size())
        throw std::runtime_error("misaligned corpus record: " + seq.source_path);
    return seq;
}

std::vector<DualSequence> read_corpus(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<DualSequence> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(corpus_record_from_json_line(line));
    }
    return out;
}

void write_tag_sidecar(const std::filesystem::path& path) {
    json doc;
    doc["format"] = "dualfill-tags";
    doc["version"] = 1;
    json tags = json::array();
    for (int i = 0; i < kTypeTagCount; ++i) {
        auto tag = static_cast<TypeTag>(i);
        tags.push_back({{"id", i},
                        {"name", std::string(tag_name(tag))},
                        {"render", std::string(tag_render(tag))}});
    }
    doc["tags"] = std::move(tags);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace dualfill
