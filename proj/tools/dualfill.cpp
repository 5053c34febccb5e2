// Command-line front end binding the pipeline stages:
// preprocess -> train-bpe -> corpus -> train -> complete -> evaluate.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "dualfill/ablation.hpp"
#include "dualfill/checkpoint.hpp"
#include "dualfill/corpus.hpp"
#include "dualfill/decode.hpp"
#include "dualfill/evalkit.hpp"
#include "dualfill/preprocess.hpp"
#include "dualfill/rerank.hpp"
#include "dualfill/trainer.hpp"
#include "dualfill/version.hpp"

namespace fs = std::filesystem;
using namespace dualfill;
using nlohmann::json;

namespace {

bool quiet_logs() {
    const char* level = std::getenv("DUALFILL_LOG");
    return level != nullptr && std::string_view(level) == "quiet";
}

std::ostream& info() {
    static std::ofstream null_sink;
    if (quiet_logs()) {
        null_sink.setstate(std::ios::badbit);
        return null_sink;
    }
    return std::cerr;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Every artifact gets a sidecar with the resolved settings and tool version,
// so a run can be reproduced from the artifact alone.
void write_provenance(const fs::path& artifact, const std::string& command,
                      const json& settings) {
    json doc;
    doc["format"] = "dualfill-run";
    doc["tool_version"] = kToolVersion;
    doc["command"] = command;
    doc["settings"] = settings;
    std::ofstream out(artifact.string() + ".run.json", std::ios::binary);
    if (out) out << doc.dump(2) << '\n';
}

json model_config_json(const ModelConfig& m) {
    return {{"layers", m.layers},         {"model_dim", m.model_dim},
            {"heads", m.heads},           {"ff_dim", m.ff_dim},
            {"max_seq_len", m.max_seq_len}, {"value_vocab", m.value_vocab},
            {"type_vocab", m.type_vocab}, {"share_strength", m.share_strength}};
}

// settings file layer: values below flags and environment
struct FileDefaults {
    json doc;

    void load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open config " + path);
        doc = json::parse(in);
    }
    template <typename T>
    void apply(const char* key, T& value) const {
        if (doc.contains(key)) value = doc.at(key).get<T>();
    }
    template <typename T>
    void apply_nested(const char* group, const char* key, T& value) const {
        if (doc.contains(group) && doc.at(group).contains(key))
            value = doc.at(group).at(key).get<T>();
    }
};

std::vector<DualSequence> filtered_corpus(const std::string& corpus_path,
                                          const std::string& manifest_path,
                                          Split wanted) {
    auto sequences = read_corpus(corpus_path);
    if (manifest_path.empty()) return sequences;
    auto manifest = load_manifest(manifest_path);
    std::set<std::string> keep;
    for (const auto& e : manifest.files)
        if (e.split == wanted) keep.insert(e.path);
    std::vector<DualSequence> out;
    for (auto& seq : sequences)
        if (keep.count(seq.source_path)) out.push_back(std::move(seq));
    return out;
}

std::vector<std::vector<std::string>> value_channels(
    const std::vector<DualSequence>& sequences) {
    std::vector<std::vector<std::string>> out;
    out.reserve(sequences.size());
    for (const auto& seq : sequences) out.push_back(seq.values);
    return out;
}

// trailing EOS and dedents are artifacts of treating the cursor as EOF
void trim_cursor_tail(std::vector<LexedToken>& tokens) {
    while (!tokens.empty() && (tokens.back().record.type == TypeTag::DEDENT ||
                               tokens.back().record.type == TypeTag::EOS))
        tokens.pop_back();
    if (!tokens.empty()) tokens.back().last_in_statement = false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dualfill: dual-channel code completion pipeline"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand

    std::string config_path;
    app.add_option("--config", config_path, "JSON settings file (below flags and env)")
        ->expected(1);

    FileDefaults file;
    // the config file must land before other options parse
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string_view(argv[i]) == "--config") file.load(argv[i + 1]);

    uint64_t seed = 1;
    file.apply("seed", seed);
    app.add_option("--seed", seed, "root seed for all randomness")
        ->envname("DUALFILL_SEED");

    ModelConfig model;
    TrainConfig train_cfg;
    file.apply_nested("model", "layers", model.layers);
    file.apply_nested("model", "model_dim", model.model_dim);
    file.apply_nested("model", "heads", model.heads);
    file.apply_nested("model", "ff_dim", model.ff_dim);
    file.apply_nested("model", "max_seq_len", model.max_seq_len);
    file.apply_nested("model", "share_strength", model.share_strength);
    file.apply_nested("train", "learning_rate", train_cfg.learning_rate);
    file.apply_nested("train", "epochs", train_cfg.epochs);
    file.apply_nested("train", "batch_size", train_cfg.batch_size);
    file.apply_nested("train", "window", train_cfg.window);
    file.apply_nested("train", "adaptive", train_cfg.adaptive);

    int exit_code = 0;

    // ---------------------------------------------------------------- preprocess
    auto* preprocess_cmd =
        app.add_subcommand("preprocess", "convert source files to dual-channel records");
    std::string pre_in, pre_out, pre_tags;
    bool keep_errors = false;
    preprocess_cmd->add_option("--in", pre_in, "input directory")->required();
    preprocess_cmd->add_option("--out", pre_out, "output corpus (one record per line)")
        ->required();
    preprocess_cmd->add_flag("--keep-errors", keep_errors,
                             "keep files with recoverable lexical errors");
    preprocess_cmd->add_option("--tags", pre_tags, "tag enumeration sidecar path");
    preprocess_cmd->callback([&] {
        auto stats = preprocess_directory(pre_in, pre_out, keep_errors, &std::cerr);
        fs::path tags = pre_tags.empty() ? fs::path(pre_out + ".tags.json") : fs::path(pre_tags);
        write_tag_sidecar(tags);
        write_provenance(pre_out, "preprocess",
                         {{"in", pre_in},
                          {"out", pre_out},
                          {"keep_errors", keep_errors},
                          {"tags", tags.string()},
                          {"seed", seed}});
        info() << "preprocessed " << stats.files_ok << " files ("
               << stats.files_skipped << " skipped)\n";
    });

    // ----------------------------------------------------------------- train-bpe
    auto* bpe_cmd = app.add_subcommand("train-bpe", "train the subword vocabulary");
    std::string bpe_in, bpe_out;
    int bpe_size = 8192;
    bpe_cmd->add_option("--in", bpe_in, "preprocessed corpus")->required();
    bpe_cmd->add_option("--size", bpe_size, "total vocabulary size");
    bpe_cmd->add_option("--out", bpe_out, "vocabulary file")->required();
    bpe_cmd->callback([&] {
        auto sequences = read_corpus(bpe_in);
        auto vocab = train_bpe(value_channels(sequences), bpe_size);
        save_vocab(vocab, bpe_out);
        write_provenance(bpe_out, "train-bpe",
                         {{"in", bpe_in}, {"size", bpe_size}, {"seed", seed}});
        info() << "vocabulary: " << vocab.size() << " entries, " << vocab.merges.size()
               << " merges\n";
    });

    // -------------------------------------------------------------------- corpus
    auto* corpus_cmd = app.add_subcommand("corpus", "manifest management");
    corpus_cmd->require_subcommand(1);

    auto* dedup_cmd = corpus_cmd->add_subcommand("dedup", "drop exact duplicates");
    std::string dedup_in, dedup_out;
    dedup_cmd->add_option("--in", dedup_in, "source directory")->required();
    dedup_cmd->add_option("--out", dedup_out, "manifest file")->required();
    dedup_cmd->callback([&] {
        std::vector<fs::path> files;
        for (const auto& entry : fs::recursive_directory_iterator(dedup_in))
            if (entry.is_regular_file() && entry.path().extension() == ".py")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        auto manifest = deduplicate_files(files);
        save_manifest(manifest, dedup_out);
        write_provenance(dedup_out, "corpus dedup",
                         {{"in", dedup_in}, {"seed", seed}});
        info() << "kept " << manifest.files.size() << " of " << files.size()
               << " files\n";
    });

    auto* split_cmd = corpus_cmd->add_subcommand("split", "assign train/eval splits");
    std::string split_manifest, split_out;
    double frac_finetune = 0.9, frac_eval = 0.1;
    split_cmd->add_option("--manifest", split_manifest, "input manifest")->required();
    split_cmd->add_option("--finetune", frac_finetune, "fine-tune fraction");
    split_cmd->add_option("--eval", frac_eval, "evaluation fraction");
    split_cmd->add_option("--out", split_out, "output manifest")->required();
    split_cmd->callback([&] {
        auto manifest = load_manifest(split_manifest);
        manifest = split(std::move(manifest), {frac_finetune, frac_eval}, seed);
        save_manifest(manifest, split_out);
        write_provenance(split_out, "corpus split",
                         {{"manifest", split_manifest},
                          {"finetune", frac_finetune},
                          {"eval", frac_eval},
                          {"seed", seed}});
    });

    auto* stats_cmd = corpus_cmd->add_subcommand("stats", "corpus statistics");
    std::string stats_corpus, stats_manifest, stats_out;
    stats_cmd->add_option("--corpus", stats_corpus, "preprocessed corpus")->required();
    stats_cmd->add_option("--manifest", stats_manifest, "manifest (optional)");
    stats_cmd->add_option("--out", stats_out, "write statistics JSON here");
    stats_cmd->callback([&] {
        auto sequences = read_corpus(stats_corpus);
        CorpusManifest manifest;
        if (!stats_manifest.empty()) manifest = load_manifest(stats_manifest);
        auto stats = compute_stats(manifest, sequences);
        std::cout << "files:          " << stats.file_count << "\n"
                  << "statements:     " << stats.loc << "\n"
                  << "unique tokens:  " << stats.unique_tokens << "\n"
                  << "unique types:   " << stats.unique_types << "\n"
                  << "stmt length:    mean " << stats.statement_length.mean << ", median "
                  << stats.statement_length.median << ", max "
                  << stats.statement_length.max << "\n";
        if (!stats_out.empty()) {
            json doc = {{"format", "dualfill-stats"},
                        {"version", 1},
                        {"file_count", stats.file_count},
                        {"loc", stats.loc},
                        {"unique_tokens", stats.unique_tokens},
                        {"unique_types", stats.unique_types},
                        {"statement_length",
                         {{"mean", stats.statement_length.mean},
                          {"median", stats.statement_length.median},
                          {"max", stats.statement_length.max}}}};
            std::ofstream out(stats_out, std::ios::binary);
            out << doc.dump(2) << '\n';
            write_provenance(stats_out, "corpus stats",
                             {{"corpus", stats_corpus}, {"seed", seed}});
        }
    });

    // --------------------------------------------------------------------- train
    auto* train_cmd = app.add_subcommand("train", "run a training phase");
    std::string train_phase = "pretrain", train_corpus_path, train_vocab_path;
    std::string train_manifest_path, resume_path, ckpt_out = "checkpoint.bin";
    std::string history_out;
    int checkpoint_every = 0;
    train_cmd->add_option("--phase", train_phase, "pretrain or finetune")
        ->check(CLI::IsMember({"pretrain", "finetune"}));
    train_cmd->add_option("--corpus", train_corpus_path, "preprocessed corpus")
        ->required();
    train_cmd->add_option("--vocab", train_vocab_path, "subword vocabulary")->required();
    train_cmd->add_option("--manifest", train_manifest_path,
                          "manifest restricting the training split");
    train_cmd->add_option("--resume", resume_path, "checkpoint to continue from");
    train_cmd->add_option("--out", ckpt_out, "checkpoint output path");
    train_cmd->add_option("--history", history_out, "loss history (one record per line)");
    train_cmd->add_option("--epochs", train_cfg.epochs, "total epochs");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    train_cmd->add_option("--batch", train_cfg.batch_size, "windows per batch");
    train_cmd->add_option("--window", train_cfg.window, "training window length");
    train_cmd->add_flag("--adaptive", train_cfg.adaptive,
                        "adaptive-moment updates instead of plain SGD");
    train_cmd->add_option("--checkpoint-every", checkpoint_every,
                          "snapshot cadence in epochs");
    train_cmd->add_option("--layers", model.layers, "transformer layers per stack");
    train_cmd->add_option("--dim", model.model_dim, "model width");
    train_cmd->add_option("--heads", model.heads, "attention heads");
    train_cmd->add_option("--ff", model.ff_dim, "feed-forward width");
    train_cmd->add_option("--max-seq", model.max_seq_len, "maximum sequence length");
    train_cmd->add_option("--lambda", model.share_strength, "soft-sharing strength");
    train_cmd->callback([&] {
        Phase phase = train_phase == "finetune" ? Phase::FINETUNE : Phase::PRETRAIN;
        auto sequences = filtered_corpus(
            train_corpus_path, train_manifest_path,
            phase == Phase::FINETUNE ? Split::FINETUNE : Split::PRETRAIN);
        if (sequences.empty()) throw std::runtime_error("training corpus is empty");
        auto vocab = load_vocab(train_vocab_path);
        auto corpus = encode_corpus(sequences, vocab);

        train_cfg.phase = phase;
        train_cfg.seed = seed;
        train_cfg.checkpoint_every = checkpoint_every;

        Checkpoint start;
        if (!resume_path.empty()) {
            start = load_checkpoint(resume_path);
            if (phase == Phase::FINETUNE && start.meta.phase == Phase::PRETRAIN)
                start.meta.epoch = 0;  // fine-tuning restarts the epoch count
        } else {
            model.value_vocab = vocab.size();
            model.type_vocab = kTypeTagCount + 1;
            start = Checkpoint{model, {0, phase, seed, train_cfg.adaptive, 0},
                               init_params(model, seed), std::nullopt, std::nullopt};
        }

        auto result = train(std::move(start), corpus, train_cfg,
                            [&](const Checkpoint& snapshot) {
                                save_checkpoint(snapshot, ckpt_out);
                            });
        save_checkpoint(result.checkpoint, ckpt_out);
        write_provenance(ckpt_out, "train",
                         {{"phase", train_phase},
                          {"corpus", train_corpus_path},
                          {"vocab", train_vocab_path},
                          {"manifest", train_manifest_path},
                          {"resume", resume_path},
                          {"seed", seed},
                          {"epochs", train_cfg.epochs},
                          {"learning_rate", train_cfg.learning_rate},
                          {"batch_size", train_cfg.batch_size},
                          {"window", train_cfg.window},
                          {"adaptive", train_cfg.adaptive},
                          {"model", model_config_json(result.checkpoint.config)}});
        if (!history_out.empty()) {
            std::ofstream out(history_out, std::ios::binary);
            for (const auto& rec : result.history)
                out << json({{"epoch", rec.epoch},
                             {"task", std::string(task_name(rec.task))},
                             {"loss", rec.loss},
                             {"sharing_penalty", rec.sharing_penalty}})
                           .dump()
                    << '\n';
        }
        for (const auto& rec : result.history)
            info() << "epoch " << rec.epoch << " " << task_name(rec.task) << " loss "
                   << rec.loss << " penalty " << rec.sharing_penalty << "\n";
        if (result.diverged)
            throw std::runtime_error("training diverged; last good checkpoint written");
    });

    // ------------------------------------------------------------------ complete
    auto* complete_cmd = app.add_subcommand("complete", "complete at a cursor position");
    std::string comp_ckpt, comp_vocab, comp_file, comp_weights;
    int comp_line = 1, comp_col = 0, comp_beam = 5, comp_k = 10;
    bool comp_statement = false;
    complete_cmd->add_option("--checkpoint", comp_ckpt, "model checkpoint")->required();
    complete_cmd->add_option("--vocab", comp_vocab, "subword vocabulary")->required();
    complete_cmd->add_option("--file", comp_file, "source file")->required();
    complete_cmd->add_option("--line", comp_line, "cursor line (1-based)")->required();
    complete_cmd->add_option("--col", comp_col, "cursor column (0-based)")->required();
    complete_cmd->add_flag("--statement", comp_statement, "complete to end of statement");
    complete_cmd->add_option("--beam", comp_beam, "beam width");
    complete_cmd->add_option("--k", comp_k, "candidates to print");
    complete_cmd->add_option("--weights", comp_weights, "re-ranking weight table");
    complete_cmd->callback([&] {
        auto checkpoint = load_checkpoint(comp_ckpt);
        auto vocab = load_vocab(comp_vocab);

        std::string text = read_file(comp_file);
        std::istringstream lines(text);
        std::string prefix, line_text;
        for (int ln = 1; std::getline(lines, line_text); ++ln) {
            if (ln == comp_line) {
                prefix += line_text.substr(
                    0, std::min<size_t>(line_text.size(), static_cast<size_t>(comp_col)));
                break;
            }
            prefix += line_text;
            prefix += '\n';
        }
        if (prefix.empty()) throw std::runtime_error("empty completion context");

        auto marked = preprocess_tokens(prefix);
        trim_cursor_tail(marked);
        if (marked.empty()) throw std::runtime_error("empty completion context");
        auto seq = to_dual_sequence(marked, comp_file);

        std::vector<int> value_ctx;
        for (const auto& value : seq.values)
            for (int id : encode(vocab, value)) value_ctx.push_back(id);
        std::vector<int> type_ctx;
        for (auto t : seq.types) type_ctx.push_back(static_cast<int>(t));

        if (comp_statement) {
            auto completion = complete_statement(checkpoint.params, checkpoint.config,
                                                 vocab, value_ctx, 13, comp_beam);
            std::cout << "p=" << completion.probability << " ";
            for (const auto& tok : completion.tokens) std::cout << tok << ' ';
            std::cout << (completion.terminated_by == Completion::Terminated::EOS
                              ? "<end of statement>"
                              : "<length cap>")
                      << "\n";
        } else {
            auto predictions = next_token(checkpoint.params, checkpoint.config, vocab,
                                          value_ctx, type_ctx, comp_k);
            WeightTable weights = comp_weights.empty() ? WeightTable::defaults()
                                                       : load_weight_table(comp_weights);
            predictions = rerank(std::move(predictions), build_scope_index(marked), weights);
            for (const auto& p : predictions)
                std::cout << p.token << "\t" << tag_name(p.type) << "\t" << p.probability
                          << "\n";
        }
    });

    // ------------------------------------------------------------------ evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "run the evaluation tasks");
    std::string eval_ckpt, eval_vocab, eval_corpus_path, eval_manifest, eval_tasks =
        "tlp-a,tlp-b,tlp-c,tlp-d,slp";
    std::string eval_report = "report", eval_weights, eval_cardinal = "default";
    std::string eval_ns = "2..8";
    bool no_rerank = false;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--vocab", eval_vocab, "subword vocabulary")->required();
    eval_cmd->add_option("--corpus", eval_corpus_path, "preprocessed corpus")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "manifest selecting the EVAL split");
    eval_cmd->add_option("--tasks", eval_tasks, "comma-separated task list");
    eval_cmd->add_option("--n", eval_ns, "statement lengths, e.g. 2..8 or 4");
    eval_cmd->add_option("--report", eval_report, "report basename (.txt/.json added)");
    eval_cmd->add_option("--weights", eval_weights, "re-ranking weight table");
    eval_cmd->add_option("--cardinal", eval_cardinal,
                         "default | mine | path to a cardinal-set file");
    eval_cmd->add_flag("--no-rerank", no_rerank, "skip the re-ranking layer");
    eval_cmd->callback([&] {
        auto checkpoint = load_checkpoint(eval_ckpt);
        auto vocab = load_vocab(eval_vocab);
        auto sequences = filtered_corpus(eval_corpus_path, eval_manifest, Split::EVAL);
        if (sequences.empty()) throw std::runtime_error("evaluation corpus is empty");

        EvalOptions options;
        options.tasks.clear();
        std::stringstream task_stream(eval_tasks);
        std::string item;
        while (std::getline(task_stream, item, ',')) {
            EvalTask task;
            if (!eval_task_from_name(item, task))
                throw std::runtime_error("unknown task: " + item);
            options.tasks.push_back(task);
        }
        options.apply_rerank = !no_rerank;
        options.slp_ns.clear();
        auto dots = eval_ns.find("..");
        if (dots == std::string::npos) {
            options.slp_ns.push_back(std::stoi(eval_ns));
        } else {
            int lo = std::stoi(eval_ns.substr(0, dots));
            int hi = std::stoi(eval_ns.substr(dots + 2));
            for (int n = lo; n <= hi; ++n) options.slp_ns.push_back(n);
        }

        CardinalSet cardinal;
        if (eval_cardinal == "default")
            cardinal = CardinalSet::printed_defaults();
        else if (eval_cardinal == "mine")
            cardinal = mine_cardinal_points(sequences);
        else
            cardinal = load_cardinal(eval_cardinal);

        WeightTable weights = eval_weights.empty() ? WeightTable::defaults()
                                                   : load_weight_table(eval_weights);
        auto report =
            run_evaluation(checkpoint, vocab, sequences, cardinal, weights, options);
        std::cout << render_report(report);
        save_report(report, eval_report + ".txt", eval_report + ".json");
        write_provenance(eval_report + ".json", "evaluate",
                         {{"checkpoint", eval_ckpt},
                          {"vocab", eval_vocab},
                          {"corpus", eval_corpus_path},
                          {"manifest", eval_manifest},
                          {"tasks", eval_tasks},
                          {"n", eval_ns},
                          {"cardinal", eval_cardinal},
                          {"rerank", !no_rerank},
                          {"seed", seed}});
    });

    // ------------------------------------------------------------- mine-cardinal
    auto* mine_cmd = app.add_subcommand("mine-cardinal", "mine completion triggers");
    std::string mine_corpus, mine_out;
    double mine_threshold = 0.95;
    mine_cmd->add_option("--corpus", mine_corpus,
                         "preprocessed corpus (omit for the built-in list)");
    mine_cmd->add_option("--out", mine_out, "cardinal-set file");
    mine_cmd->add_option("--threshold", mine_threshold, "co-occurrence exclusion bound");
    mine_cmd->callback([&] {
        CardinalSet set;
        if (mine_corpus.empty()) {
            set = CardinalSet::printed_defaults();
        } else {
            MiningOptions options;
            options.cooccurrence_threshold = mine_threshold;
            set = mine_cardinal_points(read_corpus(mine_corpus), options);
        }
        std::cout << set.to_string() << "\n";
        if (!mine_out.empty()) {
            save_cardinal(set, mine_out);
            write_provenance(mine_out, "mine-cardinal",
                             {{"corpus", mine_corpus},
                              {"threshold", mine_threshold},
                              {"seed", seed}});
        }
    });

    // ------------------------------------------------------------------ ablation
    auto* ablation_cmd =
        app.add_subcommand("ablation", "compare the four model variants");
    std::string abl_corpus, abl_out = "ablation.json";
    int abl_vocab_size = 512;
    ablation_cmd->add_option("--corpus", abl_corpus, "preprocessed fixture corpus")
        ->required();
    ablation_cmd->add_option("--out", abl_out, "report file");
    ablation_cmd->add_option("--vocab-size", abl_vocab_size, "subword vocabulary size");
    ablation_cmd->add_option("--epochs", train_cfg.epochs, "epochs per variant");
    ablation_cmd->add_option("--lr", train_cfg.learning_rate, "learning rate");
    ablation_cmd->add_option("--batch", train_cfg.batch_size, "windows per batch");
    ablation_cmd->add_option("--window", train_cfg.window, "training window length");
    ablation_cmd->add_flag("--adaptive", train_cfg.adaptive,
                           "adaptive-moment updates instead of plain SGD");
    ablation_cmd->add_option("--layers", model.layers, "transformer layers per stack");
    ablation_cmd->add_option("--dim", model.model_dim, "model width");
    ablation_cmd->add_option("--heads", model.heads, "attention heads");
    ablation_cmd->add_option("--ff", model.ff_dim, "feed-forward width");
    ablation_cmd->add_option("--max-seq", model.max_seq_len, "maximum sequence length");
    ablation_cmd->add_option("--lambda", model.share_strength, "soft-sharing strength");
    ablation_cmd->callback([&] {
        auto sequences = read_corpus(abl_corpus);
        auto vocab = train_bpe(value_channels(sequences), abl_vocab_size);
        AblationOptions options;
        options.model = model;
        options.train = train_cfg;
        options.train.seed = seed;
        auto report = run_ablation(sequences, vocab, options);
        std::cout << render_ablation(report);
        save_ablation_report(report, abl_out);
        std::string error;
        if (!validate_ablation_report_file(abl_out, &error))
            throw std::runtime_error("report failed schema validation: " + error);
        write_provenance(abl_out, "ablation",
                         {{"corpus", abl_corpus},
                          {"vocab_size", abl_vocab_size},
                          {"epochs", train_cfg.epochs},
                          {"seed", seed},
                          {"model", model_config_json(model)}});
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::RequiredError& e) {
        std::string what = e.what();
        if (what.find("ubcommand") != std::string::npos) {
            // no or unknown subcommand: usage error
            std::cerr << "error: " << what << "\n\n" << app.help() << "\n";
            return 2;
        }
        std::cerr << "error: " << what << "\n";
        return 1;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
