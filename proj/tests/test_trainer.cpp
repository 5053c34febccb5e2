#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualfill/checkpoint.hpp"
#include "dualfill/preprocess.hpp"
#include "dualfill/trainer.hpp"

using namespace dualfill;

namespace {

std::vector<DualSequence> toy_corpus(int files = 6) {
    std::vector<DualSequence> out;
    for (int k = 0; k < files; ++k) {
        auto path = std::string(DUALFILL_FIXTURE_DIR) + "/toy_corpus/file" +
                    (k < 10 ? "0" : "") + std::to_string(k) + ".py";
        std::ifstream in(path, std::ios::binary);
        REQUIRE(in.good());
        std::ostringstream ss;
        ss << in.rdbuf();
        out.push_back(preprocess_text(ss.str(), path));
    }
    return out;
}

BpeVocab toy_vocab(const std::vector<DualSequence>& corpus) {
    std::vector<std::vector<std::string>> values;
    for (const auto& seq : corpus) values.push_back(seq.values);
    return train_bpe(values, 160);
}

ModelConfig toy_model_config(int value_vocab) {
    ModelConfig cfg;
    cfg.layers = 1;
    cfg.model_dim = 16;
    cfg.heads = 2;
    cfg.ff_dim = 32;
    cfg.max_seq_len = 64;
    cfg.value_vocab = value_vocab;
    cfg.share_strength = 0.01;
    return cfg;
}

TrainConfig toy_train_config() {
    TrainConfig tc;
    tc.learning_rate = 1e-3;
    tc.epochs = 4;
    tc.batch_size = 4;
    tc.window = 32;
    tc.seed = 123;
    return tc;
}

}  // namespace

TEST_CASE("pick_task respects degenerate and stochastic probabilities") {
    SUBCASE("all mass on one task") {
        Rng rng(1);
        for (int i = 0; i < 50; ++i) CHECK(pick_task(rng, {1.0, 0.0, 0.0}) == Task::TTP);
    }
    SUBCASE("empirical frequencies within two points") {
        Rng rng(2024);
        int counts[3] = {0, 0, 0};
        const int draws = 10000;
        for (int i = 0; i < draws; ++i)
            ++counts[static_cast<int>(pick_task(rng, {0.2, 0.4, 0.4}))];
        CHECK(std::abs(counts[static_cast<int>(Task::TTP)] / double(draws) - 0.2) < 0.02);
        CHECK(std::abs(counts[static_cast<int>(Task::TVP)] / double(draws) - 0.4) < 0.02);
        CHECK(std::abs(counts[static_cast<int>(Task::SC)] / double(draws) - 0.4) < 0.02);
    }
    SUBCASE("fixed seed gives an identical sequence") {
        Rng a(7), b(7);
        for (int i = 0; i < 200; ++i)
            CHECK(pick_task(a, {0.2, 0.4, 0.4}) == pick_task(b, {0.2, 0.4, 0.4}));
    }
}

TEST_CASE("encode_corpus aligns streams and finds the EOS id") {
    auto corpus = toy_corpus(2);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    REQUIRE(enc.value_streams.size() == 2);
    CHECK(enc.value_eos_id == vocab.eos_id());
    CHECK(enc.type_vocab == kTypeTagCount + 1);
    // every statement leaves one EOS id in the value stream
    long eos_types = 0, eos_values = 0;
    for (auto t : corpus[0].types) eos_types += t == TypeTag::EOS;
    for (auto id : enc.value_streams[0]) eos_values += id == enc.value_eos_id;
    CHECK(eos_types == eos_values);
}

TEST_CASE("statement-completion batches end at EOS") {
    auto corpus = toy_corpus(2);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    TrainConfig tc = toy_train_config();
    Rng rng(5);
    auto batches = build_batches(enc, Task::SC, tc, rng);
    REQUIRE(!batches.empty());
    for (const auto& batch : batches)
        for (const auto& targets : batch.targets) {
            REQUIRE(!targets.empty());
            CHECK(targets.back() == enc.value_eos_id);
        }
}

TEST_CASE("zero epochs returns the initial checkpoint only") {
    auto corpus = toy_corpus(2);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    Checkpoint start{cfg, {}, init_params(cfg, 1), std::nullopt, std::nullopt};
    TrainConfig tc = toy_train_config();
    tc.epochs = 0;
    auto result = train(start, enc, tc);
    CHECK(result.history.empty());
    CHECK(result.checkpoint.meta.epoch == 0);
}

TEST_CASE("training is deterministic under a fixed seed") {
    auto corpus = toy_corpus(3);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    TrainConfig tc = toy_train_config();
    Checkpoint s1{cfg, {}, init_params(cfg, 9), std::nullopt, std::nullopt};
    Checkpoint s2{cfg, {}, init_params(cfg, 9), std::nullopt, std::nullopt};
    auto r1 = train(std::move(s1), enc, tc);
    auto r2 = train(std::move(s2), enc, tc);
    REQUIRE(r1.history.size() == r2.history.size());
    for (size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].task == r2.history[i].task);
        CHECK(r1.history[i].loss == r2.history[i].loss);  // bitwise
        CHECK(r1.history[i].sharing_penalty == r2.history[i].sharing_penalty);
    }
}

TEST_CASE("fine-tuning never draws the type task") {
    auto corpus = toy_corpus(3);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    TrainConfig tc = toy_train_config();
    tc.phase = Phase::FINETUNE;
    tc.epochs = 12;
    Checkpoint start{cfg, {}, init_params(cfg, 3), std::nullopt, std::nullopt};
    auto result = train(std::move(start), enc, tc);
    REQUIRE(result.history.size() == 12);
    for (const auto& rec : result.history) CHECK(rec.task != Task::TTP);
}

TEST_CASE("checkpoint file round-trips bit-exactly") {
    auto cfg = toy_model_config(64);
    Checkpoint ckpt{cfg, {5, Phase::FINETUNE, 42, false, 17},
                    init_params(cfg, 21), std::nullopt, std::nullopt};
    auto path = std::filesystem::temp_directory_path() / "dualfill_ckpt_test.bin";
    save_checkpoint(ckpt, path);
    auto loaded = load_checkpoint(path);
    CHECK(loaded.meta.epoch == 5);
    CHECK(loaded.meta.phase == Phase::FINETUNE);
    CHECK(loaded.meta.seed == 42);
    CHECK(loaded.meta.step == 17);
    for (Task task : {Task::TVP, Task::TTP, Task::SC}) {
        auto a = tensor_refs(ckpt.params.stack(task));
        auto b = tensor_refs(loaded.params.stack(task));
        REQUIRE(a.size() == b.size());
        for (size_t i = 0; i < a.size(); ++i)
            for (long k = 0; k < a[i].size(); ++k)
                CHECK(a[i].data[k] == b[i].data[k]);  // bit-exact
    }
    std::filesystem::remove(path);
    CHECK_THROWS(load_checkpoint(path));
}

TEST_CASE("resumed training equals the uninterrupted run") {
    auto corpus = toy_corpus(3);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    TrainConfig tc = toy_train_config();
    tc.epochs = 6;

    Checkpoint uninterrupted{cfg, {}, init_params(cfg, 77), std::nullopt, std::nullopt};
    auto full = train(std::move(uninterrupted), enc, tc);

    TrainConfig first_half = tc;
    first_half.epochs = 3;
    Checkpoint part{cfg, {}, init_params(cfg, 77), std::nullopt, std::nullopt};
    auto half = train(std::move(part), enc, first_half);

    auto path = std::filesystem::temp_directory_path() / "dualfill_resume_test.bin";
    save_checkpoint(half.checkpoint, path);
    auto resumed_start = load_checkpoint(path);
    auto resumed = train(std::move(resumed_start), enc, tc);
    std::filesystem::remove(path);

    REQUIRE(full.history.size() == 6);
    REQUIRE(resumed.history.size() == 3);
    for (size_t i = 0; i < 3; ++i) {
        CHECK(resumed.history[i].task == full.history[i + 3].task);
        CHECK(std::abs(resumed.history[i].loss - full.history[i + 3].loss) < 1e-6);
    }
}

TEST_CASE("divergence aborts with the last good checkpoint") {
    auto corpus = toy_corpus(2);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    TrainConfig tc = toy_train_config();
    tc.learning_rate = 1e9;  // guaranteed blow-up
    tc.epochs = 8;
    Checkpoint start{cfg, {}, init_params(cfg, 4), std::nullopt, std::nullopt};
    auto result = train(std::move(start), enc, tc);
    CHECK(result.diverged);
    // surviving parameters are finite
    for (const auto& ref : tensor_refs(result.checkpoint.params.tvp))
        for (long k = 0; k < ref.size(); ++k) CHECK(std::isfinite(ref.data[k]));
    CHECK(static_cast<int>(result.history.size()) == result.checkpoint.meta.epoch);
}

TEST_CASE("a few epochs reduce the training loss on the toy corpus") {
    auto corpus = toy_corpus(4);
    auto vocab = toy_vocab(corpus);
    auto enc = encode_corpus(corpus, vocab);
    auto cfg = toy_model_config(vocab.size());
    TrainConfig tc = toy_train_config();
    tc.task_probs = {0.0, 1.0, 0.0};  // isolate TVP for a clean signal
    tc.adaptive = true;
    tc.learning_rate = 3e-3;
    tc.epochs = 40;
    Checkpoint start{cfg, {}, init_params(cfg, 6), std::nullopt, std::nullopt};
    auto result = train(std::move(start), enc, tc);
    REQUIRE(result.history.size() == 40);
    CHECK(result.history.back().loss < 0.4 * result.history.front().loss);
}
