#pragma once

#include <functional>
#include <vector>

#include "dualfill/bpe.hpp"
#include "dualfill/checkpoint.hpp"
#include "dualfill/model.hpp"
#include "dualfill/rng.hpp"
#include "dualfill/token.hpp"

namespace dualfill {

struct TaskProbs {
    double ttp = 0.2;
    double tvp = 0.4;
    double sc = 0.4;
};

struct TrainConfig {
    double learning_rate = 1e-5;
    int epochs = 20;
    int batch_size = 8;
    int window = 128;  // training window length, capped by max_seq_len
    uint64_t seed = 1;
    TaskProbs task_probs;
    Phase phase = Phase::PRETRAIN;
    bool adaptive = false;   // adaptive-moment update instead of plain SGD
    int checkpoint_every = 0;  // epochs between snapshots; 0 = final only

    void validate() const;
};

// One task draw per epoch, by cumulative probability in TTP, TVP, SC order.
Task pick_task(Rng& rng, const TaskProbs& probs);

// Encoded per-file id streams for the three tasks.
struct EncodedCorpus {
    std::vector<std::vector<int>> value_streams;  // BPE ids
    std::vector<std::vector<int>> type_streams;   // tag ids
    int value_vocab = 0;
    int type_vocab = 0;
    int value_eos_id = -1;  // statement sentinel in the value streams
};

EncodedCorpus encode_corpus(const std::vector<DualSequence>& sequences,
                            const BpeVocab& vocab);

// Deterministic window extraction. TVP/TTP slide non-overlapping windows
// over each file; SC windows end at statement boundaries so the target span
// runs through EOS.
std::vector<Batch> build_batches(const EncodedCorpus& corpus, Task task,
                                 const TrainConfig& config, Rng& order_rng);

struct EpochRecord {
    int epoch = 0;
    Task task = Task::TVP;
    double loss = 0.0;
    double sharing_penalty = 0.0;
};

struct TrainResult {
    Checkpoint checkpoint;
    std::vector<EpochRecord> history;
    bool diverged = false;
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

// Runs config.epochs - checkpoint.meta.epoch further epochs. Per-epoch
// randomness derives from (seed, epoch), so resuming a checkpoint replays
// the same schedule. On a non-finite epoch loss the last good state is
// returned with `diverged` set.
TrainResult train(Checkpoint start, const EncodedCorpus& corpus,
                  const TrainConfig& config, const CheckpointSink& sink = {});

// Top-1 next-id accuracy of `task` over every window position; the
// memorization measure used by the overfitting check.
double top1_accuracy(const ModelParams& params, const ModelConfig& config,
                     const EncodedCorpus& corpus, Task task, int window);

}  // namespace dualfill
