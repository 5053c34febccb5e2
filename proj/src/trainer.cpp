#include "dualfill/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dualfill {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("train: learning_rate must be positive");
    if (epochs < 0) throw std::invalid_argument("train: epochs must be non-negative");
    if (batch_size < 1) throw std::invalid_argument("train: batch_size must be positive");
    if (window < 2) throw std::invalid_argument("train: window must be at least 2");
    double sum = task_probs.ttp + task_probs.tvp + task_probs.sc;
    if (task_probs.ttp < 0 || task_probs.tvp < 0 || task_probs.sc < 0 ||
        std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument("train: task probabilities must be >= 0 and sum to 1");
}

Task pick_task(Rng& rng, const TaskProbs& probs) {
    double u = rng.uniform01();
    if (u < probs.ttp) return Task::TTP;
    if (u < probs.ttp + probs.tvp) return Task::TVP;
    return Task::SC;
}

EncodedCorpus encode_corpus(const std::vector<DualSequence>& sequences,
                            const BpeVocab& vocab) {
    EncodedCorpus out;
    out.value_vocab = vocab.size();
    out.type_vocab = kTypeTagCount + 1;
    out.value_eos_id = vocab.eos_id();
    out.value_streams.reserve(sequences.size());
    out.type_streams.reserve(sequences.size());
    for (const auto& seq : sequences) {
        std::vector<int> values;
        std::vector<int> types;
        types.reserve(seq.size());
        for (size_t i = 0; i < seq.size(); ++i) {
            for (int id : encode(vocab, seq.values[i])) values.push_back(id);
            types.push_back(static_cast<int>(seq.types[i]));
        }
        out.value_streams.push_back(std::move(values));
        out.type_streams.push_back(std::move(types));
    }
    return out;
}

namespace {

struct Window {
    size_t file = 0;
    size_t begin = 0;  // first context position
    size_t end = 0;    // one past last context position
};

// Non-overlapping windows covering each stream; a tail shorter than the
// window is kept as long as it still has one target.
std::vector<Window> sliding_windows(const std::vector<std::vector<int>>& streams,
                                    size_t window) {
    std::vector<Window> out;
    for (size_t f = 0; f < streams.size(); ++f) {
        size_t n = streams[f].size();
        for (size_t start = 0; start + 2 <= n; start += window)
            out.push_back({f, start, std::min(start + window, n - 1)});
    }
    return out;
}

// One window per statement, ending exactly at its EOS id.
std::vector<Window> statement_windows(const std::vector<std::vector<int>>& streams,
                                      int eos_id, size_t window) {
    std::vector<Window> out;
    for (size_t f = 0; f < streams.size(); ++f) {
        const auto& s = streams[f];
        for (size_t e = 1; e < s.size(); ++e) {
            if (s[e] != eos_id) continue;
            size_t begin = e >= window ? e - window : 0;
            out.push_back({f, begin, e});
        }
    }
    return out;
}

const std::vector<std::vector<int>>& streams_for(const EncodedCorpus& corpus, Task task) {
    return task == Task::TTP ? corpus.type_streams : corpus.value_streams;
}

}  // namespace

std::vector<Batch> build_batches(const EncodedCorpus& corpus, Task task,
                                 const TrainConfig& config, Rng& order_rng) {
    const auto& streams = streams_for(corpus, task);
    size_t window = static_cast<size_t>(config.window);

    std::vector<Window> windows;
    if (task == Task::SC)
        windows = statement_windows(streams, corpus.value_eos_id, window);
    else
        windows = sliding_windows(streams, window);

    // deterministic order shuffle
    for (size_t i = windows.size(); i > 1; --i)
        std::swap(windows[i - 1], windows[order_rng.below(i)]);

    std::vector<Batch> batches;
    Batch current;
    current.task = task;
    for (const auto& w : windows) {
        const auto& s = streams[w.file];
        std::vector<int> context(s.begin() + static_cast<long>(w.begin),
                                 s.begin() + static_cast<long>(w.end));
        std::vector<int> targets(s.begin() + static_cast<long>(w.begin) + 1,
                                 s.begin() + static_cast<long>(w.end) + 1);
        current.context.push_back(std::move(context));
        current.targets.push_back(std::move(targets));
        if (static_cast<int>(current.context.size()) == config.batch_size) {
            batches.push_back(std::move(current));
            current = Batch{};
            current.task = task;
        }
    }
    if (!current.context.empty()) batches.push_back(std::move(current));
    return batches;
}

namespace {

// Alternate training updates the active task's stack only; its gradient
// already carries the penalty pull toward the other stacks, which stay
// frozen for the step.
void sgd_update(ModelParams& params, const ModelParams& grads, double lr, Task task) {
    auto p = tensor_refs(params.stack(task));
    auto g = tensor_refs(grads.stack(task));
    for (size_t i = 0; i < p.size(); ++i)
        for (long k = 0; k < p[i].size(); ++k) p[i].data[k] -= lr * g[i].data[k];
}

void adam_update(ModelParams& params, const ModelParams& grads, ModelParams& m1,
                 ModelParams& m2, long step, double lr, Task task) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    auto p = tensor_refs(params.stack(task));
    auto g = tensor_refs(grads.stack(task));
    auto a = tensor_refs(m1.stack(task));
    auto b = tensor_refs(m2.stack(task));
    for (size_t i = 0; i < p.size(); ++i)
        for (long k = 0; k < p[i].size(); ++k) {
            double grad = g[i].data[k];
            a[i].data[k] = beta1 * a[i].data[k] + (1.0 - beta1) * grad;
            b[i].data[k] = beta2 * b[i].data[k] + (1.0 - beta2) * grad * grad;
            double mh = a[i].data[k] / c1;
            double vh = b[i].data[k] / c2;
            p[i].data[k] -= lr * mh / (std::sqrt(vh) + eps);
        }
}

}  // namespace

TrainResult train(Checkpoint start, const EncodedCorpus& corpus,
                  const TrainConfig& config, const CheckpointSink& sink) {
    config.validate();
    start.config.validate();
    if (config.window > start.config.max_seq_len)
        throw std::invalid_argument("train: window exceeds max_seq_len");
    if (corpus.value_vocab > start.config.value_vocab)
        throw std::invalid_argument("train: corpus vocabulary exceeds model vocabulary");

    TrainResult result;
    result.checkpoint = std::move(start);
    Checkpoint& ckpt = result.checkpoint;
    ckpt.meta.phase = config.phase;
    ckpt.meta.adaptive = config.adaptive;
    if (config.adaptive && !ckpt.moment1) {
        ckpt.moment1 = make_params(ckpt.config);
        ckpt.moment2 = make_params(ckpt.config);
    }

    TaskProbs probs = config.task_probs;
    if (config.phase == Phase::FINETUNE) {
        // the type task is pretraining-only
        double rest = probs.tvp + probs.sc;
        if (rest <= 0.0) throw std::invalid_argument("train: fine-tune needs TVP/SC mass");
        probs = {0.0, probs.tvp / rest, probs.sc / rest};
    }

    Rng root(config.seed);
    ModelParams last_good = ckpt.params;
    auto last_good_meta = ckpt.meta;

    for (int epoch = ckpt.meta.epoch; epoch < config.epochs; ++epoch) {
        Rng epoch_rng = root.fork(static_cast<uint64_t>(epoch) + 1);
        Task task = pick_task(epoch_rng, probs);
        auto batches = build_batches(corpus, task, config, epoch_rng);

        double loss_sum = 0.0;
        long loss_count = 0;
        for (auto& batch : batches) {
            auto probs_out = forward(ckpt.params, ckpt.config, batch);
            double loss = task_loss(probs_out, batch.targets);
            long count = 0;
            for (const auto& row : batch.targets)
                for (int t : row) count += t >= 0;
            loss_sum += loss * static_cast<double>(count);
            loss_count += count;

            auto grads = backward(ckpt.params, ckpt.config, batch, config.phase,
                                  ckpt.config.share_strength);
            ++ckpt.meta.step;
            if (config.adaptive)
                adam_update(ckpt.params, grads, *ckpt.moment1, *ckpt.moment2,
                            ckpt.meta.step, config.learning_rate, task);
            else
                sgd_update(ckpt.params, grads, config.learning_rate, task);
        }

        double epoch_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        double penalty = sharing_penalty(ckpt.params, ckpt.config.share_strength);
        if (!std::isfinite(epoch_loss) || !std::isfinite(penalty)) {
            ckpt.params = std::move(last_good);
            ckpt.meta = last_good_meta;
            result.diverged = true;
            return result;
        }

        ckpt.meta.epoch = epoch + 1;
        result.history.push_back({epoch, task, epoch_loss, penalty});
        last_good = ckpt.params;
        last_good_meta = ckpt.meta;

        if (sink && config.checkpoint_every > 0 &&
            (epoch + 1) % config.checkpoint_every == 0)
            sink(ckpt);
    }
    if (sink) sink(ckpt);
    return result;
}

double top1_accuracy(const ModelParams& params, const ModelConfig& config,
                     const EncodedCorpus& corpus, Task task, int window) {
    const auto& streams = streams_for(corpus, task);
    long hits = 0, total = 0;
    for (const auto& s : streams) {
        for (size_t start = 0; start + 2 <= s.size();
             start += static_cast<size_t>(window)) {
            size_t end = std::min(start + static_cast<size_t>(window), s.size() - 1);
            Batch batch;
            batch.task = task;
            batch.context.emplace_back(s.begin() + static_cast<long>(start),
                                       s.begin() + static_cast<long>(end));
            batch.targets.emplace_back(s.begin() + static_cast<long>(start) + 1,
                                       s.begin() + static_cast<long>(end) + 1);
            auto probs = forward(params, config, batch);
            for (long t = 0; t < probs[0].rows(); ++t) {
                long best = 0;
                probs[0].row(t).maxCoeff(&best);
                hits += best == batch.targets[0][static_cast<size_t>(t)];
                ++total;
            }
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace dualfill
