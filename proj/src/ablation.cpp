#include "dualfill/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "dualfill/checkpoint.hpp"

namespace dualfill {

namespace {

// ---------------------------------------------------------------------------
// Hard-parameter-sharing variant: one shared trunk fed the concatenation
// x_i = [t_i, v_i] (type embedding in the upper half, value embedding in the
// lower half), with separate value/type output heads.
// ---------------------------------------------------------------------------

struct PairedStreams {
    std::vector<std::vector<int>> value_ids;  // per file, subword granularity
    std::vector<std::vector<int>> type_ids;   // aligned: element tag repeated
};

PairedStreams pair_streams(const std::vector<DualSequence>& sequences,
                           const BpeVocab& vocab) {
    PairedStreams out;
    for (const auto& seq : sequences) {
        std::vector<int> vids, tids;
        for (size_t i = 0; i < seq.size(); ++i) {
            for (int id : encode(vocab, seq.values[i])) {
                vids.push_back(id);
                tids.push_back(static_cast<int>(seq.types[i]));
            }
        }
        out.value_ids.push_back(std::move(vids));
        out.type_ids.push_back(std::move(tids));
    }
    return out;
}

struct AdamState {
    Mat m, v;
    explicit AdamState(const Mat& shape) : m(Mat::Zero(shape.rows(), shape.cols())),
                                           v(Mat::Zero(shape.rows(), shape.cols())) {}
};

void adam_step(Mat& param, const Mat& grad, AdamState& state, long step, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    param.array() -= lr * (state.m.array() / c1) /
                     ((state.v.array() / c2).sqrt() + eps);
}

class HardShareModel {
public:
    HardShareModel(const ModelConfig& config, int value_vocab, uint64_t seed)
        : config_(config),
          trunk_(make_stack(config, /*vocab=*/1)),
          half_(config.model_dim / 2) {
        if (config.model_dim % 2 != 0)
            throw std::invalid_argument("hard sharing needs an even model_dim");
        Rng rng(seed);
        auto fill = [&rng](Mat& m) {
            for (long c = 0; c < m.cols(); ++c)
                for (long r = 0; r < m.rows(); ++r) m(r, c) = rng.gaussian(0.0, 0.02);
        };
        value_in_ = Mat(value_vocab, half_);
        type_in_ = Mat(kTypeTagCount + 1, half_);
        position_ = Mat(config.max_seq_len, config.model_dim);
        value_head_ = Mat(value_vocab, config.model_dim);
        type_head_ = Mat(kTypeTagCount + 1, config.model_dim);
        fill(value_in_);
        fill(type_in_);
        fill(position_);
        fill(value_head_);
        fill(type_head_);
        ModelParams seeded = init_params(one_stack_config(config), seed);
        trunk_ = seeded.tvp;  // reuse the standard block initialization
        trunk_.token_embedding.setZero();
        trunk_.position_embedding.setZero();
    }

    Mat assemble(const std::vector<int>& vids, const std::vector<int>& tids) const {
        Mat h0(static_cast<long>(vids.size()), config_.model_dim);
        for (size_t t = 0; t < vids.size(); ++t) {
            h0.row(static_cast<long>(t)).head(half_) =
                type_in_.row(tids[t]);
            h0.row(static_cast<long>(t)).tail(half_) =
                value_in_.row(vids[t]);
            h0.row(static_cast<long>(t)) += position_.row(static_cast<long>(t));
        }
        return h0;
    }

    // next-id log-probabilities of the value head at the last position
    Vec value_logprobs(const std::vector<int>& vids, const std::vector<int>& tids) const {
        TrunkRun run(trunk_, config_, assemble(vids, tids));
        Eigen::RowVectorXd logits =
            run.activations().row(run.activations().rows() - 1) * value_head_.transpose();
        double mx = logits.maxCoeff();
        double lse = mx + std::log((logits.array() - mx).exp().sum());
        return (logits.array() - lse).transpose();
    }

    // one training step on a window; task true = value prediction
    double step(const std::vector<int>& vids, const std::vector<int>& tids,
                bool value_task, double lr) {
        const long T = static_cast<long>(vids.size()) - 1;
        std::vector<int> cv(vids.begin(), vids.end() - 1);
        std::vector<int> ct(tids.begin(), tids.end() - 1);
        TrunkRun run(trunk_, config_, assemble(cv, ct));
        const Mat& acts = run.activations();
        const Mat& head = value_task ? value_head_ : type_head_;

        Mat logits = acts * head.transpose();
        // row-wise softmax and mean NLL over the window
        double loss = 0.0;
        Mat dlogits(logits.rows(), logits.cols());
        for (long t = 0; t < T; ++t) {
            int target = value_task ? vids[static_cast<size_t>(t) + 1]
                                     : tids[static_cast<size_t>(t) + 1];
            double mx = logits.row(t).maxCoeff();
            Eigen::RowVectorXd p = (logits.row(t).array() - mx).exp();
            p /= p.sum();
            loss -= std::log(std::max(p(target), 1e-300));
            dlogits.row(t) = p / static_cast<double>(T);
            dlogits(t, target) -= 1.0 / static_cast<double>(T);
        }
        loss /= static_cast<double>(T);

        Mat dhead = dlogits.transpose() * acts;
        Mat dacts = dlogits * head;
        StackParams trunk_grads = make_stack(config_, 1);
        Mat dh0 = run.backward(dacts, trunk_grads);

        Mat dvalue_in = Mat::Zero(value_in_.rows(), half_);
        Mat dtype_in = Mat::Zero(type_in_.rows(), half_);
        Mat dposition = Mat::Zero(position_.rows(), position_.cols());
        for (long t = 0; t < T; ++t) {
            dtype_in.row(ct[static_cast<size_t>(t)]) += dh0.row(t).head(half_);
            dvalue_in.row(cv[static_cast<size_t>(t)]) += dh0.row(t).tail(half_);
            dposition.row(t) += dh0.row(t);
        }

        ++step_;
        ensure_states();
        adam_step(value_in_, dvalue_in, *s_value_in_, step_, lr);
        adam_step(type_in_, dtype_in, *s_type_in_, step_, lr);
        adam_step(position_, dposition, *s_position_, step_, lr);
        if (value_task)
            adam_step(value_head_, dhead, *s_value_head_, step_, lr);
        else
            adam_step(type_head_, dhead, *s_type_head_, step_, lr);

        auto refs = tensor_refs(trunk_);
        auto grefs = tensor_refs(trunk_grads);
        for (size_t i = 0; i < refs.size(); ++i) {
            if (!refs[i].coupled && refs[i].name.rfind("final_norm", 0) != 0)
                continue;  // unused embedding slots of the trunk stack
            Eigen::Map<Mat> param(refs[i].data, refs[i].rows, refs[i].cols);
            Eigen::Map<const Mat> grad(grefs[i].data, grefs[i].rows, grefs[i].cols);
            trunk_m_[i] = 0.9 * trunk_m_[i] + 0.1 * grad;
            trunk_v_[i] = 0.999 * trunk_v_[i] + 0.001 * grad.cwiseProduct(grad);
            double c1 = 1.0 - std::pow(0.9, static_cast<double>(step_));
            double c2 = 1.0 - std::pow(0.999, static_cast<double>(step_));
            param.array() -= lr * (trunk_m_[i].array() / c1) /
                             ((trunk_v_[i].array() / c2).sqrt() + 1e-8);
        }
        return loss;
    }

private:
    static ModelConfig one_stack_config(ModelConfig c) {
        c.value_vocab = 1;
        c.type_vocab = 1;
        return c;
    }
    void ensure_states() {
        if (!s_value_in_) {
            s_value_in_.emplace(value_in_);
            s_type_in_.emplace(type_in_);
            s_position_.emplace(position_);
            s_value_head_.emplace(value_head_);
            s_type_head_.emplace(type_head_);
            auto refs = tensor_refs(trunk_);
            for (auto& r : refs) {
                trunk_m_.emplace_back(Mat::Zero(r.rows, r.cols));
                trunk_v_.emplace_back(Mat::Zero(r.rows, r.cols));
            }
        }
    }

    ModelConfig config_;
    StackParams trunk_;
    long half_;
    Mat value_in_, type_in_, position_, value_head_, type_head_;
    long step_ = 0;
    std::optional<AdamState> s_value_in_, s_type_in_, s_position_, s_value_head_,
        s_type_head_;
    std::vector<Mat> trunk_m_, trunk_v_;
};

// rank of the target among the top-10 next ids; 0 = miss
int rank_of(const Vec& logprobs, int target) {
    int better = 0;
    double t = logprobs(target);
    for (long i = 0; i < logprobs.size(); ++i) {
        if (logprobs(i) > t || (logprobs(i) == t && i < target)) ++better;
    }
    return better < 10 ? better + 1 : 0;
}

struct Scored {
    double accuracy = 0.0;
    double mrr = 0.0;
};

template <typename LogprobFn>
Scored score_value_prediction(const EncodedCorpus& eval_corpus, int window,
                              const LogprobFn& logprobs_at) {
    long hits = 0, total = 0;
    double reciprocal = 0.0;
    for (size_t f = 0; f < eval_corpus.value_streams.size(); ++f) {
        const auto& vs = eval_corpus.value_streams[f];
        for (size_t pos = 1; pos < vs.size(); ++pos) {
            size_t begin = pos > static_cast<size_t>(window) ? pos - static_cast<size_t>(window) : 0;
            Vec lp = logprobs_at(f, begin, pos);
            int rank = rank_of(lp, vs[pos]);
            hits += rank == 1;
            if (rank >= 1) reciprocal += 1.0 / rank;
            ++total;
        }
    }
    Scored s;
    if (total > 0) {
        s.accuracy = static_cast<double>(hits) / static_cast<double>(total);
        s.mrr = reciprocal / static_cast<double>(total);
    }
    return s;
}

}  // namespace

AblationReport run_ablation(const std::vector<DualSequence>& sequences,
                            const BpeVocab& vocab, const AblationOptions& options) {
    if (sequences.size() < 2)
        throw std::invalid_argument("ablation: need at least two files");
    auto n_eval = std::max<size_t>(
        1, static_cast<size_t>(std::llround(options.eval_fraction *
                                            static_cast<double>(sequences.size()))));
    std::vector<DualSequence> train_seqs(sequences.begin(),
                                         sequences.end() - static_cast<long>(n_eval));
    std::vector<DualSequence> eval_seqs(sequences.end() - static_cast<long>(n_eval),
                                        sequences.end());
    auto train_corpus = encode_corpus(train_seqs, vocab);
    auto eval_corpus = encode_corpus(eval_seqs, vocab);

    ModelConfig model_config = options.model;
    model_config.value_vocab = vocab.size();

    AblationReport report;

    auto soft_variant = [&](const std::string& approach, const std::string& tasks,
                            TaskProbs probs, double lambda) {
        ModelConfig cfg = model_config;
        cfg.share_strength = lambda;
        TrainConfig tc = options.train;
        tc.task_probs = probs;
        Checkpoint start{cfg, {0, Phase::PRETRAIN, tc.seed, tc.adaptive, 0},
                         init_params(cfg, tc.seed), std::nullopt, std::nullopt};
        auto result = train(std::move(start), train_corpus, tc);
        const auto& params = result.checkpoint.params;
        auto scored = score_value_prediction(
            eval_corpus, options.train.window, [&](size_t f, size_t begin, size_t pos) {
                std::vector<int> ctx(eval_corpus.value_streams[f].begin() + static_cast<long>(begin),
                                     eval_corpus.value_streams[f].begin() + static_cast<long>(pos));
                return next_token_logprobs(params, cfg, Task::TVP, ctx);
            });
        report.rows.push_back({approach, tasks, scored.accuracy, scored.mrr});
    };

    // 1. plain single-task value model
    soft_variant("GPT-2 (single task)", "Value", {0.0, 1.0, 0.0}, 0.0);

    // 2. hard parameter sharing over the concatenated representation
    {
        auto paired_train = pair_streams(train_seqs, vocab);
        auto paired_eval = pair_streams(eval_seqs, vocab);
        HardShareModel hard(model_config, vocab.size(), options.train.seed);
        Rng root(options.train.seed);
        size_t window = static_cast<size_t>(options.train.window);
        for (int epoch = 0; epoch < options.train.epochs; ++epoch) {
            Rng erng = root.fork(static_cast<uint64_t>(epoch) + 1);
            bool value_task = erng.uniform01() < 0.5;
            for (size_t f = 0; f < paired_train.value_ids.size(); ++f) {
                const auto& vs = paired_train.value_ids[f];
                const auto& ts = paired_train.type_ids[f];
                for (size_t start = 0; start + 2 <= vs.size(); start += window) {
                    size_t end = std::min(start + window + 1, vs.size());
                    std::vector<int> wv(vs.begin() + static_cast<long>(start),
                                        vs.begin() + static_cast<long>(end));
                    std::vector<int> wt(ts.begin() + static_cast<long>(start),
                                        ts.begin() + static_cast<long>(end));
                    hard.step(wv, wt, value_task, options.train.learning_rate);
                }
            }
        }
        EncodedCorpus paired_eval_corpus;
        paired_eval_corpus.value_streams = paired_eval.value_ids;
        paired_eval_corpus.type_streams = paired_eval.type_ids;
        auto scored = score_value_prediction(
            paired_eval_corpus, options.train.window,
            [&](size_t f, size_t begin, size_t pos) {
                std::vector<int> cv(paired_eval.value_ids[f].begin() + static_cast<long>(begin),
                                    paired_eval.value_ids[f].begin() + static_cast<long>(pos));
                std::vector<int> ct(paired_eval.type_ids[f].begin() + static_cast<long>(begin),
                                    paired_eval.type_ids[f].begin() + static_cast<long>(pos));
                return hard.value_logprobs(cv, ct);
            });
        report.rows.push_back(
            {"MTL hard sharing", "Value, Type", scored.accuracy, scored.mrr});
    }

    // 3. soft sharing, two tasks
    soft_variant("MTL soft sharing", "Value, Type", {0.5, 0.5, 0.0},
                 options.model.share_strength);

    // 4. soft sharing, all three tasks
    soft_variant("MTL soft sharing", "Value, Type, Statement", {0.2, 0.4, 0.4},
                 options.model.share_strength);

    return report;
}

std::string render_ablation(const AblationReport& report) {
    std::ostringstream os;
    os << "Approach             Tasks                    Accuracy  MRR\n";
    for (const auto& row : report.rows) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%-20s %-24s %8.4f  %6.4f\n",
                      row.approach.c_str(), row.tasks.c_str(), row.accuracy, row.mrr);
        os << buf;
    }
    return os.str();
}

void save_ablation_report(const AblationReport& report,
                          const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "dualfill-ablation";
    doc["version"] = 1;
    doc["rows"] = nlohmann::json::array();
    for (const auto& row : report.rows)
        doc["rows"].push_back({{"approach", row.approach},
                               {"tasks", row.tasks},
                               {"accuracy", row.accuracy},
                               {"mrr", row.mrr}});
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

bool validate_ablation_report_file(const std::filesystem::path& path,
                                   std::string* error) {
    auto fail = [&](const std::string& why) {
        if (error) *error = why;
        return false;
    };
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail("cannot open report");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    if (doc.value("format", "") != "dualfill-ablation") return fail("wrong format tag");
    if (!doc.contains("version") || !doc["version"].is_number_integer())
        return fail("missing version");
    if (!doc.contains("rows") || !doc["rows"].is_array() || doc["rows"].size() != 4)
        return fail("expected exactly four variant rows");
    for (const auto& row : doc["rows"]) {
        if (!row.contains("approach") || !row["approach"].is_string())
            return fail("row missing approach");
        if (!row.contains("tasks") || !row["tasks"].is_string())
            return fail("row missing tasks");
        for (const char* key : {"accuracy", "mrr"}) {
            if (!row.contains(key) || !row[key].is_number())
                return fail(std::string("row missing ") + key);
            double v = row[key].get<double>();
            if (v < 0.0 || v > 1.0) return fail(std::string(key) + " out of range");
        }
    }
    return true;
}

}  // namespace dualfill
