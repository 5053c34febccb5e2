#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "dualfill/rng.hpp"
#include "dualfill/token.hpp"

namespace dualfill {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Task : uint8_t { TVP, TTP, SC };
enum class Phase : uint8_t { PRETRAIN, FINETUNE };

std::string_view task_name(Task task);
std::string_view phase_name(Phase phase);
bool task_from_name(std::string_view name, Task& out);
bool phase_from_name(std::string_view name, Phase& out);

struct ModelConfig {
    int layers = 4;
    int model_dim = 256;
    int heads = 4;
    int ff_dim = 1024;
    int max_seq_len = 2048;
    int value_vocab = 8192;
    int type_vocab = kTypeTagCount + 1;  // closed tag set plus a pad id
    double share_strength = 0.01;        // soft-sharing coefficient

    int vocab_for(Task task) const {
        return task == Task::TTP ? type_vocab : value_vocab;
    }
    int type_pad_id() const { return type_vocab - 1; }
    void validate() const;  // throws std::invalid_argument
};

struct LayerNormParams {
    Vec gain, bias;
};

struct AttentionParams {
    Mat wq, wk, wv, wo;  // model_dim x model_dim
    Vec bq, bk, bv, bo;
};

struct MlpParams {
    Mat w1;  // model_dim x ff_dim
    Vec b1;
    Mat w2;  // ff_dim x model_dim
    Vec b2;
};

struct BlockParams {
    LayerNormParams ln1;
    AttentionParams attn;
    LayerNormParams ln2;
    MlpParams mlp;
};

// One task's decoder: embeddings, L blocks, final normalization. The token
// embedding is tied with the output projection.
struct StackParams {
    Mat token_embedding;     // vocab x model_dim
    Mat position_embedding;  // max_seq_len x model_dim
    std::vector<BlockParams> blocks;
    LayerNormParams final_norm;
};

struct ModelParams {
    StackParams tvp, ttp, sc;

    StackParams& stack(Task task);
    const StackParams& stack(Task task) const;
};

// Flat view of every tensor in a stack, in a stable order. `coupled` marks
// transformer-block parameters, the set tied together by the sharing
// penalty (embeddings and final norm are excluded).
struct TensorRef {
    std::string name;
    double* data;
    long rows, cols;
    bool coupled;

    long size() const { return rows * cols; }
};

std::vector<TensorRef> tensor_refs(StackParams& stack);
std::vector<TensorRef> tensor_refs(const StackParams& stack);

// Zero-filled parameter set with the shapes of `config`; doubles as the
// gradient holder.
StackParams make_stack(const ModelConfig& config, int vocab);
ModelParams make_params(const ModelConfig& config);

// Scaled-normal initialization (std 0.02); biases zero, norm gains one.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

// One training/eval window per row; targets are the context shifted left by
// one, with negative entries excluded from the loss.
struct Batch {
    std::vector<std::vector<int>> context;
    std::vector<std::vector<int>> targets;
    Task task = Task::TVP;
};

// Next-token distributions, one T x vocab matrix per batch row. Attention is
// causal; every row of every matrix sums to 1.
std::vector<Mat> forward(const ModelParams& params, const ModelConfig& config,
                         const Batch& batch);

// Pre-softmax scores, same shape as forward(); the reference tests pin these.
std::vector<Mat> forward_logits(const ModelParams& params, const ModelConfig& config,
                                const Batch& batch);

// Mean negative log-likelihood over unmasked target positions.
double task_loss(const std::vector<Mat>& probabilities,
                 const std::vector<std::vector<int>>& targets);

// Joint objective: |min| of the active task losses for the phase.
double joint_loss(double loss_tvp, double loss_ttp, double loss_sc, Phase phase);

struct JointLossReport {
    double value = 0.0;
    Task argmin = Task::TVP;
    double sum = 0.0;  // diagnostic companion to the min composition
};
JointLossReport joint_loss_report(double loss_tvp, double loss_ttp, double loss_sc,
                                  Phase phase);

// lambda * sum over stack pairs of squared distance between corresponding
// transformer-block parameters.
double sharing_penalty(const ModelParams& params, double lambda);

// Gradients of [batch-task cross entropy + sharing penalty] for the stacks
// involved in `phase` (all three when pretraining, TVP/SC when fine-tuning).
ModelParams backward(const ModelParams& params, const ModelConfig& config,
                     const Batch& batch, Phase phase, double lambda);

// Log-probabilities of the next token given one context row (last position
// only); the building block the decoder uses.
Vec next_token_logprobs(const ModelParams& params, const ModelConfig& config,
                        Task task, const std::vector<int>& context);

// Embedding-free run of one stack's trunk (blocks plus final norm) over an
// externally assembled input row. Lets model variants feed concatenated or
// otherwise custom representations and attach their own output heads.
class TrunkRun {
public:
    TrunkRun(const StackParams& stack, const ModelConfig& config, Mat h0);
    TrunkRun(TrunkRun&&) noexcept;
    ~TrunkRun();

    // normalized final activations, T x model_dim
    const Mat& activations() const;

    // propagates d(loss)/d(activations); accumulates block and final-norm
    // gradients into `grads` and returns d(loss)/d(h0)
    Mat backward(const Mat& dactivations, StackParams& grads) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace dualfill
