#pragma once

#include <memory>
#include <string>
#include <vector>

#include "dualfill/bpe.hpp"
#include "dualfill/model.hpp"

namespace dualfill {

// One ranked completion candidate as consumed by the re-ranker.
struct Prediction {
    std::string token;
    TypeTag type = TypeTag::NAME;
    double probability = 0.0;
};

// Next-id distribution abstraction; the transformer stacks implement it, and
// tests drive the beam with hand-built transition tables.
class SequenceModel {
public:
    virtual ~SequenceModel() = default;
    virtual int vocab_size() const = 0;
    // log P(next id | context), one entry per vocabulary id
    virtual Vec next_logprobs(const std::vector<int>& context) const = 0;
};

// Read-only adapter over one frozen task stack. Contexts longer than
// max_seq_len are truncated from the left.
class StackSequenceModel : public SequenceModel {
public:
    StackSequenceModel(const ModelParams& params, const ModelConfig& config, Task task)
        : params_(params), config_(config), task_(task) {}
    int vocab_size() const override { return config_.vocab_for(task_); }
    Vec next_logprobs(const std::vector<int>& context) const override;

private:
    const ModelParams& params_;
    const ModelConfig& config_;
    Task task_;
};

struct Completion {
    std::vector<std::string> tokens;  // whole token values, EOS excluded
    double probability = 0.0;         // product of step probabilities
    enum class Terminated { EOS, LENGTH_CAP } terminated_by = Terminated::EOS;
};

// Beam-search instrumentation: candidate expansions per step never exceed
// beam width times vocabulary size.
struct BeamStats {
    long steps = 0;
    long max_step_expansions = 0;
};

// Highest-scoring statement continuation: grows subword ids, scoring by sum
// of log probabilities, until EOS or `max_tokens` whole tokens.
Completion complete_statement(const SequenceModel& model, const BpeVocab& vocab,
                              const std::vector<int>& context, int max_tokens = 13,
                              int beam_width = 5, BeamStats* stats = nullptr);

// Top-k next whole-token candidates with probabilities, descending.
std::vector<Prediction> next_token_candidates(const SequenceModel& model,
                                              const BpeVocab& vocab,
                                              const std::vector<int>& context,
                                              int k = 10, BeamStats* stats = nullptr);

// Full dual-channel prediction: value candidates from the TVP stack with the
// TTP stack's top type tag attached.
std::vector<Prediction> next_token(const ModelParams& params, const ModelConfig& config,
                                   const BpeVocab& vocab,
                                   const std::vector<int>& value_context,
                                   const std::vector<int>& type_context, int k = 10);

// Statement completion with the SC stack.
Completion complete_statement(const ModelParams& params, const ModelConfig& config,
                              const BpeVocab& vocab,
                              const std::vector<int>& value_context,
                              int max_tokens = 13, int beam_width = 5);

}  // namespace dualfill
