#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dualfill/bpe.hpp"
#include "dualfill/checkpoint.hpp"
#include "dualfill/decode.hpp"
#include "dualfill/rerank.hpp"
#include "dualfill/token.hpp"

namespace dualfill {

enum class EvalTask : uint8_t { TLP_A, TLP_B, TLP_C, TLP_D, SLP };

std::string_view eval_task_name(EvalTask task);
bool eval_task_from_name(std::string_view name, EvalTask& out);

// ---------------------------------------------------------------------------
// Cardinal points
// ---------------------------------------------------------------------------

// Trigger tokens after which completion is realistically invoked. Keyword
// triggers are stored by tag name, punctuation by its literal spelling;
// BINOP stands for the whole binary-operator class.
struct CardinalSet {
    std::vector<std::string> triggers;

    static CardinalSet printed_defaults();
    bool contains_tag(TypeTag tag) const;
    std::string to_string() const;  // comma-separated, list order
};

struct MiningOptions {
    double cooccurrence_threshold = 0.95;
    // curated exclusions, seeded from the known unpredictable/impractical
    // bigram families (class <name>, def <name>; True :)
    std::vector<std::string> not_predictable = {"CLASS", "DEF"};
    std::vector<std::string> not_practical = {"TRUE"};
};

// Bigram-frequency mining over the type channel: keyword/punctuation
// candidates whose most frequent follower stays below the threshold,
// minus the curated exclusion lists. Throws on an empty corpus.
CardinalSet mine_cardinal_points(const std::vector<DualSequence>& corpus,
                                 const MiningOptions& options = {});

void save_cardinal(const CardinalSet& set, const std::filesystem::path& path);
CardinalSet load_cardinal(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Instance extraction
// ---------------------------------------------------------------------------

struct EvalInstance {
    size_t file = 0;
    size_t position = 0;   // index of the (first) target element
    std::string category;  // task-specific label; empty for TLP-A/TLP-D
    int n = 0;             // SLP target length
};

std::string_view tag_group_label(TagGroup group);

// Leaf-node class of a value target; nullopt when the tag is out of scope
// for the leaf-node task.
std::optional<std::string> leaf_class(TypeTag tag);

std::vector<EvalInstance> extract_instances(const std::vector<DualSequence>& corpus,
                                            EvalTask task, const CardinalSet& cardinal,
                                            int slp_n = 0);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Fraction of instances whose top candidate equals the target exactly.
double accuracy_at_1(const std::vector<std::string>& targets,
                     const std::vector<std::string>& top_candidates);

// Mean reciprocal rank from 1-based ranks; 0 marks a miss outside the top 10.
double mrr_from_ranks(const std::vector<int>& ranks);

// Ranked candidate lists (at most 10 per instance) against the targets.
double mrr_at_10(const std::vector<std::string>& targets,
                 const std::vector<std::vector<std::string>>& ranked);

int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// LCS-based F-measure over token sequences. Throws on an empty reference.
double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference);

// Exact-match unigram METEOR: recall-weighted harmonic mean (recall weight
// 9) with the 0.5 * (chunks/matches)^3 fragmentation penalty; alignments
// maximize matches, then minimize chunks.
double meteor(const std::vector<std::string>& candidate,
              const std::vector<std::string>& reference);

// ---------------------------------------------------------------------------
// Evaluation driver
// ---------------------------------------------------------------------------

struct TlpCell {
    long count = 0;
    double accuracy = 0.0;
    double mrr = 0.0;
};

struct SlpCell {
    long count = 0;
    double rouge = 0.0;
    double meteor_score = 0.0;
};

struct EvalReport {
    // task name -> category -> cell; grouped tasks add "All (micro)" and
    // "All (macro)" rows
    std::map<std::string, std::map<std::string, TlpCell>> tlp;
    std::map<int, SlpCell> slp;  // keyed by n
};

std::string render_report(const EvalReport& report);
void save_report(const EvalReport& report, const std::filesystem::path& text_path,
                 const std::filesystem::path& json_path);

struct EvalOptions {
    std::vector<EvalTask> tasks = {EvalTask::TLP_A, EvalTask::TLP_B, EvalTask::TLP_C,
                                   EvalTask::TLP_D, EvalTask::SLP};
    std::vector<int> slp_ns = {2, 3, 4, 5, 6, 7, 8};
    int top_k = 10;
    int beam_width = 5;
    int max_statement_tokens = 13;
    bool apply_rerank = true;
};

// Prediction backends, separable from the transformer so fixture predictors
// can drive the pipeline in tests.
struct Predictors {
    std::function<std::vector<Prediction>(const std::vector<int>& value_ctx,
                                          const std::vector<int>& type_ctx, int k)>
        next_value;
    std::function<std::vector<std::pair<TypeTag, double>>(
        const std::vector<int>& type_ctx, int k)>
        next_type;
    std::function<Completion(const std::vector<int>& value_ctx, int max_tokens,
                             int beam_width)>
        complete;
};

EvalReport run_evaluation_with(const Predictors& predictors, const BpeVocab& vocab,
                               const std::vector<DualSequence>& corpus,
                               const CardinalSet& cardinal, const WeightTable& weights,
                               const EvalOptions& options);

// Re-ranking runs on the raw candidates right before metric computation.
EvalReport run_evaluation(const Checkpoint& checkpoint, const BpeVocab& vocab,
                          const std::vector<DualSequence>& corpus,
                          const CardinalSet& cardinal, const WeightTable& weights,
                          const EvalOptions& options);

// Reconstructs lexical structure from a sequence prefix so the scope index
// can be built from corpus records alone.
std::vector<LexedToken> sequence_prefix_tokens(const DualSequence& seq, size_t end);

}  // namespace dualfill
