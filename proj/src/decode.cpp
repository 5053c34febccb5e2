#include "dualfill/decode.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace dualfill {

Vec StackSequenceModel::next_logprobs(const std::vector<int>& context) const {
    if (context.empty())
        throw std::invalid_argument("decode: empty context (a leading token is required)");
    if (static_cast<int>(context.size()) > config_.max_seq_len) {
        std::vector<int> tail(context.end() - config_.max_seq_len, context.end());
        return next_token_logprobs(params_, config_, task_, tail);
    }
    return next_token_logprobs(params_, config_, task_, context);
}

namespace {

struct Hypothesis {
    std::vector<int> generated;
    double logp = 0.0;
    int whole_tokens = 0;
    bool ended_by_eos = false;
};

bool better(const Hypothesis& a, const Hypothesis& b) {
    if (a.logp != b.logp) return a.logp > b.logp;
    return a.generated < b.generated;  // deterministic tie order
}

std::vector<int> with_context(const std::vector<int>& context,
                              const std::vector<int>& generated) {
    std::vector<int> ids = context;
    ids.insert(ids.end(), generated.begin(), generated.end());
    return ids;
}

}  // namespace

Completion complete_statement(const SequenceModel& model, const BpeVocab& vocab,
                              const std::vector<int>& context, int max_tokens,
                              int beam_width, BeamStats* stats) {
    if (context.empty())
        throw std::invalid_argument("decode: empty context (a leading token is required)");
    if (beam_width < 1) throw std::invalid_argument("decode: beam width must be positive");
    const int eos_id = vocab.eos_id();
    const int V = model.vocab_size();
    // guards against models that never close a token
    const long step_cap = static_cast<long>(max_tokens) * 8 + 8;

    std::vector<Hypothesis> active{{{}, 0.0, 0, false}};
    bool have_best = false;
    Hypothesis best;

    long steps = 0;
    while (!active.empty() && steps < step_cap) {
        ++steps;
        std::vector<Hypothesis> expanded;
        expanded.reserve(active.size() * static_cast<size_t>(V));
        long step_expansions = 0;
        for (const auto& hyp : active) {
            Vec logprobs = model.next_logprobs(with_context(context, hyp.generated));
            step_expansions += V;
            for (int id = 0; id < V; ++id) {
                Hypothesis next = hyp;
                next.generated.push_back(id);
                next.logp += logprobs(id);
                if (id == eos_id) {
                    next.ended_by_eos = true;
                } else if (completes_token(vocab, id)) {
                    ++next.whole_tokens;
                }
                expanded.push_back(std::move(next));
            }
        }
        if (stats) {
            ++stats->steps;
            stats->max_step_expansions = std::max(stats->max_step_expansions, step_expansions);
        }
        std::sort(expanded.begin(), expanded.end(), better);
        if (expanded.size() > static_cast<size_t>(beam_width))
            expanded.resize(static_cast<size_t>(beam_width));

        active.clear();
        for (auto& hyp : expanded) {
            bool finished = hyp.ended_by_eos || hyp.whole_tokens >= max_tokens;
            if (finished) {
                if (!have_best || better(hyp, best)) {
                    best = std::move(hyp);
                    have_best = true;
                }
            } else {
                active.push_back(std::move(hyp));
            }
        }
        // scores only decrease with length, so once the best finished
        // hypothesis dominates every active one the search is settled
        if (have_best) {
            bool dominated = true;
            for (const auto& hyp : active)
                if (hyp.logp > best.logp) dominated = false;
            if (dominated) break;
        }
    }
    if (!have_best) {
        // step cap hit with open hypotheses; freeze the best of them
        if (active.empty()) throw std::runtime_error("decode: beam exhausted");
        best = *std::min_element(active.begin(), active.end(),
                                 [](const auto& a, const auto& b) { return better(a, b); });
        have_best = true;
    }

    Completion completion;
    completion.terminated_by = best.ended_by_eos ? Completion::Terminated::EOS
                                                 : Completion::Terminated::LENGTH_CAP;
    completion.probability = std::exp(best.logp);
    auto tokens = decode_stream(vocab, best.generated);
    while (!tokens.empty() && tokens.back() == "EOS") tokens.pop_back();
    completion.tokens = std::move(tokens);
    return completion;
}

std::vector<Prediction> next_token_candidates(const SequenceModel& model,
                                              const BpeVocab& vocab,
                                              const std::vector<int>& context, int k,
                                              BeamStats* stats) {
    if (context.empty())
        throw std::invalid_argument("decode: empty context (a leading token is required)");
    if (k < 1) throw std::invalid_argument("decode: k must be positive");
    const int V = model.vocab_size();
    const long step_cap = 8;  // longest subword chain considered for one token

    std::vector<Hypothesis> active{{{}, 0.0, 0, false}};
    std::map<std::string, double> completed;  // token value -> best logp

    for (long step = 0; step < step_cap && !active.empty(); ++step) {
        std::vector<Hypothesis> expanded;
        long step_expansions = 0;
        for (const auto& hyp : active) {
            Vec logprobs = model.next_logprobs(with_context(context, hyp.generated));
            step_expansions += V;
            for (int id = 0; id < V; ++id) {
                Hypothesis next = hyp;
                next.generated.push_back(id);
                next.logp += logprobs(id);
                expanded.push_back(std::move(next));
            }
        }
        if (stats) {
            ++stats->steps;
            stats->max_step_expansions = std::max(stats->max_step_expansions, step_expansions);
        }
        std::sort(expanded.begin(), expanded.end(), better);
        if (expanded.size() > static_cast<size_t>(k)) expanded.resize(static_cast<size_t>(k));

        active.clear();
        for (auto& hyp : expanded) {
            if (completes_token(vocab, hyp.generated.back())) {
                auto tokens = decode_stream(vocab, hyp.generated);
                if (tokens.size() == 1) {
                    auto [it, inserted] = completed.emplace(tokens[0], hyp.logp);
                    if (!inserted && hyp.logp > it->second) it->second = hyp.logp;
                }
            } else {
                active.push_back(std::move(hyp));
            }
        }
        // no open hypothesis can still reach the current top k
        if (static_cast<int>(completed.size()) >= k) {
            double kth = -std::numeric_limits<double>::infinity();
            std::vector<double> scores;
            for (const auto& [token, logp] : completed) scores.push_back(logp);
            std::sort(scores.rbegin(), scores.rend());
            kth = scores[static_cast<size_t>(k) - 1];
            bool viable = false;
            for (const auto& hyp : active)
                if (hyp.logp > kth) viable = true;
            if (!viable) break;
        }
    }

    std::vector<Prediction> out;
    out.reserve(completed.size());
    for (const auto& [token, logp] : completed)
        out.push_back({token, TypeTag::NAME, std::exp(logp)});
    std::sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
        if (a.probability != b.probability) return a.probability > b.probability;
        return a.token < b.token;
    });
    if (out.size() > static_cast<size_t>(k)) out.resize(static_cast<size_t>(k));
    return out;
}

std::vector<Prediction> next_token(const ModelParams& params, const ModelConfig& config,
                                   const BpeVocab& vocab,
                                   const std::vector<int>& value_context,
                                   const std::vector<int>& type_context, int k) {
    StackSequenceModel value_model(params, config, Task::TVP);
    auto predictions = next_token_candidates(value_model, vocab, value_context, k);

    TypeTag top_type = TypeTag::NAME;
    if (!type_context.empty()) {
        StackSequenceModel type_model(params, config, Task::TTP);
        Vec logprobs = type_model.next_logprobs(type_context);
        long best = 0;
        logprobs.head(kTypeTagCount).maxCoeff(&best);  // pad id is not a tag
        top_type = static_cast<TypeTag>(best);
    }
    for (auto& p : predictions) p.type = top_type;
    return predictions;
}

Completion complete_statement(const ModelParams& params, const ModelConfig& config,
                              const BpeVocab& vocab,
                              const std::vector<int>& value_context, int max_tokens,
                              int beam_width) {
    StackSequenceModel model(params, config, Task::SC);
    return complete_statement(model, vocab, value_context, max_tokens, beam_width);
}

}  // namespace dualfill
