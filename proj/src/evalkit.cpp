#include "dualfill/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace dualfill {

std::string_view eval_task_name(EvalTask task) {
    switch (task) {
        case EvalTask::TLP_A: return "TLP-A";
        case EvalTask::TLP_B: return "TLP-B";
        case EvalTask::TLP_C: return "TLP-C";
        case EvalTask::TLP_D: return "TLP-D";
        case EvalTask::SLP: return "SLP";
    }
    return "TLP-A";
}

bool eval_task_from_name(std::string_view name, EvalTask& out) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "tlp-a") out = EvalTask::TLP_A;
    else if (lower == "tlp-b") out = EvalTask::TLP_B;
    else if (lower == "tlp-c") out = EvalTask::TLP_C;
    else if (lower == "tlp-d") out = EvalTask::TLP_D;
    else if (lower == "slp") out = EvalTask::SLP;
    else return false;
    return true;
}

// ---------------------------------------------------------------------------
// Cardinal points
// ---------------------------------------------------------------------------

CardinalSet CardinalSet::printed_defaults() {
    return {{"DOT", "AWAIT", "ASSERT", "RAISE", "DEL",  "LAMBDA", "YIELD",
             "RETURN", "EXCEPT", "WHILE", "FOR", "IF",  "ELIF",   "ELSE",
             "GLOBAL", "IN",     "AND",   "NOT", "OR",  "IS",     "BINOP",
             "WITH",   ";",      ",",     "[",   "(",   "{",      "~"}};
}

bool CardinalSet::contains_tag(TypeTag tag) const {
    for (const auto& t : triggers) {
        if (t == "BINOP") {
            if (is_binary_operator(tag)) return true;
            continue;
        }
        if (t == tag_name(tag) || t == tag_render(tag)) return true;
    }
    return false;
}

std::string CardinalSet::to_string() const {
    std::string out;
    for (size_t i = 0; i < triggers.size(); ++i) {
        if (i > 0) out += ", ";
        out += triggers[i];
    }
    return out;
}

CardinalSet mine_cardinal_points(const std::vector<DualSequence>& corpus,
                                 const MiningOptions& options) {
    if (corpus.empty()) throw std::invalid_argument("mine_cardinal_points: empty corpus");

    std::map<TypeTag, long> first_counts;
    std::map<TypeTag, std::map<TypeTag, long>> bigram_counts;
    for (const auto& seq : corpus) {
        for (size_t i = 0; i + 1 < seq.types.size(); ++i) {
            TypeTag c = seq.types[i];
            if (is_structural(c)) continue;
            TagGroup group = tag_group(c);
            if (group == TagGroup::Identifiers || group == TagGroup::Literals) continue;
            ++first_counts[c];
            ++bigram_counts[c][seq.types[i + 1]];
        }
    }

    auto excluded_by = [](const std::vector<std::string>& list, TypeTag tag) {
        for (const auto& name : list)
            if (name == tag_name(tag) || name == tag_render(tag)) return true;
        return false;
    };

    CardinalSet result;
    for (const auto& [tag, total] : first_counts) {
        long dominant = 0;
        for (const auto& [next, count] : bigram_counts[tag])
            dominant = std::max(dominant, count);
        if (static_cast<double>(dominant) >=
            options.cooccurrence_threshold * static_cast<double>(total))
            continue;  // written together almost always, e.g. async def
        if (excluded_by(options.not_predictable, tag)) continue;
        if (excluded_by(options.not_practical, tag)) continue;
        result.triggers.push_back(is_keyword(tag) || tag == TypeTag::DOT
                                      ? std::string(tag_name(tag))
                                      : std::string(tag_render(tag)));
    }
    return result;
}

void save_cardinal(const CardinalSet& set, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "dualfill-cardinal";
    doc["version"] = 1;
    doc["triggers"] = set.triggers;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << doc.dump(2) << '\n';
}

CardinalSet load_cardinal(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    nlohmann::json doc = nlohmann::json::parse(in);
    if (doc.at("format") != "dualfill-cardinal")
        throw std::runtime_error("not a cardinal-set file: " + path.string());
    CardinalSet set;
    set.triggers = doc.at("triggers").get<std::vector<std::string>>();
    if (set.triggers.empty())
        throw std::runtime_error("cardinal set must not be empty");
    return set;
}

// ---------------------------------------------------------------------------
// Instance extraction
// ---------------------------------------------------------------------------

std::string_view tag_group_label(TagGroup group) {
    switch (group) {
        case TagGroup::Identifiers: return "Identifiers";
        case TagGroup::Keywords: return "Keywords";
        case TagGroup::Punctuation: return "Punctuation";
        case TagGroup::Literals: return "Literals";
        case TagGroup::Operators: return "Operators";
    }
    return "Identifiers";
}

std::optional<std::string> leaf_class(TypeTag tag) {
    switch (tag) {
        case TypeTag::ATTRIBUTE:
            return "Attribute Access";
        case TypeTag::NAME:
        case TypeTag::LOCAL_VARIABLE:
        case TypeTag::GLOBAL_VARIABLE:
            return "Names";
        case TypeTag::FUNCTION_NAME:
            return "Function names";
        case TypeTag::NUMBER:
            return "Numeric constant";
        default:
            return std::nullopt;
    }
}

std::vector<EvalInstance> extract_instances(const std::vector<DualSequence>& corpus,
                                            EvalTask task, const CardinalSet& cardinal,
                                            int slp_n) {
    std::vector<EvalInstance> out;
    for (size_t f = 0; f < corpus.size(); ++f) {
        const auto& seq = corpus[f];
        if (task == EvalTask::SLP) {
            if (slp_n < 1) throw std::invalid_argument("SLP extraction needs n >= 1");
            size_t start = 0;
            for (size_t e = 0; e < seq.size(); ++e) {
                if (seq.types[e] != TypeTag::EOS) continue;
                long code_tokens = 0;
                for (size_t i = start; i < e; ++i)
                    code_tokens += !is_structural(seq.types[i]);
                size_t target_start = e - static_cast<size_t>(slp_n);
                if (code_tokens >= slp_n && target_start > 0)
                    out.push_back({f, target_start, std::to_string(slp_n), slp_n});
                start = e + 1;
            }
            continue;
        }
        for (size_t i = 1; i < seq.size(); ++i) {
            switch (task) {
                case EvalTask::TLP_A:
                    out.push_back({f, i, "", 0});
                    break;
                case EvalTask::TLP_B:
                    out.push_back({f, i, std::string(tag_group_label(tag_group(seq.types[i]))), 0});
                    break;
                case EvalTask::TLP_C:
                    if (auto cls = leaf_class(seq.types[i]))
                        out.push_back({f, i, *cls, 0});
                    break;
                case EvalTask::TLP_D:
                    if (cardinal.contains_tag(seq.types[i - 1]))
                        out.push_back({f, i, "", 0});
                    break;
                case EvalTask::SLP:
                    break;
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double accuracy_at_1(const std::vector<std::string>& targets,
                     const std::vector<std::string>& top_candidates) {
    if (targets.size() != top_candidates.size())
        throw std::invalid_argument("accuracy_at_1: length mismatch");
    if (targets.empty()) return 0.0;
    long hits = 0;
    for (size_t i = 0; i < targets.size(); ++i) hits += targets[i] == top_candidates[i];
    return static_cast<double>(hits) / static_cast<double>(targets.size());
}

double mrr_from_ranks(const std::vector<int>& ranks) {
    if (ranks.empty()) return 0.0;
    double sum = 0.0;
    for (int r : ranks)
        if (r >= 1) sum += 1.0 / static_cast<double>(r);
    return sum / static_cast<double>(ranks.size());
}

double mrr_at_10(const std::vector<std::string>& targets,
                 const std::vector<std::vector<std::string>>& ranked) {
    if (targets.size() != ranked.size())
        throw std::invalid_argument("mrr_at_10: length mismatch");
    std::vector<int> ranks;
    ranks.reserve(targets.size());
    for (size_t i = 0; i < targets.size(); ++i) {
        if (ranked[i].size() > 10)
            throw std::invalid_argument("mrr_at_10: more than ten candidates");
        int rank = 0;
        for (size_t k = 0; k < ranked[i].size(); ++k)
            if (ranked[i][k] == targets[i]) {
                rank = static_cast<int>(k) + 1;
                break;
            }
        ranks.push_back(rank);
    }
    return mrr_from_ranks(ranks);
}

int lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::vector<int>> dp(a.size() + 1, std::vector<int>(b.size() + 1, 0));
    for (size_t i = 1; i <= a.size(); ++i)
        for (size_t j = 1; j <= b.size(); ++j)
            dp[i][j] = a[i - 1] == b[j - 1] ? dp[i - 1][j - 1] + 1
                                            : std::max(dp[i - 1][j], dp[i][j - 1]);
    return dp[a.size()][b.size()];
}

double rouge_l(const std::vector<std::string>& candidate,
               const std::vector<std::string>& reference) {
    if (reference.empty()) throw std::invalid_argument("rouge_l: empty reference");
    if (candidate.empty()) return 0.0;
    int lcs = lcs_length(candidate, reference);
    if (lcs == 0) return 0.0;
    double p = static_cast<double>(lcs) / static_cast<double>(candidate.size());
    double r = static_cast<double>(lcs) / static_cast<double>(reference.size());
    return 2.0 * p * r / (p + r);
}

namespace {

// Best alignment value from (candidate position, used-reference mask, ref
// position matched at the previous candidate slot + 1, or 0): maximize
// matches, then minimize chunks.
struct AlignSearch {
    const std::vector<std::string>& cand;
    const std::vector<std::string>& ref;
    std::unordered_map<uint64_t, std::pair<int, int>> memo;

    std::pair<int, int> best(size_t i, uint32_t mask, int last) {
        if (i == cand.size()) return {0, 0};
        uint64_t key = (static_cast<uint64_t>(i) << 40) |
                       (static_cast<uint64_t>(mask) << 8) |
                       static_cast<uint64_t>(last + 1);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;

        // leave candidate position i unmatched
        std::pair<int, int> result = best(i + 1, mask, -1);
        for (size_t j = 0; j < ref.size(); ++j) {
            if (mask & (1u << j)) continue;
            if (cand[i] != ref[j]) continue;
            bool continues_chunk = last >= 0 && static_cast<size_t>(last) + 1 == j;
            auto sub = best(i + 1, mask | (1u << j), static_cast<int>(j));
            std::pair<int, int> with{1 + sub.first, (continues_chunk ? 0 : 1) + sub.second};
            if (with.first > result.first ||
                (with.first == result.first && with.second < result.second))
                result = with;
        }
        memo.emplace(key, result);
        return result;
    }
};

}  // namespace

double meteor(const std::vector<std::string>& candidate,
              const std::vector<std::string>& reference) {
    if (reference.empty()) throw std::invalid_argument("meteor: empty reference");
    if (candidate.empty()) return 0.0;
    if (reference.size() > 30)
        throw std::invalid_argument("meteor: reference too long for exact alignment");

    AlignSearch search{candidate, reference, {}};
    auto [matches, chunks] = search.best(0, 0, -1);
    if (matches == 0) return 0.0;

    double m = matches;
    double precision = m / static_cast<double>(candidate.size());
    double recall = m / static_cast<double>(reference.size());
    double fmean = 10.0 * precision * recall / (recall + 9.0 * precision);
    // a single contiguous alignment carries no fragmentation penalty, so an
    // exact copy of the reference scores 1
    double frag = (static_cast<double>(chunks) - 1.0) / m;
    double penalty = 0.5 * frag * frag * frag;
    return fmean * (1.0 - penalty);
}

// ---------------------------------------------------------------------------
// Evaluation driver
// ---------------------------------------------------------------------------

std::vector<LexedToken> sequence_prefix_tokens(const DualSequence& seq, size_t end) {
    std::vector<LexedToken> out;
    int depth = 0;
    int line = 1;
    int position = 1;
    bool line_start = true;
    end = std::min(end, seq.size());
    for (size_t i = 0; i < end; ++i) {
        TypeTag type = seq.types[i];
        if (type == TypeTag::INDENT) {
            ++depth;
            continue;
        }
        if (type == TypeTag::DEDENT) {
            depth = std::max(0, depth - 1);
            continue;
        }
        if (type == TypeTag::EOS) {
            if (!out.empty()) out.back().last_in_statement = true;
            ++line;
            position = 1;
            line_start = true;
            continue;
        }
        LexedToken t;
        t.record.value = seq.values[i];
        t.record.type = type;
        t.record.line = line;
        t.record.position = position++;
        t.record.column = line_start ? depth * 4 : depth * 4 + position;
        line_start = false;
        out.push_back(std::move(t));
    }
    if (!out.empty()) out.back().last_in_statement = true;
    return out;
}

namespace {

struct EncodedFile {
    std::vector<int> value_ids;
    std::vector<size_t> element_offset;  // element index -> first id offset
    std::vector<int> type_ids;
};

EncodedFile encode_file(const DualSequence& seq, const BpeVocab& vocab) {
    EncodedFile out;
    out.element_offset.reserve(seq.size());
    out.type_ids.reserve(seq.size());
    for (size_t i = 0; i < seq.size(); ++i) {
        out.element_offset.push_back(out.value_ids.size());
        for (int id : encode(vocab, seq.values[i])) out.value_ids.push_back(id);
        out.type_ids.push_back(static_cast<int>(seq.types[i]));
    }
    return out;
}

struct CellAccumulator {
    long count = 0;
    long hits = 0;
    double reciprocal_sum = 0.0;

    void add(bool hit, int rank) {
        ++count;
        hits += hit;
        if (rank >= 1) reciprocal_sum += 1.0 / static_cast<double>(rank);
    }
    TlpCell cell() const {
        TlpCell c;
        c.count = count;
        if (count > 0) {
            c.accuracy = static_cast<double>(hits) / static_cast<double>(count);
            c.mrr = reciprocal_sum / static_cast<double>(count);
        }
        return c;
    }
};

void finish_grouped(std::map<std::string, CellAccumulator>& acc,
                    std::map<std::string, TlpCell>& out) {
    CellAccumulator micro;
    double macro_acc = 0.0, macro_mrr = 0.0;
    long groups = 0;
    for (const auto& [category, a] : acc) {
        out[category] = a.cell();
        micro.count += a.count;
        micro.hits += a.hits;
        micro.reciprocal_sum += a.reciprocal_sum;
        if (a.count > 0) {
            macro_acc += out[category].accuracy;
            macro_mrr += out[category].mrr;
            ++groups;
        }
    }
    out["All (micro)"] = micro.cell();
    TlpCell macro;
    macro.count = micro.count;
    if (groups > 0) {
        macro.accuracy = macro_acc / static_cast<double>(groups);
        macro.mrr = macro_mrr / static_cast<double>(groups);
    }
    out["All (macro)"] = macro;
}

constexpr const char* kNullToken = "\x01null";

}  // namespace

EvalReport run_evaluation_with(const Predictors& predictors, const BpeVocab& vocab,
                               const std::vector<DualSequence>& corpus,
                               const CardinalSet& cardinal, const WeightTable& weights,
                               const EvalOptions& options) {
    if (options.tasks.empty()) throw std::invalid_argument("evaluation: no tasks");
    weights.validate();

    std::vector<EncodedFile> files;
    files.reserve(corpus.size());
    for (const auto& seq : corpus) files.push_back(encode_file(seq, vocab));

    EvalReport report;
    for (EvalTask task : options.tasks) {
        std::string task_label(eval_task_name(task));
        if (task == EvalTask::SLP) {
            for (int n : options.slp_ns) {
                auto instances = extract_instances(corpus, task, cardinal, n);
                SlpCell cell;
                double rouge_sum = 0.0, meteor_sum = 0.0;
                for (const auto& inst : instances) {
                    const auto& seq = corpus[inst.file];
                    const auto& file = files[inst.file];
                    std::vector<int> ctx(
                        file.value_ids.begin(),
                        file.value_ids.begin() +
                            static_cast<long>(file.element_offset[inst.position]));
                    auto completion = predictors.complete(
                        ctx, options.max_statement_tokens, options.beam_width);
                    std::vector<std::string> cand = completion.tokens;
                    cand.resize(static_cast<size_t>(n), kNullToken);
                    cand.resize(static_cast<size_t>(n));
                    std::vector<std::string> ref(
                        seq.values.begin() + static_cast<long>(inst.position),
                        seq.values.begin() + static_cast<long>(inst.position) + n);
                    rouge_sum += rouge_l(cand, ref);
                    meteor_sum += meteor(cand, ref);
                    ++cell.count;
                }
                if (cell.count > 0) {
                    cell.rouge = rouge_sum / static_cast<double>(cell.count);
                    cell.meteor_score = meteor_sum / static_cast<double>(cell.count);
                }
                report.slp[n] = cell;
            }
            continue;
        }

        auto instances = extract_instances(corpus, task, cardinal, 0);
        std::map<std::string, CellAccumulator> acc;
        for (const auto& inst : instances) {
            const auto& seq = corpus[inst.file];
            const auto& file = files[inst.file];
            std::string category = inst.category.empty() ? "All" : inst.category;

            if (task == EvalTask::TLP_B) {
                std::vector<int> ctx(file.type_ids.begin(),
                                     file.type_ids.begin() + static_cast<long>(inst.position));
                auto preds = predictors.next_type(ctx, options.top_k);
                TypeTag target = seq.types[inst.position];
                bool hit = !preds.empty() && preds[0].first == target;
                int rank = 0;
                for (size_t k = 0; k < preds.size(); ++k)
                    if (preds[k].first == target) {
                        rank = static_cast<int>(k) + 1;
                        break;
                    }
                acc[category].add(hit, rank);
                continue;
            }

            std::vector<int> value_ctx(
                file.value_ids.begin(),
                file.value_ids.begin() + static_cast<long>(file.element_offset[inst.position]));
            std::vector<int> type_ctx(file.type_ids.begin(),
                                      file.type_ids.begin() + static_cast<long>(inst.position));
            auto preds = predictors.next_value(value_ctx, type_ctx, options.top_k);
            if (options.apply_rerank) {
                ScopeIndex index =
                    build_scope_index(sequence_prefix_tokens(seq, inst.position));
                preds = rerank(std::move(preds), index, weights);
            }
            const std::string& target = seq.values[inst.position];
            bool hit = !preds.empty() && preds[0].token == target;
            int rank = 0;
            for (size_t k = 0; k < preds.size(); ++k)
                if (preds[k].token == target) {
                    rank = static_cast<int>(k) + 1;
                    break;
                }
            acc[category].add(hit, rank);
        }

        auto& out = report.tlp[task_label];
        if (task == EvalTask::TLP_B || task == EvalTask::TLP_C) {
            finish_grouped(acc, out);
        } else {
            for (const auto& [category, a] : acc) out[category] = a.cell();
        }
    }
    return report;
}

EvalReport run_evaluation(const Checkpoint& checkpoint, const BpeVocab& vocab,
                          const std::vector<DualSequence>& corpus,
                          const CardinalSet& cardinal, const WeightTable& weights,
                          const EvalOptions& options) {
    const ModelParams& params = checkpoint.params;
    const ModelConfig& config = checkpoint.config;

    Predictors predictors;
    predictors.next_value = [&params, &config, &vocab](const std::vector<int>& vctx,
                                                       const std::vector<int>& tctx,
                                                       int k) {
        return next_token(params, config, vocab, vctx, tctx, k);
    };
    predictors.next_type = [&params, &config](const std::vector<int>& tctx, int k) {
        StackSequenceModel model(params, config, Task::TTP);
        Vec logprobs = model.next_logprobs(tctx);
        std::vector<int> order(kTypeTagCount);
        for (int i = 0; i < kTypeTagCount; ++i) order[static_cast<size_t>(i)] = i;
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            if (logprobs(a) != logprobs(b)) return logprobs(a) > logprobs(b);
            return a < b;
        });
        std::vector<std::pair<TypeTag, double>> out;
        for (int i = 0; i < k && i < kTypeTagCount; ++i)
            out.push_back({static_cast<TypeTag>(order[static_cast<size_t>(i)]),
                           std::exp(logprobs(order[static_cast<size_t>(i)]))});
        return out;
    };
    predictors.complete = [&params, &config, &vocab](const std::vector<int>& vctx,
                                                     int max_tokens, int width) {
        return complete_statement(params, config, vocab, vctx, max_tokens, width);
    };
    return run_evaluation_with(predictors, vocab, corpus, cardinal, weights, options);
}

// ---------------------------------------------------------------------------
// Report output
// ---------------------------------------------------------------------------

std::string render_report(const EvalReport& report) {
    std::ostringstream os;
    for (const auto& [task, cells] : report.tlp) {
        os << "== " << task << " ==\n";
        os << "  category              count  accuracy@1  MRR@10\n";
        for (const auto& [category, cell] : cells) {
            os << "  " << category;
            for (size_t pad = category.size(); pad < 22; ++pad) os << ' ';
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%5ld  %10.4f  %6.4f", cell.count,
                          cell.accuracy, cell.mrr);
            os << buf << '\n';
        }
    }
    if (!report.slp.empty()) {
        os << "== SLP ==\n";
        os << "  n  count  ROUGE-L  METEOR\n";
        for (const auto& [n, cell] : report.slp) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "  %d  %5ld  %7.4f  %6.4f", n, cell.count,
                          cell.rouge, cell.meteor_score);
            os << buf << '\n';
        }
    }
    return os.str();
}

void save_report(const EvalReport& report, const std::filesystem::path& text_path,
                 const std::filesystem::path& json_path) {
    {
        std::ofstream out(text_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + text_path.string());
        out << render_report(report);
    }
    nlohmann::json doc;
    doc["format"] = "dualfill-report";
    doc["version"] = 1;
    for (const auto& [task, cells] : report.tlp)
        for (const auto& [category, cell] : cells)
            doc["tlp"][task][category] = {{"count", cell.count},
                                          {"accuracy_at_1", cell.accuracy},
                                          {"mrr_at_10", cell.mrr}};
    for (const auto& [n, cell] : report.slp)
        doc["slp"][std::to_string(n)] = {{"count", cell.count},
                                         {"rouge_l", cell.rouge},
                                         {"meteor", cell.meteor_score}};
    std::ofstream out(json_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + json_path.string());
    out << doc.dump(2) << '\n';
}

}  // namespace dualfill
