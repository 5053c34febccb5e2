#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dualfill/bpe.hpp"
#include "dualfill/token.hpp"
#include "dualfill/trainer.hpp"

namespace dualfill {

struct AblationOptions {
    ModelConfig model;
    TrainConfig train;
    double eval_fraction = 0.2;  // trailing files held out for scoring
};

struct AblationRow {
    std::string approach;
    std::string tasks;
    double accuracy = 0.0;  // value-prediction top-1 on the held-out files
    double mrr = 0.0;       // value-prediction MRR@10 on the held-out files
};

// Four model variants in one comparison: a single-task value model, a
// hard-sharing trunk over the concatenated [type, value] representation, and
// soft-sharing models with two and three tasks.
struct AblationReport {
    std::vector<AblationRow> rows;
};

AblationReport run_ablation(const std::vector<DualSequence>& sequences,
                            const BpeVocab& vocab, const AblationOptions& options);

std::string render_ablation(const AblationReport& report);
void save_ablation_report(const AblationReport& report,
                          const std::filesystem::path& path);

// Structural check against the committed report schema
// (docs/ablation_report.schema.json).
bool validate_ablation_report_file(const std::filesystem::path& path,
                                   std::string* error = nullptr);

}  // namespace dualfill
