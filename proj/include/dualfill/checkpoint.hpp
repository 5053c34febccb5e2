#pragma once

#include <filesystem>
#include <optional>

#include "dualfill/model.hpp"

namespace dualfill {

struct TrainMeta {
    int epoch = 0;  // epochs completed
    Phase phase = Phase::PRETRAIN;
    uint64_t seed = 0;
    bool adaptive = false;  // adaptive-moment optimizer mode
    long step = 0;          // optimizer updates applied
};

// Versioned binary container; reload is bit-exact.
struct Checkpoint {
    ModelConfig config;
    TrainMeta meta;
    ModelParams params;
    // optimizer state, present when meta.adaptive
    std::optional<ModelParams> moment1;
    std::optional<ModelParams> moment2;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dualfill
