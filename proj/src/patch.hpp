#pragma once

#include <optional>
#include <span>

#include "data.hpp"
#include "rng.hpp"

namespace khop {

// Rejection-sample a pool query whose hop-i entity differs from the clean one
// while every other bridge entity and the answer match (for i = k the answer
// is the differing entity). Returns a pool index, or nullopt when no valid
// corruption exists within the draw cap. family = 0 accepts any distinct
// instance.
std::optional<std::size_t> select_corrupted(const TokenizedData& pool, std::size_t clean_idx,
                                            int family, Rng& rng, int cap = 10000);

// Single-site causal effect P_clean - P_patched for the clean gold answer at
// the answer slot; three forwards per call.
double run_patch(const ModelConfig& cfg, const ModelParams& params, const TokenizedData& pool,
                 std::size_t clean_idx, std::size_t corrupted_idx, PatchSite site, int layer,
                 int position);

struct PatchOptions {
    PatchSite site = PatchSite::residual;
    std::vector<int> families;   // hop indices; 0 = any distinct instance
    bool all_positions = false;  // false: answer slot only
    int max_instances = 1000;
    int rejection_cap = 10000;
    int batch = 64;
    std::uint64_t seed = 0;
};

struct PatchReport {
    PatchSite site = PatchSite::residual;
    int family = 0;
    int instances_used = 0;
    int skipped = 0;
    std::vector<int> positions;
    Mat effects; // n_layers x positions.size(), mean P_clean - P_patched

    int peak_layer(int pos_idx = 0) const {
        Eigen::Index arg = 0;
        effects.col(pos_idx).maxCoeff(&arg);
        return static_cast<int>(arg);
    }
};

// Mean causal effects per (layer, position) for each corrupted-run family.
std::vector<PatchReport> patch_sweep(const ModelConfig& cfg, const ModelParams& params,
                                     const TokenizedData& pool, const PatchOptions& opts);

} // namespace khop
