#pragma once

#include <span>

#include "data.hpp"

namespace khop {

// Residual-stream vectors captured per (instance, layer, position) for the
// template positions from the source entity up to the answer slot, plus the
// per-hop bridge-entity labels (hop k = the answer).
struct StateStore {
    int n_layers = 0;
    int d = 0;
    int hops = 0;
    int entity_position = -1;
    std::vector<int> positions;              // absolute token positions captured
    std::vector<std::vector<Mat>> states;    // [layer][pos_idx]: n_instances x d
    std::vector<std::vector<int>> labels;    // [hop-1][instance]: class in [0, classes)
    int classes = 0;

    std::size_t instance_count() const {
        return states.empty() || states[0].empty() ? 0 : states[0][0].rows();
    }
};

StateStore collect_states(const ModelConfig& cfg, const ModelParams& params,
                          const TokenizedData& data, std::span<const std::size_t> idx = {},
                          int batch = 128);

struct ProbeOptions {
    double train_fraction = 0.8;
    int max_iters = 500;
    float lr = 0.5f;
    int patience = 25;        // plateau iterations before stopping
    float min_improve = 1e-4f;
};

struct ProbeCell {
    double accuracy = 0.0;
    Mat w;   // d x classes
    Vec b;
    int train_count = 0;
    int eval_count = 0;
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> eval_idx;
    std::uint64_t train_fold_hash = 0;
    std::uint64_t eval_fold_hash = 0;
};

// Multinomial logistic probe: full-batch gradient descent on the 80% fold,
// accuracy reported on the held-out 20%.
ProbeCell train_probe(const Mat& states, const std::vector<int>& labels, int n_classes,
                      std::uint64_t split_seed, const ProbeOptions& opts = {});

struct ProbeGrid {
    int n_layers = 0;
    int hops = 0;
    int classes = 0;
    std::vector<int> positions;
    std::vector<double> acc; // [layer][pos_idx][hop-1], row-major

    double at(int layer, int pos_idx, int hop) const {
        return acc[(static_cast<std::size_t>(layer) * positions.size() + pos_idx) * hops +
                   (hop - 1)];
    }
};

ProbeGrid probe_grid(const EntityGraph& g, const ModelConfig& cfg, const ModelParams& params,
                     const TokenizedData& data, std::span<const std::size_t> idx,
                     std::span<const int> positions, std::uint64_t split_seed,
                     const ProbeOptions& opts = {});

} // namespace khop
