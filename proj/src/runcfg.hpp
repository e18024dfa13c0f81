#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "model.hpp"
#include "split.hpp"
#include "train.hpp"

namespace khop {

struct GraphConfig {
    int entities = 100;
    int relations = 5;
    int layers = 5;
};

struct SweepConfig {
    std::string axis = "budget"; // budget | depth | constraint
    std::vector<int> hops = {2};
    std::vector<int> ratios = {1};
    std::vector<int> depths = {2, 3, 4, 5};
    std::vector<int> constraint_grid;      // per-value: hops 1..2 restricted to it
    std::vector<std::string> modes = {"baseline"};
    int max_steps = 0;                     // 0 = train.max_steps
    double early_stop_accuracy = 0.9;
    double learned_threshold = 0.8;
};

struct ProbeConfig {
    std::string checkpoint;
    std::string positions = "answer"; // answer | all
    int max_instances = 1000;
    int max_iters = 500;
    double train_fraction = 0.8;
};

struct PatchConfig {
    std::string checkpoint;
    std::string site = "residual"; // residual | mlp_out
    std::vector<int> families;     // empty = 1..k
    std::string positions = "answer"; // answer | all
    int instances = 1000;
    int rejection_cap = 10000;
    bool across_checkpoints = false;
    std::string checkpoint_dir; // used when across_checkpoints
};

struct OracleConfig {
    int n_max = 10;
    int k_max = 9;
    int precision_bits = 32;
    int d_model = 768;
    int heads = 12;
};

struct RunConfig {
    std::uint64_t seed = 0;
    std::string out = "runs";
    int workers = 1;
    bool resume = false;

    GraphConfig graph;
    TaskSpec task;
    ModelConfig model;
    TrainConfig train;
    int eval_batch = 128;
    std::string eval_checkpoint;
    std::vector<int> stage_steps; // curriculum override
    SweepConfig sweep;
    ProbeConfig probe;
    PatchConfig patch;
    OracleConfig oracle;

    std::string canonical_json() const;   // sorted-key dump used for hashing
    std::uint64_t checksum() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

} // namespace khop
