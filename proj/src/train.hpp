#pragma once

#include <functional>
#include <optional>
#include <string>

#include "data.hpp"
#include "rng.hpp"

namespace khop {

struct TrainConfig {
    float lr_peak = 5e-4f;
    float adam_eps = 1e-6f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float weight_decay = 0.1f;
    int warmup_steps = 1000;
    float min_lr_factor = 0.1f;
    int batch_size = 512;
    int grad_accum = 4;
    int max_steps = 20000;
    int checkpoint_every = 1000;
    int eval_every = 250;
    int log_every = 50;
    double early_stop_accuracy = 0.0; // <= 0 disables
    std::uint64_t seed = 0;

    void validate() const;
};

struct Stage {
    std::vector<int> hops; // question hop counts allowed in this stage
    int steps = 0;
};

struct StagePlan {
    TrainMode mode = TrainMode::baseline;
    std::vector<Stage> stages;

    int total_steps() const;

    // baseline: one stage of k-hop questions. mixed: one stage over hops
    // 2..k. curriculum: k-1 stages, stage i adding hop i+2; the last stage
    // takes half the budget, earlier stages share the rest equally, unless
    // stage_steps overrides the split.
    static StagePlan make(TrainMode mode, int k, int total_steps,
                          const std::vector<int>& stage_steps = {});
};

// Scheduler value used by optimizer step `step` (1-based): linear warmup to
// the peak, then cosine decay to min_lr_factor * peak at stage_steps.
float lr_at(int step, const TrainConfig& cfg, int stage_steps);

// Bias-corrected AdamW with decoupled weight decay; norm gains and biases
// are excluded from decay. `step` is 1-based.
void adamw_step(ModelParams& params, const ModelParams& grads, ModelParams& m, ModelParams& v,
                const TrainConfig& cfg, float lr, int step);

struct TrainHooks {
    std::function<void(const std::string&)> log;
    std::function<void(const std::string&)> metric; // one JSON object per line
    std::function<void(const ModelState&, const ModelParams&, const ModelParams&, int stage)>
        checkpoint;
};

struct TrainResult {
    int steps_run = 0;
    float final_loss = 0.0f;
    double best_accuracy = 0.0;
    double final_accuracy = -1.0;
    int first_step_at_threshold = -1; // earliest eval step reaching early_stop_accuracy
    bool early_stopped = false;
};

// Stage-scheduled causal-LM training. Batches are drawn uniformly from the
// stage mixture (profiles plus allowed-hop questions); the scheduler restarts
// each stage while optimizer moments carry over. Batch composition is a pure
// function of (seed, stage, step), so resuming from a checkpoint reproduces
// the uninterrupted run exactly.
TrainResult train(ModelState& state, ModelParams& adam_m, ModelParams& adam_v,
                  const StagePlan& plan, const TrainConfig& cfg, const TokenizedData& train_data,
                  const TokenizedData* test_data, const TrainHooks& hooks = {});

// Max relative error between engine gradients and central differences of the
// float64 reference loss, over `num_coords` randomly sampled coordinates.
double grad_check(const ModelState& state, const Batch& batch, double epsilon, int num_coords,
                  std::uint64_t seed);

} // namespace khop
