#include "train.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eval.hpp"
#include "refloss.hpp"

namespace khop {

void TrainConfig::validate() const {
    require(lr_peak > 0, ErrorCode::config, "train.lr must be > 0");
    require(adam_eps > 0, ErrorCode::config, "train.adam_eps must be > 0");
    require(beta1 >= 0 && beta1 < 1, ErrorCode::config, "train.beta1 must be in [0,1)");
    require(beta2 >= 0 && beta2 < 1, ErrorCode::config, "train.beta2 must be in [0,1)");
    require(weight_decay >= 0, ErrorCode::config, "train.weight_decay must be >= 0");
    require(warmup_steps >= 1, ErrorCode::config, "train.warmup must be >= 1");
    require(min_lr_factor >= 0 && min_lr_factor <= 1, ErrorCode::config,
            "train.min_lr_factor must be in [0,1]");
    require(batch_size >= 1, ErrorCode::config, "train.batch must be >= 1");
    require(grad_accum >= 1, ErrorCode::config, "train.grad_accum must be >= 1");
    require(batch_size % grad_accum == 0, ErrorCode::config,
            "train.batch must be divisible by train.grad_accum");
    require(max_steps >= 1, ErrorCode::config, "train.max_steps must be >= 1");
    require(warmup_steps < max_steps, ErrorCode::config,
            "train.warmup must be smaller than train.max_steps");
    require(checkpoint_every >= 1, ErrorCode::config, "train.checkpoint_every must be >= 1");
    require(eval_every >= 1, ErrorCode::config, "train.eval_every must be >= 1");
    require(log_every >= 1, ErrorCode::config, "train.log_every must be >= 1");
}

int StagePlan::total_steps() const {
    int n = 0;
    for (const auto& s : stages) {
        n += s.steps;
    }
    return n;
}

StagePlan StagePlan::make(TrainMode mode, int k, int total_steps,
                          const std::vector<int>& stage_steps) {
    require(k >= 1, ErrorCode::invalid_argument, "StagePlan: k must be >= 1");
    require(total_steps >= 1, ErrorCode::invalid_argument, "StagePlan: steps must be >= 1");
    StagePlan plan;
    plan.mode = mode;
    if (mode == TrainMode::baseline || k <= 2) {
        Stage s;
        if (mode == TrainMode::baseline) {
            s.hops = {k};
        } else {
            for (int h = 2; h <= std::max(k, 2); ++h) {
                s.hops.push_back(h);
            }
        }
        s.steps = total_steps;
        plan.stages.push_back(std::move(s));
        return plan;
    }
    if (mode == TrainMode::mixed) {
        Stage s;
        for (int h = 2; h <= k; ++h) {
            s.hops.push_back(h);
        }
        s.steps = total_steps;
        plan.stages.push_back(std::move(s));
        return plan;
    }
    // curriculum: k-1 stages, stage i allows hops {2, ..., i+2}.
    const int n_stages = k - 1;
    std::vector<int> steps(n_stages, 0);
    if (!stage_steps.empty()) {
        require(static_cast<int>(stage_steps.size()) == n_stages, ErrorCode::invalid_argument,
                "StagePlan: need one stage step count per stage");
        steps = stage_steps;
    } else {
        const int last = total_steps / 2;
        const int rest = total_steps - last;
        for (int i = 0; i + 1 < n_stages; ++i) {
            steps[i] = rest / (n_stages - 1);
        }
        steps[n_stages - 2] += rest - (rest / (n_stages - 1)) * (n_stages - 1);
        steps[n_stages - 1] = last;
    }
    for (int i = 0; i < n_stages; ++i) {
        Stage s;
        for (int h = 2; h <= i + 2; ++h) {
            s.hops.push_back(h);
        }
        s.steps = steps[i];
        require(s.steps >= 1, ErrorCode::invalid_argument, "StagePlan: stage has no steps");
        plan.stages.push_back(std::move(s));
    }
    return plan;
}

float lr_at(int step, const TrainConfig& cfg, int stage_steps) {
    require(step >= 0 && step <= stage_steps, ErrorCode::invalid_argument,
            "lr_at: step out of range");
    const float peak = cfg.lr_peak;
    const int warmup = std::min(cfg.warmup_steps, stage_steps);
    if (step <= warmup) {
        return peak * static_cast<float>(step) / static_cast<float>(warmup);
    }
    const float min_lr = cfg.min_lr_factor * peak;
    const float progress =
        static_cast<float>(step - warmup) / static_cast<float>(stage_steps - warmup);
    return min_lr + (peak - min_lr) * 0.5f * (1.0f + std::cos(3.14159265358979323846f * progress));
}

void adamw_step(ModelParams& params, const ModelParams& grads, ModelParams& m, ModelParams& v,
                const TrainConfig& cfg, float lr, int step) {
    const float bc1 = 1.0f - std::pow(cfg.beta1, static_cast<float>(step));
    const float bc2 = 1.0f - std::pow(cfg.beta2, static_cast<float>(step));
    // All four containers share the tensor enumeration order.
    struct Slot {
        float* p;
        const float* g;
        float* m;
        float* v;
        std::int64_t n;
        bool decay;
    };
    std::vector<Slot> slots;
    params.for_each([&](const std::string&, auto& t, bool decay) {
        slots.push_back({t.data(), nullptr, nullptr, nullptr, t.size(), decay});
    });
    grads.for_each([](const std::string& name, const auto& t, bool) {
        require(t.allFinite(), ErrorCode::state,
                "adamw_step: non-finite gradient in " + name);
    });
    std::size_t i = 0;
    grads.for_each([&](const std::string&, const auto& t, bool) { slots[i++].g = t.data(); });
    i = 0;
    m.for_each([&](const std::string&, auto& t, bool) { slots[i++].m = t.data(); });
    i = 0;
    v.for_each([&](const std::string&, auto& t, bool) { slots[i++].v = t.data(); });

    for (auto& s : slots) {
        for (std::int64_t j = 0; j < s.n; ++j) {
            const float g = s.g[j];
            s.m[j] = cfg.beta1 * s.m[j] + (1.0f - cfg.beta1) * g;
            s.v[j] = cfg.beta2 * s.v[j] + (1.0f - cfg.beta2) * g * g;
            const float mhat = s.m[j] / bc1;
            const float vhat = s.v[j] / bc2;
            float update = lr * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            if (s.decay) {
                update += lr * cfg.weight_decay * s.p[j];
            }
            s.p[j] -= update;
        }
    }
}

namespace {

// Instances eligible for a stage: every profile plus questions whose hop
// count is allowed.
std::vector<std::size_t> stage_pool(const TokenizedData& data, const Stage& stage) {
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const int h = data.instances[i].hops;
        if (h == 0 || std::find(stage.hops.begin(), stage.hops.end(), h) != stage.hops.end()) {
            pool.push_back(i);
        }
    }
    return pool;
}

} // namespace

TrainResult train(ModelState& state, ModelParams& adam_m, ModelParams& adam_v,
                  const StagePlan& plan, const TrainConfig& cfg, const TokenizedData& train_data,
                  const TokenizedData* test_data, const TrainHooks& hooks) {
    cfg.validate();
    require(!plan.stages.empty(), ErrorCode::invalid_argument, "train: empty stage plan");

    const int micro = cfg.batch_size / cfg.grad_accum;
    ModelParams grads = ModelParams::shaped(state.config);
    Rng root(cfg.seed);

    TrainResult result;
    ForwardCache cache;
    Mat dlogits;

    // Global step counter across stages; state.step tracks it for resume.
    int global = 0;
    for (std::size_t g = 0; g < plan.stages.size(); ++g) {
        const Stage& stage = plan.stages[g];
        const auto pool = stage_pool(train_data, stage);
        require(!pool.empty(), ErrorCode::invalid_argument,
                "train: stage " + std::to_string(g) + " has an empty mixture");

        for (int s = 0; s < stage.steps; ++s, ++global) {
            if (static_cast<std::uint64_t>(global) < state.step) {
                continue; // fast-forward when resuming
            }
            const float lr = lr_at(s + 1, cfg, stage.steps);
            grads.set_zero();
            double loss_sum = 0.0;
            for (int a = 0; a < cfg.grad_accum; ++a) {
                Rng br = root.stream("batch", g, static_cast<std::uint64_t>(global))
                             .stream("micro", static_cast<std::uint64_t>(a));
                std::vector<std::size_t> idx(micro);
                for (int i = 0; i < micro; ++i) {
                    idx[i] = pool[br.below(pool.size())];
                }
                Batch batch = train_data.gather(idx, /*trim=*/true);
                forward(state.config, state.params, batch, cache);
                loss_sum += lm_loss(cache.logits, batch, &dlogits);
                dlogits *= 1.0f / static_cast<float>(cfg.grad_accum);
                backward(state.config, state.params, cache, dlogits, grads);
            }
            const float loss = static_cast<float>(loss_sum / cfg.grad_accum);
            adamw_step(state.params, grads, adam_m, adam_v, cfg, lr, s + 1);
            state.step = global + 1;
            result.steps_run = global + 1;
            result.final_loss = loss;

            const bool last_step =
                (g + 1 == plan.stages.size() && s + 1 == stage.steps);
            if (hooks.metric && ((global + 1) % cfg.log_every == 0 || last_step)) {
                std::ostringstream rec;
                rec << "{\"step\":" << (global + 1) << ",\"stage\":" << g << ",\"lr\":" << lr
                    << ",\"loss\":" << loss << "}";
                hooks.metric(rec.str());
            }

            bool stop = false;
            if (test_data && ((global + 1) % cfg.eval_every == 0 || last_step)) {
                const double acc = accuracy(state.config, state.params, *test_data);
                result.final_accuracy = acc;
                result.best_accuracy = std::max(result.best_accuracy, acc);
                if (hooks.metric) {
                    std::ostringstream rec;
                    rec << "{\"step\":" << (global + 1) << ",\"stage\":" << g
                        << ",\"test_accuracy\":" << acc << "}";
                    hooks.metric(rec.str());
                }
                if (hooks.log) {
                    std::ostringstream line;
                    line << "step " << (global + 1) << "/" << plan.total_steps() << " loss "
                         << loss << " acc " << acc;
                    hooks.log(line.str());
                }
                if (cfg.early_stop_accuracy > 0 && acc >= cfg.early_stop_accuracy) {
                    if (result.first_step_at_threshold < 0) {
                        result.first_step_at_threshold = global + 1;
                    }
                    stop = true;
                }
            } else if (hooks.log && (global + 1) % cfg.log_every == 0) {
                std::ostringstream line;
                line << "step " << (global + 1) << "/" << plan.total_steps() << " loss " << loss;
                hooks.log(line.str());
            }

            if (hooks.checkpoint &&
                ((global + 1) % cfg.checkpoint_every == 0 || last_step || stop)) {
                hooks.checkpoint(state, adam_m, adam_v, static_cast<int>(g));
            }
            if (stop) {
                result.early_stopped = true;
                return result;
            }
        }
    }
    return result;
}

double grad_check(const ModelState& state, const Batch& batch, double epsilon, int num_coords,
                  std::uint64_t seed) {
    require(num_coords > 0, ErrorCode::invalid_argument,
            "grad_check: empty parameter subsample");
    require(epsilon > 0, ErrorCode::invalid_argument, "grad_check: epsilon must be > 0");

    ForwardCache cache;
    forward(state.config, state.params, batch, cache);
    Mat dlogits;
    lm_loss(cache.logits, batch, &dlogits);
    ModelParams grads = ModelParams::shaped(state.config);
    backward(state.config, state.params, cache, dlogits, grads);

    std::vector<float> flat;
    grads.for_each([&](const std::string&, const auto& t, bool) {
        flat.insert(flat.end(), t.data(), t.data() + t.size());
    });
    const std::int64_t total = static_cast<std::int64_t>(flat.size());

    Rng rng = Rng(seed).stream("grad_check");
    double max_rel = 0.0;
    for (int c = 0; c < num_coords; ++c) {
        const std::int64_t i = static_cast<std::int64_t>(rng.below(total));
        const double lp = reference_loss(state.config, state.params, batch, i, epsilon);
        const double lm = reference_loss(state.config, state.params, batch, i, -epsilon);
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double analytic = flat[i];
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
        max_rel = std::max(max_rel, std::abs(analytic - numeric) / denom);
    }
    return max_rel;
}

} // namespace khop
