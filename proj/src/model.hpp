#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace khop {

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;

struct ModelConfig {
    int n_layers = 12;
    int n_heads = 12;
    int d_model = 768;
    int d_mlp = 0; // 0 = 4 * d_model
    int vocab_size = 0;
    int context_length = 1024;
    float rope_base = 10000.0f;
    float init_std = 0.02f;
    float dropout_rate = 0.0f;

    int mlp_dim() const { return d_mlp > 0 ? d_mlp : 4 * d_model; }
    int head_dim() const { return d_model / n_heads; }

    void validate() const;
};

struct LayerParams {
    Vec ln1_g, ln1_b;
    Mat wq, wk, wv, wo; // d x d, applied as y = x * W
    Vec bq, bk, bv, bo;
    Vec ln2_g, ln2_b;
    Mat w1; // d x d_mlp
    Vec b1;
    Mat w2; // d_mlp x d
    Vec b2;
};

// Parameter container with a fixed named-tensor enumeration order used by
// the initializer, optimizer, checkpoints and the gradient checker alike.
struct ModelParams {
    Mat wte; // vocab x d; output head is tied to this
    std::vector<LayerParams> layers;
    Vec lnf_g, lnf_b;

    static ModelParams shaped(const ModelConfig& c);

    // f(name, tensor&, weight_decay_applies); tensor is Mat or Vec.
    template <typename F>
    void for_each(F&& f) {
        f("wte", wte, true);
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& L = layers[l];
            const std::string p = "layers." + std::to_string(l) + ".";
            f(p + "ln1_g", L.ln1_g, false);
            f(p + "ln1_b", L.ln1_b, false);
            f(p + "wq", L.wq, true);
            f(p + "bq", L.bq, false);
            f(p + "wk", L.wk, true);
            f(p + "bk", L.bk, false);
            f(p + "wv", L.wv, true);
            f(p + "bv", L.bv, false);
            f(p + "wo", L.wo, true);
            f(p + "bo", L.bo, false);
            f(p + "ln2_g", L.ln2_g, false);
            f(p + "ln2_b", L.ln2_b, false);
            f(p + "w1", L.w1, true);
            f(p + "b1", L.b1, false);
            f(p + "w2", L.w2, true);
            f(p + "b2", L.b2, false);
        }
        f("lnf_g", lnf_g, false);
        f("lnf_b", lnf_b, false);
    }

    template <typename F>
    void for_each(F&& f) const {
        const_cast<ModelParams*>(this)->for_each(
            [&f](const std::string& name, auto& t, bool decay) {
                f(name, std::as_const(t), decay);
            });
    }

    void set_zero();
    std::int64_t count() const;
};

struct ModelState {
    ModelConfig config;
    ModelParams params;
    std::uint64_t step = 0;
};

ModelState init_model(const ModelConfig& config, std::uint64_t seed);

std::uint64_t params_checksum(const ModelParams& p);

// Flat binary checkpoint: magic, version, JSON header (config, step, extra),
// then named column-major float32 tensors, then an FNV-1a checksum of the
// whole payload. Reload is byte-exact.
struct CheckpointExtra {
    std::string json; // free-form JSON object persisted verbatim
};

void save_checkpoint(const std::filesystem::path& path, const ModelState& state,
                     const ModelParams* adam_m = nullptr, const ModelParams* adam_v = nullptr,
                     const std::string& extra_json = "{}");

struct LoadedCheckpoint {
    ModelState state;
    bool has_optimizer = false;
    ModelParams adam_m, adam_v;
    std::string extra_json;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

} // namespace khop
