#pragma once

#include <optional>
#include <span>
#include <vector>

#include "model.hpp"

namespace khop {

// Token batch, row-major [B x T], right-padded with pad_id.
struct Batch {
    int B = 0;
    int T = 0;
    TokenId pad_id = 0;
    std::vector<TokenId> tokens;

    TokenId tok(int b, int t) const { return tokens[static_cast<std::size_t>(b) * T + t]; }
    TokenId& tok(int b, int t) { return tokens[static_cast<std::size_t>(b) * T + t]; }
    int rows() const { return B * T; }
};

enum class PatchSite { residual, mlp_out };

// Replace the activation at (site, layer, batch row, position) before any
// later computation consumes it.
struct Intervention {
    PatchSite site = PatchSite::residual;
    int layer = 0;
    int batch = 0;
    int position = 0;
    Vec value;
};

struct TraceOptions {
    bool residual = false;
    bool mlp_out = false;
    bool attn_out = false;
    bool attn_probs = false;
};

// Captured activations; matrices are [B*T x d] with row b*T+t.
struct ActivationTrace {
    std::vector<Mat> residual;
    std::vector<Mat> mlp_out;
    std::vector<Mat> attn_out;
    std::vector<std::vector<Mat>> attn_probs; // [layer][b*H + h], T x T
};

// Everything the backward pass needs, kept per forward call.
struct ForwardCache {
    int B = 0, T = 0;
    std::vector<TokenId> tokens;
    Mat emb;
    struct Layer {
        Mat x_in;
        Mat ln1_out;
        Vec ln1_mean, ln1_rstd;
        Mat q, k, v; // post-rope q,k
        std::vector<Mat> probs; // per (b*H + h), T x T
        Mat ctx;
        Mat x_mid;
        Mat ln2_out;
        Vec ln2_mean, ln2_rstd;
        Mat h_pre, h_act;
        Mat mlp_out;
    };
    std::vector<Layer> layers;
    Mat x_final; // last residual stream
    Mat lnf_out;
    Vec lnf_mean, lnf_rstd;
    Mat logits; // [B*T x vocab]
};

// Rotary embedding over interleaved pairs, per head. `rows` follow the batch
// layout (row n has position n % T). inverse=true applies the opposite
// rotation (used by the backward pass).
void apply_rope(Mat& x, int T, int n_heads, float base, bool inverse = false);

// Full forward pass with optional interventions and trace capture.
void forward(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
             ForwardCache& cache, std::span<const Intervention> interventions = {},
             ActivationTrace* trace = nullptr, const TraceOptions* trace_opts = nullptr);

// Mean next-token cross entropy over positions whose target is not pad.
// Fills dlogits (scaled by 1/num_masked) when given.
float lm_loss(const Mat& logits, const Batch& batch, Mat* dlogits = nullptr);

// Backprop through a cached forward; accumulates into grads.
void backward(const ModelConfig& cfg, const ModelParams& params, const ForwardCache& cache,
              const Mat& dlogits, ModelParams& grads);

} // namespace khop
