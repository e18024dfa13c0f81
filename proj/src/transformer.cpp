#include "transformer.hpp"

#include <cmath>
#include <limits>

namespace khop {

namespace {

constexpr float kLnEps = 1e-5f;
constexpr float kGeluC = 0.7978845608028654f; // sqrt(2/pi)
constexpr float kGeluA = 0.044715f;

// y = ln(x) * g + b per row; caches mean and 1/std.
void layernorm_forward(const Mat& x, const Vec& g, const Vec& b, Mat& y, Vec& mean, Vec& rstd) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    y.resize(n, d);
    mean.resize(n);
    rstd.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const float mu = x.row(i).mean();
        const float var = (x.row(i).array() - mu).square().mean();
        const float rs = 1.0f / std::sqrt(var + kLnEps);
        mean(i) = mu;
        rstd(i) = rs;
        y.row(i) = (((x.row(i).array() - mu) * rs) * g.transpose().array() +
                    b.transpose().array())
                       .matrix();
    }
}

void layernorm_backward(const Mat& x, const Vec& g, const Vec& mean, const Vec& rstd,
                        const Mat& dy, Mat& dx, Vec& dg, Vec& db) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    dx.resize(n, d);
    Eigen::ArrayXf xhat(d);
    Eigen::ArrayXf dxhat(d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const float rs = rstd(i);
        xhat = (x.row(i).transpose().array() - mean(i)) * rs;
        dxhat = dy.row(i).transpose().array() * g.array();
        const float m1 = dxhat.mean();
        const float m2 = (dxhat * xhat).mean();
        dx.row(i) = (rs * (dxhat - m1 - xhat * m2)).matrix().transpose();
        dg.array() += dy.row(i).transpose().array() * xhat;
        db.array() += dy.row(i).transpose().array();
    }
}

} // namespace

void apply_rope(Mat& x, int T, int n_heads, float base, bool inverse) {
    const Eigen::Index n = x.rows();
    const int d = static_cast<int>(x.cols());
    const int hd = d / n_heads;
    const int pairs = hd / 2;
    // Angles depend only on (position, pair); build the tables once per call.
    std::vector<float> cos_tab(static_cast<std::size_t>(T) * pairs);
    std::vector<float> sin_tab(static_cast<std::size_t>(T) * pairs);
    for (int i = 0; i < pairs; ++i) {
        const float inv_freq =
            std::pow(base, -2.0f * static_cast<float>(i) / static_cast<float>(hd));
        for (int t = 0; t < T; ++t) {
            const float theta = static_cast<float>(t) * inv_freq;
            cos_tab[static_cast<std::size_t>(t) * pairs + i] = std::cos(theta);
            sin_tab[static_cast<std::size_t>(t) * pairs + i] =
                inverse ? -std::sin(theta) : std::sin(theta);
        }
    }
    for (Eigen::Index row = 0; row < n; ++row) {
        const int t = static_cast<int>(row % T);
        if (t == 0) {
            continue; // zero angle
        }
        const float* ct = cos_tab.data() + static_cast<std::size_t>(t) * pairs;
        const float* st = sin_tab.data() + static_cast<std::size_t>(t) * pairs;
        for (int h = 0; h < n_heads; ++h) {
            for (int i = 0; i < pairs; ++i) {
                const Eigen::Index c0 = h * hd + 2 * i;
                const Eigen::Index c1 = c0 + 1;
                const float x0 = x(row, c0);
                const float x1 = x(row, c1);
                x(row, c0) = x0 * ct[i] - x1 * st[i];
                x(row, c1) = x0 * st[i] + x1 * ct[i];
            }
        }
    }
}

void forward(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
             ForwardCache& cache, std::span<const Intervention> interventions,
             ActivationTrace* trace, const TraceOptions* trace_opts) {
    const int B = batch.B;
    const int T = batch.T;
    const int N = B * T;
    const int d = cfg.d_model;
    const int H = cfg.n_heads;
    const int hd = cfg.head_dim();
    const int m = cfg.mlp_dim();
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    require(T <= cfg.context_length, ErrorCode::invalid_argument,
            "forward: sequence longer than context_length");
    for (TokenId t : batch.tokens) {
        require(t >= 0 && t < cfg.vocab_size, ErrorCode::invalid_argument,
                "forward: token id out of range");
    }
    for (const auto& iv : interventions) {
        require(iv.layer >= 0 && iv.layer < cfg.n_layers, ErrorCode::invalid_argument,
                "intervention: layer out of range");
        require(iv.batch >= 0 && iv.batch < B && iv.position >= 0 && iv.position < T,
                ErrorCode::invalid_argument, "intervention: position out of range");
        require(iv.value.size() == d, ErrorCode::invalid_argument,
                "intervention: vector size mismatch");
    }

    TraceOptions topts = trace_opts ? *trace_opts : TraceOptions{};
    if (trace) {
        trace->residual.assign(topts.residual ? cfg.n_layers : 0, Mat());
        trace->mlp_out.assign(topts.mlp_out ? cfg.n_layers : 0, Mat());
        trace->attn_out.assign(topts.attn_out ? cfg.n_layers : 0, Mat());
        trace->attn_probs.assign(topts.attn_probs ? cfg.n_layers : 0, {});
    }

    cache.B = B;
    cache.T = T;
    cache.tokens = batch.tokens;
    cache.layers.resize(cfg.n_layers);

    cache.emb.resize(N, d);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
            cache.emb.row(b * T + t) = params.wte.row(batch.tok(b, t));
        }
    }

    Mat x = cache.emb;
    for (int l = 0; l < cfg.n_layers; ++l) {
        auto& L = params.layers[l];
        auto& C = cache.layers[l];
        C.x_in = x;

        layernorm_forward(C.x_in, L.ln1_g, L.ln1_b, C.ln1_out, C.ln1_mean, C.ln1_rstd);

        C.q.noalias() = C.ln1_out * L.wq;
        C.q.rowwise() += L.bq.transpose();
        C.k.noalias() = C.ln1_out * L.wk;
        C.k.rowwise() += L.bk.transpose();
        C.v.noalias() = C.ln1_out * L.wv;
        C.v.rowwise() += L.bv.transpose();
        apply_rope(C.q, T, H, cfg.rope_base);
        apply_rope(C.k, T, H, cfg.rope_base);

        C.ctx.resize(N, d);
        C.probs.assign(static_cast<std::size_t>(B) * H, Mat());
        for (int b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                auto Qh = C.q.block(b * T, h * hd, T, hd);
                auto Kh = C.k.block(b * T, h * hd, T, hd);
                auto Vh = C.v.block(b * T, h * hd, T, hd);
                Mat s(T, T);
                s.noalias() = Qh * Kh.transpose();
                s *= scale;
                Mat& p = C.probs[static_cast<std::size_t>(b) * H + h];
                p.resize(T, T);
                for (int i = 0; i < T; ++i) {
                    // Causal: row i attends to columns 0..i.
                    auto row = s.row(i).head(i + 1);
                    const float mx = row.maxCoeff();
                    Eigen::ArrayXf e = (row.array() - mx).exp();
                    const float sum = e.sum();
                    p.row(i).head(i + 1) = (e / sum).matrix();
                    p.row(i).tail(T - i - 1).setZero();
                }
                C.ctx.block(b * T, h * hd, T, hd).noalias() = p * Vh;
            }
        }

        Mat attn_out(N, d);
        attn_out.noalias() = C.ctx * L.wo;
        attn_out.rowwise() += L.bo.transpose();

        C.x_mid = C.x_in + attn_out;

        layernorm_forward(C.x_mid, L.ln2_g, L.ln2_b, C.ln2_out, C.ln2_mean, C.ln2_rstd);

        C.h_pre.noalias() = C.ln2_out * L.w1;
        C.h_pre.rowwise() += L.b1.transpose();
        {
            const auto xa = C.h_pre.array();
            C.h_act = (0.5f * xa * (1.0f + (kGeluC * (xa + kGeluA * xa.cube())).tanh())).matrix();
        }
        C.mlp_out.noalias() = C.h_act * L.w2;
        C.mlp_out.rowwise() += L.b2.transpose();

        for (const auto& iv : interventions) {
            if (iv.site == PatchSite::mlp_out && iv.layer == l) {
                C.mlp_out.row(iv.batch * T + iv.position) = iv.value.transpose();
            }
        }

        x = C.x_mid + C.mlp_out;

        for (const auto& iv : interventions) {
            if (iv.site == PatchSite::residual && iv.layer == l) {
                x.row(iv.batch * T + iv.position) = iv.value.transpose();
            }
        }

        if (trace) {
            if (topts.residual) {
                trace->residual[l] = x;
            }
            if (topts.mlp_out) {
                trace->mlp_out[l] = C.mlp_out;
            }
            if (topts.attn_out) {
                trace->attn_out[l] = attn_out;
            }
            if (topts.attn_probs) {
                trace->attn_probs[l] = C.probs;
            }
        }
        (void)m;
    }

    cache.x_final = x;
    layernorm_forward(cache.x_final, params.lnf_g, params.lnf_b, cache.lnf_out, cache.lnf_mean,
                      cache.lnf_rstd);
    cache.logits.noalias() = cache.lnf_out * params.wte.transpose();
}

float lm_loss(const Mat& logits, const Batch& batch, Mat* dlogits) {
    const int B = batch.B;
    const int T = batch.T;
    const int V = static_cast<int>(logits.cols());
    if (dlogits) {
        dlogits->setZero(logits.rows(), V);
    }
    // Position t predicts token t+1; padded targets are masked out.
    std::int64_t masked = 0;
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t + 1 < T; ++t) {
            if (batch.tok(b, t + 1) != batch.pad_id) {
                ++masked;
            }
        }
    }
    require(masked > 0, ErrorCode::invalid_argument, "lm_loss: batch has no unmasked targets");

    double loss = 0.0;
    const float inv = 1.0f / static_cast<float>(masked);
    Eigen::ArrayXf e(V);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t + 1 < T; ++t) {
            const TokenId target = batch.tok(b, t + 1);
            if (target == batch.pad_id) {
                continue;
            }
            const int row = b * T + t;
            const auto lrow = logits.row(row);
            const float mx = lrow.maxCoeff();
            e = (lrow.transpose().array() - mx).exp();
            const float sum = e.sum();
            loss += -(static_cast<double>(lrow(target) - mx) - std::log(static_cast<double>(sum)));
            if (dlogits) {
                dlogits->row(row) = ((e / sum) * inv).matrix().transpose();
                (*dlogits)(row, target) -= inv;
            }
        }
    }
    return static_cast<float>(loss / static_cast<double>(masked));
}

void backward(const ModelConfig& cfg, const ModelParams& params, const ForwardCache& cache,
              const Mat& dlogits, ModelParams& grads) {
    const int B = cache.B;
    const int T = cache.T;
    const int N = B * T;
    const int d = cfg.d_model;
    const int H = cfg.n_heads;
    const int hd = cfg.head_dim();
    const float scale = 1.0f / std::sqrt(static_cast<float>(hd));

    // Output head (tied): logits = lnf_out * wte^T.
    Mat dlnf_out(N, d);
    dlnf_out.noalias() = dlogits * params.wte;
    grads.wte.noalias() += dlogits.transpose() * cache.lnf_out;

    Mat dx;
    layernorm_backward(cache.x_final, params.lnf_g, cache.lnf_mean, cache.lnf_rstd, dlnf_out, dx,
                       grads.lnf_g, grads.lnf_b);

    for (int l = cfg.n_layers - 1; l >= 0; --l) {
        const auto& L = params.layers[l];
        const auto& C = cache.layers[l];
        auto& G = grads.layers[l];

        // x = x_mid + mlp_out
        const Mat& dmlp_out = dx;
        G.b2.array() += dmlp_out.colwise().sum().transpose().array();
        G.w2.noalias() += C.h_act.transpose() * dmlp_out;
        Mat dh_act(N, cfg.mlp_dim());
        dh_act.noalias() = dmlp_out * L.w2.transpose();
        Mat dh_pre(N, cfg.mlp_dim());
        {
            const auto xa = C.h_pre.array();
            const auto t = (kGeluC * (xa + kGeluA * xa.cube())).tanh();
            const auto du = kGeluC * (1.0f + 3.0f * kGeluA * xa.square());
            dh_pre = (dh_act.array() * (0.5f * (1.0f + t) + 0.5f * xa * (1.0f - t.square()) * du))
                         .matrix();
        }
        G.b1.array() += dh_pre.colwise().sum().transpose().array();
        G.w1.noalias() += C.ln2_out.transpose() * dh_pre;
        Mat dln2_out(N, d);
        dln2_out.noalias() = dh_pre * L.w1.transpose();

        Mat dx_mid;
        layernorm_backward(C.x_mid, L.ln2_g, C.ln2_mean, C.ln2_rstd, dln2_out, dx_mid, G.ln2_g,
                           G.ln2_b);
        dx_mid += dx; // residual branch

        // x_mid = x_in + attn_out
        const Mat& dattn_out = dx_mid;
        G.bo.array() += dattn_out.colwise().sum().transpose().array();
        G.wo.noalias() += C.ctx.transpose() * dattn_out;
        Mat dctx(N, d);
        dctx.noalias() = dattn_out * L.wo.transpose();

        Mat dq = Mat::Zero(N, d);
        Mat dk = Mat::Zero(N, d);
        Mat dv = Mat::Zero(N, d);
        for (int b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                auto Qh = C.q.block(b * T, h * hd, T, hd);
                auto Kh = C.k.block(b * T, h * hd, T, hd);
                auto Vh = C.v.block(b * T, h * hd, T, hd);
                const Mat& P = C.probs[static_cast<std::size_t>(b) * H + h];
                auto dCtx = dctx.block(b * T, h * hd, T, hd);

                Mat dP(T, T);
                dP.noalias() = dCtx * Vh.transpose();
                dv.block(b * T, h * hd, T, hd).noalias() = P.transpose() * dCtx;

                Mat dS(T, T);
                for (int i = 0; i < T; ++i) {
                    const auto prow = P.row(i).array();
                    const auto dprow = dP.row(i).array();
                    const float dot = (prow * dprow).sum();
                    dS.row(i) = (prow * (dprow - dot)).matrix();
                }
                dq.block(b * T, h * hd, T, hd).noalias() = dS * Kh * scale;
                dk.block(b * T, h * hd, T, hd).noalias() = dS.transpose() * Qh * scale;
            }
        }

        apply_rope(dq, T, H, cfg.rope_base, /*inverse=*/true);
        apply_rope(dk, T, H, cfg.rope_base, /*inverse=*/true);

        G.bq.array() += dq.colwise().sum().transpose().array();
        G.bk.array() += dk.colwise().sum().transpose().array();
        G.bv.array() += dv.colwise().sum().transpose().array();
        G.wq.noalias() += C.ln1_out.transpose() * dq;
        G.wk.noalias() += C.ln1_out.transpose() * dk;
        G.wv.noalias() += C.ln1_out.transpose() * dv;

        Mat dln1_out(N, d);
        dln1_out.noalias() = dq * L.wq.transpose();
        dln1_out.noalias() += dk * L.wk.transpose();
        dln1_out.noalias() += dv * L.wv.transpose();

        Mat dx_in;
        layernorm_backward(C.x_in, L.ln1_g, C.ln1_mean, C.ln1_rstd, dln1_out, dx_in, G.ln1_g,
                           G.ln1_b);
        dx_in += dx_mid; // residual branch
        dx = std::move(dx_in);
    }

    // Embedding rows.
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
            grads.wte.row(cache.tokens[static_cast<std::size_t>(b) * T + t]) += dx.row(b * T + t);
        }
    }
}

} // namespace khop
