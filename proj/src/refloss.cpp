#include "refloss.hpp"

#include <cmath>

namespace khop {

namespace {

using Matd = Eigen::MatrixXd;
using Vecd = Eigen::VectorXd;

Matd layernorm_d(const Matd& x, const Vecd& g, const Vecd& b) {
    Matd y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double mu = x.row(i).mean();
        const double var = (x.row(i).array() - mu).square().mean();
        const double rs = 1.0 / std::sqrt(var + 1e-5);
        y.row(i) =
            (((x.row(i).array() - mu) * rs) * g.transpose().array() + b.transpose().array())
                .matrix();
    }
    return y;
}

void rope_d(Matd& x, int T, int n_heads, double base) {
    const int d = static_cast<int>(x.cols());
    const int hd = d / n_heads;
    for (Eigen::Index row = 0; row < x.rows(); ++row) {
        const int t = static_cast<int>(row % T);
        for (int h = 0; h < n_heads; ++h) {
            for (int i = 0; i < hd / 2; ++i) {
                const double theta =
                    t * std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(hd));
                const double c = std::cos(theta);
                const double s = std::sin(theta);
                const double x0 = x(row, h * hd + 2 * i);
                const double x1 = x(row, h * hd + 2 * i + 1);
                x(row, h * hd + 2 * i) = x0 * c - x1 * s;
                x(row, h * hd + 2 * i + 1) = x0 * s + x1 * c;
            }
        }
    }
}

} // namespace

double reference_loss(const ModelConfig& cfg, const ModelParams& params, const Batch& batch,
                      std::int64_t perturb_index, double perturb_delta) {
    const int B = batch.B;
    const int T = batch.T;
    const int N = B * T;
    const int d = cfg.d_model;
    const int H = cfg.n_heads;
    const int hd = cfg.head_dim();

    // Copy parameters into doubles, applying the optional single-coordinate
    // perturbation in flattened enumeration order.
    std::vector<Matd> tensors;
    std::int64_t cursor = 0;
    params.for_each([&](const std::string&, const auto& t, bool) {
        Matd m = t.template cast<double>();
        if (perturb_index >= cursor && perturb_index < cursor + t.size()) {
            m.data()[perturb_index - cursor] += perturb_delta;
        }
        cursor += t.size();
        tensors.push_back(std::move(m));
    });

    std::size_t ti = 0;
    auto next = [&]() -> Matd& { return tensors[ti++]; };
    Matd wte = next();
    struct Ld {
        Vecd ln1_g, ln1_b;
        Matd wq, wk, wv, wo;
        Vecd bq, bk, bv, bo;
        Vecd ln2_g, ln2_b;
        Matd w1;
        Vecd b1;
        Matd w2;
        Vecd b2;
    };
    std::vector<Ld> layers(cfg.n_layers);
    for (auto& L : layers) {
        L.ln1_g = next();
        L.ln1_b = next();
        L.wq = next();
        L.bq = next();
        L.wk = next();
        L.bk = next();
        L.wv = next();
        L.bv = next();
        L.wo = next();
        L.bo = next();
        L.ln2_g = next();
        L.ln2_b = next();
        L.w1 = next();
        L.b1 = next();
        L.w2 = next();
        L.b2 = next();
    }
    Vecd lnf_g = next();
    Vecd lnf_b = next();

    Matd x(N, d);
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t < T; ++t) {
            x.row(b * T + t) = wte.row(batch.tok(b, t));
        }
    }

    for (const auto& L : layers) {
        Matd ln1 = layernorm_d(x, L.ln1_g, L.ln1_b);
        Matd q = ln1 * L.wq;
        q.rowwise() += L.bq.transpose();
        Matd k = ln1 * L.wk;
        k.rowwise() += L.bk.transpose();
        Matd v = ln1 * L.wv;
        v.rowwise() += L.bv.transpose();
        rope_d(q, T, H, cfg.rope_base);
        rope_d(k, T, H, cfg.rope_base);

        Matd ctx(N, d);
        for (int b = 0; b < B; ++b) {
            for (int h = 0; h < H; ++h) {
                auto Qh = q.block(b * T, h * hd, T, hd);
                auto Kh = k.block(b * T, h * hd, T, hd);
                auto Vh = v.block(b * T, h * hd, T, hd);
                Matd s = Qh * Kh.transpose() / std::sqrt(static_cast<double>(hd));
                Matd p = Matd::Zero(T, T);
                for (int i = 0; i < T; ++i) {
                    auto row = s.row(i).head(i + 1);
                    const double mx = row.maxCoeff();
                    Eigen::ArrayXd e = (row.array() - mx).exp();
                    p.row(i).head(i + 1) = (e / e.sum()).matrix();
                }
                ctx.block(b * T, h * hd, T, hd) = p * Vh;
            }
        }
        Matd attn = ctx * L.wo;
        attn.rowwise() += L.bo.transpose();
        Matd x_mid = x + attn;

        Matd ln2 = layernorm_d(x_mid, L.ln2_g, L.ln2_b);
        Matd h_pre = ln2 * L.w1;
        h_pre.rowwise() += L.b1.transpose();
        Matd h_act = h_pre.unaryExpr([](double u) {
            const double z = 0.7978845608028654 * (u + 0.044715 * u * u * u);
            return 0.5 * u * (1.0 + std::tanh(z));
        });
        Matd mlp = h_act * L.w2;
        mlp.rowwise() += L.b2.transpose();
        x = x_mid + mlp;
    }

    Matd lnf = layernorm_d(x, lnf_g, lnf_b);
    Matd logits = lnf * wte.transpose();

    double loss = 0.0;
    std::int64_t masked = 0;
    for (int b = 0; b < B; ++b) {
        for (int t = 0; t + 1 < T; ++t) {
            const TokenId target = batch.tok(b, t + 1);
            if (target == batch.pad_id) {
                continue;
            }
            const auto lrow = logits.row(b * T + t);
            const double mx = lrow.maxCoeff();
            const double lse = std::log((lrow.array() - mx).exp().sum()) + mx;
            loss += lse - lrow(target);
            ++masked;
        }
    }
    return loss / static_cast<double>(masked);
}

} // namespace khop
