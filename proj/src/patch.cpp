#include "patch.hpp"

#include <numeric>

namespace khop {

namespace {

bool valid_corruption(const Query& clean, const Query& cand, int family) {
    if (cand.same_chain(clean)) {
        return false;
    }
    if (family == 0) {
        return true;
    }
    const int k = clean.hops();
    for (int hop = 1; hop < k; ++hop) {
        const bool differs = clean.bridges[hop - 1] != cand.bridges[hop - 1];
        if ((hop == family) != differs) {
            return false;
        }
    }
    const bool answer_differs = clean.answer != cand.answer;
    return (family == k) == answer_differs;
}

// Probability of the gold answer token at the answer slot.
double gold_probability(const Mat& logits, int row, TokenId gold) {
    const auto lrow = logits.row(row);
    const float mx = lrow.maxCoeff();
    const double denom = static_cast<double>((lrow.array() - mx).exp().sum());
    return std::exp(static_cast<double>(lrow(gold) - mx)) / denom;
}

} // namespace

std::optional<std::size_t> select_corrupted(const TokenizedData& pool, std::size_t clean_idx,
                                            int family, Rng& rng, int cap) {
    const Query& clean = pool.instances[clean_idx].query;
    require(family >= 0 && family <= clean.hops(), ErrorCode::invalid_argument,
            "select_corrupted: family out of range");
    for (int draw = 0; draw < cap; ++draw) {
        const std::size_t j = static_cast<std::size_t>(rng.below(pool.size()));
        if (j == clean_idx) {
            continue;
        }
        const auto& cand = pool.instances[j];
        if (cand.hops != clean.hops()) {
            continue;
        }
        if (valid_corruption(clean, cand.query, family)) {
            return j;
        }
    }
    return std::nullopt;
}

double run_patch(const ModelConfig& cfg, const ModelParams& params, const TokenizedData& pool,
                 std::size_t clean_idx, std::size_t corrupted_idx, PatchSite site, int layer,
                 int position) {
    const auto& clean = pool.instances[clean_idx];
    const auto& corrupted = pool.instances[corrupted_idx];
    require(clean.answer_position == corrupted.answer_position &&
                clean.entity_position == corrupted.entity_position,
            ErrorCode::invalid_argument, "run_patch: template positions differ");

    const std::size_t idx_c[1] = {corrupted_idx};
    Batch cb = pool.gather(idx_c, /*trim=*/true);
    TraceOptions topts;
    topts.residual = site == PatchSite::residual;
    topts.mlp_out = site == PatchSite::mlp_out;
    ForwardCache cache;
    ActivationTrace trace;
    forward(cfg, params, cb, cache, {}, &trace, &topts);
    const Mat& source = site == PatchSite::residual ? trace.residual[layer] : trace.mlp_out[layer];
    Vec patch_vec = source.row(position).transpose();

    const std::size_t idx_cl[1] = {clean_idx};
    Batch clb = pool.gather(idx_cl, /*trim=*/true);
    forward(cfg, params, clb, cache);
    const double p_clean = gold_probability(cache.logits, clean.answer_position,
                                            clean.answer_token);

    Intervention iv{site, layer, 0, position, std::move(patch_vec)};
    forward(cfg, params, clb, cache, {&iv, 1});
    const double p_patched = gold_probability(cache.logits, clean.answer_position,
                                              clean.answer_token);
    return p_clean - p_patched;
}

std::vector<PatchReport> patch_sweep(const ModelConfig& cfg, const ModelParams& params,
                                     const TokenizedData& pool, const PatchOptions& opts) {
    require(pool.size() >= 2, ErrorCode::invalid_argument, "patch_sweep: pool too small");
    const auto& first = pool.instances[0];
    const int k = first.hops;

    std::vector<int> positions;
    if (opts.all_positions) {
        for (int p = 0; p <= first.answer_position; ++p) {
            positions.push_back(p);
        }
    } else {
        positions.push_back(first.answer_position);
    }

    TraceOptions topts;
    topts.residual = opts.site == PatchSite::residual;
    topts.mlp_out = opts.site == PatchSite::mlp_out;

    std::vector<PatchReport> reports;
    for (int family : opts.families) {
        require(family >= 0 && family <= k, ErrorCode::invalid_argument,
                "patch_sweep: family out of range");
        PatchReport report;
        report.site = opts.site;
        report.family = family;
        report.positions = positions;
        report.effects = Mat::Zero(cfg.n_layers, static_cast<int>(positions.size()));

        // Deterministic instance order; rejection stream per family.
        Rng order_rng = Rng(opts.seed).stream("patch_order", family);
        std::vector<std::size_t> order(pool.size());
        std::iota(order.begin(), order.end(), 0);
        order_rng.shuffle(order);
        Rng reject_rng = Rng(opts.seed).stream("patch_reject", family);

        std::vector<std::size_t> cleans;
        std::vector<std::size_t> corrupteds;
        for (std::size_t i = 0;
             i < order.size() && static_cast<int>(cleans.size()) < opts.max_instances; ++i) {
            auto partner = select_corrupted(pool, order[i], family, reject_rng,
                                            opts.rejection_cap);
            if (!partner) {
                ++report.skipped;
                continue;
            }
            cleans.push_back(order[i]);
            corrupteds.push_back(*partner);
        }
        report.instances_used = static_cast<int>(cleans.size());

        ForwardCache cache;
        ActivationTrace trace;
        for (std::size_t start = 0; start < cleans.size();
             start += static_cast<std::size_t>(opts.batch)) {
            const std::size_t count =
                std::min<std::size_t>(opts.batch, cleans.size() - start);

            Batch cb = pool.gather({corrupteds.data() + start, count}, /*trim=*/false);
            forward(cfg, params, cb, cache, {}, &trace, &topts);
            // Keep only the traced site tensors for this window.
            std::vector<Mat> site_vals(cfg.n_layers);
            for (int l = 0; l < cfg.n_layers; ++l) {
                site_vals[l] =
                    opts.site == PatchSite::residual ? trace.residual[l] : trace.mlp_out[l];
            }

            Batch clb = pool.gather({cleans.data() + start, count}, /*trim=*/false);
            forward(cfg, params, clb, cache);
            std::vector<double> p_clean(count);
            for (std::size_t r = 0; r < count; ++r) {
                const auto& inst = pool.instances[cleans[start + r]];
                p_clean[r] = gold_probability(
                    cache.logits, static_cast<int>(r) * clb.T + inst.answer_position,
                    inst.answer_token);
            }

            std::vector<Intervention> ivs(count);
            for (int l = 0; l < cfg.n_layers; ++l) {
                for (std::size_t pi = 0; pi < positions.size(); ++pi) {
                    const int pos = positions[pi];
                    for (std::size_t r = 0; r < count; ++r) {
                        ivs[r] = Intervention{opts.site, l, static_cast<int>(r), pos,
                                              site_vals[l]
                                                  .row(static_cast<int>(r) * cb.T + pos)
                                                  .transpose()};
                    }
                    forward(cfg, params, clb, cache, ivs);
                    for (std::size_t r = 0; r < count; ++r) {
                        const auto& inst = pool.instances[cleans[start + r]];
                        const double p_patched = gold_probability(
                            cache.logits, static_cast<int>(r) * clb.T + inst.answer_position,
                            inst.answer_token);
                        report.effects(l, static_cast<int>(pi)) +=
                            static_cast<float>(p_clean[r] - p_patched);
                    }
                }
            }
        }
        if (report.instances_used > 0) {
            report.effects /= static_cast<float>(report.instances_used);
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace khop
