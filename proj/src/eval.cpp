#include "eval.hpp"

#include <numeric>

namespace khop {

namespace {

TokenId argmax_lowest(const Mat& logits, int row) {
    TokenId best = 0;
    float best_v = logits(row, 0);
    for (int j = 1; j < logits.cols(); ++j) {
        if (logits(row, j) > best_v) {
            best_v = logits(row, j);
            best = j;
        }
    }
    return best;
}

} // namespace

TokenId predict_answer(const ModelConfig& cfg, const ModelParams& params,
                       std::span<const TokenId> prompt, TokenId pad_id) {
    require(!prompt.empty(), ErrorCode::invalid_argument, "predict_answer: empty prompt");
    Batch b;
    b.B = 1;
    b.T = static_cast<int>(prompt.size());
    b.pad_id = pad_id;
    b.tokens.assign(prompt.begin(), prompt.end());
    ForwardCache cache;
    forward(cfg, params, b, cache);
    return argmax_lowest(cache.logits, b.T - 1);
}

std::vector<TokenId> predict_answers(const ModelConfig& cfg, const ModelParams& params,
                                     const TokenizedData& data,
                                     std::span<const std::size_t> idx, int eval_batch) {
    std::vector<std::size_t> all;
    if (idx.empty()) {
        all.resize(data.size());
        std::iota(all.begin(), all.end(), 0);
        idx = all;
    }
    std::vector<TokenId> out(idx.size(), -1);
    ForwardCache cache;
    for (std::size_t start = 0; start < idx.size(); start += eval_batch) {
        const std::size_t n = std::min<std::size_t>(eval_batch, idx.size() - start);
        Batch b = data.gather(idx.subspan(start, n), /*trim=*/true);
        forward(cfg, params, b, cache);
        for (std::size_t r = 0; r < n; ++r) {
            const auto& inst = data.instances[idx[start + r]];
            require(inst.answer_position >= 0, ErrorCode::invalid_argument,
                    "predict_answers: instance has no answer slot");
            out[start + r] =
                argmax_lowest(cache.logits, static_cast<int>(r) * b.T + inst.answer_position);
        }
    }
    return out;
}

double accuracy(const ModelConfig& cfg, const ModelParams& params, const TokenizedData& test,
                int eval_batch) {
    require(test.size() > 0, ErrorCode::invalid_argument, "accuracy: empty test set");
    const auto preds = predict_answers(cfg, params, test, {}, eval_batch);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == test.instances[i].answer_token) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

} // namespace khop
