#pragma once

#include <span>

#include "data.hpp"

namespace khop {

// Greedy single-token answer: argmax over the answer-slot logits, ties broken
// toward the lowest token id.
TokenId predict_answer(const ModelConfig& cfg, const ModelParams& params,
                       std::span<const TokenId> prompt, TokenId pad_id);

// Predictions for the given instances, batched; idx empty means all.
std::vector<TokenId> predict_answers(const ModelConfig& cfg, const ModelParams& params,
                                     const TokenizedData& data,
                                     std::span<const std::size_t> idx = {},
                                     int eval_batch = 128);

// Mean exact match of the greedy answer against the gold answer token.
double accuracy(const ModelConfig& cfg, const ModelParams& params, const TokenizedData& test,
                int eval_batch = 128);

} // namespace khop
