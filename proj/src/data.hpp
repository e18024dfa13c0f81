#pragma once

#include <span>
#include <vector>

#include "corpus.hpp"
#include "split.hpp"
#include "transformer.hpp"

namespace khop {

// One padded training/eval sequence plus the bookkeeping the evaluator and
// the interpretability passes need.
struct Instance {
    int hops = 0; // 0 = profile
    int length = 0;
    int answer_position = -1;
    int entity_position = -1;
    std::vector<int> hop_positions;
    TokenId answer_token = -1;
    Query query;               // questions only
    EntityId profile_entity = -1;
};

struct TokenizedData {
    int context_length = 0;
    TokenId pad_id = 0;
    std::vector<TokenId> tokens; // [n x context_length], right-padded
    std::vector<Instance> instances;

    std::size_t size() const { return instances.size(); }

    std::span<const TokenId> row(std::size_t i) const {
        return {tokens.data() + i * context_length, static_cast<std::size_t>(context_length)};
    }

    void append(const RenderedInstance& r, Instance meta);

    // Dense batch of the given instances; T = context_length unless trim is
    // set, in which case T shrinks to the longest instance in the batch.
    Batch gather(std::span<const std::size_t> idx, bool trim = false) const;
};

// Longest sequence the corpus can produce for this graph (profile or k-hop
// question up to num_layers-1 hops).
int corpus_context_length(const EntityGraph& g);

// Profiles plus every train set of the split.
TokenizedData tokenize_train(const Vocab& v, const EntityGraph& g, const DatasetSplit& split,
                             int context_length);

// Questions of one set (typically the test set).
TokenizedData tokenize_queries(const Vocab& v, const EntityGraph& g, const QuerySet& set,
                               int context_length);

} // namespace khop
