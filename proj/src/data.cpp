#include "data.hpp"

#include <algorithm>

namespace khop {

void TokenizedData::append(const RenderedInstance& r, Instance meta) {
    require(r.length <= context_length, ErrorCode::invalid_argument,
            "TokenizedData: sequence longer than context (" + std::to_string(r.length) + " > " +
                std::to_string(context_length) + ")");
    meta.length = r.length;
    meta.answer_position = r.answer_position;
    meta.entity_position = r.entity_position;
    meta.hop_positions = r.hop_positions;
    const std::size_t base = tokens.size();
    tokens.resize(base + context_length, pad_id);
    std::copy(r.tokens.begin(), r.tokens.end(), tokens.begin() + base);
    instances.push_back(std::move(meta));
}

Batch TokenizedData::gather(std::span<const std::size_t> idx, bool trim) const {
    Batch b;
    b.pad_id = pad_id;
    b.B = static_cast<int>(idx.size());
    b.T = context_length;
    if (trim) {
        int longest = 2;
        for (auto i : idx) {
            longest = std::max(longest, instances[i].length);
        }
        b.T = longest;
    }
    b.tokens.resize(static_cast<std::size_t>(b.B) * b.T);
    for (int r = 0; r < b.B; ++r) {
        const TokenId* src = tokens.data() + idx[r] * context_length;
        std::copy(src, src + b.T, b.tokens.begin() + static_cast<std::size_t>(r) * b.T);
    }
    return b;
}

int corpus_context_length(const EntityGraph& g) {
    // Profile: 6 tokens per relation. Question: 9 + 3k including the answer.
    const int profile_len = 6 * g.num_relations();
    const int question_len = 9 + 3 * (g.num_layers - 1);
    return std::max(profile_len, question_len);
}

TokenizedData tokenize_train(const Vocab& v, const EntityGraph& g, const DatasetSplit& split,
                             int context_length) {
    TokenizedData data;
    data.context_length = context_length;
    data.pad_id = v.pad_id();
    std::size_t total = split.profiles.size();
    for (const auto& s : split.train_sets) {
        total += s.size();
    }
    data.tokens.reserve(total * context_length);
    data.instances.reserve(total);

    for (EntityId e : split.profiles) {
        Instance meta;
        meta.profile_entity = e;
        data.append(render_profile_instance(v, g, e), std::move(meta));
    }
    for (const auto& s : split.train_sets) {
        for (std::size_t i = 0; i < s.size(); ++i) {
            Query q = s.query(i);
            Instance meta;
            meta.hops = q.hops();
            meta.answer_token = v.entity_token(q.answer);
            RenderedInstance r = render_question_instance(v, g, q);
            meta.query = std::move(q);
            data.append(r, std::move(meta));
        }
    }
    return data;
}

TokenizedData tokenize_queries(const Vocab& v, const EntityGraph& g, const QuerySet& set,
                               int context_length) {
    TokenizedData data;
    data.context_length = context_length;
    data.pad_id = v.pad_id();
    data.tokens.reserve(set.size() * context_length);
    data.instances.reserve(set.size());
    for (std::size_t i = 0; i < set.size(); ++i) {
        Query q = set.query(i);
        Instance meta;
        meta.hops = q.hops();
        meta.answer_token = v.entity_token(q.answer);
        RenderedInstance r = render_question_instance(v, g, q);
        meta.query = std::move(q);
        data.append(r, std::move(meta));
    }
    return data;
}

} // namespace khop
