#include "queries.hpp"

#include <algorithm>

#include "rng.hpp"

namespace khop {

QuerySpace::QuerySpace(const EntityGraph& graph, int k, const RelationConstraint* constraint)
    : graph_(&graph), k_(k) {
    require(k >= 1 && k <= graph.num_layers - 1, ErrorCode::invalid_argument,
            "QuerySpace: hop count out of range");
    const int R = graph.num_relations();
    allowed_.resize(k);
    Rng root(graph.seed);
    for (int hop = 0; hop < k; ++hop) {
        int count = R;
        if (constraint && !constraint->per_hop_counts.empty()) {
            require(static_cast<int>(constraint->per_hop_counts.size()) == k,
                    ErrorCode::invalid_argument,
                    "RelationConstraint: per-hop counts must have one entry per hop");
            count = constraint->per_hop_counts[hop];
            require(count >= 1 && count <= R, ErrorCode::invalid_argument,
                    "RelationConstraint: count out of range for hop " + std::to_string(hop + 1));
        }
        if (count == R) {
            allowed_[hop].resize(R);
            for (RelationId r = 0; r < R; ++r) {
                allowed_[hop][r] = r;
            }
        } else {
            Rng r = root.stream("relation_subset", static_cast<std::uint64_t>(hop));
            auto picks = r.sample_indices(R, count);
            allowed_[hop].reserve(count);
            for (auto p : picks) {
                allowed_[hop].push_back(static_cast<RelationId>(p));
            }
            std::sort(allowed_[hop].begin(), allowed_[hop].end());
        }
    }
    size_ = graph.entities_per_layer;
    for (int hop = 0; hop < k; ++hop) {
        size_ *= allowed_[hop].size();
    }
}

std::pair<EntityId, std::vector<RelationId>> QuerySpace::chain_at(std::uint64_t index) const {
    require(index < size_, ErrorCode::invalid_argument, "QuerySpace: index out of range");
    // Mixed-radix decode, hop k fastest.
    std::vector<RelationId> relations(k_);
    for (int hop = k_ - 1; hop >= 0; --hop) {
        const auto& opts = allowed_[hop];
        relations[hop] = opts[index % opts.size()];
        index /= opts.size();
    }
    EntityId source = graph_->layer_begin(0) + static_cast<EntityId>(index);
    return {source, std::move(relations)};
}

Query QuerySpace::at(std::uint64_t index) const {
    auto [source, relations] = chain_at(index);
    Query q;
    q.source = source;
    q.relations = std::move(relations);
    auto [bridges, answer] = answer_query(*graph_, q.source, q.relations);
    q.bridges = std::move(bridges);
    q.answer = answer;
    return q;
}

std::pair<std::vector<EntityId>, EntityId> answer_query(const EntityGraph& graph,
                                                        EntityId source,
                                                        const std::vector<RelationId>& relations) {
    require(graph.layer_of(source) == 0, ErrorCode::invalid_argument,
            "answer_query: source must be in the bottom layer");
    require(!relations.empty(), ErrorCode::invalid_argument,
            "answer_query: empty relation chain");
    std::vector<EntityId> bridges;
    bridges.reserve(relations.size() - 1);
    EntityId current = source;
    for (std::size_t i = 0; i < relations.size(); ++i) {
        current = graph.edge(current, relations[i]);
        if (i + 1 < relations.size()) {
            bridges.push_back(current);
        }
    }
    return {std::move(bridges), current};
}

std::vector<Query> enumerate_queries(const EntityGraph& graph, int k,
                                     const RelationConstraint* constraint) {
    QuerySpace space(graph, k, constraint);
    std::vector<Query> out;
    out.reserve(space.size());
    for (std::uint64_t i = 0; i < space.size(); ++i) {
        out.push_back(space.at(i));
    }
    return out;
}

} // namespace khop
