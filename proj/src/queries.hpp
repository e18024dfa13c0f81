#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "graph.hpp"

namespace khop {

// A k-hop question: relations[i] is the (i+1)-hop relation, bridges holds the
// k-1 intermediate entities, answer the final traversal result.
struct Query {
    EntityId source = -1;
    std::vector<RelationId> relations;
    std::vector<EntityId> bridges;
    EntityId answer = -1;

    int hops() const { return static_cast<int>(relations.size()); }

    bool same_chain(const Query& other) const {
        return source == other.source && relations == other.relations;
    }
};

// Per-hop allowed-relation counts; hop i draws from a fixed seeded subset of
// that size. Empty counts means unconstrained.
struct RelationConstraint {
    std::vector<int> per_hop_counts;
};

// Random-access view of all valid k-hop queries: index order is source-major,
// then the relation tuple in lexicographic (hop-1 slowest) order over the
// allowed sets. Decoding an index is O(k); no queries are materialized.
class QuerySpace {
public:
    QuerySpace() = default;
    QuerySpace(const EntityGraph& graph, int k, const RelationConstraint* constraint);

    std::uint64_t size() const { return size_; }
    int hops() const { return k_; }
    const EntityGraph& graph() const { return *graph_; }
    const std::vector<std::vector<RelationId>>& allowed() const { return allowed_; }

    // Decode without traversal: (source, relation tuple).
    std::pair<EntityId, std::vector<RelationId>> chain_at(std::uint64_t index) const;

    // Full query with bridges and answer.
    Query at(std::uint64_t index) const;

private:
    const EntityGraph* graph_ = nullptr;
    int k_ = 0;
    std::vector<std::vector<RelationId>> allowed_; // per hop, ascending
    std::uint64_t size_ = 0;
};

// Step-by-step edge lookups from a bottom-layer source.
std::pair<std::vector<EntityId>, EntityId> answer_query(const EntityGraph& graph,
                                                        EntityId source,
                                                        const std::vector<RelationId>& relations);

// Materialize every valid k-hop query in QuerySpace order.
std::vector<Query> enumerate_queries(const EntityGraph& graph, int k,
                                     const RelationConstraint* constraint = nullptr);

} // namespace khop
