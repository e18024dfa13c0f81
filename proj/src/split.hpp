#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "queries.hpp"
#include "rng.hpp"

namespace khop {

// Incremental uniform permutation of [0, n): partial Fisher-Yates, one draw
// per next() call.
class PermutationSampler {
public:
    PermutationSampler(std::uint64_t n, Rng rng);

    std::optional<std::uint64_t> next();
    std::uint64_t remaining() const { return pool_.size() - pos_; }

private:
    std::vector<std::uint32_t> pool_;
    std::size_t pos_ = 0;
    Rng rng_;
};

// Queries of one hop count, stored as indices into their QuerySpace.
struct QuerySet {
    QuerySpace space;
    std::vector<std::uint64_t> indices;

    int hops() const { return space.hops(); }
    std::size_t size() const { return indices.size(); }
    Query query(std::size_t i) const { return space.at(indices[i]); }
};

struct DatasetSplit {
    std::vector<EntityId> profiles;  // every entity's profile, always included
    std::vector<QuerySet> train_sets; // ascending hop count; target k last
    QuerySet test_set;                // target k only
    std::uint64_t base_budget = 0;
    int budget_ratio = 1;
    bool overlap_filtered = false;

    std::uint64_t train_query_count() const {
        std::uint64_t n = 0;
        for (const auto& s : train_sets) {
            n += s.size();
        }
        return n;
    }

    // Data records in the rendered training file: profiles + train queries.
    std::uint64_t train_record_count() const {
        return profiles.size() + train_query_count();
    }
};

// Uniform train sample of ratio*base_budget queries plus a test set drawn
// from the held-out remainder. Errors when the budget exceeds the space.
DatasetSplit build_split(const QuerySpace& space, std::uint64_t base_budget, int budget_ratio,
                         std::uint64_t test_size, Rng rng);

// Subchain-overlap test between k-hop queries and lower-hop training sets.
class OverlapIndex {
public:
    void add(const Query& q);
    void add_all(const QuerySet& s);
    bool overlaps(const Query& q) const;
    bool empty() const { return lengths_.empty(); }

private:
    static std::uint64_t key(EntityId start, const std::vector<RelationId>& rels,
                             std::size_t offset, std::size_t len);

    std::vector<int> lengths_; // distinct aux hop counts
    std::unordered_set<std::uint64_t> chains_;
};

// Retains only queries none of whose contiguous sub-chains appears in
// aux_train. No resampling; callers that need a fixed-size result draw
// replacements from their held-out pool.
std::vector<Query> filter_overlap(const std::vector<Query>& test,
                                  const std::vector<Query>& aux_train);

enum class TrainMode { baseline, mixed, curriculum };

TrainMode parse_train_mode(const std::string& s);
const char* train_mode_name(TrainMode m);

struct TaskSpec {
    int hops = 2;
    int budget_ratio = 1;
    TrainMode mode = TrainMode::baseline;
    std::optional<RelationConstraint> constraint;
    std::uint64_t test_size = 3000;
    double base_budget_fraction = 0.8;   // bg = fraction * |2-hop queries|
    std::vector<std::uint64_t> aux_budgets; // sizes for hops 2..k-1; empty = defaults
    std::optional<bool> filter_test_overlap; // default: mode != baseline
};

std::uint64_t default_base_budget(const EntityGraph& g, double fraction);
std::vector<std::uint64_t> default_aux_budgets(std::uint64_t base_budget, int k);

// Full dataset for one task: aux lower-hop sets for mixed/curriculum, the
// target-k train sample, and a test set (overlap-filtered when requested).
// The same seed and spec reproduce the identical split.
DatasetSplit build_task_split(const EntityGraph& g, const TaskSpec& spec, std::uint64_t seed);

} // namespace khop
