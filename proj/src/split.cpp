#include "split.hpp"

#include <algorithm>
#include <unordered_set>

namespace khop {

PermutationSampler::PermutationSampler(std::uint64_t n, Rng rng) : rng_(rng) {
    require(n <= 0xffffffffull, ErrorCode::invalid_argument,
            "PermutationSampler: space too large");
    pool_.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        pool_[i] = static_cast<std::uint32_t>(i);
    }
}

std::optional<std::uint64_t> PermutationSampler::next() {
    if (pos_ >= pool_.size()) {
        return std::nullopt;
    }
    std::size_t j = pos_ + static_cast<std::size_t>(rng_.below(pool_.size() - pos_));
    std::swap(pool_[pos_], pool_[j]);
    return pool_[pos_++];
}

DatasetSplit build_split(const QuerySpace& space, std::uint64_t base_budget, int budget_ratio,
                         std::uint64_t test_size, Rng rng) {
    require(budget_ratio >= 1, ErrorCode::invalid_argument, "build_split: ratio must be >= 1");
    const std::uint64_t train_count = base_budget * static_cast<std::uint64_t>(budget_ratio);
    require(train_count + test_size <= space.size(), ErrorCode::invalid_argument,
            "build_split: budget exceeds available questions (" +
                std::to_string(train_count + test_size) + " > " +
                std::to_string(space.size()) + ")");

    PermutationSampler sampler(space.size(), rng);
    DatasetSplit split;
    split.base_budget = base_budget;
    split.budget_ratio = budget_ratio;
    const auto& g = space.graph();
    split.profiles.resize(g.num_entities());
    for (EntityId e = 0; e < g.num_entities(); ++e) {
        split.profiles[e] = e;
    }

    QuerySet train;
    train.space = space;
    train.indices.reserve(train_count);
    for (std::uint64_t i = 0; i < train_count; ++i) {
        train.indices.push_back(*sampler.next());
    }
    split.train_sets.push_back(std::move(train));

    split.test_set.space = space;
    split.test_set.indices.reserve(test_size);
    for (std::uint64_t i = 0; i < test_size; ++i) {
        split.test_set.indices.push_back(*sampler.next());
    }
    return split;
}

std::uint64_t OverlapIndex::key(EntityId start, const std::vector<RelationId>& rels,
                                std::size_t offset, std::size_t len) {
    std::uint64_t k = static_cast<std::uint64_t>(start);
    k = k * 31 + len;
    for (std::size_t i = 0; i < len; ++i) {
        k = (k << 8) | static_cast<std::uint64_t>(rels[offset + i] & 0xff);
    }
    return k;
}

void OverlapIndex::add(const Query& q) {
    const int m = q.hops();
    if (std::find(lengths_.begin(), lengths_.end(), m) == lengths_.end()) {
        lengths_.push_back(m);
    }
    chains_.insert(key(q.source, q.relations, 0, m));
}

void OverlapIndex::add_all(const QuerySet& s) {
    for (std::size_t i = 0; i < s.size(); ++i) {
        auto [source, rels] = s.space.chain_at(s.indices[i]);
        const int m = static_cast<int>(rels.size());
        if (std::find(lengths_.begin(), lengths_.end(), m) == lengths_.end()) {
            lengths_.push_back(m);
        }
        chains_.insert(key(source, rels, 0, rels.size()));
    }
}

bool OverlapIndex::overlaps(const Query& q) const {
    const int k = q.hops();
    for (int m : lengths_) {
        if (m > k) {
            continue;
        }
        for (int j = 0; j + m <= k; ++j) {
            EntityId start = (j == 0) ? q.source : q.bridges[j - 1];
            if (chains_.count(key(start, q.relations, j, m)) > 0) {
                return true;
            }
        }
    }
    return false;
}

std::vector<Query> filter_overlap(const std::vector<Query>& test,
                                  const std::vector<Query>& aux_train) {
    OverlapIndex index;
    for (const auto& q : aux_train) {
        index.add(q);
    }
    std::vector<Query> kept;
    kept.reserve(test.size());
    for (const auto& q : test) {
        if (!index.overlaps(q)) {
            kept.push_back(q);
        }
    }
    return kept;
}

TrainMode parse_train_mode(const std::string& s) {
    if (s == "baseline") {
        return TrainMode::baseline;
    }
    if (s == "mixed") {
        return TrainMode::mixed;
    }
    if (s == "curriculum") {
        return TrainMode::curriculum;
    }
    fail(ErrorCode::config, "unknown train mode '" + s + "'");
}

const char* train_mode_name(TrainMode m) {
    switch (m) {
        case TrainMode::baseline: return "baseline";
        case TrainMode::mixed: return "mixed";
        case TrainMode::curriculum: return "curriculum";
    }
    return "?";
}

std::uint64_t default_base_budget(const EntityGraph& g, double fraction) {
    QuerySpace two_hop(g, 2, nullptr);
    return static_cast<std::uint64_t>(fraction * static_cast<double>(two_hop.size()));
}

std::vector<std::uint64_t> default_aux_budgets(std::uint64_t base_budget, int k) {
    // Aux sizes follow the 2-hop budget: 1x bg of 2-hop data, 5x bg of 3-hop.
    std::vector<std::uint64_t> out;
    for (int m = 2; m < k; ++m) {
        out.push_back(m == 2 ? base_budget : 5 * base_budget);
    }
    return out;
}

DatasetSplit build_task_split(const EntityGraph& g, const TaskSpec& spec, std::uint64_t seed) {
    require(spec.hops >= 1 && spec.hops <= g.num_layers - 1, ErrorCode::invalid_argument,
            "build_task_split: hops out of range");
    const bool want_aux = spec.mode != TrainMode::baseline;
    const bool filter = spec.filter_test_overlap.value_or(want_aux);
    require(!want_aux || spec.hops >= 3, ErrorCode::invalid_argument,
            "build_task_split: mixed/curriculum need hops >= 3");

    Rng root = Rng(seed).stream("split", static_cast<std::uint64_t>(spec.hops),
                                static_cast<std::uint64_t>(spec.budget_ratio));

    DatasetSplit split;
    split.base_budget = default_base_budget(g, spec.base_budget_fraction);
    split.budget_ratio = spec.budget_ratio;
    split.profiles.resize(g.num_entities());
    for (EntityId e = 0; e < g.num_entities(); ++e) {
        split.profiles[e] = e;
    }

    // Aux lower-hop sets, built for training (mixed/curriculum) or for test
    // filtering only.
    OverlapIndex overlap;
    std::vector<QuerySet> aux_sets;
    if (want_aux || filter) {
        auto budgets = spec.aux_budgets;
        if (budgets.empty()) {
            budgets = default_aux_budgets(split.base_budget, spec.hops);
        }
        require(static_cast<int>(budgets.size()) == std::max(spec.hops - 2, 0),
                ErrorCode::invalid_argument,
                "build_task_split: need one aux budget per hop in 2..k-1");
        for (int m = 2; m < spec.hops; ++m) {
            QuerySet aux;
            aux.space = QuerySpace(g, m, nullptr);
            const std::uint64_t want = budgets[m - 2];
            require(want <= aux.space.size(), ErrorCode::invalid_argument,
                    "build_task_split: aux budget exceeds " + std::to_string(m) +
                        "-hop question count");
            PermutationSampler sampler(aux.space.size(), root.stream("aux", m));
            aux.indices.reserve(want);
            for (std::uint64_t i = 0; i < want; ++i) {
                aux.indices.push_back(*sampler.next());
            }
            overlap.add_all(aux);
            aux_sets.push_back(std::move(aux));
        }
    }

    // Target-k train sample, then test from the held-out remainder. Filtered
    // tests resample until test_size clean instances are found.
    QuerySpace space(g, spec.hops, spec.constraint ? &*spec.constraint : nullptr);
    const std::uint64_t train_count =
        split.base_budget * static_cast<std::uint64_t>(spec.budget_ratio);
    require(train_count + spec.test_size <= space.size(), ErrorCode::invalid_argument,
            "build_task_split: budget exceeds available questions (" +
                std::to_string(train_count + spec.test_size) + " > " +
                std::to_string(space.size()) + ")");

    PermutationSampler sampler(space.size(), root.stream("train"));
    QuerySet main;
    main.space = space;
    main.indices.reserve(train_count);
    for (std::uint64_t i = 0; i < train_count; ++i) {
        main.indices.push_back(*sampler.next());
    }

    split.test_set.space = space;
    split.test_set.indices.reserve(spec.test_size);
    while (split.test_set.indices.size() < spec.test_size) {
        auto idx = sampler.next();
        require(idx.has_value(), ErrorCode::state,
                "build_task_split: held-out pool exhausted before reaching test size");
        if (filter && overlap.overlaps(space.at(*idx))) {
            continue;
        }
        split.test_set.indices.push_back(*idx);
    }
    split.overlap_filtered = filter;

    if (want_aux) {
        split.train_sets = std::move(aux_sets);
    }
    split.train_sets.push_back(std::move(main));
    return split;
}

} // namespace khop
