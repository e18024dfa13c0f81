#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "common.hpp"

namespace khop {

// Function table over the universe {0, x_0, ..., x_{n-1}}; index 0 is the
// sink, index i+1 is x_i.
using RelationMap = std::vector<int>;

// f cyclically shuffles the non-sink entities, g sends x_0 to the sink and
// fixes everything else; both fix the sink.
std::pair<RelationMap, RelationMap> build_fg(int n);

struct CompositionCensus {
    std::uint64_t word_count = 0;
    std::uint64_t distinct_count = 0;
    std::vector<RelationMap> tables; // distinct composed tables, first-seen order
};

// All words over {f,g} of length k with no adjacent gg, composed first letter
// applied first (word w1..wk maps e to wk(...w1(e))).
CompositionCensus enumerate_ggfree_compositions(const RelationMap& f, const RelationMap& g,
                                                int k);

// F_{k+2} with F_1 = F_2 = 1.
std::uint64_t fib_count(int k);

// (3/2)^k, the bound fib_count is checked against.
double ggfree_lower_bound(int k);

struct BoundInputs {
    int k = 0;
    int precision_bits = 32;
    int d_model = 768;
    int heads = 12;
};

struct Rational {
    std::uint64_t num = 0;
    std::uint64_t den = 1;

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    bool operator==(const Rational&) const = default;
};

// Exact k / (8 * p * d * H).
Rational depth_lower_bound(const BoundInputs& in);

} // namespace khop
