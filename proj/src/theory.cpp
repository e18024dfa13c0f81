#include "theory.hpp"

#include <cmath>
#include <set>

namespace khop {

std::pair<RelationMap, RelationMap> build_fg(int n) {
    require(n >= 2, ErrorCode::invalid_argument, "build_fg: n must be >= 2");
    RelationMap f(n + 1);
    RelationMap g(n + 1);
    f[0] = 0;
    g[0] = 0;
    for (int i = 0; i < n; ++i) {
        f[i + 1] = ((i + 1) % n) + 1;
        g[i + 1] = (i == 0) ? 0 : i + 1;
    }
    return {f, g};
}

CompositionCensus enumerate_ggfree_compositions(const RelationMap& f, const RelationMap& g,
                                                int k) {
    require(k >= 1, ErrorCode::invalid_argument, "enumerate_ggfree_compositions: k must be >= 1");
    require(f.size() == g.size(), ErrorCode::invalid_argument,
            "enumerate_ggfree_compositions: universe size mismatch");
    const int universe = static_cast<int>(f.size());

    CompositionCensus census;
    std::set<RelationMap> seen;

    // Words as bit patterns, letter i at bit i (0 = f, 1 = g); first letter
    // applied first.
    std::vector<std::uint32_t> words;
    for (std::uint32_t w = 0; w < (1u << k); ++w) {
        bool ok = true;
        for (int i = 0; i + 1 < k; ++i) {
            if (((w >> i) & 1u) && ((w >> (i + 1)) & 1u)) {
                ok = false;
                break;
            }
        }
        if (!ok) {
            continue;
        }
        ++census.word_count;
        RelationMap table(universe);
        for (int e = 0; e < universe; ++e) {
            int cur = e;
            for (int i = 0; i < k; ++i) {
                cur = ((w >> i) & 1u) ? g[cur] : f[cur];
            }
            table[e] = cur;
        }
        if (seen.insert(table).second) {
            census.tables.push_back(std::move(table));
        }
    }
    census.distinct_count = census.tables.size();
    return census;
}

std::uint64_t fib_count(int k) {
    require(k >= 1, ErrorCode::invalid_argument, "fib_count: k must be >= 1");
    require(k <= 90, ErrorCode::invalid_argument, "fib_count: k too large for 64-bit result");
    // F_{k+2} with F_1 = F_2 = 1.
    std::uint64_t a = 1;
    std::uint64_t b = 1;
    for (int i = 3; i <= k + 2; ++i) {
        std::uint64_t c = a + b;
        a = b;
        b = c;
    }
    return b;
}

double ggfree_lower_bound(int k) {
    return std::pow(1.5, k);
}

Rational depth_lower_bound(const BoundInputs& in) {
    require(in.k >= 1 && in.precision_bits >= 1 && in.d_model >= 1 && in.heads >= 1,
            ErrorCode::invalid_argument, "depth_lower_bound: inputs must be positive");
    Rational r;
    r.num = static_cast<std::uint64_t>(in.k);
    r.den = 8ull * in.precision_bits * in.d_model * in.heads;
    return r;
}

} // namespace khop
